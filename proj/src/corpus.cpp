#include "legalqa/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "legalqa/error.hpp"
#include "legalqa/prompts.hpp"
#include "legalqa/text.hpp"

namespace legalqa {

LabeledQuestion LabeledQuestion::complete_from(const SummaryQuestion& q) {
  return {q.text, QuestionLabel::complete, {}};
}

LabeledQuestion LabeledQuestion::deficient_from(const MaskedQuestion& q) {
  return {q.text, QuestionLabel::deficient, q.masked_nodes};
}

// ---------------------------------------------------------------------------
// IRAC parsing

namespace {

constexpr std::string_view kIssue = "ISSUE:";
constexpr std::string_view kRule = "RULE:";
constexpr std::string_view kApplication = "APPLICATION:";
constexpr std::string_view kConclusion = "CONCLUSION:";

struct Markup {
  NodeKind kind;
  std::string label;
  std::set<std::string> aliases;
};

// Walks text, returning the markup items and the surface text.
std::vector<Markup> scan_markup(std::string_view text, std::string* surface) {
  std::vector<Markup> items;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto open = text.find("[[", pos);
    if (open == std::string_view::npos) {
      if (surface) surface->append(text.substr(pos));
      break;
    }
    if (surface) surface->append(text.substr(pos, open - pos));
    auto close = text.find("]]", open + 2);
    if (close == std::string_view::npos) fail(ErrorCode::parse_error, "unterminated [[ markup");
    std::string_view body = text.substr(open + 2, close - open - 2);
    auto colon = body.find(':');
    if (colon == std::string_view::npos) fail(ErrorCode::parse_error, "markup without kind: " + std::string(body));
    Markup item;
    auto tag = trim(body.substr(0, colon));
    if (tag == "fact") {
      item.kind = NodeKind::fact;
    } else if (tag == "rule") {
      item.kind = NodeKind::rule;
    } else {
      fail(ErrorCode::parse_error, "unknown markup kind '" + tag + "'");
    }
    std::string_view rest = body.substr(colon + 1);
    std::size_t field = 0;
    while (true) {
      auto bar = rest.find('|');
      auto part = trim(rest.substr(0, bar));
      if (field == 0) {
        item.label = part;
      } else if (!part.empty()) {
        item.aliases.insert(part);
      }
      ++field;
      if (bar == std::string_view::npos) break;
      rest = rest.substr(bar + 1);
    }
    if (item.label.empty()) fail(ErrorCode::parse_error, "markup with empty label");
    if (surface) surface->append(item.label);
    items.push_back(std::move(item));
    pos = close + 2;
  }
  return items;
}

// Splits on sentence terminators that lie outside [[ ]] markup.
std::vector<std::string> markup_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  int depth = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c == '[' && i + 1 < text.size() && text[i + 1] == '[') {
      ++depth;
    } else if (c == ']' && i + 1 < text.size() && text[i + 1] == ']' && depth > 0) {
      --depth;
    }
    current.push_back(c);
    if (depth == 0 && (c == '.' || c == '?' || c == '!' || c == '\n')) {
      if (!trim(current).empty()) out.push_back(trim(current));
      current.clear();
    }
  }
  if (!trim(current).empty()) out.push_back(trim(current));
  return out;
}

// Sentences of plain text, terminators kept.
std::vector<std::string> plain_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  for (char c : text) {
    current.push_back(c);
    if (c == '.' || c == '?' || c == '!') {
      if (!trim(current).empty()) out.push_back(trim(current));
      current.clear();
    }
  }
  if (!trim(current).empty()) out.push_back(trim(current));
  return out;
}

std::size_t find_marker(std::string_view text, std::string_view marker, std::size_t from) {
  auto pos = text.find(marker, from);
  while (pos != std::string_view::npos) {
    if (pos == 0 || std::isspace(static_cast<unsigned char>(text[pos - 1])) != 0) return pos;
    pos = text.find(marker, pos + 1);
  }
  return std::string_view::npos;
}

}  // namespace

bool has_irac_delimiters(std::string_view text) {
  auto issue = find_marker(text, kIssue, 0);
  if (issue == std::string_view::npos) return false;
  auto rule = find_marker(text, kRule, issue);
  if (rule == std::string_view::npos) return false;
  return find_marker(text, kApplication, rule) != std::string_view::npos;
}

IracFrame split_irac(const std::string& case_id, std::string_view text) {
  auto issue = find_marker(text, kIssue, 0);
  if (issue == std::string_view::npos) fail(ErrorCode::parse_error, "case " + case_id + ": missing ISSUE section");
  auto rule = find_marker(text, kRule, issue + kIssue.size());
  if (rule == std::string_view::npos) fail(ErrorCode::parse_error, "case " + case_id + ": missing RULE section");
  auto application = find_marker(text, kApplication, rule + kRule.size());
  if (application == std::string_view::npos) {
    fail(ErrorCode::parse_error, "case " + case_id + ": missing APPLICATION section");
  }
  auto conclusion = find_marker(text, kConclusion, application + kApplication.size());

  IracFrame frame;
  frame.case_id = case_id;
  frame.issue = trim(text.substr(issue + kIssue.size(), rule - issue - kIssue.size()));
  frame.rule = trim(text.substr(rule + kRule.size(), application - rule - kRule.size()));
  auto app_end = conclusion == std::string_view::npos ? text.size() : conclusion;
  frame.application = trim(text.substr(application + kApplication.size(), app_end - application - kApplication.size()));
  if (conclusion != std::string_view::npos) frame.conclusion = trim(text.substr(conclusion + kConclusion.size()));

  if (frame.issue.empty()) fail(ErrorCode::parse_error, "case " + case_id + ": empty ISSUE section");
  if (frame.rule.empty()) fail(ErrorCode::parse_error, "case " + case_id + ": empty RULE section");
  if (frame.application.empty()) fail(ErrorCode::parse_error, "case " + case_id + ": empty APPLICATION section");
  return frame;
}

IracFrame parse_case(const CaseDocument& doc, LanguageModel* model) {
  if (trim(doc.text).empty()) fail(ErrorCode::parse_error, "case " + doc.id + ": empty document text");
  if (has_irac_delimiters(doc.text)) return split_irac(doc.id, doc.text);
  if (model == nullptr) {
    // Reports the first missing delimiter.
    return split_irac(doc.id, doc.text);
  }
  std::string reply = model->complete(prompts::irac_parse(doc.id, doc.text));
  return split_irac(doc.id, reply);
}

std::string strip_markup(std::string_view text) {
  std::string surface;
  scan_markup(text, &surface);
  return surface;
}

CaseGraph extract_case_graph(const IracFrame& frame) {
  CaseGraph graph;
  graph.case_id = frame.case_id;

  for (const auto& item : scan_markup(frame.rule, nullptr)) {
    if (item.kind != NodeKind::rule) continue;
    auto node = FactRuleNode::make(item.label, NodeKind::rule, item.aliases);
    auto [it, inserted] = graph.nodes.emplace(node.id, node);
    if (!inserted) it->second.aliases.insert(item.aliases.begin(), item.aliases.end());
    graph.sections[node.id] = IracSection::rule;
  }

  for (const auto& sentence : markup_sentences(frame.application)) {
    std::vector<std::string> facts;
    std::vector<std::string> rules;
    for (const auto& item : scan_markup(sentence, nullptr)) {
      auto node = FactRuleNode::make(item.label, item.kind, item.aliases);
      if (item.kind == NodeKind::rule) {
        auto it = graph.nodes.find(node.id);
        if (it == graph.nodes.end() || it->second.kind != NodeKind::rule) {
          fail(ErrorCode::parse_error,
               "case " + frame.case_id + ": rule '" + item.label + "' is not declared in the RULE section");
        }
        rules.push_back(node.id);
        continue;
      }
      auto it = graph.nodes.find(node.id);
      if (it == graph.nodes.end()) {
        graph.nodes.emplace(node.id, node);
        graph.sections[node.id] = IracSection::application;
      } else if (it->second.kind != NodeKind::fact) {
        fail(ErrorCode::parse_error, "case " + frame.case_id + ": '" + item.label + "' is both a fact and a rule");
      } else {
        it->second.aliases.insert(item.aliases.begin(), item.aliases.end());
      }
      facts.push_back(node.id);
    }
    for (const auto& f : facts) {
      for (const auto& r : rules) graph.edges.emplace(f, r);
    }
  }

  if (graph.fact_ids().empty()) {
    fail(ErrorCode::empty_graph, "case " + frame.case_id + ": no facts could be extracted");
  }
  return graph;
}

std::string default_summary_text(const std::string& issue, const std::vector<std::string>& fact_labels) {
  std::string text = "I need legal advice about this: " + issue;
  if (!text.empty() && text.back() != '.' && text.back() != '?') text += ".";
  for (const auto& label : fact_labels) text += " My situation involves the " + label + ".";
  text += " What are my rights and what should I do?";
  return text;
}

SummaryQuestion summarize_question(const IracFrame& frame, const CaseGraph& graph, LanguageModel* model) {
  auto facts = graph.fact_ids();
  if (facts.empty()) fail(ErrorCode::empty_graph, "case " + frame.case_id + ": graph has no fact nodes");
  std::vector<std::string> labels;
  for (const auto& id : facts) labels.push_back(graph.nodes.at(id).label);

  SummaryQuestion q;
  q.question_id = "q-" + frame.case_id;
  q.source_case = frame.case_id;
  q.key_nodes = {facts.begin(), facts.end()};
  auto issue = strip_markup(frame.issue);
  if (model == nullptr) {
    q.text = default_summary_text(issue, labels);
  } else {
    q.text = trim(model->complete(prompts::summarize(issue, labels)));
    for (const auto& label : labels) {
      if (!contains_ci(q.text, label)) {
        fail(ErrorCode::protocol_error, "summary for case " + frame.case_id + " omits fact '" + label + "'");
      }
    }
  }
  return q;
}

// ---------------------------------------------------------------------------
// Masking

std::size_t masked_count(double fraction, std::size_t key_nodes) {
  if (!(fraction > 0.0) || fraction > 1.0) {
    fail(ErrorCode::invalid_argument, "mask fraction must lie in (0, 1], got " + std::to_string(fraction));
  }
  auto rounded = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(key_nodes)));
  return std::max<std::size_t>(1, rounded);
}

namespace {

std::vector<std::string> surfaces_of(const std::set<std::string>& ids, const std::map<std::string, FactRuleNode>& nodes) {
  std::vector<std::string> out;
  for (const auto& id : ids) {
    auto it = nodes.find(id);
    if (it == nodes.end()) fail(ErrorCode::lookup_error, "unknown key node '" + id + "'");
    out.push_back(it->second.label);
    out.insert(out.end(), it->second.aliases.begin(), it->second.aliases.end());
  }
  // Longest first so an alias that contains the label is erased whole.
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.size() != b.size() ? a.size() > b.size() : a < b;
  });
  return out;
}

bool mentions_any(std::string_view text, const std::vector<std::string>& surfaces) {
  return std::any_of(surfaces.begin(), surfaces.end(), [&](const auto& s) { return contains_ci(text, s); });
}

}  // namespace

MaskedQuestion mask_nodes(const SummaryQuestion& question, const std::map<std::string, FactRuleNode>& nodes,
                          double fraction, std::uint64_t seed) {
  if (question.key_nodes.empty()) fail(ErrorCode::invalid_argument, "question has no key nodes");
  std::size_t count = masked_count(fraction, question.key_nodes.size());

  std::vector<std::string> order(question.key_nodes.begin(), question.key_nodes.end());
  std::mt19937_64 engine(seed);
  for (std::size_t i = order.size() - 1; i > 0; --i) {
    auto j = static_cast<std::size_t>(engine() % (i + 1));
    std::swap(order[i], order[j]);
  }

  MaskedQuestion masked;
  masked.base = question.question_id;
  masked.seed = seed;
  masked.masked_nodes = {order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count)};
  masked.retained_nodes = {order.begin() + static_cast<std::ptrdiff_t>(count), order.end()};

  auto hidden = surfaces_of(masked.masked_nodes, nodes);
  auto kept = surfaces_of(masked.retained_nodes, nodes);
  std::string text;
  for (const auto& sentence : plain_sentences(question.text)) {
    std::string s = sentence;
    if (mentions_any(s, hidden)) {
      if (!mentions_any(s, kept)) continue;
      for (const auto& h : hidden) s = erase_ci(s, h);
    }
    if (!text.empty()) text += ' ';
    text += s;
  }
  for (const auto& h : hidden) text = erase_ci(text, h);
  masked.text = tidy_spacing(text);
  return masked;
}

MaskedQuestion paraphrase_masked(const MaskedQuestion& masked, const std::map<std::string, FactRuleNode>& nodes,
                                 LanguageModel& model) {
  auto hidden = surfaces_of(masked.masked_nodes, nodes);
  auto reply = trim(model.complete(prompts::mask_paraphrase(masked.text, hidden)));
  if (reply.empty()) fail(ErrorCode::protocol_error, "empty paraphrase");
  for (const auto& h : hidden) {
    if (contains_ci(reply, h)) fail(ErrorCode::protocol_error, "paraphrase leaks masked item '" + h + "'");
  }
  MaskedQuestion out = masked;
  out.text = reply;
  return out;
}

IngestRecord ingest_case(const CaseDocument& doc, LanguageModel* model) {
  IngestRecord record;
  record.document = doc;
  record.frame = parse_case(doc, model);
  record.graph = extract_case_graph(record.frame);
  record.question = summarize_question(record.frame, record.graph, model);
  return record;
}

// ---------------------------------------------------------------------------
// JSON

json to_json(const CaseDocument& doc) {
  return {{"id", doc.id}, {"jurisdiction", doc.jurisdiction}, {"text", doc.text}};
}

json to_json(const IracFrame& f) {
  return {{"case_id", f.case_id}, {"issue", f.issue}, {"rule", f.rule}, {"application", f.application},
          {"conclusion", f.conclusion}};
}

json to_json(const SummaryQuestion& q) {
  return {{"question_id", q.question_id}, {"text", q.text}, {"key_nodes", q.key_nodes}, {"source_case", q.source_case}};
}

json to_json(const MaskedQuestion& q) {
  return {{"base", q.base}, {"text", q.text}, {"masked_nodes", q.masked_nodes},
          {"retained_nodes", q.retained_nodes}, {"seed", q.seed}};
}

json to_json(const IngestRecord& r) {
  return {{"document", to_json(r.document)}, {"frame", to_json(r.frame)}, {"graph", to_json(r.graph)},
          {"question", to_json(r.question)}};
}

namespace {

template <typename F>
auto parse_guard(const char* what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    fail(ErrorCode::parse_error, std::string("malformed ") + what + ": " + e.what());
  }
}

}  // namespace

CaseDocument case_document_from_json(const json& j) {
  return parse_guard("case document", [&] {
    CaseDocument doc{j.at("id").get<std::string>(), j.at("text").get<std::string>(),
                     j.value("jurisdiction", std::string())};
    if (doc.id.empty()) fail(ErrorCode::parse_error, "case document with empty id");
    if (trim(doc.text).empty()) fail(ErrorCode::parse_error, "case " + doc.id + " has empty text");
    return doc;
  });
}

IracFrame irac_frame_from_json(const json& j) {
  return parse_guard("IRAC frame", [&] {
    return IracFrame{j.at("case_id").get<std::string>(), j.at("issue").get<std::string>(),
                     j.at("rule").get<std::string>(), j.at("application").get<std::string>(),
                     j.value("conclusion", std::string())};
  });
}

SummaryQuestion summary_question_from_json(const json& j) {
  return parse_guard("summary question", [&] {
    SummaryQuestion q{j.at("question_id").get<std::string>(), j.at("text").get<std::string>(),
                      j.at("key_nodes").get<std::set<std::string>>(), j.at("source_case").get<std::string>()};
    if (q.key_nodes.empty()) fail(ErrorCode::parse_error, "question " + q.question_id + " has no key nodes");
    return q;
  });
}

MaskedQuestion masked_question_from_json(const json& j) {
  return parse_guard("masked question", [&] {
    return MaskedQuestion{j.at("base").get<std::string>(), j.at("text").get<std::string>(),
                          j.at("masked_nodes").get<std::set<std::string>>(),
                          j.at("retained_nodes").get<std::set<std::string>>(), j.at("seed").get<std::uint64_t>()};
  });
}

IngestRecord ingest_record_from_json(const json& j) {
  return parse_guard("ingest record", [&] {
    return IngestRecord{case_document_from_json(j.at("document")), irac_frame_from_json(j.at("frame")),
                        case_graph_from_json(j.at("graph")), summary_question_from_json(j.at("question"))};
  });
}

std::vector<json> read_json_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io_error, "cannot open " + path.string());
  std::vector<json> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      fail(ErrorCode::parse_error, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<CaseDocument> load_corpus(const std::filesystem::path& path) {
  std::vector<CaseDocument> docs;
  std::set<std::string> ids;
  for (const auto& j : read_json_lines(path)) {
    auto doc = case_document_from_json(j);
    if (!ids.insert(doc.id).second) fail(ErrorCode::parse_error, "duplicate case id '" + doc.id + "'");
    docs.push_back(std::move(doc));
  }
  return docs;
}

void save_corpus(const std::vector<CaseDocument>& docs, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io_error, "cannot write " + path.string());
  for (const auto& doc : docs) out << to_json(doc).dump() << '\n';
}

std::vector<IngestRecord> load_ingest_records(const std::filesystem::path& path) {
  std::vector<IngestRecord> records;
  for (const auto& j : read_json_lines(path)) records.push_back(ingest_record_from_json(j));
  return records;
}

void save_ingest_records(const std::vector<IngestRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io_error, "cannot write " + path.string());
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

}  // namespace legalqa
