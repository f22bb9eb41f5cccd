#include "legalqa/clarifier.hpp"

#include <set>

#include "legalqa/error.hpp"
#include "legalqa/prompts.hpp"
#include "legalqa/text.hpp"

namespace legalqa {

void validate(const ClarifyingQuestion& q) {
  if (trim(q.text).empty()) fail(ErrorCode::protocol_error, "clarifying question has empty text");
  if (q.node_id.empty()) fail(ErrorCode::protocol_error, "clarifying question targets no node");
  if (q.options.size() < 3) {
    fail(ErrorCode::protocol_error, "clarifying question for '" + q.node_id + "' needs at least two options");
  }
  if (q.options.back() != kTerminalOption) {
    fail(ErrorCode::protocol_error, "clarifying question for '" + q.node_id + "' must end with the terminal option");
  }
  std::set<std::string> seen;
  for (std::size_t i = 0; i < q.options.size(); ++i) {
    const auto& option = q.options[i];
    if (trim(option).empty()) fail(ErrorCode::protocol_error, "empty option for '" + q.node_id + "'");
    if (!seen.insert(normalize_label(option)).second) {
      fail(ErrorCode::protocol_error, "duplicate option '" + option + "' for '" + q.node_id + "'");
    }
    if (i + 1 < q.options.size() && normalize_label(option) == normalize_label(kTerminalOption)) {
      fail(ErrorCode::protocol_error, "terminal option must be last for '" + q.node_id + "'");
    }
  }
}

ClarifyingQuestion template_clarification(const FactRuleNode& node) {
  if (node.kind != NodeKind::fact) {
    fail(ErrorCode::invalid_argument, "cannot ask about rule node '" + node.id + "'");
  }
  ClarifyingQuestion q;
  q.node_id = node.id;
  q.text = "Could you tell us about the " + node.label + "? Which of these best describes your situation?";
  if (node.aliases.size() >= 2) {
    q.options.assign(node.aliases.begin(), node.aliases.end());
  } else {
    q.options = {"Yes, the " + node.label + " applies to me", "No, the " + node.label + " does not apply to me"};
  }
  q.options.emplace_back(kTerminalOption);
  return q;
}

std::vector<ClarifyingQuestion> parse_clarify_reply(std::string_view reply, std::span<const std::string> missing) {
  json doc;
  try {
    doc = json::parse(reply);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::protocol_error, std::string("clarify reply is not JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("clarifications") || !doc["clarifications"].is_array()) {
    fail(ErrorCode::protocol_error, "clarify reply lacks a clarifications array");
  }
  const auto& items = doc["clarifications"];
  if (items.size() != missing.size()) {
    fail(ErrorCode::protocol_error, "clarify reply has " + std::to_string(items.size()) + " items for " +
                                        std::to_string(missing.size()) + " missing nodes");
  }
  std::vector<ClarifyingQuestion> out;
  for (std::size_t j = 0; j < items.size(); ++j) {
    const auto& item = items[j];
    if (!item.is_object() || !item.contains("node_id") || !item["node_id"].is_string() ||
        !item.contains("question") || !item["question"].is_string() || !item.contains("options") ||
        !item["options"].is_array()) {
      fail(ErrorCode::protocol_error, "clarify item " + std::to_string(j) + " does not match the schema");
    }
    ClarifyingQuestion q;
    q.node_id = item["node_id"].get<std::string>();
    if (q.node_id != missing[j]) {
      fail(ErrorCode::protocol_error, "clarify item " + std::to_string(j) + " targets '" + q.node_id +
                                          "', expected '" + missing[j] + "'");
    }
    q.text = item["question"].get<std::string>();
    for (const auto& option : item["options"]) {
      if (!option.is_string()) fail(ErrorCode::protocol_error, "non-string option in clarify reply");
      q.options.push_back(option.get<std::string>());
    }
    q.options.emplace_back(kTerminalOption);
    validate(q);
    out.push_back(std::move(q));
  }
  return out;
}

std::vector<ClarifyingQuestion> generate_clarifications(std::string_view question,
                                                        std::span<const std::string> missing,
                                                        const FactRuleGraph& graph, LanguageModel* model,
                                                        std::size_t question_index, std::size_t first_index,
                                                        const ClarifierOptions& options) {
  if (missing.empty()) fail(ErrorCode::invalid_argument, "no missing nodes to clarify");
  std::set<std::string> distinct(missing.begin(), missing.end());
  if (distinct.size() != missing.size()) fail(ErrorCode::invalid_argument, "missing nodes contain duplicates");

  auto from_templates = [&] {
    std::vector<ClarifyingQuestion> out;
    for (const auto& id : missing) out.push_back(template_clarification(graph.node(id)));
    return out;
  };

  std::vector<ClarifyingQuestion> out;
  if (model == nullptr) {
    out = from_templates();
  } else {
    json nodes = json::array();
    for (const auto& id : missing) {
      const auto& node = graph.node(id);
      if (node.kind != NodeKind::fact) fail(ErrorCode::invalid_argument, "cannot ask about rule node '" + id + "'");
      nodes.push_back({{"id", node.id}, {"label", node.label}, {"aliases", node.aliases}});
    }
    try {
      out = parse_clarify_reply(model->complete(prompts::clarify(std::string(question), nodes)), missing);
    } catch (const Error& e) {
      if (!(e.retryable() && options.fallback_to_template)) throw;
      out = from_templates();
    }
  }
  for (std::size_t j = 0; j < out.size(); ++j) {
    out[j].question_index = question_index;
    out[j].index = first_index + j;
  }
  return out;
}

json to_json(const ClarifyingQuestion& q) {
  return {{"i", q.question_index}, {"j", q.index}, {"text", q.text}, {"node_id", q.node_id}, {"options", q.options}};
}

ClarifyingQuestion clarifying_question_from_json(const json& j) {
  try {
    ClarifyingQuestion q;
    q.question_index = j.at("i").get<std::size_t>();
    q.index = j.at("j").get<std::size_t>();
    q.text = j.at("text").get<std::string>();
    q.node_id = j.at("node_id").get<std::string>();
    q.options = j.at("options").get<std::vector<std::string>>();
    return q;
  } catch (const json::exception& e) {
    fail(ErrorCode::parse_error, std::string("malformed clarifying question: ") + e.what());
  }
}

}  // namespace legalqa
