#include "legalqa/detector.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

#include "legalqa/error.hpp"
#include "legalqa/prompts.hpp"
#include "legalqa/text.hpp"

namespace legalqa {

TemplateIndex::TemplateIndex(std::vector<SummaryQuestion> templates) : templates_(std::move(templates)) {
  std::sort(templates_.begin(), templates_.end(),
            [](const auto& a, const auto& b) { return a.question_id < b.question_id; });
  for (std::size_t i = 0; i < templates_.size(); ++i) {
    if (i > 0 && templates_[i].question_id == templates_[i - 1].question_id) {
      fail(ErrorCode::invalid_argument, "duplicate template id '" + templates_[i].question_id + "'");
    }
    for (const auto& node : templates_[i].key_nodes) by_node_[node].push_back(i);
  }
}

const SummaryQuestion& TemplateIndex::get(const std::string& question_id) const {
  auto it = std::lower_bound(templates_.begin(), templates_.end(), question_id,
                             [](const SummaryQuestion& q, const std::string& id) { return q.question_id < id; });
  if (it == templates_.end() || it->question_id != question_id) {
    fail(ErrorCode::lookup_error, "unknown template '" + question_id + "'");
  }
  return *it;
}

std::optional<TemplateMatch> TemplateIndex::nearest(const KnownNodeSet& known, std::size_t min_overlap) const {
  std::map<std::size_t, std::size_t> overlap;
  for (const auto& id : known.id_set()) {
    auto it = by_node_.find(id);
    if (it == by_node_.end()) continue;
    for (auto t : it->second) ++overlap[t];
  }
  std::optional<TemplateMatch> best;
  // Iterating in index order (= id order) and requiring a strict improvement
  // resolves ties toward the smallest id.
  for (const auto& [t, count] : overlap) {
    if (count < std::max<std::size_t>(min_overlap, 1)) continue;
    if (!best || count > best->overlap) best = TemplateMatch{&templates_[t], count};
  }
  return best;
}

std::string_view to_string(DetectorBackend backend) {
  return backend == DetectorBackend::coverage ? "coverage" : "provider";
}

bool parse_yes_no(std::string_view reply) {
  auto answer = to_lower(trim(reply));
  if (answer == "yes") return true;
  if (answer == "no") return false;
  fail(ErrorCode::protocol_error, "deficiency reply must be 'yes' or 'no', got '" + std::string(reply) + "'");
}

DeficiencyVerdict detect_deficiency(std::string_view question, const FactRuleGraph& graph,
                                    const TemplateIndex& templates, DetectorBackend backend, LanguageModel* model,
                                    const DetectorOptions& options) {
  auto known = match_known_nodes(graph, question, options.match_threshold);
  auto match = templates.nearest(known, options.min_overlap);

  DeficiencyVerdict verdict;
  verdict.backend = backend;
  verdict.matched_nodes = known.ids;
  if (match) {
    verdict.template_id = match->question->question_id;
    for (const auto& node : match->question->key_nodes) {
      if (!known.contains(node)) verdict.missing_nodes.push_back(node);
    }
  }

  if (backend == DetectorBackend::coverage) {
    verdict.deficient = !match || !verdict.missing_nodes.empty();
    return verdict;
  }

  if (model == nullptr) fail(ErrorCode::config_error, "provider detector backend needs a language model");
  std::vector<std::string> checklist;
  if (match) {
    for (const auto& node : match->question->key_nodes) checklist.push_back(graph.node(node).label);
  }
  verdict.deficient = parse_yes_no(model->complete(prompts::deficiency(std::string(question), checklist)));
  return verdict;
}

TrainingPairReport label_training_pairs(std::span<const LabeledQuestion> corpus) {
  if (corpus.empty()) fail(ErrorCode::invalid_argument, "cannot build training pairs from an empty corpus");
  TrainingPairReport report;
  for (const auto& q : corpus) {
    if (!q.sound()) fail(ErrorCode::invalid_argument, "unsound label on question: " + q.text);
    bool deficient = q.label == QuestionLabel::deficient;
    report.pairs.push_back({prompts::deficiency(q.text, {}).prompt, deficient ? "yes" : "no"});
    ++(deficient ? report.deficient : report.complete);
  }
  if (report.deficient == 0 || report.complete == 0) {
    report.warnings.push_back("class imbalance: " + std::to_string(report.deficient) + " deficient vs " +
                              std::to_string(report.complete) + " complete examples");
  }
  return report;
}

void write_training_pairs(const std::vector<TrainingPair>& pairs, std::ostream& out) {
  for (const auto& p : pairs) out << json{{"prompt", p.prompt}, {"completion", p.completion}}.dump() << '\n';
}

std::vector<TrainingPair> read_training_pairs(std::istream& in) {
  std::vector<TrainingPair> out;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    try {
      auto j = json::parse(line);
      TrainingPair p{j.at("prompt").get<std::string>(), j.at("completion").get<std::string>()};
      if (p.completion != "yes" && p.completion != "no") {
        fail(ErrorCode::parse_error, "training completion must be yes or no");
      }
      out.push_back(std::move(p));
    } catch (const json::exception& e) {
      fail(ErrorCode::parse_error, std::string("malformed training pair: ") + e.what());
    }
  }
  return out;
}

}  // namespace legalqa
