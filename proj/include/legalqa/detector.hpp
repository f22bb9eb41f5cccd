#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "legalqa/corpus.hpp"
#include "legalqa/fact_graph.hpp"
#include "legalqa/provider.hpp"

namespace legalqa {

struct TemplateMatch {
  const SummaryQuestion* question = nullptr;
  std::size_t overlap = 0;
};

/// Summary questions indexed by key node, used as the reference of what a
/// complete question of each kind states.
class TemplateIndex {
 public:
  TemplateIndex() = default;
  explicit TemplateIndex(std::vector<SummaryQuestion> templates);

  const std::vector<SummaryQuestion>& templates() const { return templates_; }
  const SummaryQuestion& get(const std::string& question_id) const;
  std::size_t size() const { return templates_.size(); }

  /// Template sharing the most key nodes with `known`; ties go to the
  /// smallest question id. Nothing at or above `min_overlap` gives nullopt.
  std::optional<TemplateMatch> nearest(const KnownNodeSet& known, std::size_t min_overlap = 1) const;

 private:
  std::vector<SummaryQuestion> templates_;
  std::map<std::string, std::vector<std::size_t>> by_node_;
};

enum class DetectorBackend { coverage, provider };
std::string_view to_string(DetectorBackend backend);

struct DeficiencyVerdict {
  bool deficient = true;
  DetectorBackend backend = DetectorBackend::coverage;
  std::vector<std::string> matched_nodes;
  std::optional<std::string> template_id;
  /// Key nodes of the matched template absent from the question.
  std::vector<std::string> missing_nodes;
};

struct DetectorOptions {
  double match_threshold = kDefaultMatchThreshold;
  std::size_t min_overlap = 1;
};

/// Coverage: deficient unless the matched nodes cover every key node of the
/// nearest template; no template at all counts as deficient. Provider: the
/// model sees the question and the nearest template's checklist and must
/// reply yes or no.
DeficiencyVerdict detect_deficiency(std::string_view question, const FactRuleGraph& graph,
                                    const TemplateIndex& templates, DetectorBackend backend = DetectorBackend::coverage,
                                    LanguageModel* model = nullptr, const DetectorOptions& options = {});

/// "yes" -> true, "no" -> false (surrounding whitespace and case ignored).
/// Anything else is protocol_error.
bool parse_yes_no(std::string_view reply);

/// One fine-tuning example in the {prompt, completion} JSON-lines format.
struct TrainingPair {
  std::string prompt;
  std::string completion;
  bool operator==(const TrainingPair&) const = default;
};

struct TrainingPairReport {
  std::vector<TrainingPair> pairs;
  std::size_t deficient = 0;
  std::size_t complete = 0;
  std::vector<std::string> warnings;
};

/// Empty corpora and unsound labels are invalid_argument. A single-class
/// corpus produces a warning.
TrainingPairReport label_training_pairs(std::span<const LabeledQuestion> corpus);

void write_training_pairs(const std::vector<TrainingPair>& pairs, std::ostream& out);
std::vector<TrainingPair> read_training_pairs(std::istream& in);

}  // namespace legalqa
