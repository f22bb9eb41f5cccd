#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "legalqa/corpus.hpp"
#include "legalqa/retrieval.hpp"

namespace legalqa {

/// Inclusive integer range.
struct CountRange {
  std::size_t lo = 1;
  std::size_t hi = 1;
};

struct SyntheticOptions {
  std::size_t n_cases = 10;
  CountRange facts_per_case{2, 4};
  CountRange rules_per_case{1, 2};
  std::uint64_t seed = 0;
  /// Distinct rules shared across cases; 0 picks 2 * rules_per_case.hi.
  std::size_t rule_pool = 0;
  /// Doctrines present in every case and governing every fact, in addition
  /// to rules_per_case.
  std::size_t shared_rules = 0;
  /// Chance a fact gets 2-3 recorded variants (used as clarification options).
  double alias_probability = 0.5;
  std::vector<std::string> jurisdictions{"CA", "NY", "TX"};
};

/// Generated cases plus the ground truth every downstream check compares
/// against. Fact labels carry a unique coined word, so a question matches
/// exactly the facts it mentions.
struct SyntheticCorpus {
  std::vector<CaseDocument> documents;
  std::vector<IngestRecord> truth;

  FactRuleGraph merged_graph() const;
  std::vector<SummaryQuestion> questions() const;
};

/// Deterministic under `seed`. Empty or inverted ranges and n_cases == 0 are
/// invalid_argument.
SyntheticCorpus generate_synthetic_corpus(const SyntheticOptions& options);

/// One provision per (rule, jurisdiction) describing the rule and the facts
/// it governs, plus `distractors` unrelated provisions per jurisdiction.
std::vector<ProvisionRecord> generate_synthetic_provisions(const SyntheticCorpus& corpus,
                                                           const std::vector<std::string>& jurisdictions,
                                                           std::size_t distractors, std::uint64_t seed);

/// Display names for the synthetic jurisdiction codes.
std::vector<std::pair<std::string, std::string>> synthetic_regions(const std::vector<std::string>& codes);

}  // namespace legalqa
