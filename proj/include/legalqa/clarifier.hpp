#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "legalqa/fact_graph.hpp"
#include "legalqa/provider.hpp"

namespace legalqa {

/// Always the last option of every clarifying question.
inline constexpr std::string_view kTerminalOption = "Other / not sure";

/// C_{i,j}: the j-th clarifying question for user question i, targeting one
/// missing node.
struct ClarifyingQuestion {
  std::size_t question_index = 0;
  std::size_t index = 0;
  std::string text;
  std::string node_id;
  std::vector<std::string> options;

  bool is_terminal(std::size_t option) const { return option + 1 == options.size(); }
  bool operator==(const ClarifyingQuestion&) const = default;
};

/// Throws protocol_error unless text is non-empty and options are unique,
/// non-empty, at least two before the terminal option, and end with it.
void validate(const ClarifyingQuestion& question);

/// Fixed template keyed on the node label. Options are the node's aliases
/// when it has at least two, otherwise yes/no variants naming the label;
/// the terminal option is appended. Rule nodes are invalid_argument.
ClarifyingQuestion template_clarification(const FactRuleNode& node);

struct ClarifierOptions {
  /// Use the template when the model is unavailable (retryable failure).
  /// Schema violations and fixture misses are never masked.
  bool fallback_to_template = true;
};

/// One question per missing node, in order, numbered first_index,
/// first_index + 1, ... With no model the template is used directly.
std::vector<ClarifyingQuestion> generate_clarifications(std::string_view question,
                                                        std::span<const std::string> missing,
                                                        const FactRuleGraph& graph, LanguageModel* model,
                                                        std::size_t question_index = 0, std::size_t first_index = 0,
                                                        const ClarifierOptions& options = {});

/// Strict parse of the model's clarify reply against the missing nodes.
std::vector<ClarifyingQuestion> parse_clarify_reply(std::string_view reply, std::span<const std::string> missing);

json to_json(const ClarifyingQuestion& question);
ClarifyingQuestion clarifying_question_from_json(const json& j);

}  // namespace legalqa
