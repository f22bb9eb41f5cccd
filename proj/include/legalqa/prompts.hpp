#pragma once

// Versioned prompt templates for every model touchpoint. A rendered prompt
// is a header line, the instructions, and the structured input as JSON:
//
//   [legalqa:<touchpoint>/<version>]
//   <instructions>
//   INPUT:
//   <json>

#include <string>

#include "legalqa/provider.hpp"

namespace legalqa::prompts {

inline constexpr const char* kIracParseVersion = "v1";
inline constexpr const char* kSummarizeVersion = "v1";
inline constexpr const char* kMaskParaphraseVersion = "v1";
inline constexpr const char* kDeficiencyVersion = "v1";
inline constexpr const char* kClarifyVersion = "v1";
inline constexpr const char* kAnswerVersion = "v1";

LmRequest render(Touchpoint touchpoint, json input);

/// {case_id, text}
LmRequest irac_parse(const std::string& case_id, const std::string& text);
/// {issue, facts: [label]}
LmRequest summarize(const std::string& issue, const std::vector<std::string>& fact_labels);
/// {text, masked: [surface string]}
LmRequest mask_paraphrase(const std::string& text, const std::vector<std::string>& masked_surfaces);
/// {question, checklist: [label]}
LmRequest deficiency(const std::string& question, const std::vector<std::string>& checklist);
/// {question, nodes: [{id, label, aliases}]}
LmRequest clarify(const std::string& question, const json& nodes);
/// {question, location, clarifications: [{question, selection}], provisions: [{id, title, text}]}
LmRequest answer(const std::string& question, const std::string& location, const json& clarifications,
                 const json& provisions);

}  // namespace legalqa::prompts
