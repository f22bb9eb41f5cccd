#include "legalqa/prompts.hpp"

namespace legalqa::prompts {

namespace {

const char* version_of(Touchpoint touchpoint) {
  switch (touchpoint) {
    case Touchpoint::irac_parse: return kIracParseVersion;
    case Touchpoint::summarize: return kSummarizeVersion;
    case Touchpoint::mask_paraphrase: return kMaskParaphraseVersion;
    case Touchpoint::deficiency: return kDeficiencyVersion;
    case Touchpoint::clarify: return kClarifyVersion;
    case Touchpoint::answer: return kAnswerVersion;
  }
  return "v0";
}

const char* instructions_of(Touchpoint touchpoint) {
  switch (touchpoint) {
    case Touchpoint::irac_parse:
      return "Split the case document into the four IRAC sections. Reply with exactly the four\n"
             "sections in order, each starting on its own line with ISSUE:, RULE:, APPLICATION:\n"
             "and CONCLUSION:. Mark each legal rule in the RULE section as [[rule:<name>]] and\n"
             "each material fact in the APPLICATION section as [[fact:<name>|<variant>...]],\n"
             "naming in the same sentence the rules that fact triggers.";
    case Touchpoint::summarize:
      return "Write one comprehensive legal question a layperson would ask about this case.\n"
             "The question must mention every listed fact verbatim. Reply with the question only.";
    case Touchpoint::mask_paraphrase:
      return "Rewrite the question so it reads naturally. Do not add information and do not\n"
             "mention any of the masked items. Reply with the rewritten question only.";
    case Touchpoint::deficiency:
      return "Decide whether the legal question lacks key information needed to answer it.\n"
             "The checklist lists the facts a complete question of this kind states.\n"
             "Reply with exactly one word: yes if information is missing, no otherwise.";
    case Touchpoint::clarify:
      return "For each missing fact, in the given order, write one clarifying question for the\n"
             "user and at least two mutually exclusive answer options. Do not include an\n"
             "'other / not sure' option. Reply with JSON only:\n"
             "{\"clarifications\": [{\"node_id\": \"...\", \"question\": \"...\", \"options\": [\"...\"]}]}";
    case Touchpoint::answer:
      return "Answer the legal question for the given location using the clarified facts and\n"
             "the retrieved provisions. Reply with exactly these labelled sections:\n"
             "CONCLUSION: <overall conclusion>\n"
             "ANALYSIS: <jurisprudential analysis>\n"
             "SUGGESTIONS: <resolution suggestions>\n"
             "CITATIONS: <comma-separated ids of the provisions you relied on>";
  }
  return "";
}

}  // namespace

LmRequest render(Touchpoint touchpoint, json input) {
  LmRequest request;
  request.touchpoint = touchpoint;
  request.version = version_of(touchpoint);
  request.prompt = "[legalqa:" + std::string(to_string(touchpoint)) + "/" + request.version + "]\n" +
                   instructions_of(touchpoint) + "\nINPUT:\n" + input.dump(2);
  request.input = std::move(input);
  return request;
}

LmRequest irac_parse(const std::string& case_id, const std::string& text) {
  return render(Touchpoint::irac_parse, {{"case_id", case_id}, {"text", text}});
}

LmRequest summarize(const std::string& issue, const std::vector<std::string>& fact_labels) {
  return render(Touchpoint::summarize, {{"issue", issue}, {"facts", fact_labels}});
}

LmRequest mask_paraphrase(const std::string& text, const std::vector<std::string>& masked_surfaces) {
  return render(Touchpoint::mask_paraphrase, {{"text", text}, {"masked", masked_surfaces}});
}

LmRequest deficiency(const std::string& question, const std::vector<std::string>& checklist) {
  return render(Touchpoint::deficiency, {{"question", question}, {"checklist", checklist}});
}

LmRequest clarify(const std::string& question, const json& nodes) {
  return render(Touchpoint::clarify, {{"question", question}, {"nodes", nodes}});
}

LmRequest answer(const std::string& question, const std::string& location, const json& clarifications,
                 const json& provisions) {
  return render(Touchpoint::answer, {{"question", question},
                                     {"location", location},
                                     {"clarifications", clarifications},
                                     {"provisions", provisions}});
}

}  // namespace legalqa::prompts
