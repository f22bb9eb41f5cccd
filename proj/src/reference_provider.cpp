#include "legalqa/corpus.hpp"
#include "legalqa/error.hpp"
#include "legalqa/provider.hpp"
#include "legalqa/text.hpp"

namespace legalqa {

namespace {

std::string str(const json& input, const char* key) {
  if (!input.contains(key) || !input.at(key).is_string()) {
    fail(ErrorCode::protocol_error, std::string("reference model input lacks '") + key + "'");
  }
  return input.at(key).get<std::string>();
}

std::vector<std::string> strings(const json& input, const char* key) {
  if (!input.contains(key) || !input.at(key).is_array()) return {};
  return input.at(key).get<std::vector<std::string>>();
}

std::string irac_parse(const json& input) {
  auto text = str(input, "text");
  if (!has_irac_delimiters(text)) {
    fail(ErrorCode::protocol_error, "reference model can only segment documents that carry IRAC delimiters");
  }
  return text;
}

std::string deficiency(const json& input) {
  auto question = token_set(str(input, "question"));
  auto checklist = strings(input, "checklist");
  if (checklist.empty()) return "yes";
  for (const auto& label : checklist) {
    for (const auto& token : tokenize(label)) {
      if (question.count(token) == 0) return "yes";
    }
  }
  return "no";
}

std::string clarify(const json& input) {
  json items = json::array();
  for (const auto& node : input.value("nodes", json::array())) {
    auto label = node.value("label", std::string());
    auto aliases = node.value("aliases", std::vector<std::string>());
    std::vector<std::string> options;
    if (aliases.size() >= 2) {
      options = aliases;
    } else {
      options = {"Yes, there was a " + label, "No, there was no " + label};
    }
    items.push_back({{"node_id", node.value("id", std::string())},
                     {"question", "Can you tell us more about the " + label + " in your situation?"},
                     {"options", options}});
  }
  return json{{"clarifications", items}}.dump();
}

std::string answer(const json& input) {
  auto question = str(input, "question");
  auto location = str(input, "location");
  const auto provisions = input.value("provisions", json::array());
  const auto clarifications = input.value("clarifications", json::array());

  std::string facts;
  for (const auto& c : clarifications) {
    auto selection = c.value("selection", std::string());
    if (selection.empty()) continue;
    facts += (facts.empty() ? "" : "; ") + selection;
  }

  std::string conclusion = "CONCLUSION: ";
  std::string analysis = "ANALYSIS: ";
  std::vector<std::string> cited;
  if (provisions.empty()) {
    conclusion += "No provision of " + location + " directly governs this situation.";
    analysis += "None of the retrieved material applies to the facts described.";
  } else {
    const auto& top = provisions.front();
    conclusion += "Under the law of " + location + ", your situation is most likely governed by " +
                  top.value("title", std::string()) + ".";
    for (std::size_t i = 0; i < provisions.size() && i < 2; ++i) {
      const auto& p = provisions[i];
      cited.push_back(p.value("id", std::string()));
      if (i > 0) analysis += " ";
      analysis += "Provision " + cited.back() + " (" + p.value("title", std::string()) + ") states: " +
                  p.value("text", std::string());
    }
  }
  if (!facts.empty()) analysis += " The clarified facts are: " + facts + ".";

  std::string citations = "CITATIONS: ";
  for (std::size_t i = 0; i < cited.size(); ++i) citations += (i > 0 ? ", " : "") + cited[i];

  return conclusion + "\n" + analysis + "\n" +
         "SUGGESTIONS: Keep every written record of the dispute, raise the matter in writing with the other "
         "party, and consult a lawyer licensed in " +
         location + " before any filing deadline.\n" + citations;
}

}  // namespace

std::string ReferenceLanguageModel::complete(const LmRequest& request) {
  const auto& input = request.input;
  if (!input.is_object()) fail(ErrorCode::protocol_error, "reference model needs a structured input payload");
  switch (request.touchpoint) {
    case Touchpoint::irac_parse: return irac_parse(input);
    case Touchpoint::summarize: return default_summary_text(str(input, "issue"), strings(input, "facts"));
    case Touchpoint::mask_paraphrase: return tidy_spacing(str(input, "text"));
    case Touchpoint::deficiency: return deficiency(input);
    case Touchpoint::clarify: return clarify(input);
    case Touchpoint::answer: return answer(input);
  }
  fail(ErrorCode::protocol_error, "unknown touchpoint");
}

}  // namespace legalqa
