#include "legalqa/synthetic.hpp"

#include <algorithm>
#include <array>
#include <map>

#include "legalqa/error.hpp"
#include "legalqa/text.hpp"

namespace legalqa {

namespace {

constexpr std::array<const char*, 20> kSyllables = {"ka", "lo", "mi", "ne", "ru", "ta", "vo", "zi", "be", "do",
                                                     "fa", "gu", "ho", "ji", "ke", "lu", "ma", "no", "pi", "se"};

constexpr std::array<const char*, 16> kFactNouns = {"deposit", "lease",   "invoice",   "notice",   "contract", "payment",
                                                    "warranty", "injury", "wage",      "delivery", "loan",     "repair",
                                                    "dismissal", "inspection", "refund", "tenancy"};

// Two-word variants; with two-word labels an alias has four tokens, so a
// foreign alias never reaches a 0.8 token match without the coined word.
constexpr std::array<const char*, 8> kFactVariants = {"paid fully",        "paid partially",  "confirmed writing",
                                                      "disputed verbally", "documented clearly", "undocumented entirely",
                                                      "received late",     "received promptly"};

constexpr std::array<const char*, 8> kRuleWords = {"liability",   "restitution",   "estoppel",    "negligence",
                                                   "mitigation",  "habitability",  "consideration", "frustration"};

constexpr std::array<const char*, 4> kOutcomes = {"The claim was allowed.", "The claim was dismissed.",
                                                  "The claim was allowed in part.", "The parties were sent to mediation."};

// Multiplying by a unit modulo the word space is a bijection, so distinct
// indices give distinct words.
std::string coined_word(std::size_t index, std::size_t syllables, std::uint64_t seed) {
  std::size_t space = 1;
  for (std::size_t i = 0; i < syllables; ++i) space *= kSyllables.size();
  std::size_t code = (index * 7919 + static_cast<std::size_t>(seed % space) * 31) % space;
  std::string word;
  for (std::size_t i = 0; i < syllables; ++i) {
    word += kSyllables[code % kSyllables.size()];
    code /= kSyllables.size();
  }
  return word;
}

void check_range(const CountRange& r, const char* name) {
  if (r.lo == 0 || r.hi < r.lo) {
    fail(ErrorCode::invalid_argument, std::string(name) + " range must satisfy 1 <= lo <= hi");
  }
}

std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

}  // namespace

FactRuleGraph SyntheticCorpus::merged_graph() const {
  std::vector<CaseGraph> graphs;
  for (const auto& r : truth) graphs.push_back(r.graph);
  return merge(graphs);
}

std::vector<SummaryQuestion> SyntheticCorpus::questions() const {
  std::vector<SummaryQuestion> out;
  for (const auto& r : truth) out.push_back(r.question);
  return out;
}

SyntheticCorpus generate_synthetic_corpus(const SyntheticOptions& options) {
  if (options.n_cases == 0) fail(ErrorCode::invalid_argument, "n_cases must be at least 1");
  check_range(options.facts_per_case, "facts_per_case");
  check_range(options.rules_per_case, "rules_per_case");
  if (options.jurisdictions.empty()) fail(ErrorCode::invalid_argument, "at least one jurisdiction is required");
  std::size_t pool = options.rule_pool == 0 ? 2 * options.rules_per_case.hi : options.rule_pool;
  if (pool < options.rules_per_case.hi) {
    fail(ErrorCode::invalid_argument, "rule pool is smaller than rules_per_case.hi");
  }
  if (options.n_cases * options.facts_per_case.hi > 8000) {
    fail(ErrorCode::invalid_argument, "too many facts for the coined-word space");
  }

  Rng rng(options.seed);
  std::vector<std::string> rule_labels;
  for (std::size_t i = 0; i < pool; ++i) {
    rule_labels.push_back(coined_word(i, 4, options.seed) + " " + kRuleWords[rng.index(kRuleWords.size())] +
                          " doctrine");
  }

  std::vector<std::string> shared_labels;
  for (std::size_t i = 0; i < options.shared_rules; ++i) {
    shared_labels.push_back(coined_word(pool + i, 4, options.seed) + " " + kRuleWords[rng.index(kRuleWords.size())] +
                            " doctrine");
  }

  SyntheticCorpus corpus;
  std::vector<std::size_t> deck;
  std::size_t fact_counter = 0;
  for (std::size_t c = 0; c < options.n_cases; ++c) {
    char id_buf[32];
    std::snprintf(id_buf, sizeof(id_buf), "case-%04zu", c + 1);
    std::string case_id = id_buf;
    std::string jurisdiction = options.jurisdictions[rng.index(options.jurisdictions.size())];

    // Rules are dealt from a shuffled deck of the pool, so cases only share
    // rules once the pool runs out. The first one governs every fact.
    std::size_t n_rules = rng.between(options.rules_per_case.lo, options.rules_per_case.hi);
    if (deck.size() < n_rules) {
      deck.resize(pool);
      for (std::size_t i = 0; i < pool; ++i) deck[i] = i;
      for (std::size_t i = pool - 1; i > 0; --i) std::swap(deck[i], deck[rng.index(i + 1)]);
    }
    std::vector<std::string> rules;
    for (std::size_t i = 0; i < n_rules; ++i) {
      rules.push_back(rule_labels[deck.back()]);
      deck.pop_back();
    }
    rules.insert(rules.end(), shared_labels.begin(), shared_labels.end());

    std::size_t n_facts = rng.between(options.facts_per_case.lo, options.facts_per_case.hi);
    struct Fact {
      std::string label;
      std::set<std::string> aliases;
      std::vector<std::size_t> rules;
    };
    std::vector<Fact> facts;
    for (std::size_t f = 0; f < n_facts; ++f) {
      Fact fact;
      fact.label = coined_word(fact_counter++, 3, options.seed) + " " + kFactNouns[rng.index(kFactNouns.size())];
      if (rng.uniform01() < options.alias_probability) {
        std::size_t n_alias = rng.between(2, 3);
        std::vector<std::size_t> order(kFactVariants.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng.index(i + 1)]);
        for (std::size_t a = 0; a < n_alias; ++a) fact.aliases.insert(fact.label + " " + kFactVariants[order[a]]);
      }
      fact.rules.push_back(0);
      if (n_rules > 1 && rng.uniform01() < 0.5) fact.rules.push_back(1 + rng.index(n_rules - 1));
      for (std::size_t s = 0; s < shared_labels.size(); ++s) fact.rules.push_back(n_rules + s);
      facts.push_back(std::move(fact));
    }

    IracFrame frame;
    frame.case_id = case_id;
    frame.issue = "Whether the claimant may obtain relief in dispute " + std::to_string(c + 1) + ".";
    for (std::size_t r = 0; r < rules.size(); ++r) {
      if (r > 0) frame.rule += " ";
      frame.rule += "The court applied the [[rule:" + rules[r] + "]].";
    }
    for (std::size_t f = 0; f < facts.size(); ++f) {
      const auto& fact = facts[f];
      if (f > 0) frame.application += " ";
      frame.application += "The record establishes the [[fact:" + fact.label;
      for (const auto& alias : fact.aliases) frame.application += "|" + alias;
      frame.application += "]], which engages the ";
      for (std::size_t k = 0; k < fact.rules.size(); ++k) {
        if (k > 0) frame.application += " and the ";
        frame.application += "[[rule:" + rules[fact.rules[k]] + "]]";
      }
      frame.application += ".";
    }
    frame.conclusion = kOutcomes[rng.index(kOutcomes.size())];

    CaseGraph graph;
    graph.case_id = case_id;
    for (const auto& label : rules) {
      auto node = FactRuleNode::make(label, NodeKind::rule);
      graph.sections[node.id] = IracSection::rule;
      graph.nodes[node.id] = node;
    }
    std::vector<std::string> fact_labels;
    for (const auto& fact : facts) {
      auto node = FactRuleNode::make(fact.label, NodeKind::fact, fact.aliases);
      graph.sections[node.id] = IracSection::application;
      graph.nodes[node.id] = node;
      for (auto r : fact.rules) graph.edges.emplace(node.id, normalize_label(rules[r]));
      fact_labels.push_back(node.label);
    }

    SummaryQuestion question;
    question.question_id = "q-" + case_id;
    question.source_case = case_id;
    for (const auto& id : graph.fact_ids()) question.key_nodes.insert(id);
    std::vector<std::string> ordered_labels;
    for (const auto& id : graph.fact_ids()) ordered_labels.push_back(graph.nodes.at(id).label);
    question.text = default_summary_text(strip_markup(frame.issue), ordered_labels);

    CaseDocument doc;
    doc.id = case_id;
    doc.jurisdiction = jurisdiction;
    doc.text = "ISSUE: " + frame.issue + "\nRULE: " + frame.rule + "\nAPPLICATION: " + frame.application +
               "\nCONCLUSION: " + frame.conclusion + "\n";

    corpus.documents.push_back(doc);
    corpus.truth.push_back({doc, frame, graph, question});
  }
  return corpus;
}

std::vector<ProvisionRecord> generate_synthetic_provisions(const SyntheticCorpus& corpus,
                                                           const std::vector<std::string>& jurisdictions,
                                                           std::size_t distractors, std::uint64_t seed) {
  // rule label -> nouns of the facts it governs
  std::map<std::string, std::set<std::string>> governed;
  for (const auto& r : corpus.truth) {
    for (const auto& [fact, rule] : r.graph.edges) {
      auto tokens = tokenize(r.graph.nodes.at(fact).label);
      governed[r.graph.nodes.at(rule).label].insert(tokens.back());
    }
  }
  Rng rng(seed);
  std::vector<ProvisionRecord> out;
  for (const auto& code : jurisdictions) {
    std::size_t n = 0;
    for (const auto& [rule, nouns] : governed) {
      std::string topics;
      for (const auto& noun : nouns) topics += (topics.empty() ? "" : ", ") + noun;
      out.push_back({code + "-" + std::to_string(++n), code, capitalize(rule) + " (" + code + ")",
                     "Under the " + rule + ", a party may seek relief in disputes concerning " + topics +
                         ". The court weighs the conduct of both parties and any written record."});
    }
    for (std::size_t d = 0; d < distractors; ++d) {
      out.push_back({code + "-" + std::to_string(++n), code, "Administrative filing rule " + std::to_string(d + 1),
                     "Filings must be lodged within " + std::to_string(10 + rng.index(50)) +
                         " days and signed by the filing party or an authorised representative."});
    }
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> synthetic_regions(const std::vector<std::string>& codes) {
  static const std::map<std::string, std::string> kNames = {
      {"CA", "California"}, {"NY", "New York"}, {"TX", "Texas"}, {"FL", "Florida"}, {"WA", "Washington"}};
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& code : codes) {
    auto it = kNames.find(code);
    out.emplace_back(code, it == kNames.end() ? code : it->second);
  }
  return out;
}

}  // namespace legalqa
