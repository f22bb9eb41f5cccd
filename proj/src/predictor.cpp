#include "legalqa/predictor.hpp"

#include <algorithm>
#include <chrono>

#include "legalqa/error.hpp"
#include "legalqa/text.hpp"

namespace legalqa {

std::vector<MaskedInstance> sample_masked_instances(std::span<const IngestRecord> records, double fraction,
                                                    std::size_t per_question, std::uint64_t seed) {
  std::vector<MaskedInstance> out;
  std::set<std::pair<std::set<std::string>, std::set<std::string>>> seen;
  for (const auto& r : records) {
    for (std::size_t m = 0; m < per_question; ++m) {
      auto mask_seed = fnv1a64(r.question.question_id + "#" + std::to_string(m), seed);
      auto masked = mask_nodes(r.question, r.graph.nodes, fraction, mask_seed);
      if (seen.insert({masked.retained_nodes, masked.masked_nodes}).second) {
        out.push_back({masked.retained_nodes, masked.masked_nodes});
      }
    }
  }
  return out;
}

PolicyView policy_view(const FactRuleGraph& graph, const PredictorModel& model, const std::set<std::string>& known) {
  PolicyView view;
  view.encoded = encode_graph(graph, model.encoder, known, model.config.hops);
  view.embeddings = view.encoded.embeddings();
  view.state = state_of(known, view.embeddings, model.encoder.dim);
  view.candidates = candidate_pool(graph, known, model.config.hops);
  return view;
}

std::vector<std::string> predict_missing(const FactRuleGraph& graph, const std::set<std::string>& known,
                                         const PredictorModel& model, std::size_t max_steps) {
  std::vector<std::string> out;
  std::set<std::string> current = known;
  for (std::size_t step = 0; step < max_steps; ++step) {
    auto view = policy_view(graph, model, current);
    if (view.candidates.empty()) break;
    auto dist = policy_forward(model.policy, view.state, view.candidates, view.embeddings);
    const auto& pick = view.candidates[dist.argmax()];
    out.push_back(pick);
    current.insert(pick);
  }
  return out;
}

std::set<std::string> oracle_missing(const TemplateIndex& templates, const KnownNodeSet& known,
                                     std::size_t min_overlap) {
  auto match = templates.nearest(known, min_overlap);
  if (!match) fail(ErrorCode::no_match, "no template shares enough key nodes with the question");
  std::set<std::string> out;
  for (const auto& id : match->question->key_nodes) {
    if (!known.contains(id)) out.insert(id);
  }
  return out;
}

namespace {

struct Score {
  double recall = 0.0;
  double precision = 0.0;
};

Score score_prediction(const std::vector<std::string>& predicted, const std::set<std::string>& truth) {
  std::size_t hits = 0;
  for (const auto& id : predicted) hits += truth.count(id);
  Score s;
  if (!truth.empty()) s.recall = static_cast<double>(hits) / static_cast<double>(truth.size());
  if (!predicted.empty()) s.precision = static_cast<double>(hits) / static_cast<double>(predicted.size());
  return s;
}

std::vector<std::string> random_rollout(const FactRuleGraph& graph, const std::set<std::string>& known,
                                        std::size_t steps, std::size_t hops, Rng& rng) {
  std::vector<std::string> out;
  std::set<std::string> current = known;
  for (std::size_t i = 0; i < steps; ++i) {
    auto pool = candidate_pool(graph, current, hops);
    if (pool.empty()) break;
    const auto& pick = pool[rng.index(pool.size())];
    out.push_back(pick);
    current.insert(pick);
  }
  return out;
}

}  // namespace

EvalReport evaluate(const FactRuleGraph& graph, const PredictorModel& model, std::span<const MaskedInstance> instances,
                    std::size_t random_repeats, std::uint64_t seed) {
  if (instances.empty()) fail(ErrorCode::invalid_argument, "evaluation needs at least one instance");
  auto start = std::chrono::steady_clock::now();
  EvalReport report;
  report.instances = instances.size();
  Rng rng(seed);
  for (const auto& inst : instances) {
    auto predicted = predict_missing(graph, inst.known, model, inst.masked.size());
    auto s = score_prediction(predicted, inst.masked);
    report.recall += s.recall;
    report.precision += s.precision;
    for (std::size_t r = 0; r < random_repeats; ++r) {
      auto guess = random_rollout(graph, inst.known, inst.masked.size(), model.config.hops, rng);
      auto rs = score_prediction(guess, inst.masked);
      report.random_recall += rs.recall;
      report.random_precision += rs.precision;
      ++report.random_rollouts;
    }
  }
  auto n = static_cast<double>(instances.size());
  report.recall /= n;
  report.precision /= n;
  if (report.random_rollouts > 0) {
    report.random_recall /= static_cast<double>(report.random_rollouts);
    report.random_precision /= static_cast<double>(report.random_rollouts);
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

double mean_greedy_return(const FactRuleGraph& graph, const PredictorModel& model,
                          std::span<const MaskedInstance> instances) {
  if (instances.empty()) fail(ErrorCode::invalid_argument, "no instances to roll out");
  double total = 0.0;
  for (const auto& inst : instances) {
    Episode episode(graph, inst.known, inst.masked, model.config.max_steps.value_or(0), model.config.hops);
    while (!episode.done()) {
      auto view = policy_view(graph, model, episode.known());
      if (view.candidates.empty()) break;
      auto dist = policy_forward(model.policy, view.state, view.candidates, view.embeddings);
      episode.step(view.candidates[dist.argmax()]);
    }
    total += discounted_return(episode.rewards(), model.config.gamma);
  }
  return total / static_cast<double>(instances.size());
}

json to_json(const TrainConfig& c) {
  json j{{"gamma", c.gamma},     {"actor_lr", c.actor_lr},   {"critic_lr", c.critic_lr},
         {"episodes", c.episodes}, {"seed", c.seed},         {"dim", c.dim},
         {"hidden", c.hidden},   {"rounds", c.rounds},       {"hops", c.hops},
         {"buckets", c.buckets}, {"train_encoder", c.train_encoder}, {"encoder_lr", c.encoder_lr}};
  j["max_steps"] = c.max_steps ? json(*c.max_steps) : json(nullptr);
  return j;
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  try {
    c.gamma = j.value("gamma", c.gamma);
    c.actor_lr = j.value("actor_lr", c.actor_lr);
    c.critic_lr = j.value("critic_lr", c.critic_lr);
    c.episodes = j.value("episodes", c.episodes);
    c.seed = j.value("seed", c.seed);
    c.dim = j.value("dim", c.dim);
    c.hidden = j.value("hidden", c.hidden);
    c.rounds = j.value("rounds", c.rounds);
    c.hops = j.value("hops", c.hops);
    c.buckets = j.value("buckets", c.buckets);
    c.train_encoder = j.value("train_encoder", c.train_encoder);
    c.encoder_lr = j.value("encoder_lr", c.encoder_lr);
    if (j.contains("max_steps") && !j.at("max_steps").is_null()) c.max_steps = j.at("max_steps").get<std::size_t>();
  } catch (const json::exception& e) {
    fail(ErrorCode::config_error, std::string("malformed training config: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace legalqa
