#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "legalqa/corpus.hpp"
#include "legalqa/detector.hpp"
#include "legalqa/encoder.hpp"
#include "legalqa/environment.hpp"
#include "legalqa/networks.hpp"

namespace legalqa {

struct TrainConfig {
  double gamma = 0.95;
  double actor_lr = 1e-3;
  double critic_lr = 1e-2;
  std::size_t episodes = 500;
  /// Per-episode step cap; unset means 2 * |masked|.
  std::optional<std::size_t> max_steps;
  std::uint64_t seed = 0;

  std::size_t dim = 64;
  std::size_t hidden = 64;
  std::size_t rounds = 2;
  std::size_t hops = 2;
  std::size_t buckets = 1024;

  /// Backpropagate into the encoder layers as well (the feature table stays
  /// fixed). Off by default.
  bool train_encoder = false;
  double encoder_lr = 1e-3;

  /// Throws config_error.
  void validate() const;
};

struct PredictorModel {
  TrainConfig config;
  EncoderParams encoder;
  PolicyNet policy;
  ValueNet value;

  /// Seeded initialization; the same config always gives the same model.
  static PredictorModel initialize(const TrainConfig& config);
};

/// One masked question seen from the agent: what it starts with and what it
/// should recover.
struct MaskedInstance {
  std::set<std::string> known;
  std::set<std::string> masked;
};

std::vector<MaskedInstance> instances_from(std::span<const MaskedQuestion> questions);

/// `per_question` seeded maskings of every record's summary question
/// (mask seed = fnv1a64(question_id + "#" + m, seed)), duplicates dropped.
std::vector<MaskedInstance> sample_masked_instances(std::span<const IngestRecord> records, double fraction,
                                                    std::size_t per_question, std::uint64_t seed);

struct EpisodeLog {
  std::size_t episode = 0;
  std::size_t instance = 0;
  double discounted_return = 0.0;
  std::size_t steps = 0;
  std::size_t found = 0;
};

struct TrainResult {
  PredictorModel model;
  std::vector<EpisodeLog> log;
};

/// Online advantage actor-critic. Each step samples a ~ π(·|s), observes r
/// and s', and with δ = r + γV(s') − V(s) (V(s') = 0 at episode end) takes
/// an Adam step along δ∇log π(a|s) for θ and along δ∇V(s) for φ. Episodes
/// draw instances uniformly with the seeded generator. A non-finite δ or
/// parameter aborts with divergence.
TrainResult train(const FactRuleGraph& graph, std::span<const MaskedInstance> instances, const TrainConfig& config);

/// Continues training an existing model (same procedure, same config rules).
TrainResult train(const FactRuleGraph& graph, std::span<const MaskedInstance> instances, PredictorModel model,
                  const TrainConfig& config);

/// Embeddings over the encoder focus for `known` together with the state
/// and candidate pool the policy sees.
struct PolicyView {
  EncodedGraph encoded;
  NodeEmbeddings embeddings;
  State state;
  std::vector<std::string> candidates;
};

PolicyView policy_view(const FactRuleGraph& graph, const PredictorModel& model, const std::set<std::string>& known);

/// Greedy rollout: up to max_steps argmax picks, each appended to the known
/// set before the next. Stops early when no candidates remain.
std::vector<std::string> predict_missing(const FactRuleGraph& graph, const std::set<std::string>& known,
                                         const PredictorModel& model, std::size_t max_steps);

/// N_i minus known for the nearest template; no template → no_match.
std::set<std::string> oracle_missing(const TemplateIndex& templates, const KnownNodeSet& known,
                                     std::size_t min_overlap = 1);

struct EvalReport {
  std::size_t instances = 0;
  double recall = 0.0;
  double precision = 0.0;
  double random_recall = 0.0;
  double random_precision = 0.0;
  std::size_t random_rollouts = 0;
  double seconds = 0.0;
};

/// Greedy rollouts of |masked| steps against the masked sets, and the same
/// for a uniform-random policy over the same candidate pools
/// (random_repeats rollouts per instance). Recall and precision are
/// averaged over instances.
EvalReport evaluate(const FactRuleGraph& graph, const PredictorModel& model, std::span<const MaskedInstance> instances,
                    std::size_t random_repeats = 20, std::uint64_t seed = 0);

/// Mean discounted return of greedy episodes (default step cap).
double mean_greedy_return(const FactRuleGraph& graph, const PredictorModel& model,
                          std::span<const MaskedInstance> instances);

json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const json& j);

}  // namespace legalqa
