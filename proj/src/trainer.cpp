#include <cmath>

#include "legalqa/error.hpp"
#include "legalqa/predictor.hpp"

namespace legalqa {

namespace {

class Adam {
 public:
  Adam(Eigen::Index n, double lr) : lr_(lr), m_(Vector::Zero(n)), v_(Vector::Zero(n)) {}

  // Minimizes: params -= lr * m_hat / (sqrt(v_hat) + eps).
  void step(Vector& params, const Vector& grad) {
    ++t_;
    m_ = kBeta1 * m_ + (1.0 - kBeta1) * grad;
    v_ = kBeta2 * v_ + (1.0 - kBeta2) * grad.array().square().matrix();
    double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + kEps);
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
  double lr_;
  Vector m_;
  Vector v_;
  long t_ = 0;
};

bool finite(const Vector& v) { return v.allFinite(); }

void embedding_grad_vector(const EncodedGraph& enc, const NodeEmbeddings& grads, std::size_t dim,
                           std::vector<Vector>& out) {
  out.assign(enc.ids.size(), Vector::Zero(static_cast<Eigen::Index>(dim)));
  for (const auto& [id, g] : grads) {
    auto it = enc.index.find(id);
    if (it != enc.index.end()) out[it->second] += g;
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) fail(ErrorCode::config_error, "gamma must lie in [0, 1)");
  if (!(actor_lr > 0.0) || !(critic_lr > 0.0) || !(encoder_lr > 0.0)) {
    fail(ErrorCode::config_error, "learning rates must be positive");
  }
  if (max_steps && *max_steps == 0) fail(ErrorCode::config_error, "max_steps must be at least 1");
  if (dim == 0 || hidden == 0 || buckets == 0) fail(ErrorCode::config_error, "network sizes must be positive");
}

PredictorModel PredictorModel::initialize(const TrainConfig& config) {
  config.validate();
  PredictorModel model;
  model.config = config;
  model.encoder = EncoderParams::initialize(config.dim, config.rounds, config.seed, config.buckets);
  Rng rng(config.seed ^ 0x5eedf00dULL);
  // A small output layer keeps the untrained policy close to uniform.
  model.policy.net = Mlp::random(config.dim, config.hidden, config.dim, rng, 0.1);
  model.value.net = Mlp::random(config.dim, config.hidden, 1, rng);
  return model;
}

std::vector<MaskedInstance> instances_from(std::span<const MaskedQuestion> questions) {
  std::vector<MaskedInstance> out;
  for (const auto& q : questions) out.push_back({q.retained_nodes, q.masked_nodes});
  return out;
}

TrainResult train(const FactRuleGraph& graph, std::span<const MaskedInstance> instances, const TrainConfig& config) {
  return train(graph, instances, PredictorModel::initialize(config), config);
}

TrainResult train(const FactRuleGraph& graph, std::span<const MaskedInstance> instances, PredictorModel model,
                  const TrainConfig& config) {
  config.validate();
  if (instances.empty()) fail(ErrorCode::invalid_argument, "training needs at least one masked instance");
  if (model.encoder.dim != config.dim) fail(ErrorCode::config_error, "model dimension differs from the config");
  for (const auto& inst : instances) {
    for (const auto& id : inst.masked) {
      if (!graph.contains(id)) fail(ErrorCode::lookup_error, "masked node '" + id + "' is not in the graph");
    }
  }

  model.config = config;
  TrainResult result;
  Rng rng(config.seed);
  Adam actor(model.policy.net.params.size(), config.actor_lr);
  Adam critic(model.value.net.params.size(), config.critic_lr);
  Vector encoder_flat = model.encoder.flatten_layers();
  Adam encoder_opt(encoder_flat.size(), config.encoder_lr);

  for (std::size_t e = 0; e < config.episodes; ++e) {
    std::size_t which = rng.index(instances.size());
    const auto& inst = instances[which];
    Episode episode(graph, inst.known, inst.masked, config.max_steps.value_or(0), config.hops);
    PolicyView view = policy_view(graph, model, episode.known());

    while (!episode.done() && !view.candidates.empty()) {
      auto dist = policy_forward(model.policy, view.state, view.candidates, view.embeddings);
      std::size_t choice = dist.sample(rng);
      auto step = episode.step(view.candidates[choice]);

      double v_t = value_forward(model.value, view.state);
      PolicyView next;
      double v_next = 0.0;
      if (!step.done) {
        next = policy_view(graph, model, episode.known());
        v_next = value_forward(model.value, next.state);
      }
      double delta = advantage(step.reward, config.gamma, v_t, v_next);
      if (!std::isfinite(delta)) fail(ErrorCode::divergence, "non-finite temporal-difference error");

      NodeEmbeddings emb_grad;
      NodeEmbeddings* emb_grad_ptr = config.train_encoder ? &emb_grad : nullptr;
      // Ascend δ log π  ==  descend -δ log π.
      Vector g_actor = -delta * policy_log_prob_gradient(model.policy, view.state, view.candidates, choice,
                                                         view.embeddings, emb_grad_ptr);
      if (config.train_encoder) {
        for (auto& [id, g] : emb_grad) g *= -delta;
      }
      // Descend 0.5 δ² with the bootstrapped target held fixed.
      NodeEmbeddings value_emb_grad;
      Vector g_critic = -delta * value_gradient(model.value, view.state,
                                                config.train_encoder ? &value_emb_grad : nullptr);
      actor.step(model.policy.net.params, g_actor);
      critic.step(model.value.net.params, g_critic);

      if (config.train_encoder) {
        for (auto& [id, g] : value_emb_grad) {
          auto it = emb_grad.find(id);
          if (it == emb_grad.end()) {
            emb_grad.emplace(id, -delta * g);
          } else {
            it->second += -delta * g;
          }
        }
        std::vector<Vector> per_node;
        embedding_grad_vector(view.encoded, emb_grad, config.dim, per_node);
        Vector g_encoder = encoder_backward(model.encoder, view.encoded, per_node);
        encoder_opt.step(encoder_flat, g_encoder);
        model.encoder.assign_layers(encoder_flat);
        if (!finite(encoder_flat)) fail(ErrorCode::divergence, "encoder parameters became non-finite");
        // The encoder moved, so the next state must be recomputed.
        if (!step.done) next = policy_view(graph, model, episode.known());
      }
      if (!finite(model.policy.net.params) || !finite(model.value.net.params)) {
        fail(ErrorCode::divergence, "network parameters became non-finite");
      }
      if (step.done) break;
      view = std::move(next);
    }

    result.log.push_back({e, which, discounted_return(episode.rewards(), config.gamma), episode.steps(),
                          episode.found().size()});
  }
  result.model = std::move(model);
  return result;
}

}  // namespace legalqa
