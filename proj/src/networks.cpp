#include "legalqa/networks.hpp"

#include <cmath>

#include "legalqa/error.hpp"

namespace legalqa {

namespace {

Eigen::Index idx(std::size_t n) { return static_cast<Eigen::Index>(n); }

void add_grad(NodeEmbeddings& grads, const std::string& id, const Vector& g) {
  auto it = grads.find(id);
  if (it == grads.end()) {
    grads.emplace(id, g);
  } else {
    it->second += g;
  }
}

// d pooled / d E_k = I / |known| for every known k.
void spread_state_grad(const State& s, const Vector& grad_state, NodeEmbeddings& grads) {
  if (s.known.empty()) return;
  Vector share = grad_state / static_cast<double>(s.known.size());
  for (const auto& id : s.known) add_grad(grads, id, share);
}

const Vector& embedding_of(const NodeEmbeddings& embeddings, const std::string& id) {
  auto it = embeddings.find(id);
  if (it == embeddings.end()) fail(ErrorCode::lookup_error, "no embedding for node '" + id + "'");
  return it->second;
}

}  // namespace

Mlp Mlp::zeros(std::size_t in, std::size_t hidden, std::size_t out) {
  Mlp m{in, hidden, out, {}};
  m.params = Vector::Zero(idx(m.parameter_count()));
  return m;
}

Mlp Mlp::random(std::size_t in, std::size_t hidden, std::size_t out, Rng& rng, double output_scale) {
  Mlp m = zeros(in, hidden, out);
  double l1 = std::sqrt(6.0 / static_cast<double>(in + hidden));
  double l2 = output_scale * std::sqrt(6.0 / static_cast<double>(hidden + out));
  Eigen::Index n1 = idx(hidden * in);
  Eigen::Index off2 = n1 + idx(hidden);
  for (Eigen::Index i = 0; i < n1; ++i) m.params(i) = rng.uniform(-l1, l1);
  for (Eigen::Index i = 0; i < idx(out * hidden); ++i) m.params(off2 + i) = rng.uniform(-l2, l2);
  return m;
}

Eigen::Map<const Matrix> Mlp::w1() const { return {params.data(), idx(hidden), idx(in)}; }
Eigen::Map<const Vector> Mlp::b1() const { return {params.data() + hidden * in, idx(hidden)}; }
Eigen::Map<const Matrix> Mlp::w2() const {
  return {params.data() + hidden * in + hidden, idx(out), idx(hidden)};
}
Eigen::Map<const Vector> Mlp::b2() const {
  return {params.data() + hidden * in + hidden + out * hidden, idx(out)};
}

Vector Mlp::forward(const Vector& x, Cache* cache) const {
  if (x.size() != idx(in)) fail(ErrorCode::config_error, "network input has the wrong dimension");
  Vector h = (w1() * x + b1()).array().tanh().matrix();
  Vector y = w2() * h + b2();
  if (cache != nullptr) {
    cache->input = x;
    cache->hidden = std::move(h);
  }
  return y;
}

Vector Mlp::backward(const Cache& cache, const Vector& grad_out, Vector& grad) const {
  Eigen::Index n1 = idx(hidden * in);
  Eigen::Index n2 = idx(out * hidden);
  Eigen::Map<Matrix> g_w1(grad.data(), idx(hidden), idx(in));
  auto g_b1 = grad.segment(n1, idx(hidden));
  Eigen::Map<Matrix> g_w2(grad.data() + n1 + idx(hidden), idx(out), idx(hidden));
  auto g_b2 = grad.segment(n1 + idx(hidden) + n2, idx(out));

  g_w2.noalias() += grad_out * cache.hidden.transpose();
  g_b2 += grad_out;
  Vector dh = w2().transpose() * grad_out;
  Vector dpre = dh.array() * (1.0 - cache.hidden.array().square());
  g_w1.noalias() += dpre * cache.input.transpose();
  g_b1 += dpre;
  return w1().transpose() * dpre;
}

State state_of(const std::set<std::string>& known, const NodeEmbeddings& embeddings, std::size_t dim) {
  State s{known, Vector::Zero(idx(dim))};
  if (known.empty()) return s;
  for (const auto& id : known) {
    const auto& e = embedding_of(embeddings, id);
    if (e.size() != idx(dim)) fail(ErrorCode::config_error, "embedding of '" + id + "' has the wrong dimension");
    s.pooled += e;
  }
  s.pooled /= static_cast<double>(known.size());
  return s;
}

double Distribution::probability(const std::string& id) const {
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i] == id) return probabilities(idx(i));
  }
  return 0.0;
}

std::size_t Distribution::argmax() const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    double p = probabilities(idx(i));
    double q = probabilities(idx(best));
    if (p > q || (p == q && candidates[i] < candidates[best])) best = i;
  }
  return best;
}

std::size_t Distribution::sample(Rng& rng) const {
  double u = rng.uniform01();
  double acc = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    acc += probabilities(idx(i));
    if (u < acc) return i;
  }
  return candidates.size() - 1;
}

namespace {

struct PolicyPass {
  Mlp::Cache cache;
  Vector direction;
  Matrix candidate_matrix;  // dim x n
  Vector probabilities;
};

PolicyPass policy_pass(const PolicyNet& policy, const State& s, const std::vector<std::string>& candidates,
                       const NodeEmbeddings& embeddings) {
  if (candidates.empty()) fail(ErrorCode::environment_exhausted, "no candidate nodes to choose from");
  PolicyPass pass;
  pass.direction = policy.net.forward(s.pooled, &pass.cache);
  pass.candidate_matrix.resize(pass.direction.size(), idx(candidates.size()));
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (s.known.count(candidates[i]) != 0) {
      fail(ErrorCode::invalid_argument, "candidate '" + candidates[i] + "' is already known");
    }
    const auto& e = embedding_of(embeddings, candidates[i]);
    if (e.size() != pass.direction.size()) fail(ErrorCode::config_error, "candidate embedding has the wrong dimension");
    pass.candidate_matrix.col(idx(i)) = e;
  }
  Vector scores = pass.candidate_matrix.transpose() * pass.direction;
  double top = scores.maxCoeff();
  Vector ex = (scores.array() - top).exp().matrix();
  pass.probabilities = ex / ex.sum();
  return pass;
}

}  // namespace

Distribution policy_forward(const PolicyNet& policy, const State& s, const std::vector<std::string>& candidates,
                            const NodeEmbeddings& embeddings) {
  auto pass = policy_pass(policy, s, candidates, embeddings);
  return {candidates, std::move(pass.probabilities)};
}

Vector policy_log_prob_gradient(const PolicyNet& policy, const State& s, const std::vector<std::string>& candidates,
                                std::size_t action, const NodeEmbeddings& embeddings, NodeEmbeddings* embedding_grad) {
  auto pass = policy_pass(policy, s, candidates, embeddings);
  if (action >= candidates.size()) fail(ErrorCode::invalid_argument, "action index out of range");
  // d log p_a / d score_c = [c == a] - p_c
  Vector dscore = -pass.probabilities;
  dscore(idx(action)) += 1.0;
  Vector ddirection = pass.candidate_matrix * dscore;
  Vector grad = Vector::Zero(idx(policy.net.parameter_count()));
  Vector dstate = policy.net.backward(pass.cache, ddirection, grad);
  if (embedding_grad != nullptr) {
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      add_grad(*embedding_grad, candidates[i], dscore(idx(i)) * pass.direction);
    }
    spread_state_grad(s, dstate, *embedding_grad);
  }
  return grad;
}

double value_forward(const ValueNet& value, const State& s) { return value.net.forward(s.pooled)(0); }

Vector value_gradient(const ValueNet& value, const State& s, NodeEmbeddings* embedding_grad) {
  Mlp::Cache cache;
  value.net.forward(s.pooled, &cache);
  Vector grad = Vector::Zero(idx(value.net.parameter_count()));
  Vector dstate = value.net.backward(cache, Vector::Ones(1), grad);
  if (embedding_grad != nullptr) spread_state_grad(s, dstate, *embedding_grad);
  return grad;
}

double advantage(double reward, double gamma, double v_t, double v_next) { return reward + gamma * v_next - v_t; }

double discounted_return(const std::vector<double>& rewards, double gamma) {
  double total = 0.0;
  double discount = 1.0;
  for (double r : rewards) {
    total += discount * r;
    discount *= gamma;
  }
  return total;
}

}  // namespace legalqa
