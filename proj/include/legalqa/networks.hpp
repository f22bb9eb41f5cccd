#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "legalqa/encoder.hpp"
#include "legalqa/text.hpp"

namespace legalqa {

/// Two-layer perceptron y = W2 tanh(W1 x + b1) + b2 with all weights in one
/// flat vector laid out as [W1 (column-major), b1, W2 (column-major), b2].
struct Mlp {
  std::size_t in = 0;
  std::size_t hidden = 0;
  std::size_t out = 0;
  Vector params;

  static Mlp zeros(std::size_t in, std::size_t hidden, std::size_t out);
  /// Glorot-uniform weights, zero biases; the output layer is scaled by
  /// output_scale.
  static Mlp random(std::size_t in, std::size_t hidden, std::size_t out, Rng& rng, double output_scale = 1.0);

  std::size_t parameter_count() const { return hidden * in + hidden + out * hidden + out; }
  Eigen::Map<const Matrix> w1() const;
  Eigen::Map<const Vector> b1() const;
  Eigen::Map<const Matrix> w2() const;
  Eigen::Map<const Vector> b2() const;

  struct Cache {
    Vector input;
    Vector hidden;
  };

  Vector forward(const Vector& x, Cache* cache = nullptr) const;
  /// Adds dL/dparams into `grad` and returns dL/dx.
  Vector backward(const Cache& cache, const Vector& grad_out, Vector& grad) const;
};

/// s_t: the known set and the mean of its members' embeddings.
struct State {
  std::set<std::string> known;
  Vector pooled;
};

/// Empty known gives the zero vector of `dim`. A known id without an
/// embedding is lookup_error.
State state_of(const std::set<std::string>& known, const NodeEmbeddings& embeddings, std::size_t dim);

/// π_θ: the perceptron maps s_t to a query direction u, each candidate c is
/// scored u·E_c, and the scores are softmax-normalized over candidates.
struct PolicyNet {
  Mlp net;
};

/// V_φ: the perceptron maps s_t to a scalar.
struct ValueNet {
  Mlp net;
};

struct Distribution {
  std::vector<std::string> candidates;
  Vector probabilities;

  double probability(const std::string& id) const;
  /// Highest probability, ties to the smallest id.
  std::size_t argmax() const;
  std::size_t sample(Rng& rng) const;
};

/// Empty candidates → environment_exhausted; a candidate in s.known →
/// invalid_argument; a candidate without an embedding → lookup_error.
Distribution policy_forward(const PolicyNet& policy, const State& s, const std::vector<std::string>& candidates,
                            const NodeEmbeddings& embeddings);

/// Gradient of log π(candidates[action] | s). `embeddings` receives the
/// gradient with respect to every node vector involved (known and
/// candidates) when non-null.
Vector policy_log_prob_gradient(const PolicyNet& policy, const State& s, const std::vector<std::string>& candidates,
                                std::size_t action, const NodeEmbeddings& embeddings,
                                NodeEmbeddings* embedding_grad = nullptr);

double value_forward(const ValueNet& value, const State& s);

/// Gradient of V(s); optional gradient with respect to known embeddings.
Vector value_gradient(const ValueNet& value, const State& s, NodeEmbeddings* embedding_grad = nullptr);

/// r_t + γ v_next − v_t.
double advantage(double reward, double gamma, double v_t, double v_next);

/// Σ γ^t r_t over the rewards in order.
double discounted_return(const std::vector<double>& rewards, double gamma);

}  // namespace legalqa
