#pragma once

// Independent reference computations shared by the unit tests and the
// acceptance binary. None of these call the code they check, apart from
// the feature hashing and tokenizer that define the encoder's input.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "legalqa/encoder.hpp"
#include "legalqa/networks.hpp"
#include "legalqa/retrieval.hpp"
#include "legalqa/text.hpp"

namespace legalqa::oracle {

/// Dense re-derivation of the encoder over the whole graph: one matrix per
/// round, row-normalized adjacency, nodes in id order.
inline std::map<std::string, std::vector<double>> dense_encoder(const FactRuleGraph& g, const EncoderParams& p) {
  std::vector<std::string> ids;
  for (const auto& [id, node] : g.nodes()) ids.push_back(id);
  std::size_t n = ids.size();
  std::size_t d = p.dim;
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) index[ids[i]] = i;

  std::vector<std::vector<double>> adj(n, std::vector<double>(n, 0.0));
  for (const auto& [f, r] : g.edges()) {
    adj[index[f]][index[r]] = 1.0;
    adj[index[r]][index[f]] = 1.0;
  }
  for (auto& row : adj) {
    double deg = 0.0;
    for (double x : row) deg += x;
    if (deg > 0) {
      for (double& x : row) x /= deg;
    }
  }

  std::vector<std::vector<double>> h(n, std::vector<double>(d, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    auto tokens = tokenize(g.node(ids[i]).label);
    for (const auto& t : tokens) {
      auto row = fnv1a64(t, p.seed) % p.buckets;
      for (std::size_t c = 0; c < d; ++c) h[i][c] += p.feature_table(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(c));
    }
    if (!tokens.empty()) {
      for (double& x : h[i]) x /= static_cast<double>(tokens.size());
    }
  }

  for (const auto& layer : p.layers) {
    std::vector<std::vector<double>> m(n, std::vector<double>(d, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (adj[i][j] == 0.0) continue;
        for (std::size_t c = 0; c < d; ++c) m[i][c] += adj[i][j] * h[j][c];
      }
    }
    std::vector<std::vector<double>> next(n, std::vector<double>(d, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t r = 0; r < d; ++r) {
        double pre = layer.bias(static_cast<Eigen::Index>(r));
        for (std::size_t c = 0; c < d; ++c) {
          pre += layer.self_weight(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) * h[i][c];
          pre += layer.neighbor_weight(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) * m[i][c];
        }
        next[i][r] = std::tanh(pre);
      }
    }
    h = std::move(next);
  }

  std::map<std::string, std::vector<double>> out;
  for (std::size_t i = 0; i < n; ++i) out[ids[i]] = h[i];
  return out;
}

/// Copy of `g` with every node renamed by a punctuation prefix that encodes
/// perm[rank]. The tokens (and so the input features) are untouched while
/// the ids, and with them every internal ordering, change.
inline FactRuleGraph relabel(const FactRuleGraph& g, const std::vector<std::size_t>& perm,
                             std::map<std::string, std::string>* mapping = nullptr) {
  static const std::string marks = "!#$%&*+/:;<=>?@^~";
  auto code = [&](std::size_t k) {
    std::string s;
    do {
      s += marks[k % marks.size()];
      k /= marks.size();
    } while (k > 0);
    return s;
  };
  std::map<std::string, std::string> rename;
  std::size_t rank = 0;
  for (const auto& [id, node] : g.nodes()) rename[id] = code(perm[rank++]) + " " + node.label;
  FactRuleGraph out;
  for (const auto& [id, node] : g.nodes()) out.add_node(FactRuleNode::make(rename[id], node.kind, node.aliases));
  for (const auto& [f, r] : g.edges()) out.add_edge(normalize_label(rename[f]), normalize_label(rename[r]));
  if (mapping) {
    for (const auto& [from, to] : rename) (*mapping)[from] = normalize_label(to);
  }
  return out;
}

/// Two-layer perceptron evaluated with plain loops over the flat layout.
inline std::vector<double> mlp_forward(const Mlp& m, const std::vector<double>& x) {
  const double* p = m.params.data();
  const double* w1 = p;
  const double* b1 = w1 + m.hidden * m.in;
  const double* w2 = b1 + m.hidden;
  const double* b2 = w2 + m.out * m.hidden;
  std::vector<double> h(m.hidden);
  for (std::size_t r = 0; r < m.hidden; ++r) {
    double s = b1[r];
    for (std::size_t c = 0; c < m.in; ++c) s += w1[c * m.hidden + r] * x[c];
    h[r] = std::tanh(s);
  }
  std::vector<double> y(m.out);
  for (std::size_t r = 0; r < m.out; ++r) {
    double s = b2[r];
    for (std::size_t c = 0; c < m.hidden; ++c) s += w2[c * m.out + r] * h[c];
    y[r] = s;
  }
  return y;
}

inline std::vector<double> mean_of(const std::set<std::string>& known, const NodeEmbeddings& emb, std::size_t dim) {
  std::vector<double> s(dim, 0.0);
  for (const auto& id : known) {
    for (std::size_t c = 0; c < dim; ++c) s[c] += emb.at(id)(static_cast<Eigen::Index>(c));
  }
  if (!known.empty()) {
    for (double& x : s) x /= static_cast<double>(known.size());
  }
  return s;
}

/// Softmax over u·E_c with u the policy perceptron's output.
inline std::vector<double> policy_probabilities(const Mlp& policy, const std::set<std::string>& known,
                                                const std::vector<std::string>& candidates, const NodeEmbeddings& emb) {
  auto dim = policy.in;
  auto u = mlp_forward(policy, mean_of(known, emb, dim));
  std::vector<double> scores;
  for (const auto& c : candidates) {
    double s = 0.0;
    for (std::size_t k = 0; k < dim; ++k) s += u[k] * emb.at(c)(static_cast<Eigen::Index>(k));
    scores.push_back(s);
  }
  double top = *std::max_element(scores.begin(), scores.end());
  double z = 0.0;
  for (double& s : scores) z += (s = std::exp(s - top));
  for (double& s : scores) s /= z;
  return scores;
}

/// Central differences of f at x, step h.
inline Vector numeric_gradient(const std::function<double(const Vector&)>& f, Vector x, double h = 1e-6) {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    double saved = x(i);
    x(i) = saved + h;
    double up = f(x);
    x(i) = saved - h;
    double down = f(x);
    x(i) = saved;
    g(i) = (up - down) / (2.0 * h);
  }
  return g;
}

/// ||a - b|| / max(||a||, ||b||), zero when both vanish.
inline double relative_error(const Vector& a, const Vector& b) {
  double scale = std::max(a.norm(), b.norm());
  if (scale < 1e-300) return 0.0;
  return (a - b).norm() / scale;
}

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

/// Full sort by descending score then ascending id; first m.
inline std::vector<RetrievedProvision> brute_force_top_k(const std::vector<LegalProvision>& store,
                                                         const std::vector<double>& query, std::size_t m,
                                                         const std::string& jurisdiction = {}) {
  std::vector<RetrievedProvision> all;
  for (const auto& p : store) {
    if (!jurisdiction.empty() && p.jurisdiction != jurisdiction) continue;
    all.push_back({p.id, std::clamp(cosine(query, p.embedding.values), -1.0, 1.0)});
  }
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    return a.score != b.score ? a.score > b.score : a.id < b.id;
  });
  if (all.size() > m) all.resize(m);
  return all;
}

}  // namespace legalqa::oracle
