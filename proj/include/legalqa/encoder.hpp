#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "legalqa/fact_graph.hpp"

namespace legalqa {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// node id -> E_{x_j}
using NodeEmbeddings = std::map<std::string, Vector>;

struct EncoderLayer {
  Matrix self_weight;      // dim x dim
  Matrix neighbor_weight;  // dim x dim
  Vector bias;             // dim
};

/// Message-passing encoder. Initial node features are the mean of the
/// feature-table rows of the label's hashed tokens; each round computes
///   h_v <- tanh(W_self h_v + W_nbr mean_{u in N(v)} h_u + b)
/// with the neighbor term zero for isolated nodes.
struct EncoderParams {
  std::size_t dim = 64;
  std::size_t buckets = 1024;
  std::uint64_t seed = 0;
  Matrix feature_table;  // buckets x dim
  std::vector<EncoderLayer> layers;

  static EncoderParams initialize(std::size_t dim, std::size_t rounds, std::uint64_t seed,
                                  std::size_t buckets = 1024);

  /// Throws config_error on any shape inconsistent with dim.
  void validate() const;

  /// Layer weights only; the feature table is never trained.
  std::size_t layer_parameter_count() const;
  Vector flatten_layers() const;
  void assign_layers(const Vector& flat);
};

Vector initial_feature(const EncoderParams& params, std::string_view label);

/// Forward pass over an induced subgraph, keeping what backprop needs.
struct EncodedGraph {
  std::vector<std::string> ids;
  std::map<std::string, std::size_t> index;
  std::vector<std::vector<std::size_t>> adjacency;
  /// activations[l][v]: h_v after round l (l = 0 is the initial feature).
  std::vector<std::vector<Vector>> activations;
  /// aggregates[l][v]: neighbor mean feeding round l + 1.
  std::vector<std::vector<Vector>> aggregates;

  bool contains(const std::string& id) const { return index.count(id) != 0; }
  const Vector& embedding(const std::string& id) const;
  NodeEmbeddings embeddings() const;
};

/// Encodes neighborhood(graph, focus, hops); an empty focus encodes the
/// whole graph.
EncodedGraph encode_graph(const FactRuleGraph& graph, const EncoderParams& params, const std::set<std::string>& focus,
                          std::size_t hops);

NodeEmbeddings encode_nodes(const FactRuleGraph& graph, const EncoderParams& params, const KnownNodeSet& focus,
                            std::size_t hops);

/// Gradient of sum_v <grad_out[v], h_v^final> with respect to the layer
/// parameters (flatten_layers order). grad_out is indexed like encoded.ids.
Vector encoder_backward(const EncoderParams& params, const EncodedGraph& encoded, const std::vector<Vector>& grad_out);

}  // namespace legalqa
