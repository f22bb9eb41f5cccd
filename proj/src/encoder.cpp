#include "legalqa/encoder.hpp"

#include <algorithm>
#include <cmath>

#include "legalqa/error.hpp"
#include "legalqa/text.hpp"

namespace legalqa {

namespace {

Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, double limit, Rng& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = rng.uniform(-limit, limit);
  }
  return m;
}

// Sum of neighbor vectors, each coordinate summed in sorted order so the
// result does not depend on how neighbors happen to be ordered.
Vector neighbor_mean(const std::vector<Vector>& h, const std::vector<std::size_t>& neighbors, std::size_t dim) {
  Vector out = Vector::Zero(static_cast<Eigen::Index>(dim));
  if (neighbors.empty()) return out;
  std::vector<double> column(neighbors.size());
  for (std::size_t c = 0; c < dim; ++c) {
    for (std::size_t k = 0; k < neighbors.size(); ++k) column[k] = h[neighbors[k]](static_cast<Eigen::Index>(c));
    std::sort(column.begin(), column.end());
    double sum = 0.0;
    for (double x : column) sum += x;
    out(static_cast<Eigen::Index>(c)) = sum / static_cast<double>(neighbors.size());
  }
  return out;
}

}  // namespace

EncoderParams EncoderParams::initialize(std::size_t dim, std::size_t rounds, std::uint64_t seed, std::size_t buckets) {
  if (dim == 0 || buckets == 0) fail(ErrorCode::config_error, "encoder dimension and buckets must be positive");
  Rng rng(seed);
  EncoderParams p;
  p.dim = dim;
  p.buckets = buckets;
  p.seed = seed;
  auto d = static_cast<Eigen::Index>(dim);
  p.feature_table = uniform_matrix(static_cast<Eigen::Index>(buckets), d, std::sqrt(3.0), rng);
  double limit = std::sqrt(3.0 / (2.0 * static_cast<double>(dim)));
  for (std::size_t r = 0; r < rounds; ++r) {
    EncoderLayer layer;
    layer.self_weight = uniform_matrix(d, d, limit, rng);
    layer.neighbor_weight = uniform_matrix(d, d, limit, rng);
    layer.bias = Vector::Zero(d);
    p.layers.push_back(std::move(layer));
  }
  return p;
}

void EncoderParams::validate() const {
  auto d = static_cast<Eigen::Index>(dim);
  if (dim == 0) fail(ErrorCode::config_error, "encoder dimension must be positive");
  if (feature_table.rows() != static_cast<Eigen::Index>(buckets) || feature_table.cols() != d) {
    fail(ErrorCode::config_error, "feature table shape does not match dim/buckets");
  }
  for (const auto& layer : layers) {
    if (layer.self_weight.rows() != d || layer.self_weight.cols() != d || layer.neighbor_weight.rows() != d ||
        layer.neighbor_weight.cols() != d || layer.bias.size() != d) {
      fail(ErrorCode::config_error, "encoder layer shape does not match dim " + std::to_string(dim));
    }
  }
}

std::size_t EncoderParams::layer_parameter_count() const { return layers.size() * (2 * dim * dim + dim); }

Vector EncoderParams::flatten_layers() const {
  Vector flat(static_cast<Eigen::Index>(layer_parameter_count()));
  Eigen::Index offset = 0;
  auto dd = static_cast<Eigen::Index>(dim * dim);
  auto d = static_cast<Eigen::Index>(dim);
  for (const auto& layer : layers) {
    flat.segment(offset, dd) = Eigen::Map<const Vector>(layer.self_weight.data(), dd);
    offset += dd;
    flat.segment(offset, dd) = Eigen::Map<const Vector>(layer.neighbor_weight.data(), dd);
    offset += dd;
    flat.segment(offset, d) = layer.bias;
    offset += d;
  }
  return flat;
}

void EncoderParams::assign_layers(const Vector& flat) {
  if (flat.size() != static_cast<Eigen::Index>(layer_parameter_count())) {
    fail(ErrorCode::config_error, "flat encoder parameter vector has the wrong size");
  }
  Eigen::Index offset = 0;
  auto dd = static_cast<Eigen::Index>(dim * dim);
  auto d = static_cast<Eigen::Index>(dim);
  for (auto& layer : layers) {
    Eigen::Map<Vector>(layer.self_weight.data(), dd) = flat.segment(offset, dd);
    offset += dd;
    Eigen::Map<Vector>(layer.neighbor_weight.data(), dd) = flat.segment(offset, dd);
    offset += dd;
    layer.bias = flat.segment(offset, d);
    offset += d;
  }
}

Vector initial_feature(const EncoderParams& params, std::string_view label) {
  Vector x = Vector::Zero(static_cast<Eigen::Index>(params.dim));
  auto tokens = tokenize(label);
  if (tokens.empty()) return x;
  for (const auto& t : tokens) {
    auto row = static_cast<Eigen::Index>(fnv1a64(t, params.seed) % params.buckets);
    x += params.feature_table.row(row).transpose();
  }
  return x / static_cast<double>(tokens.size());
}

const Vector& EncodedGraph::embedding(const std::string& id) const {
  auto it = index.find(id);
  if (it == index.end()) fail(ErrorCode::lookup_error, "no embedding for node '" + id + "'");
  return activations.back()[it->second];
}

NodeEmbeddings EncodedGraph::embeddings() const {
  NodeEmbeddings out;
  for (std::size_t v = 0; v < ids.size(); ++v) out.emplace(ids[v], activations.back()[v]);
  return out;
}

EncodedGraph encode_graph(const FactRuleGraph& graph, const EncoderParams& params, const std::set<std::string>& focus,
                          std::size_t hops) {
  params.validate();
  EncodedGraph enc;
  if (focus.empty()) {
    for (const auto& [id, node] : graph.nodes()) enc.ids.push_back(id);
  } else {
    auto ids = neighborhood_ids(graph, focus, hops);
    enc.ids.assign(ids.begin(), ids.end());
  }
  for (std::size_t v = 0; v < enc.ids.size(); ++v) enc.index[enc.ids[v]] = v;
  enc.adjacency.resize(enc.ids.size());
  for (std::size_t v = 0; v < enc.ids.size(); ++v) {
    for (const auto& n : graph.neighbors(enc.ids[v])) {
      auto it = enc.index.find(n);
      if (it != enc.index.end()) enc.adjacency[v].push_back(it->second);
    }
  }

  std::vector<Vector> h;
  h.reserve(enc.ids.size());
  for (const auto& id : enc.ids) h.push_back(initial_feature(params, graph.node(id).label));
  enc.activations.push_back(h);

  for (const auto& layer : params.layers) {
    std::vector<Vector> means;
    means.reserve(h.size());
    for (std::size_t v = 0; v < h.size(); ++v) means.push_back(neighbor_mean(h, enc.adjacency[v], params.dim));
    std::vector<Vector> next;
    next.reserve(h.size());
    for (std::size_t v = 0; v < h.size(); ++v) {
      Vector pre = layer.self_weight * h[v] + layer.neighbor_weight * means[v] + layer.bias;
      next.push_back(pre.array().tanh().matrix());
    }
    enc.aggregates.push_back(std::move(means));
    enc.activations.push_back(next);
    h = std::move(next);
  }
  return enc;
}

NodeEmbeddings encode_nodes(const FactRuleGraph& graph, const EncoderParams& params, const KnownNodeSet& focus,
                            std::size_t hops) {
  return encode_graph(graph, params, focus.id_set(), hops).embeddings();
}

Vector encoder_backward(const EncoderParams& params, const EncodedGraph& enc, const std::vector<Vector>& grad_out) {
  auto d = static_cast<Eigen::Index>(params.dim);
  auto dd = static_cast<Eigen::Index>(params.dim * params.dim);
  Vector grad = Vector::Zero(static_cast<Eigen::Index>(params.layer_parameter_count()));
  std::vector<Vector> g = grad_out;
  for (std::size_t l = params.layers.size(); l-- > 0;) {
    const auto& layer = params.layers[l];
    Eigen::Index offset = static_cast<Eigen::Index>(l) * (2 * dd + d);
    Eigen::Map<Matrix> g_self(grad.data() + offset, d, d);
    Eigen::Map<Matrix> g_nbr(grad.data() + offset + dd, d, d);
    auto g_bias = grad.segment(offset + 2 * dd, d);

    std::vector<Vector> below(g.size(), Vector::Zero(d));
    for (std::size_t v = 0; v < g.size(); ++v) {
      const Vector& out = enc.activations[l + 1][v];
      Vector dpre = g[v].array() * (1.0 - out.array().square());
      g_self.noalias() += dpre * enc.activations[l][v].transpose();
      g_nbr.noalias() += dpre * enc.aggregates[l][v].transpose();
      g_bias += dpre;
      below[v].noalias() += layer.self_weight.transpose() * dpre;
      const auto& nbrs = enc.adjacency[v];
      if (!nbrs.empty()) {
        Vector share = layer.neighbor_weight.transpose() * dpre / static_cast<double>(nbrs.size());
        for (auto u : nbrs) below[u] += share;
      }
    }
    g = std::move(below);
  }
  return grad;
}

}  // namespace legalqa
