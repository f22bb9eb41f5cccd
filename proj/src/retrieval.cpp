#include "legalqa/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>

#include "legalqa/corpus.hpp"
#include "legalqa/error.hpp"
#include "legalqa/text.hpp"

namespace legalqa {

ReferenceEmbedder::ReferenceEmbedder(std::size_t dimension, std::uint64_t seed) : dimension_(dimension), seed_(seed) {
  if (dimension_ == 0) fail(ErrorCode::config_error, "embedding dimension must be positive");
}

EmbeddingVector ReferenceEmbedder::embed(std::string_view text) const {
  std::vector<double> values(dimension_, 0.0);
  std::string padded = " " + normalize_label(text) + " ";
  for (std::size_t n = 2; n <= 3; ++n) {
    if (padded.size() < n) continue;
    for (std::size_t i = 0; i + n <= padded.size(); ++i) {
      std::uint64_t h = fnv1a64(std::string_view(padded).substr(i, n), seed_ ^ n);
      values[h % dimension_] += (h >> 63) != 0 ? -1.0 : 1.0;
    }
  }
  double sum = 0.0;
  for (double v : values) sum += v * v;
  if (sum > 0.0) {
    double inv = 1.0 / std::sqrt(sum);
    for (double& v : values) v *= inv;
  }
  return EmbeddingVector::from_values(std::move(values));
}

EmbeddingVector embed(std::string_view text, const Embedder& embedder) {
  if (trim(text).empty()) fail(ErrorCode::invalid_argument, "cannot embed empty text");
  auto vector = embedder.embed(text);
  if (vector.dimension() != embedder.dimension()) {
    fail(ErrorCode::config_error, "embedder " + embedder.id() + " returned dimension " +
                                      std::to_string(vector.dimension()) + ", expected " +
                                      std::to_string(embedder.dimension()));
  }
  return vector;
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dimension() != b.dimension()) {
    fail(ErrorCode::invalid_argument, "cosine of vectors with dimensions " + std::to_string(a.dimension()) + " and " +
                                          std::to_string(b.dimension()));
  }
  if (!(a.norm > 0.0) || !(b.norm > 0.0)) fail(ErrorCode::degenerate_vector, "cosine of a zero-norm vector");
  double dot = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) dot += a.values[i] * b.values[i];
  return std::clamp(dot / (a.norm * b.norm), -1.0, 1.0);
}

std::string provision_embedding_text(const ProvisionRecord& record) { return record.title + "\n" + record.text; }

ProvisionStore ProvisionStore::build(const std::vector<ProvisionRecord>& records, const Embedder& embedder,
                                     const EmbeddingCache* cache) {
  ProvisionStore store(embedder.fingerprint(), embedder.dimension());
  bool cache_usable = cache != nullptr && cache->fingerprint == store.fingerprint_;
  for (const auto& r : records) {
    auto text = provision_embedding_text(r);
    LegalProvision p{r.id, r.jurisdiction, r.title, r.text, {}};
    bool reused = false;
    if (cache_usable) {
      auto it = cache->vectors.find(r.id);
      if (it != cache->vectors.end() && it->second.first == sha256_hex(text) &&
          it->second.second.size() == store.dimension_) {
        p.embedding = EmbeddingVector::from_values(it->second.second);
        reused = true;
      }
    }
    if (!reused) p.embedding = embed(text, embedder);
    store.add(std::move(p));
  }
  return store;
}

void ProvisionStore::add(LegalProvision provision) {
  if (provision.id.empty()) fail(ErrorCode::invalid_argument, "provision with empty id");
  if (provision.jurisdiction.empty()) {
    fail(ErrorCode::invalid_argument, "provision " + provision.id + " has no jurisdiction");
  }
  if (provision.embedding.dimension() != dimension_) {
    fail(ErrorCode::config_error, "provision " + provision.id + " has embedding dimension " +
                                      std::to_string(provision.embedding.dimension()) + ", store uses " +
                                      std::to_string(dimension_));
  }
  if (!index_.emplace(provision.id, provisions_.size()).second) {
    fail(ErrorCode::invalid_argument, "duplicate provision id '" + provision.id + "'");
  }
  provisions_.push_back(std::move(provision));
}

const LegalProvision& ProvisionStore::find(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) fail(ErrorCode::lookup_error, "unknown provision '" + id + "'");
  return provisions_[it->second];
}

std::vector<RetrievedProvision> ProvisionStore::top_k(const EmbeddingVector& query, std::size_t m,
                                                      const std::optional<std::string>& jurisdiction) const {
  if (m == 0) fail(ErrorCode::invalid_argument, "top_k needs m >= 1");
  if (query.dimension() != dimension_) {
    fail(ErrorCode::config_error, "query dimension " + std::to_string(query.dimension()) + " does not match store " +
                                      std::to_string(dimension_));
  }
  // `better(a, b)`: a ranks ahead of b. The heap keeps the current worst on top.
  auto better = [](const RetrievedProvision& a, const RetrievedProvision& b) {
    return a.score != b.score ? a.score > b.score : a.id < b.id;
  };
  std::priority_queue<RetrievedProvision, std::vector<RetrievedProvision>, decltype(better)> heap(better);
  std::size_t scanned = 0;
  for (const auto& p : provisions_) {
    if (jurisdiction && p.jurisdiction != *jurisdiction) continue;
    ++scanned;
    RetrievedProvision candidate{p.id, cosine(query, p.embedding)};
    if (heap.size() < m) {
      heap.push(std::move(candidate));
    } else if (better(candidate, heap.top())) {
      heap.pop();
      heap.push(std::move(candidate));
    }
  }
  if (scanned == 0) {
    fail(ErrorCode::no_provisions,
         jurisdiction ? "no provisions for jurisdiction '" + *jurisdiction + "'" : "provision store is empty");
  }
  std::vector<RetrievedProvision> out;
  out.reserve(heap.size());
  while (!heap.empty()) {
    out.push_back(heap.top());
    heap.pop();
  }
  std::reverse(out.begin(), out.end());
  return out;
}

EmbeddingCache ProvisionStore::cache() const {
  EmbeddingCache cache;
  cache.fingerprint = fingerprint_;
  for (const auto& p : provisions_) {
    ProvisionRecord r{p.id, p.jurisdiction, p.title, p.text};
    cache.vectors[p.id] = {sha256_hex(provision_embedding_text(r)), p.embedding.values};
  }
  return cache;
}

std::string compose_query(std::string_view question, std::span<const AnsweredClarification> answered) {
  std::string z(question);
  for (const auto& a : answered) {
    if (a.question == nullptr) fail(ErrorCode::invalid_argument, "answered clarification without a question");
    if (a.option >= a.question->options.size()) {
      fail(ErrorCode::invalid_argument, "option " + std::to_string(a.option) + " out of range for clarification " +
                                            std::to_string(a.question->index));
    }
    z += kQueryDelimiter;
    z += a.question->text;
    z += kQueryDelimiter;
    z += a.question->options[a.option];
  }
  return z;
}

json to_json(const ProvisionRecord& r) {
  return {{"id", r.id}, {"jurisdiction", r.jurisdiction}, {"title", r.title}, {"text", r.text}};
}

ProvisionRecord provision_record_from_json(const json& j) {
  try {
    return {j.at("id").get<std::string>(), j.at("jurisdiction").get<std::string>(), j.at("title").get<std::string>(),
            j.at("text").get<std::string>()};
  } catch (const json::exception& e) {
    fail(ErrorCode::parse_error, std::string("malformed provision: ") + e.what());
  }
}

std::vector<ProvisionRecord> load_provisions(const std::filesystem::path& path) {
  std::vector<ProvisionRecord> out;
  for (const auto& j : read_json_lines(path)) out.push_back(provision_record_from_json(j));
  return out;
}

void save_provisions(const std::vector<ProvisionRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io_error, "cannot write " + path.string());
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

void save_embedding_cache(const EmbeddingCache& cache, const std::filesystem::path& path) {
  json vectors = json::object();
  for (const auto& [id, entry] : cache.vectors) vectors[id] = {{"text_sha256", entry.first}, {"vector", entry.second}};
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io_error, "cannot write " + path.string());
  out << json{{"fingerprint", cache.fingerprint}, {"vectors", vectors}}.dump() << '\n';
}

EmbeddingCache load_embedding_cache(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io_error, "cannot open " + path.string());
  try {
    auto j = json::parse(in);
    EmbeddingCache cache;
    cache.fingerprint = j.at("fingerprint").get<std::string>();
    for (const auto& [id, entry] : j.at("vectors").items()) {
      cache.vectors[id] = {entry.at("text_sha256").get<std::string>(), entry.at("vector").get<std::vector<double>>()};
    }
    return cache;
  } catch (const json::exception& e) {
    fail(ErrorCode::parse_error, path.string() + ": " + e.what());
  }
}

}  // namespace legalqa
