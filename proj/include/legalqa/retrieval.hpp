#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "legalqa/clarifier.hpp"
#include "legalqa/provider.hpp"

namespace legalqa {

/// Offline embedder: hashed character 2- and 3-grams of the normalized,
/// space-padded text, signed into `dimension` buckets and L2-normalized.
class ReferenceEmbedder final : public Embedder {
 public:
  static constexpr std::size_t kDefaultDimension = 256;
  static constexpr std::uint64_t kDefaultSeed = 0x1e9a1;

  explicit ReferenceEmbedder(std::size_t dimension = kDefaultDimension, std::uint64_t seed = kDefaultSeed);

  EmbeddingVector embed(std::string_view text) const override;
  std::string id() const override { return "reference-ngram-" + std::to_string(seed_); }
  std::size_t dimension() const override { return dimension_; }

 private:
  std::size_t dimension_;
  std::uint64_t seed_;
};

/// Embeds through `embedder`, rejecting empty text (invalid_argument) and a
/// wrong-sized result (config_error).
EmbeddingVector embed(std::string_view text, const Embedder& embedder);

/// <a,b> / (|a||b|). Unequal dimensions are invalid_argument; a zero-norm
/// input is degenerate_vector.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

/// A provision as stored in the database file.
struct ProvisionRecord {
  std::string id;
  std::string jurisdiction;
  std::string title;
  std::string text;
  bool operator==(const ProvisionRecord&) const = default;
};

struct LegalProvision {
  std::string id;
  std::string jurisdiction;
  std::string title;
  std::string text;
  EmbeddingVector embedding;
};

struct RetrievedProvision {
  std::string id;
  double score = 0.0;
  bool operator==(const RetrievedProvision&) const = default;
};

/// Text that gets embedded for a provision.
std::string provision_embedding_text(const ProvisionRecord& record);

struct EmbeddingCache {
  std::string fingerprint;
  /// id -> (sha256 of the embedded text, vector)
  std::map<std::string, std::pair<std::string, std::vector<double>>> vectors;
};

/// Exhaustively searchable provisions. Immutable after construction; swap
/// whole stores to reload.
class ProvisionStore {
 public:
  ProvisionStore(std::string fingerprint, std::size_t dimension)
      : fingerprint_(std::move(fingerprint)), dimension_(dimension) {}

  /// Embeds each record (or reuses a cache entry whose fingerprint and text
  /// hash match). Ids must be unique and jurisdictions non-empty.
  static ProvisionStore build(const std::vector<ProvisionRecord>& records, const Embedder& embedder,
                              const EmbeddingCache* cache = nullptr);

  void add(LegalProvision provision);

  const std::vector<LegalProvision>& provisions() const { return provisions_; }
  const std::string& fingerprint() const { return fingerprint_; }
  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return provisions_.size(); }
  const LegalProvision& find(const std::string& id) const;

  /// The m highest-cosine provisions, descending, ties by ascending id. A
  /// set jurisdiction restricts the scan; nothing left to scan is
  /// no_provisions.
  std::vector<RetrievedProvision> top_k(const EmbeddingVector& query, std::size_t m,
                                        const std::optional<std::string>& jurisdiction = std::nullopt) const;

  EmbeddingCache cache() const;

 private:
  std::string fingerprint_;
  std::size_t dimension_;
  std::vector<LegalProvision> provisions_;
  std::map<std::string, std::size_t> index_;
};

inline constexpr std::size_t kDefaultRetrievalCount = 5;

/// One answered clarification: the question and the chosen option index.
struct AnsweredClarification {
  const ClarifyingQuestion* question = nullptr;
  std::size_t option = 0;
};

/// z_i: the question, then each clarifying question followed by the chosen
/// option, in order, joined by kQueryDelimiter. Out-of-range options are
/// invalid_argument.
inline constexpr std::string_view kQueryDelimiter = "\n";
std::string compose_query(std::string_view question, std::span<const AnsweredClarification> answered);

std::vector<ProvisionRecord> load_provisions(const std::filesystem::path& path);
void save_provisions(const std::vector<ProvisionRecord>& records, const std::filesystem::path& path);
json to_json(const ProvisionRecord& record);
ProvisionRecord provision_record_from_json(const json& j);

void save_embedding_cache(const EmbeddingCache& cache, const std::filesystem::path& path);
EmbeddingCache load_embedding_cache(const std::filesystem::path& path);

}  // namespace legalqa
