#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace legalqa {

using json = nlohmann::json;

/// Dense embedding with its Euclidean norm cached at construction.
struct EmbeddingVector {
  std::vector<double> values;
  double norm = 0.0;

  static EmbeddingVector from_values(std::vector<double> values);
  std::size_t dimension() const { return values.size(); }
  bool operator==(const EmbeddingVector&) const = default;
};

/// The model touchpoints the engine calls out to. Each has a versioned
/// prompt template in prompts.hpp.
enum class Touchpoint { irac_parse, summarize, mask_paraphrase, deficiency, clarify, answer };

std::string_view to_string(Touchpoint touchpoint);
Touchpoint touchpoint_from_string(std::string_view name);

/// One language-model call. `prompt` is the full text a hosted model sees;
/// `input` is the structured payload the prompt was rendered from (and is
/// embedded verbatim in the prompt).
struct LmRequest {
  Touchpoint touchpoint = Touchpoint::answer;
  std::string version;
  std::string prompt;
  json input;

  /// Stable replay key: SHA-256 over touchpoint, version and prompt.
  std::string key() const;
};

class LanguageModel {
 public:
  virtual ~LanguageModel() = default;
  /// Throws a retryable Error on transport failure.
  virtual std::string complete(const LmRequest& request) = 0;
  virtual std::string name() const = 0;
};

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual EmbeddingVector embed(std::string_view text) const = 0;
  virtual std::string id() const = 0;
  virtual std::size_t dimension() const = 0;
  /// Provider id plus dimension; keys embedding caches.
  std::string fingerprint() const { return id() + ":" + std::to_string(dimension()); }
};

/// Recorded request/response pairs, keyed by request hash. Backed by a
/// JSON-lines file; appends are flushed as they happen.
class FixtureStore {
 public:
  FixtureStore() = default;

  static std::shared_ptr<FixtureStore> load(const std::filesystem::path& path);
  /// Opens `path` for appending (created if absent) and loads existing entries.
  static std::shared_ptr<FixtureStore> open_for_recording(const std::filesystem::path& path);

  std::optional<json> find(const std::string& key) const;
  void record(const std::string& key, json entry);
  std::size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, json> entries_;
  std::optional<std::filesystem::path> sink_;
};

std::string embedding_key(std::string_view embedder_id, std::string_view text);

/// Replays completions; a miss is a hard fixture_miss error.
class ReplayLanguageModel final : public LanguageModel {
 public:
  explicit ReplayLanguageModel(std::shared_ptr<const FixtureStore> store) : store_(std::move(store)) {}
  std::string complete(const LmRequest& request) override;
  std::string name() const override { return "replay"; }

 private:
  std::shared_ptr<const FixtureStore> store_;
};

/// Forwards to an inner model and records every successful exchange.
class RecordingLanguageModel final : public LanguageModel {
 public:
  RecordingLanguageModel(std::shared_ptr<LanguageModel> inner, std::shared_ptr<FixtureStore> store)
      : inner_(std::move(inner)), store_(std::move(store)) {}
  std::string complete(const LmRequest& request) override;
  std::string name() const override { return "record:" + inner_->name(); }

 private:
  std::shared_ptr<LanguageModel> inner_;
  std::shared_ptr<FixtureStore> store_;
};

class ReplayEmbedder final : public Embedder {
 public:
  ReplayEmbedder(std::shared_ptr<const FixtureStore> store, std::string id, std::size_t dimension)
      : store_(std::move(store)), id_(std::move(id)), dimension_(dimension) {}
  EmbeddingVector embed(std::string_view text) const override;
  std::string id() const override { return id_; }
  std::size_t dimension() const override { return dimension_; }

 private:
  std::shared_ptr<const FixtureStore> store_;
  std::string id_;
  std::size_t dimension_;
};

class RecordingEmbedder final : public Embedder {
 public:
  RecordingEmbedder(std::shared_ptr<const Embedder> inner, std::shared_ptr<FixtureStore> store)
      : inner_(std::move(inner)), store_(std::move(store)) {}
  EmbeddingVector embed(std::string_view text) const override;
  std::string id() const override { return inner_->id(); }
  std::size_t dimension() const override { return inner_->dimension(); }

 private:
  std::shared_ptr<const Embedder> inner_;
  std::shared_ptr<FixtureStore> store_;
};

/// Deterministic offline model: answers every touchpoint from the
/// structured `input` payload alone. Used for demos and as the scripted
/// backend of test doubles.
class ReferenceLanguageModel final : public LanguageModel {
 public:
  std::string complete(const LmRequest& request) override;
  std::string name() const override { return "reference"; }
};

/// Pulls the structured payload back out of a rendered prompt. Lets an
/// HTTP stand-in for a hosted model delegate to ReferenceLanguageModel.
std::optional<LmRequest> request_from_prompt(std::string_view prompt);

}  // namespace legalqa
