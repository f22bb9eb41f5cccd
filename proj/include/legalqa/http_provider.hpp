#pragma once

#include <memory>
#include <string>

#include "legalqa/provider.hpp"

namespace legalqa {

/// Endpoint of an OpenAI-compatible API: "http://host:port" optionally
/// followed by a path prefix such as "/v1".
struct HttpEndpoint {
  std::string origin;
  std::string prefix;

  static HttpEndpoint parse(const std::string& base_url);
};

/// POST {prefix}/chat/completions with the rendered prompt as a single user
/// message at temperature 0. Transport errors, 429 and 5xx are retryable
/// provider_unavailable; other non-200 statuses are non-retryable
/// provider_unavailable; an unexpected body is protocol_error.
class HttpLanguageModel final : public LanguageModel {
 public:
  HttpLanguageModel(std::string base_url, std::string api_key, std::string model, double timeout_seconds = 30.0);
  std::string complete(const LmRequest& request) override;
  std::string name() const override { return "live:" + model_; }

 private:
  HttpEndpoint endpoint_;
  std::string api_key_;
  std::string model_;
  double timeout_;
};

/// POST {prefix}/embeddings; the reply's data[0].embedding must have the
/// configured dimension.
class HttpEmbedder final : public Embedder {
 public:
  HttpEmbedder(std::string base_url, std::string api_key, std::string model, std::size_t dimension,
               double timeout_seconds = 30.0);
  EmbeddingVector embed(std::string_view text) const override;
  std::string id() const override { return "live:" + model_; }
  std::size_t dimension() const override { return dimension_; }

 private:
  HttpEndpoint endpoint_;
  std::string api_key_;
  std::string model_;
  std::size_t dimension_;
  double timeout_;
};

}  // namespace legalqa
