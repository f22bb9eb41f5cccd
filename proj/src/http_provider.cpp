#include "legalqa/http_provider.hpp"

#include <httplib.h>

#include "legalqa/error.hpp"

namespace legalqa {

namespace {

json post_json(const HttpEndpoint& endpoint, const std::string& path, const std::string& api_key, const json& body,
               double timeout) {
  httplib::Client client(endpoint.origin);
  auto seconds = static_cast<time_t>(timeout);
  auto micros = static_cast<time_t>((timeout - static_cast<double>(seconds)) * 1e6);
  client.set_connection_timeout(seconds, micros);
  client.set_read_timeout(seconds, micros);
  client.set_write_timeout(seconds, micros);
  httplib::Headers headers{{"Authorization", "Bearer " + api_key}};
  auto result = client.Post(endpoint.prefix + path, headers, body.dump(), "application/json");
  if (!result) {
    fail_retryable("request to " + endpoint.origin + endpoint.prefix + path + " failed: " +
                   httplib::to_string(result.error()));
  }
  if (result->status == 429 || result->status >= 500) {
    fail_retryable("provider returned HTTP " + std::to_string(result->status));
  }
  if (result->status != 200) {
    throw Error(ErrorCode::provider_unavailable, "provider returned HTTP " + std::to_string(result->status) + ": " +
                                                     result->body.substr(0, 200));
  }
  try {
    return json::parse(result->body);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::protocol_error, std::string("provider reply is not JSON: ") + e.what());
  }
}

}  // namespace

HttpEndpoint HttpEndpoint::parse(const std::string& base_url) {
  auto scheme = base_url.find("://");
  if (scheme == std::string::npos) fail(ErrorCode::config_error, "base URL needs a scheme: " + base_url);
  auto slash = base_url.find('/', scheme + 3);
  HttpEndpoint e;
  e.origin = base_url.substr(0, slash);
  if (slash != std::string::npos) e.prefix = base_url.substr(slash);
  while (!e.prefix.empty() && e.prefix.back() == '/') e.prefix.pop_back();
  return e;
}

HttpLanguageModel::HttpLanguageModel(std::string base_url, std::string api_key, std::string model,
                                     double timeout_seconds)
    : endpoint_(HttpEndpoint::parse(base_url)),
      api_key_(std::move(api_key)),
      model_(std::move(model)),
      timeout_(timeout_seconds) {}

std::string HttpLanguageModel::complete(const LmRequest& request) {
  json body{{"model", model_},
            {"temperature", 0},
            {"messages", json::array({{{"role", "user"}, {"content", request.prompt}}})}};
  auto reply = post_json(endpoint_, "/chat/completions", api_key_, body, timeout_);
  try {
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    fail(ErrorCode::protocol_error, std::string("unexpected chat completion shape: ") + e.what());
  }
}

HttpEmbedder::HttpEmbedder(std::string base_url, std::string api_key, std::string model, std::size_t dimension,
                           double timeout_seconds)
    : endpoint_(HttpEndpoint::parse(base_url)),
      api_key_(std::move(api_key)),
      model_(std::move(model)),
      dimension_(dimension),
      timeout_(timeout_seconds) {}

EmbeddingVector HttpEmbedder::embed(std::string_view text) const {
  json body{{"model", model_}, {"input", std::string(text)}};
  auto reply = post_json(endpoint_, "/embeddings", api_key_, body, timeout_);
  std::vector<double> values;
  try {
    values = reply.at("data").at(0).at("embedding").get<std::vector<double>>();
  } catch (const json::exception& e) {
    fail(ErrorCode::protocol_error, std::string("unexpected embedding shape: ") + e.what());
  }
  if (values.size() != dimension_) {
    fail(ErrorCode::config_error, "provider embedding has dimension " + std::to_string(values.size()) + ", expected " +
                                      std::to_string(dimension_));
  }
  return EmbeddingVector::from_values(std::move(values));
}

}  // namespace legalqa
