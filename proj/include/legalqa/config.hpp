#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "legalqa/provider.hpp"

namespace legalqa {

/// How model calls are served:
///   fixture    replay recorded exchanges; a miss is a hard error
///   live       an OpenAI-compatible HTTP endpoint
///   record     live, and every exchange is appended to the fixture file
///   reference  the deterministic offline model
struct ProviderConfig {
  std::string mode = "fixture";
  std::filesystem::path fixtures;
  std::string base_url;
  std::string model;
  std::string embedding_model;
  /// "reference" (offline n-gram embedder) or "provider" (same mode as the
  /// language model).
  std::string embedder = "reference";
  std::size_t embedding_dimension = 256;
  double timeout_seconds = 30.0;
  /// Only ever read from LEGALQA_API_KEY.
  std::string api_key;
};

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path graph;
  /// Ingest records; their summary questions are the templates.
  std::filesystem::path records;
  std::filesystem::path provisions;
  std::filesystem::path embedding_cache;
  std::filesystem::path checkpoint;
  std::filesystem::path session_log;
  std::filesystem::path regions;
  std::filesystem::path static_dir;
  ProviderConfig provider;
  std::string detector = "coverage";
  std::size_t retrieval_m = 5;
  std::size_t max_rounds = 3;
  std::uint64_t seed = 0;

  /// Throws config_error: unknown mode or detector, live/record without a
  /// base URL or key, fixture mode without a fixture file, or a configured
  /// input path that does not exist.
  void validate() const;
};

/// Relative paths resolve against `base_dir`. LEGALQA_API_KEY and
/// LEGALQA_API_BASE override the provider credentials and URL.
ServiceConfig service_config_from_json(const json& j, const std::filesystem::path& base_dir);
ServiceConfig load_service_config(const std::filesystem::path& path);
json to_json(const ServiceConfig& config);

}  // namespace legalqa
