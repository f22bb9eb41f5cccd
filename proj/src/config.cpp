#include "legalqa/config.hpp"

#include <cstdlib>
#include <fstream>

#include "legalqa/error.hpp"

namespace legalqa {

namespace {

std::filesystem::path resolve(const json& j, const char* key, const std::filesystem::path& base) {
  if (!j.contains(key) || j.at(key).is_null()) return {};
  std::filesystem::path p = j.at(key).get<std::string>();
  return p.is_absolute() ? p : base / p;
}

void require_file(const std::filesystem::path& p, const char* what) {
  if (!p.empty() && !std::filesystem::exists(p)) {
    fail(ErrorCode::config_error, std::string(what) + " not found: " + p.string());
  }
}

}  // namespace

void ServiceConfig::validate() const {
  const auto& m = provider.mode;
  if (m != "fixture" && m != "live" && m != "record" && m != "reference") {
    fail(ErrorCode::config_error, "unknown provider mode '" + m + "'");
  }
  if (provider.embedder != "reference" && provider.embedder != "provider") {
    fail(ErrorCode::config_error, "unknown embedder '" + provider.embedder + "'");
  }
  if (detector != "coverage" && detector != "provider") fail(ErrorCode::config_error, "unknown detector '" + detector + "'");
  if (m == "live" || m == "record") {
    if (provider.base_url.empty()) fail(ErrorCode::config_error, m + " mode needs provider.base_url or LEGALQA_API_BASE");
    if (provider.api_key.empty()) fail(ErrorCode::config_error, m + " mode needs LEGALQA_API_KEY");
  }
  if (m == "fixture") {
    if (provider.fixtures.empty()) fail(ErrorCode::config_error, "fixture mode needs provider.fixtures");
    require_file(provider.fixtures, "fixture file");
  }
  if (m == "record" && provider.fixtures.empty()) fail(ErrorCode::config_error, "record mode needs provider.fixtures");
  if (graph.empty() || records.empty() || provisions.empty() || regions.empty()) {
    fail(ErrorCode::config_error, "graph, records, provisions and regions are required");
  }
  require_file(graph, "graph");
  require_file(records, "records");
  require_file(provisions, "provisions");
  require_file(regions, "region registry");
  require_file(checkpoint, "checkpoint");
  require_file(static_dir, "static directory");
  if (port < 0 || port > 65535) fail(ErrorCode::config_error, "port out of range");
  if (max_rounds == 0) fail(ErrorCode::config_error, "max_rounds must be at least 1");
  if (retrieval_m == 0) fail(ErrorCode::config_error, "retrieval_m must be at least 1");
}

ServiceConfig service_config_from_json(const json& j, const std::filesystem::path& base_dir) {
  ServiceConfig c;
  try {
    if (j.contains("listen")) {
      auto listen = j.at("listen").get<std::string>();
      auto colon = listen.rfind(':');
      if (colon == std::string::npos) fail(ErrorCode::config_error, "listen must be host:port");
      c.host = listen.substr(0, colon);
      c.port = std::stoi(listen.substr(colon + 1));
    }
    c.graph = resolve(j, "graph", base_dir);
    c.records = resolve(j, "records", base_dir);
    c.provisions = resolve(j, "provisions", base_dir);
    c.embedding_cache = resolve(j, "embedding_cache", base_dir);
    c.checkpoint = resolve(j, "checkpoint", base_dir);
    c.session_log = resolve(j, "session_log", base_dir);
    c.regions = resolve(j, "regions", base_dir);
    c.static_dir = resolve(j, "static_dir", base_dir);
    c.detector = j.value("detector", c.detector);
    c.retrieval_m = j.value("retrieval_m", c.retrieval_m);
    c.max_rounds = j.value("max_rounds", c.max_rounds);
    c.seed = j.value("seed", c.seed);
    if (j.contains("provider")) {
      const auto& p = j.at("provider");
      c.provider.mode = p.value("mode", c.provider.mode);
      c.provider.fixtures = resolve(p, "fixtures", base_dir);
      c.provider.base_url = p.value("base_url", c.provider.base_url);
      c.provider.model = p.value("model", c.provider.model);
      c.provider.embedding_model = p.value("embedding_model", c.provider.embedding_model);
      c.provider.embedder = p.value("embedder", c.provider.embedder);
      c.provider.embedding_dimension = p.value("embedding_dimension", c.provider.embedding_dimension);
      c.provider.timeout_seconds = p.value("timeout_seconds", c.provider.timeout_seconds);
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::config_error, std::string("malformed service config: ") + e.what());
  } catch (const std::logic_error& e) {
    fail(ErrorCode::config_error, std::string("malformed listen address: ") + e.what());
  }
  if (const char* key = std::getenv("LEGALQA_API_KEY")) c.provider.api_key = key;
  if (const char* base = std::getenv("LEGALQA_API_BASE")) c.provider.base_url = base;
  return c;
}

ServiceConfig load_service_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::config_error, "cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::config_error, "config " + path.string() + " is not valid JSON: " + e.what());
  }
  auto c = service_config_from_json(j, std::filesystem::absolute(path).parent_path());
  c.validate();
  return c;
}

json to_json(const ServiceConfig& c) {
  auto s = [](const std::filesystem::path& p) { return p.empty() ? json(nullptr) : json(p.string()); };
  return {{"listen", c.host + ":" + std::to_string(c.port)},
          {"graph", s(c.graph)},
          {"records", s(c.records)},
          {"provisions", s(c.provisions)},
          {"embedding_cache", s(c.embedding_cache)},
          {"checkpoint", s(c.checkpoint)},
          {"session_log", s(c.session_log)},
          {"regions", s(c.regions)},
          {"static_dir", s(c.static_dir)},
          {"detector", c.detector},
          {"retrieval_m", c.retrieval_m},
          {"max_rounds", c.max_rounds},
          {"seed", c.seed},
          {"provider",
           {{"mode", c.provider.mode},
            {"fixtures", s(c.provider.fixtures)},
            {"base_url", c.provider.base_url},
            {"model", c.provider.model},
            {"embedding_model", c.provider.embedding_model},
            {"embedder", c.provider.embedder},
            {"embedding_dimension", c.provider.embedding_dimension},
            {"timeout_seconds", c.provider.timeout_seconds}}}};
}

}  // namespace legalqa
