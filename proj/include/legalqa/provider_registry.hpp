#pragma once

#include <memory>

#include "legalqa/config.hpp"
#include "legalqa/provider.hpp"
#include "legalqa/session_engine.hpp"

namespace legalqa {

struct ProviderHandles {
  std::shared_ptr<LanguageModel> model;
  std::shared_ptr<const Embedder> embedder;
  /// The fixture file in fixture and record modes.
  std::shared_ptr<FixtureStore> fixtures;
};

/// Wires the language model and embedder for the configured mode. Fixture
/// mode never touches the network: a request without a recording is
/// fixture_miss.
ProviderHandles make_providers(const ProviderConfig& config);

/// A ready-to-serve engine and what it was built from.
struct ServiceContext {
  ServiceConfig config;
  ProviderHandles providers;
  std::shared_ptr<SessionEngine> engine;
};

/// Loads every artifact named by the config, embeds the provisions (reusing
/// and refreshing the embedding cache when configured), and restores
/// sessions from the session log.
ServiceContext build_service(const ServiceConfig& config);

}  // namespace legalqa
