#include "legalqa/provider_registry.hpp"

#include "legalqa/checkpoint.hpp"
#include "legalqa/error.hpp"
#include "legalqa/http_provider.hpp"

namespace legalqa {

ProviderHandles make_providers(const ProviderConfig& c) {
  ProviderHandles h;
  bool provider_embedder = c.embedder == "provider";
  std::string live_embedder_id = "live:" + c.embedding_model;

  if (c.mode == "reference") {
    h.model = std::make_shared<ReferenceLanguageModel>();
    h.embedder = std::make_shared<ReferenceEmbedder>(c.embedding_dimension);
    return h;
  }
  if (c.mode == "fixture") {
    h.fixtures = FixtureStore::load(c.fixtures);
    h.model = std::make_shared<ReplayLanguageModel>(h.fixtures);
    if (provider_embedder) {
      h.embedder = std::make_shared<ReplayEmbedder>(h.fixtures, live_embedder_id, c.embedding_dimension);
    }
  } else if (c.mode == "live" || c.mode == "record") {
    std::shared_ptr<LanguageModel> live =
        std::make_shared<HttpLanguageModel>(c.base_url, c.api_key, c.model, c.timeout_seconds);
    std::shared_ptr<const Embedder> live_embedder;
    if (provider_embedder) {
      live_embedder = std::make_shared<HttpEmbedder>(c.base_url, c.api_key, c.embedding_model, c.embedding_dimension,
                                                     c.timeout_seconds);
    }
    if (c.mode == "record") {
      h.fixtures = FixtureStore::open_for_recording(c.fixtures);
      h.model = std::make_shared<RecordingLanguageModel>(live, h.fixtures);
      if (live_embedder) live_embedder = std::make_shared<RecordingEmbedder>(live_embedder, h.fixtures);
    } else {
      h.model = live;
    }
    h.embedder = live_embedder;
  } else {
    fail(ErrorCode::config_error, "unknown provider mode '" + c.mode + "'");
  }
  if (!h.embedder) h.embedder = std::make_shared<ReferenceEmbedder>(c.embedding_dimension);
  return h;
}

ServiceContext build_service(const ServiceConfig& config) {
  config.validate();
  ServiceContext ctx;
  ctx.config = config;
  ctx.providers = make_providers(config.provider);

  EngineResources r;
  r.graph = std::make_shared<FactRuleGraph>(load_graph(config.graph));
  std::vector<SummaryQuestion> templates;
  for (const auto& record : load_ingest_records(config.records)) templates.push_back(record.question);
  r.templates = std::make_shared<TemplateIndex>(std::move(templates));
  if (!config.checkpoint.empty()) r.predictor = std::make_shared<PredictorModel>(load_checkpoint(config.checkpoint));
  r.model = ctx.providers.model;
  r.embedder = ctx.providers.embedder;

  std::optional<EmbeddingCache> cache;
  if (!config.embedding_cache.empty() && std::filesystem::exists(config.embedding_cache)) {
    cache = load_embedding_cache(config.embedding_cache);
  }
  auto store = ProvisionStore::build(load_provisions(config.provisions), *r.embedder, cache ? &*cache : nullptr);
  if (!config.embedding_cache.empty()) save_embedding_cache(store.cache(), config.embedding_cache);
  r.provisions = std::make_shared<ProvisionStore>(std::move(store));
  r.regions = load_regions(config.regions);

  std::vector<SessionEvent> history;
  if (!config.session_log.empty()) {
    history = read_session_log(config.session_log);
    r.log = std::make_shared<FileSessionLog>(config.session_log);
  }

  EngineOptions o;
  o.max_rounds = config.max_rounds;
  o.retrieval_m = config.retrieval_m;
  o.detector = config.detector == "provider" ? DetectorBackend::provider : DetectorBackend::coverage;
  o.seed = config.seed;
  ctx.engine = std::make_shared<SessionEngine>(std::move(r), o);
  ctx.engine->restore(history);
  return ctx;
}

}  // namespace legalqa
