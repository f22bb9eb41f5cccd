#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <string>
#include <thread>

#include <unistd.h>

#include "legalqa/provider.hpp"
#include "legalqa/retrieval.hpp"
#include "legalqa/session_engine.hpp"
#include "legalqa/synthetic.hpp"
#include "legalqa/text.hpp"

// After Eigen: <resolv.h>, pulled in by httplib, defines a `_res` macro.
#include <httplib.h>

namespace legalqa::testkit {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("legalqa-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Random bipartite fact-rule graph with every fact linked to at least one
/// rule.
inline FactRuleGraph random_graph(Rng& rng, std::size_t facts, std::size_t rules, double edge_probability) {
  FactRuleGraph g;
  for (std::size_t r = 0; r < rules; ++r) g.add_node(FactRuleNode::make("rule " + std::to_string(r), NodeKind::rule));
  for (std::size_t f = 0; f < facts; ++f) {
    auto fact = FactRuleNode::make("fact " + std::to_string(f) + " item" + std::to_string(rng.index(7)), NodeKind::fact);
    g.add_node(fact);
    bool linked = false;
    for (std::size_t r = 0; r < rules; ++r) {
      if (rng.uniform01() < edge_probability) {
        g.add_edge(fact.id, "rule " + std::to_string(r));
        linked = true;
      }
    }
    if (!linked && rules > 0) g.add_edge(fact.id, "rule " + std::to_string(rng.index(rules)));
  }
  return g;
}

inline SyntheticOptions learnable_options(std::uint64_t seed, std::size_t cases = 5, std::size_t facts = 6) {
  SyntheticOptions o;
  o.n_cases = cases;
  o.facts_per_case = {facts, facts};
  o.rules_per_case = {1, 2};
  o.rule_pool = 40;
  o.shared_rules = 1;
  o.seed = seed;
  return o;
}

inline std::vector<Region> regions_for(const std::vector<std::string>& codes) {
  std::vector<Region> out;
  for (const auto& [code, name] : synthetic_regions(codes)) out.push_back({code, name});
  return out;
}

/// An engine over a synthetic corpus with in-process providers.
struct EngineRig {
  SyntheticCorpus corpus;
  std::shared_ptr<MemorySessionLog> log;
  std::shared_ptr<SessionEngine> engine;
};

inline EngineRig make_engine_rig(const SyntheticOptions& options, std::shared_ptr<LanguageModel> model,
                                 std::shared_ptr<const Embedder> embedder, EngineOptions engine_options = {}) {
  EngineRig rig;
  rig.corpus = generate_synthetic_corpus(options);
  rig.log = std::make_shared<MemorySessionLog>();
  EngineResources r;
  r.graph = std::make_shared<FactRuleGraph>(rig.corpus.merged_graph());
  r.templates = std::make_shared<TemplateIndex>(rig.corpus.questions());
  r.model = std::move(model);
  r.embedder = std::move(embedder);
  auto provisions = generate_synthetic_provisions(rig.corpus, options.jurisdictions, 2, options.seed);
  r.provisions = std::make_shared<ProvisionStore>(ProvisionStore::build(provisions, *r.embedder));
  r.regions = RegionRegistry(regions_for(options.jurisdictions));
  r.log = rig.log;
  r.clock = [] { return std::string("2024-01-01T00:00:00Z"); };
  rig.engine = std::make_shared<SessionEngine>(std::move(r), engine_options);
  return rig;
}

/// A localhost stand-in for an OpenAI-compatible API. Chat completions are
/// answered by the reference model from the payload embedded in the prompt;
/// embeddings come from the reference embedder.
class MockOpenAiServer {
 public:
  explicit MockOpenAiServer(std::size_t dimension = ReferenceEmbedder::kDefaultDimension) : embedder_(dimension) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      ++chat_calls_;
      if (fail_next_.exchange(false)) {
        res.status = 503;
        res.set_content(R"({"error":"busy"})", "application/json");
        return;
      }
      auto body = json::parse(req.body);
      auto prompt = body.at("messages").at(0).at("content").get<std::string>();
      auto request = request_from_prompt(prompt);
      if (!request) {
        res.status = 400;
        return;
      }
      ReferenceLanguageModel model;
      json reply{{"choices", json::array({{{"message", {{"role", "assistant"}, {"content", model.complete(*request)}}}}})}};
      res.set_content(reply.dump(), "application/json");
    });
    server_.Post("/v1/embeddings", [this](const httplib::Request& req, httplib::Response& res) {
      ++embedding_calls_;
      auto body = json::parse(req.body);
      auto v = embedder_.embed(body.at("input").get<std::string>());
      json reply{{"data", json::array({{{"embedding", v.values}}})}};
      res.set_content(reply.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockOpenAiServer() {
    server_.stop();
    thread_.join();
  }

  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }
  std::size_t chat_calls() const { return chat_calls_; }
  std::size_t embedding_calls() const { return embedding_calls_; }
  void fail_next() { fail_next_ = true; }

 private:
  httplib::Server server_;
  ReferenceEmbedder embedder_;
  int port_ = 0;
  std::thread thread_;
  std::atomic<std::size_t> chat_calls_{0};
  std::atomic<std::size_t> embedding_calls_{0};
  std::atomic<bool> fail_next_{false};
};

}  // namespace legalqa::testkit
