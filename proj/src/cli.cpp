#include "legalqa/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <optional>

#include "legalqa/api_server.hpp"
#include "legalqa/checkpoint.hpp"
#include "legalqa/config.hpp"
#include "legalqa/error.hpp"
#include "legalqa/provider_registry.hpp"
#include "legalqa/synthetic.hpp"
#include "legalqa/text.hpp"

namespace legalqa {

namespace {

namespace fs = std::filesystem;

void write_json_file(const json& j, const fs::path& path) {
  std::ofstream f(path);
  if (!f) fail(ErrorCode::io_error, "cannot write " + path.string());
  f << j.dump(2) << "\n";
}

void write_json_lines(const std::vector<json>& rows, const fs::path& path) {
  std::ofstream f(path);
  if (!f) fail(ErrorCode::io_error, "cannot write " + path.string());
  for (const auto& row : rows) f << row.dump() << "\n";
}

// --- synth ------------------------------------------------------------------

struct SynthArgs {
  fs::path out_dir;
  SyntheticOptions options;
  std::size_t distractors = 2;
};

int run_synth(const SynthArgs& a, std::ostream& out) {
  fs::create_directories(a.out_dir);
  auto corpus = generate_synthetic_corpus(a.options);
  save_corpus(corpus.documents, a.out_dir / "corpus.jsonl");
  save_ingest_records(corpus.truth, a.out_dir / "truth.jsonl");
  auto provisions = generate_synthetic_provisions(corpus, a.options.jurisdictions, a.distractors, a.options.seed);
  save_provisions(provisions, a.out_dir / "provisions.jsonl");
  std::vector<Region> regions;
  for (const auto& [code, name] : synthetic_regions(a.options.jurisdictions)) regions.push_back({code, name});
  save_regions(RegionRegistry(regions), a.out_dir / "regions.json");
  write_json_file({{"listen", "127.0.0.1:8080"},
                   {"graph", "graph.json"},
                   {"records", "records.jsonl"},
                   {"provisions", "provisions.jsonl"},
                   {"regions", "regions.json"},
                   {"session_log", "sessions.jsonl"},
                   {"provider", {{"mode", "reference"}}}},
                  a.out_dir / "config.json");
  out << "wrote " << corpus.documents.size() << " cases and " << provisions.size() << " provisions to "
      << a.out_dir.string() << "\n";
  return 0;
}

// --- ingest -----------------------------------------------------------------

struct IngestArgs {
  fs::path corpus;
  fs::path out;
  std::string provider = "none";
  fs::path fixtures;
  std::string model;
  std::uint64_t seed = 0;
  double mask_fraction = 0.34;
  fs::path masked;
  fs::path pairs;
  bool paraphrase = false;
};

std::shared_ptr<LanguageModel> cli_model(const std::string& mode, const fs::path& fixtures, const std::string& model) {
  if (mode == "none") return nullptr;
  ProviderConfig p;
  p.mode = mode;
  p.fixtures = fixtures;
  p.model = model;
  if (const char* key = std::getenv("LEGALQA_API_KEY")) p.api_key = key;
  if (const char* base = std::getenv("LEGALQA_API_BASE")) p.base_url = base;
  if ((mode == "live" || mode == "record") && (p.api_key.empty() || p.base_url.empty())) {
    fail(ErrorCode::config_error, mode + " mode needs LEGALQA_API_BASE and LEGALQA_API_KEY");
  }
  if ((mode == "fixture" || mode == "record") && fixtures.empty()) {
    fail(ErrorCode::config_error, mode + " mode needs --fixtures");
  }
  return make_providers(p).model;
}

int run_ingest(const IngestArgs& a, std::ostream& out, std::ostream& err) {
  auto model = cli_model(a.provider, a.fixtures, a.model);
  auto docs = load_corpus(a.corpus);
  std::vector<IngestRecord> records;
  for (const auto& doc : docs) records.push_back(ingest_case(doc, model.get()));
  save_ingest_records(records, a.out);
  out << "ingested " << records.size() << " cases -> " << a.out.string() << "\n";

  if (a.masked.empty() && a.pairs.empty()) return 0;
  std::vector<json> masked_rows;
  std::vector<LabeledQuestion> labeled;
  for (const auto& r : records) {
    auto masked = mask_nodes(r.question, r.graph.nodes, a.mask_fraction, fnv1a64(r.question.question_id, a.seed));
    if (a.paraphrase && model) masked = paraphrase_masked(masked, r.graph.nodes, *model);
    masked_rows.push_back(to_json(masked));
    labeled.push_back(LabeledQuestion::complete_from(r.question));
    labeled.push_back(LabeledQuestion::deficient_from(masked));
  }
  if (!a.masked.empty()) {
    write_json_lines(masked_rows, a.masked);
    out << "masked " << masked_rows.size() << " questions -> " << a.masked.string() << "\n";
  }
  if (!a.pairs.empty()) {
    auto report = label_training_pairs(labeled);
    for (const auto& w : report.warnings) err << "warning: " << w << "\n";
    std::ofstream f(a.pairs);
    if (!f) fail(ErrorCode::io_error, "cannot write " + a.pairs.string());
    write_training_pairs(report.pairs, f);
    out << "wrote " << report.pairs.size() << " training pairs (" << report.deficient << " deficient, "
        << report.complete << " complete) -> " << a.pairs.string() << "\n";
  }
  return 0;
}

// --- graph ------------------------------------------------------------------

int run_graph_build(const fs::path& records_path, const fs::path& out_path, std::ostream& out) {
  auto records = load_ingest_records(records_path);
  std::vector<CaseGraph> graphs;
  for (const auto& r : records) graphs.push_back(r.graph);
  auto graph = merge(graphs);
  save_graph(graph, out_path);
  out << "merged " << graphs.size() << " case graphs into " << graph.size() << " nodes and " << graph.edges().size()
      << " edges -> " << out_path.string() << "\n";
  return 0;
}

int run_graph_stats(const fs::path& graph_path, std::ostream& out) {
  auto graph = load_graph(graph_path);
  auto facts = graph.fact_ids();
  std::set<std::string> cases;
  for (const auto& [id, sources] : graph.provenance()) cases.insert(sources.begin(), sources.end());
  double degree = 0.0;
  for (const auto& id : facts) degree += static_cast<double>(graph.neighbors(id).size());
  out << "nodes " << graph.size() << "\n"
      << "facts " << facts.size() << "\n"
      << "rules " << graph.size() - facts.size() << "\n"
      << "edges " << graph.edges().size() << "\n"
      << "cases " << cases.size() << "\n"
      << "mean_fact_degree " << std::fixed << std::setprecision(4)
      << (facts.empty() ? 0.0 : degree / static_cast<double>(facts.size())) << "\n";
  return 0;
}

// --- train / eval -----------------------------------------------------------

struct MaskArgs {
  double fraction = 0.34;
  std::size_t per_question = 5;
  std::uint64_t seed = 0;
};

struct TrainArgs {
  fs::path records;
  fs::path graph;
  fs::path out;
  TrainConfig config;
  MaskArgs masks;
};

int run_train(const TrainArgs& a, std::ostream& out) {
  auto graph = load_graph(a.graph);
  auto records = load_ingest_records(a.records);
  auto instances = sample_masked_instances(records, a.masks.fraction, a.masks.per_question, a.masks.seed);
  if (instances.empty()) fail(ErrorCode::invalid_argument, "no training instances");
  auto result = train(graph, instances, a.config);
  save_checkpoint(result.model, a.out);

  auto window = std::min<std::size_t>(50, result.log.size());
  auto mean_return = [&](std::size_t begin) {
    double total = 0.0;
    for (std::size_t i = begin; i < begin + window; ++i) total += result.log[i].discounted_return;
    return window == 0 ? 0.0 : total / static_cast<double>(window);
  };
  out << std::fixed << std::setprecision(4) << "trained " << result.log.size() << " episodes on "
      << instances.size() << " masked instances\n"
      << "mean return first " << window << ": " << mean_return(0) << "\n"
      << "mean return last " << window << ": " << mean_return(result.log.size() - window) << "\n"
      << "checkpoint -> " << a.out.string() << "\n";
  return 0;
}

struct EvalArgs {
  fs::path records;
  fs::path graph;
  fs::path checkpoint;
  MaskArgs masks{0.34, 5, 1};
  std::size_t repeats = 20;
  std::uint64_t seed = 0;
};

int run_eval(const EvalArgs& a, std::ostream& out) {
  auto graph = load_graph(a.graph);
  auto records = load_ingest_records(a.records);
  auto model = load_checkpoint(a.checkpoint);
  auto instances = sample_masked_instances(records, a.masks.fraction, a.masks.per_question, a.masks.seed);
  auto report = evaluate(graph, model, instances, a.repeats, a.seed);

  std::vector<SummaryQuestion> templates;
  for (const auto& r : records) templates.push_back(r.question);
  TemplateIndex index(std::move(templates));
  double oracle_recall = 0.0;
  double oracle_precision = 0.0;
  for (const auto& inst : instances) {
    std::set<std::string> predicted;
    try {
      predicted = oracle_missing(index, KnownNodeSet::from_ids({inst.known.begin(), inst.known.end()}));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::no_match) throw;
    }
    std::size_t hits = 0;
    for (const auto& id : predicted) hits += inst.masked.count(id);
    if (!inst.masked.empty()) oracle_recall += static_cast<double>(hits) / static_cast<double>(inst.masked.size());
    if (!predicted.empty()) oracle_precision += static_cast<double>(hits) / static_cast<double>(predicted.size());
  }
  auto n = static_cast<double>(instances.size());
  out << "instances " << instances.size() << "\n"
      << std::fixed << std::setprecision(6) << std::left << std::setw(8) << "method" << std::setw(12) << "recall"
      << "precision\n"
      << std::setw(8) << "policy" << std::setw(12) << report.recall << report.precision << "\n"
      << std::setw(8) << "random" << std::setw(12) << report.random_recall << report.random_precision << "\n"
      << std::setw(8) << "oracle" << std::setw(12) << oracle_recall / n << oracle_precision / n << "\n";
  return 0;
}

// --- index ------------------------------------------------------------------

struct IndexArgs {
  fs::path db;
  std::string embedder = "reference";
  fs::path config;
  fs::path out;
  std::size_t dimension = ReferenceEmbedder::kDefaultDimension;
};

int run_index(const IndexArgs& a, std::ostream& out) {
  std::shared_ptr<const Embedder> embedder;
  if (a.embedder == "reference") {
    embedder = std::make_shared<ReferenceEmbedder>(a.dimension);
  } else {
    if (a.config.empty()) fail(ErrorCode::config_error, "--embedder live needs --config for the provider settings");
    auto config = load_service_config(a.config);
    config.provider.embedder = "provider";
    embedder = make_providers(config.provider).embedder;
  }
  auto records = load_provisions(a.db);
  auto out_path = a.out.empty() ? fs::path(a.db.string() + ".embeddings.json") : a.out;
  std::optional<EmbeddingCache> cache;
  if (fs::exists(out_path)) cache = load_embedding_cache(out_path);
  auto store = ProvisionStore::build(records, *embedder, cache ? &*cache : nullptr);
  save_embedding_cache(store.cache(), out_path);
  out << "indexed " << store.size() << " provisions with " << store.fingerprint() << " -> " << out_path.string()
      << "\n";
  return 0;
}

// --- serve ------------------------------------------------------------------

int run_serve(const fs::path& config_path, std::optional<int> port, std::ostream& out) {
  auto config = load_service_config(config_path);
  if (port) config.port = *port;
  auto ctx = build_service(config);
  ApiServer server(ctx.engine, config.static_dir);
  out << "listening on http://" << config.host << ":" << config.port << "\n" << std::flush;
  if (!server.listen(config.host, config.port)) {
    fail(ErrorCode::io_error, "cannot listen on " + config.host + ":" + std::to_string(config.port));
  }
  return 0;
}

// --- ask --------------------------------------------------------------------

class Prompter {
 public:
  Prompter(std::istream& in, std::ostream& out, bool echo) : in_(in), out_(out), echo_(echo) {}

  std::string read(const std::string& prompt) {
    out_ << prompt << std::flush;
    std::string line;
    if (!std::getline(in_, line)) {
      out_ << "\n";
      fail(ErrorCode::invalid_argument, "input ended before the session was answered");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (echo_) out_ << line;
    out_ << "\n";
    return line;
  }

 private:
  std::istream& in_;
  std::ostream& out_;
  bool echo_;
};

std::optional<std::size_t> parse_choice(const std::string& text, std::size_t n) {
  auto t = trim(text);
  if (t.empty() || t.size() > 6) return std::nullopt;
  std::size_t value = 0;
  for (char c : t) {
    if (c < '0' || c > '9') return std::nullopt;
    value = value * 10 + static_cast<std::size_t>(c - '0');
  }
  if (value < 1 || value > n) return std::nullopt;
  return value - 1;
}

int report_failure(const DialogueSession& s, std::ostream& err) {
  err << "session " << s.session_id << " failed";
  if (s.failure) err << ": " << s.failure->code << ": " << s.failure->message;
  err << "\n";
  return 1;
}

void print_answer(const DialogueSession& s, std::ostream& out) {
  const auto& a = *s.answer;
  out << "\nCONCLUSION\n" << a.conclusion << "\n\nANALYSIS\n" << a.analysis << "\n\nSUGGESTIONS\n" << a.suggestions
      << "\n";
  if (!a.cited_provisions.empty()) {
    out << "\nCITATIONS\n";
    for (std::size_t i = 0; i < a.cited_provisions.size(); ++i) {
      out << (i ? ", " : "") << a.cited_provisions[i];
    }
    out << "\n";
  }
  if (s.best_effort) out << "\n(best-effort answer: some facts are still unconfirmed)\n";
}

int run_ask(const fs::path& config_path, const fs::path& script, std::istream& in, std::ostream& out,
            std::ostream& err) {
  std::ifstream script_stream;
  if (!script.empty()) {
    script_stream.open(script);
    if (!script_stream) fail(ErrorCode::io_error, "cannot read script " + script.string());
  }
  Prompter prompt(script.empty() ? in : script_stream, out, !script.empty());
  auto ctx = build_service(load_service_config(config_path));
  auto& engine = *ctx.engine;

  std::string codes;
  for (const auto& r : engine.regions().regions()) codes += (codes.empty() ? "" : ", ") + r.code;

  std::string question;
  while (trim(question).empty()) question = prompt.read("Question: ");
  std::optional<DialogueSession> session;
  while (!session) {
    auto location = trim(prompt.read("Location (" + codes + "): "));
    if (!engine.regions().contains(location)) {
      out << "'" << location << "' is not a supported region\n";
      continue;
    }
    session = engine.open_session(question, location);
  }

  while (session->state == SessionState::clarifying) {
    out << "\nRound " << session->round << "\n";
    std::vector<SelectionInput> selections;
    for (auto j : session->pending()) {
      const auto& q = session->clarifications[j].question;
      out << q.text << "\n";
      for (std::size_t k = 0; k < q.options.size(); ++k) out << "  " << k + 1 << ") " << q.options[k] << "\n";
      std::optional<std::size_t> choice;
      while (!choice) {
        choice = parse_choice(prompt.read("Choice [1-" + std::to_string(q.options.size()) + "]: "), q.options.size());
        if (!choice) out << "please enter a number between 1 and " << q.options.size() << "\n";
      }
      selections.push_back({j, *choice});
    }
    session = engine.submit_selections(session->session_id, selections);
  }
  if (session->state == SessionState::failed) return report_failure(*session, err);

  try {
    session = engine.compose_answer(session->session_id);
  } catch (const Error&) {
    auto latest = engine.get(session->session_id);
    if (latest.state == SessionState::failed) return report_failure(latest, err);
    throw;
  }
  out << "\nsession " << session->session_id << " answered\n";
  print_answer(*session, out);
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err, std::istream& in) {
  CLI::App app{"Interactive legal question answering: corpus pipeline, training, and service"};
  app.name("legalqa");
  app.require_subcommand(1);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a seeded synthetic corpus, provisions and regions");
  synth_cmd->add_option("--out-dir", synth.out_dir, "Output directory")->required();
  synth_cmd->add_option("--cases", synth.options.n_cases, "Number of cases");
  synth_cmd->add_option("--facts-min", synth.options.facts_per_case.lo, "Fewest facts per case");
  synth_cmd->add_option("--facts-max", synth.options.facts_per_case.hi, "Most facts per case");
  synth_cmd->add_option("--rules-min", synth.options.rules_per_case.lo, "Fewest case-specific rules");
  synth_cmd->add_option("--rules-max", synth.options.rules_per_case.hi, "Most case-specific rules");
  synth_cmd->add_option("--rule-pool", synth.options.rule_pool, "Distinct rules to draw from (0 = automatic)");
  synth_cmd->add_option("--shared-rules", synth.options.shared_rules, "Doctrines present in every case");
  synth_cmd->add_option("--distractors", synth.distractors, "Unrelated provisions per jurisdiction");
  synth_cmd->add_option("--seed", synth.options.seed, "Generator seed");

  IngestArgs ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Parse cases into IRAC frames, case graphs and summary questions");
  ingest_cmd->add_option("--corpus", ingest.corpus, "Corpus JSON lines {id, jurisdiction, text}")->required();
  ingest_cmd->add_option("--out", ingest.out, "Ingest records output (JSON lines)")->required();
  ingest_cmd->add_option("--provider", ingest.provider, "Model for parsing and summaries")
      ->check(CLI::IsMember({"none", "reference", "fixture", "live", "record"}));
  ingest_cmd->add_option("--fixtures", ingest.fixtures, "Fixture file for fixture and record modes");
  ingest_cmd->add_option("--model", ingest.model, "Model name for live and record modes");
  ingest_cmd->add_option("--seed", ingest.seed, "Masking seed");
  ingest_cmd->add_option("--mask-fraction", ingest.mask_fraction, "Fraction of key nodes to mask")
      ->check(CLI::Range(0.0, 1.0));
  ingest_cmd->add_option("--masked", ingest.masked, "Write masked questions (JSON lines)");
  ingest_cmd->add_option("--pairs", ingest.pairs, "Write deficiency training pairs (JSON lines)");
  ingest_cmd->add_flag("--paraphrase", ingest.paraphrase, "Let the model rewrite masked questions");

  auto* graph_cmd = app.add_subcommand("graph", "Build or inspect the merged fact-rule graph");
  graph_cmd->require_subcommand(1);
  fs::path graph_records, graph_out, graph_in;
  auto* graph_build = graph_cmd->add_subcommand("build", "Merge case graphs from ingest records");
  graph_build->add_option("--records", graph_records, "Ingest records")->required();
  graph_build->add_option("--out", graph_out, "Graph JSON output")->required();
  auto* graph_stats = graph_cmd->add_subcommand("stats", "Print graph statistics");
  graph_stats->add_option("--graph", graph_in, "Graph JSON")->required();

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train the missing-node predictor");
  train_cmd->add_option("--corpus", tr.records, "Ingest records")->required();
  train_cmd->add_option("--graph", tr.graph, "Graph JSON")->required();
  train_cmd->add_option("--out", tr.out, "Checkpoint output")->required();
  train_cmd->add_option("--episodes", tr.config.episodes, "Training episodes");
  train_cmd->add_option("--seed", tr.config.seed, "Model and sampling seed");
  train_cmd->add_option("--gamma", tr.config.gamma, "Discount factor");
  train_cmd->add_option("--actor-lr", tr.config.actor_lr, "Policy learning rate");
  train_cmd->add_option("--critic-lr", tr.config.critic_lr, "Value learning rate");
  train_cmd->add_flag("--train-encoder", tr.config.train_encoder, "Also update the graph encoder");
  train_cmd->add_option("--mask-fraction", tr.masks.fraction, "Fraction of key nodes to mask")
      ->check(CLI::Range(0.0, 1.0));
  train_cmd->add_option("--masks", tr.masks.per_question, "Maskings per question");
  train_cmd->add_option("--mask-seed", tr.masks.seed, "Masking seed");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Recall and precision of the predictor against random and oracle");
  eval_cmd->add_option("--corpus", ev.records, "Ingest records")->required();
  eval_cmd->add_option("--graph", ev.graph, "Graph JSON")->required();
  eval_cmd->add_option("--checkpoint", ev.checkpoint, "Checkpoint")->required();
  eval_cmd->add_option("--mask-fraction", ev.masks.fraction, "Fraction of key nodes to mask")
      ->check(CLI::Range(0.0, 1.0));
  eval_cmd->add_option("--masks", ev.masks.per_question, "Maskings per question");
  eval_cmd->add_option("--mask-seed", ev.masks.seed, "Masking seed");
  eval_cmd->add_option("--repeats", ev.repeats, "Random rollouts per instance");
  eval_cmd->add_option("--seed", ev.seed, "Random baseline seed");

  IndexArgs ix;
  auto* index_cmd = app.add_subcommand("index", "Embed the provision database into a cache");
  index_cmd->add_option("--db", ix.db, "Provisions JSON lines {id, jurisdiction, title, text}")->required();
  index_cmd->add_option("--embedder", ix.embedder, "Embedder")->check(CLI::IsMember({"reference", "live"}));
  index_cmd->add_option("--config", ix.config, "Service config (for the live embedder)");
  index_cmd->add_option("--out", ix.out, "Embedding cache output (default <db>.embeddings.json)");
  index_cmd->add_option("--dim", ix.dimension, "Reference embedder dimension")->check(CLI::PositiveNumber);

  fs::path serve_config;
  std::optional<int> serve_port;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP API");
  serve_cmd->add_option("--config", serve_config, "Service config")->required();
  serve_cmd->add_option("--port", serve_port, "Override the listen port")->check(CLI::Range(0, 65535));

  fs::path ask_config, ask_script;
  auto* ask_cmd = app.add_subcommand("ask", "Ask a question interactively in the terminal");
  ask_cmd->add_option("--config", ask_config, "Service config")->required();
  ask_cmd->add_option("--script", ask_script, "Read answers from a file: question, location, then choices");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*synth_cmd) return run_synth(synth, out);
    if (*ingest_cmd) return run_ingest(ingest, out, err);
    if (*graph_build) return run_graph_build(graph_records, graph_out, out);
    if (*graph_stats) return run_graph_stats(graph_in, out);
    if (*train_cmd) return run_train(tr, out);
    if (*eval_cmd) return run_eval(ev, out);
    if (*index_cmd) return run_index(ix, out);
    if (*serve_cmd) return run_serve(serve_config, serve_port, out);
    if (*ask_cmd) return run_ask(ask_config, ask_script, in, out, err);
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace legalqa
