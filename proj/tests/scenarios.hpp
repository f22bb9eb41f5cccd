#pragma once

// End-to-end scenarios driven through the CLI entry point, shared by the
// unit tests and the acceptance binary.

#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "legalqa/cli.hpp"
#include "legalqa/session.hpp"
#include "support.hpp"

namespace legalqa::testkit {

/// Sets an environment variable for the lifetime of the guard.
class EnvVar {
 public:
  EnvVar(const char* name, const std::string& value) : name_(name) {
    if (const char* old = std::getenv(name)) old_ = old;
    ::setenv(name, value.c_str(), 1);
  }
  ~EnvVar() {
    if (old_) {
      ::setenv(name_, old_->c_str(), 1);
    } else {
      ::unsetenv(name_);
    }
  }
  EnvVar(const EnvVar&) = delete;
  EnvVar& operator=(const EnvVar&) = delete;

 private:
  const char* name_;
  std::optional<std::string> old_;
};

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

inline CliResult cli(std::vector<std::string> args, const std::string& input = {}) {
  args.insert(args.begin(), "legalqa");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  std::istringstream in(input);
  int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err, in);
  return {code, out.str(), err.str()};
}

/// Runs a subcommand that must succeed.
inline CliResult cli_ok(const std::vector<std::string>& args, const std::string& input = {}) {
  auto r = cli(args, input);
  if (r.code != 0) throw std::runtime_error("legalqa " + args.front() + " exited " + std::to_string(r.code) + ": " + r.err);
  return r;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

/// Events as JSON without their wall-clock timestamps.
inline std::vector<json> events_without_time(const std::vector<SessionEvent>& events) {
  std::vector<json> out;
  for (const auto& e : events) {
    auto j = to_json(e);
    j.erase("timestamp");
    out.push_back(std::move(j));
  }
  return out;
}

/// Writes a synthetic corpus, provisions, regions and a config under dir/data.
inline std::filesystem::path synth_dir(const TempDir& dir, std::uint64_t seed, std::size_t cases = 6) {
  auto root = dir / "data";
  cli_ok({"synth", "--out-dir", root.string(), "--cases", std::to_string(cases), "--facts-min", "5", "--facts-max", "6",
          "--rules-min", "1", "--rules-max", "2", "--rule-pool", "40", "--shared-rules", "1", "--seed",
          std::to_string(seed)});
  return root;
}

struct PipelineRun {
  std::map<std::string, std::string> artifacts;
  std::string eval_out;
  std::string ask_out;
  std::vector<json> events;
};

/// synth, ingest, graph build, train, eval, index and a scripted ask, with
/// the given provider mode for both the ingest and the service.
inline PipelineRun run_pipeline(const TempDir& dir, const std::string& mode, const std::filesystem::path& fixtures,
                                const std::string& base_url) {
  PipelineRun run;
  auto root = synth_dir(dir, 21);
  auto p = [&](const char* name) { return (root / name).string(); };

  cli_ok({"ingest", "--corpus", p("corpus.jsonl"), "--out", p("records.jsonl"), "--provider", mode, "--fixtures",
          fixtures.string(), "--model", "m", "--seed", "5", "--masked", p("masked.jsonl"), "--pairs", p("pairs.jsonl")});
  cli_ok({"graph", "build", "--records", p("records.jsonl"), "--out", p("graph.json")});
  cli_ok({"train", "--corpus", p("records.jsonl"), "--graph", p("graph.json"), "--out", p("model.json"), "--episodes",
          "150", "--seed", "2"});
  run.eval_out =
      cli_ok({"eval", "--corpus", p("records.jsonl"), "--graph", p("graph.json"), "--checkpoint", p("model.json")}).out;
  cli_ok({"index", "--db", p("provisions.jsonl"), "--out", p("provisions.embeddings.json")});

  auto config = json::parse(read_file(root / "config.json"));
  config["checkpoint"] = "model.json";
  config["embedding_cache"] = "provisions.embeddings.json";
  config["provider"] = {{"mode", mode}, {"fixtures", fixtures.string()}, {"model", "m"}};
  if (!base_url.empty()) config["provider"]["base_url"] = base_url;
  write_file(root / "config.json", config.dump(2));

  auto masked_lines = read_file(root / "masked.jsonl");
  auto masked = json::parse(masked_lines.substr(0, masked_lines.find('\n')));
  // An unsupported region and a malformed choice exercise the re-prompts.
  std::string script = masked["text"].get<std::string>() + "\nZZ\nCA\nabc\n";
  for (int i = 0; i < 30; ++i) script += "1\n";
  write_file(root / "script.txt", script);
  run.ask_out = cli_ok({"ask", "--config", p("config.json"), "--script", p("script.txt")}).out;

  for (const auto* name :
       {"records.jsonl", "masked.jsonl", "pairs.jsonl", "graph.json", "model.json", "provisions.embeddings.json"}) {
    run.artifacts[name] = read_file(root / name);
  }
  run.events = events_without_time(read_session_log(root / "sessions.jsonl"));
  return run;
}

struct RecordReplay {
  PipelineRun recorded;
  PipelineRun first;
  PipelineRun second;
  std::size_t recorded_calls = 0;
};

/// Records a transcript against a localhost stand-in for a hosted model,
/// shuts it down, then replays the pipeline twice from the transcript alone.
inline RecordReplay record_then_replay_twice() {
  TempDir fixtures_dir("transcript");
  auto fixtures = fixtures_dir / "transcript.jsonl";
  RecordReplay out;
  {
    MockOpenAiServer server;
    EnvVar key("LEGALQA_API_KEY", "sk-test");
    EnvVar base("LEGALQA_API_BASE", server.base_url());
    TempDir dir("record");
    out.recorded = run_pipeline(dir, "record", fixtures, server.base_url());
    out.recorded_calls = server.chat_calls();
  }
  TempDir first_dir("replay-1");
  TempDir second_dir("replay-2");
  out.first = run_pipeline(first_dir, "fixture", fixtures, "");
  out.second = run_pipeline(second_dir, "fixture", fixtures, "");
  return out;
}

}  // namespace legalqa::testkit
