#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "legalqa/detector.hpp"
#include "legalqa/error.hpp"
#include "legalqa/predictor.hpp"
#include "legalqa/retrieval.hpp"
#include "legalqa/session.hpp"

namespace legalqa {

struct EngineOptions {
  std::size_t max_rounds = 3;
  std::size_t retrieval_m = kDefaultRetrievalCount;
  DetectorBackend detector = DetectorBackend::coverage;
  DetectorOptions detector_options;
  ClarifierOptions clarifier_options;
  /// Seeds session ids.
  std::uint64_t seed = 0;
};

/// Everything a session needs, shared read-only across sessions.
struct EngineResources {
  std::shared_ptr<const FactRuleGraph> graph;
  std::shared_ptr<const TemplateIndex> templates;
  /// Optional; without it the missing nodes come from the template oracle.
  std::shared_ptr<const PredictorModel> predictor;
  /// Optional for clarifications (templates are used without it); required
  /// to compose answers.
  std::shared_ptr<LanguageModel> model;
  std::shared_ptr<const ProvisionStore> provisions;
  std::shared_ptr<const Embedder> embedder;
  RegionRegistry regions;
  std::shared_ptr<SessionLog> log;
  Clock clock = utc_timestamp;
};

struct Completeness {
  bool complete = false;
  std::vector<std::string> missing;
  std::optional<std::string> template_id;
};

/// The client's answer to one pending clarification.
struct SelectionInput {
  std::size_t clarification = 0;
  std::size_t option = 0;
};

/// Runs dialogue sessions. Every transition is an event that is first
/// validated against a copy of the session, then appended to the log and
/// applied, so the in-memory session always equals replay(log). Operations
/// on one session are serialized; distinct sessions run concurrently.
class SessionEngine {
 public:
  SessionEngine(EngineResources resources, EngineOptions options = {});

  /// Empty question → invalid_argument; unknown location →
  /// unsupported_region. The session is returned already past the
  /// deficiency gate (Clarifying, Complete, or Failed if the model broke).
  DialogueSession open_session(const std::string& question, const std::string& location);

  /// Not clarifying → state_error; a pending clarification left out →
  /// incomplete_submission; unknown/duplicate j or out-of-range k →
  /// invalid_argument. Nothing is recorded when validation fails.
  DialogueSession submit_selections(const std::string& session_id, std::span<const SelectionInput> selections);

  /// Complete → Answered. Retryable provider failures leave the session
  /// Complete and rethrow; a malformed reply fails the session and rethrows
  /// protocol_error.
  DialogueSession compose_answer(const std::string& session_id);

  DialogueSession get(const std::string& session_id) const;
  std::vector<std::string> session_ids() const;

  /// Coverage of the question plus every non-terminal selection.
  Completeness check_completeness(const DialogueSession& session) const;

  /// Rebuilds sessions from a log (e.g. at service start).
  void restore(std::span<const SessionEvent> events);

  const RegionRegistry& regions() const { return resources_.regions; }
  const EngineOptions& options() const { return options_; }
  const EngineResources& resources() const { return resources_; }

 private:
  struct Entry {
    std::mutex mutex;
    DialogueSession session;
  };

  std::shared_ptr<Entry> entry(const std::string& session_id) const;
  std::string next_session_id();
  void commit(Entry& entry, const std::string& kind, json payload);
  void fail_session(Entry& entry, const Error& error);
  std::string augmented_question(const DialogueSession& session) const;
  std::vector<std::string> missing_nodes(const std::string& text, const std::vector<std::string>& oracle) const;
  /// Issues a round for `missing`, or completes the session when there is
  /// nothing left to ask.
  void advance(Entry& entry, const Completeness& completeness);

  EngineResources resources_;
  EngineOptions options_;
  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  std::atomic<std::uint64_t> counter_{0};
};

}  // namespace legalqa
