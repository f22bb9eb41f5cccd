#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "legalqa/clarifier.hpp"
#include "legalqa/retrieval.hpp"

namespace legalqa {

enum class SessionState { awaiting_intake, clarifying, complete, answered, failed };
std::string_view to_string(SessionState state);
SessionState session_state_from_string(std::string_view name);

/// u_{ijk}: option k of clarifying question j for user question i.
struct Selection {
  std::size_t i = 0;
  std::size_t j = 0;
  std::size_t k = 0;
  std::string option_text;
  bool operator==(const Selection&) const = default;
};

struct FinalAnswer {
  std::string conclusion;
  std::string analysis;
  std::string suggestions;
  std::vector<std::string> cited_provisions;
  bool operator==(const FinalAnswer&) const = default;
};

struct ClarificationRecord {
  ClarifyingQuestion question;
  std::size_t round = 0;
  std::optional<Selection> selection;
  bool operator==(const ClarificationRecord&) const = default;
};

struct SessionFailure {
  std::string code;
  std::string message;
  bool operator==(const SessionFailure&) const = default;
};

struct DialogueSession {
  std::string session_id;
  std::string question;
  std::string location;
  SessionState state = SessionState::awaiting_intake;
  std::size_t round = 0;
  bool best_effort = false;
  /// Every clarification so far; position == j.
  std::vector<ClarificationRecord> clarifications;
  std::vector<RetrievedProvision> retrieved;
  std::optional<FinalAnswer> answer;
  std::optional<SessionFailure> failure;
  /// Number of events applied.
  std::uint64_t version = 0;

  /// Indices j of clarifications without a selection.
  std::vector<std::size_t> pending() const;
  bool operator==(const DialogueSession&) const = default;
};

/// One persisted transition. The event kinds and their payloads:
///   opened                 {question, location}
///   clarifications_issued  {round, clarifications: [ClarifyingQuestion]}
///   selections_recorded    {selections: [{i, j, k, option}]}
///   completed              {best_effort}
///   answered               {query, retrieved: [{id, score}], answer}
///   failed                 {code, message}
struct SessionEvent {
  std::string session_id;
  std::uint64_t seq = 0;
  std::string event;
  json payload;
  std::string timestamp;
  bool operator==(const SessionEvent&) const = default;
};

/// The only way a session changes. Throws state_error for any event not
/// allowed in the current state (leaving the session untouched) and
/// invalid_argument for a malformed payload.
void apply(DialogueSession& session, const SessionEvent& event);

/// Folds events (seq 0, 1, ...) into a session.
DialogueSession replay(std::span<const SessionEvent> events);

json to_json(const Selection& selection);
json to_json(const FinalAnswer& answer);
json to_json(const DialogueSession& session);
json to_json(const SessionEvent& event);
SessionEvent session_event_from_json(const json& j);
FinalAnswer final_answer_from_json(const json& j);

/// Strict parse of an answer reply: CONCLUSION:, ANALYSIS: and SUGGESTIONS:
/// sections (each once, non-empty, possibly multi-line) and an optional
/// CITATIONS: line of comma-separated ids, all of which must be among
/// `retrieved`. Without CITATIONS the retrieved ids that appear in the text
/// are taken as cited. Violations are protocol_error.
FinalAnswer parse_answer(std::string_view reply, std::span<const RetrievedProvision> retrieved);

// --- Persistence ------------------------------------------------------------

/// Append-only event sink.
class SessionLog {
 public:
  virtual ~SessionLog() = default;
  virtual void append(const SessionEvent& event) = 0;
};

class MemorySessionLog final : public SessionLog {
 public:
  void append(const SessionEvent& event) override;
  std::vector<SessionEvent> events() const;

 private:
  mutable std::mutex mutex_;
  std::vector<SessionEvent> events_;
};

/// JSON lines, one event per line, flushed per append.
class FileSessionLog final : public SessionLog {
 public:
  explicit FileSessionLog(std::filesystem::path path);
  void append(const SessionEvent& event) override;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::mutex mutex_;
  std::filesystem::path path_;
};

std::vector<SessionEvent> read_session_log(const std::filesystem::path& path);

// --- Regions ----------------------------------------------------------------

struct Region {
  std::string code;
  std::string name;
  bool operator==(const Region&) const = default;
};

class RegionRegistry {
 public:
  RegionRegistry() = default;
  explicit RegionRegistry(std::vector<Region> regions);

  bool contains(const std::string& code) const;
  const std::vector<Region>& regions() const { return regions_; }

 private:
  std::vector<Region> regions_;
};

/// [{code, name}]
RegionRegistry load_regions(const std::filesystem::path& path);
void save_regions(const RegionRegistry& registry, const std::filesystem::path& path);

using Clock = std::function<std::string()>;
/// UTC ISO-8601 with milliseconds.
std::string utc_timestamp();

}  // namespace legalqa
