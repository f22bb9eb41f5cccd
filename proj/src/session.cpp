#include "legalqa/session.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "legalqa/error.hpp"
#include "legalqa/text.hpp"

namespace legalqa {

namespace {

constexpr std::array<std::string_view, 5> kStateNames = {"awaiting_intake", "clarifying", "complete", "answered",
                                                         "failed"};

template <typename T>
T field(const json& payload, const char* key) {
  if (!payload.is_object() || !payload.contains(key)) {
    fail(ErrorCode::invalid_argument, std::string("event payload lacks '") + key + "'");
  }
  try {
    return payload.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorCode::invalid_argument, std::string("event payload field '") + key + "': " + e.what());
  }
}

void refuse(const DialogueSession& s, const std::string& event) {
  fail(ErrorCode::state_error,
       "event '" + event + "' is not allowed in state " + std::string(to_string(s.state)));
}

Selection selection_from_json(const json& j) {
  return {field<std::size_t>(j, "i"), field<std::size_t>(j, "j"), field<std::size_t>(j, "k"),
          field<std::string>(j, "option")};
}

void check_answer(const FinalAnswer& a, const std::vector<RetrievedProvision>& retrieved) {
  if (trim(a.conclusion).empty() || trim(a.analysis).empty() || trim(a.suggestions).empty()) {
    fail(ErrorCode::invalid_argument, "an answer needs three non-empty sections");
  }
  for (const auto& id : a.cited_provisions) {
    bool found = std::any_of(retrieved.begin(), retrieved.end(), [&](const auto& r) { return r.id == id; });
    if (!found) fail(ErrorCode::invalid_argument, "answer cites '" + id + "', which was not retrieved");
  }
}

}  // namespace

std::string_view to_string(SessionState state) { return kStateNames[static_cast<std::size_t>(state)]; }

SessionState session_state_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kStateNames.size(); ++i) {
    if (kStateNames[i] == name) return static_cast<SessionState>(i);
  }
  fail(ErrorCode::parse_error, "unknown session state '" + std::string(name) + "'");
}

std::vector<std::size_t> DialogueSession::pending() const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < clarifications.size(); ++j) {
    if (!clarifications[j].selection) out.push_back(j);
  }
  return out;
}

void apply(DialogueSession& session, const SessionEvent& event) {
  if (event.seq != session.version) {
    fail(ErrorCode::state_error, "event seq " + std::to_string(event.seq) + " does not follow version " +
                                     std::to_string(session.version));
  }
  if (session.version > 0 && event.session_id != session.session_id) {
    fail(ErrorCode::state_error, "event belongs to session '" + event.session_id + "'");
  }

  DialogueSession next = session;
  const auto& p = event.payload;
  const auto& kind = event.event;

  if (kind == "opened") {
    if (session.version != 0) refuse(session, kind);
    next.session_id = event.session_id;
    next.question = field<std::string>(p, "question");
    next.location = field<std::string>(p, "location");
    if (trim(next.question).empty()) fail(ErrorCode::invalid_argument, "question is empty");
    next.state = SessionState::awaiting_intake;
  } else if (session.version == 0) {
    fail(ErrorCode::state_error, "the first event of a session must be 'opened'");
  } else if (kind == "clarifications_issued") {
    bool from_intake = session.state == SessionState::awaiting_intake;
    bool next_round = session.state == SessionState::clarifying && session.pending().empty();
    if (!from_intake && !next_round) refuse(session, kind);
    auto round = field<std::size_t>(p, "round");
    if (round != session.round + 1) fail(ErrorCode::invalid_argument, "clarification round out of sequence");
    auto items = field<json>(p, "clarifications");
    if (!items.is_array() || items.empty()) fail(ErrorCode::invalid_argument, "a round needs clarifications");
    for (const auto& item : items) {
      auto q = clarifying_question_from_json(item);
      if (q.index != next.clarifications.size()) {
        fail(ErrorCode::invalid_argument, "clarification index " + std::to_string(q.index) + " out of sequence");
      }
      validate(q);
      next.clarifications.push_back({std::move(q), round, std::nullopt});
    }
    next.round = round;
    next.state = SessionState::clarifying;
  } else if (kind == "selections_recorded") {
    if (session.state != SessionState::clarifying || session.pending().empty()) refuse(session, kind);
    auto items = field<json>(p, "selections");
    if (!items.is_array()) fail(ErrorCode::invalid_argument, "selections must be an array");
    std::set<std::size_t> seen;
    for (const auto& item : items) {
      auto sel = selection_from_json(item);
      if (sel.j >= next.clarifications.size()) {
        fail(ErrorCode::invalid_argument, "no clarification " + std::to_string(sel.j));
      }
      auto& record = next.clarifications[sel.j];
      if (record.selection || !seen.insert(sel.j).second) {
        fail(ErrorCode::invalid_argument, "clarification " + std::to_string(sel.j) + " is already answered");
      }
      if (sel.k >= record.question.options.size()) {
        fail(ErrorCode::invalid_argument, "option " + std::to_string(sel.k) + " is out of range for clarification " +
                                              std::to_string(sel.j));
      }
      if (sel.i != record.question.question_index || sel.option_text != record.question.options[sel.k]) {
        fail(ErrorCode::invalid_argument, "selection does not match clarification " + std::to_string(sel.j));
      }
      record.selection = std::move(sel);
    }
    if (!next.pending().empty()) {
      fail(ErrorCode::incomplete_submission,
           std::to_string(next.pending().size()) + " pending clarification(s) left unanswered");
    }
  } else if (kind == "completed") {
    bool from_intake = session.state == SessionState::awaiting_intake;
    bool after_round = session.state == SessionState::clarifying && session.pending().empty();
    if (!from_intake && !after_round) refuse(session, kind);
    next.best_effort = field<bool>(p, "best_effort");
    next.state = SessionState::complete;
  } else if (kind == "answered") {
    if (session.state != SessionState::complete) refuse(session, kind);
    next.retrieved.clear();
    for (const auto& r : field<json>(p, "retrieved")) {
      next.retrieved.push_back({field<std::string>(r, "id"), field<double>(r, "score")});
    }
    auto answer = final_answer_from_json(field<json>(p, "answer"));
    check_answer(answer, next.retrieved);
    next.answer = std::move(answer);
    next.state = SessionState::answered;
  } else if (kind == "failed") {
    if (session.state == SessionState::answered || session.state == SessionState::failed) refuse(session, kind);
    next.failure = SessionFailure{field<std::string>(p, "code"), field<std::string>(p, "message")};
    next.state = SessionState::failed;
  } else {
    fail(ErrorCode::invalid_argument, "unknown session event '" + kind + "'");
  }

  ++next.version;
  session = std::move(next);
}

DialogueSession replay(std::span<const SessionEvent> events) {
  DialogueSession s;
  for (const auto& e : events) apply(s, e);
  return s;
}

json to_json(const Selection& s) { return {{"i", s.i}, {"j", s.j}, {"k", s.k}, {"option", s.option_text}}; }

json to_json(const FinalAnswer& a) {
  return {{"conclusion", a.conclusion},
          {"analysis", a.analysis},
          {"suggestions", a.suggestions},
          {"citations", a.cited_provisions}};
}

FinalAnswer final_answer_from_json(const json& j) {
  return {field<std::string>(j, "conclusion"), field<std::string>(j, "analysis"),
          field<std::string>(j, "suggestions"), field<std::vector<std::string>>(j, "citations")};
}

json to_json(const DialogueSession& s) {
  json clarifications = json::array();
  for (const auto& c : s.clarifications) {
    json item = to_json(c.question);
    item["round"] = c.round;
    item["selection"] = c.selection ? to_json(*c.selection) : json(nullptr);
    clarifications.push_back(std::move(item));
  }
  json retrieved = json::array();
  for (const auto& r : s.retrieved) retrieved.push_back({{"id", r.id}, {"score", r.score}});
  return {{"session_id", s.session_id},
          {"question", s.question},
          {"location", s.location},
          {"state", to_string(s.state)},
          {"round", s.round},
          {"best_effort", s.best_effort},
          {"clarifications", clarifications},
          {"pending", s.pending()},
          {"retrieved", retrieved},
          {"answer", s.answer ? to_json(*s.answer) : json(nullptr)},
          {"error", s.failure ? json{{"code", s.failure->code}, {"message", s.failure->message}} : json(nullptr)},
          {"version", s.version}};
}

json to_json(const SessionEvent& e) {
  return {{"session_id", e.session_id}, {"seq", e.seq}, {"event", e.event}, {"payload", e.payload},
          {"timestamp", e.timestamp}};
}

SessionEvent session_event_from_json(const json& j) {
  try {
    return {j.at("session_id").get<std::string>(), j.at("seq").get<std::uint64_t>(), j.at("event").get<std::string>(),
            j.at("payload"), j.at("timestamp").get<std::string>()};
  } catch (const json::exception& e) {
    fail(ErrorCode::parse_error, std::string("malformed session event: ") + e.what());
  }
}

FinalAnswer parse_answer(std::string_view reply, std::span<const RetrievedProvision> retrieved) {
  static constexpr std::array<std::string_view, 4> kHeaders = {"CONCLUSION:", "ANALYSIS:", "SUGGESTIONS:",
                                                               "CITATIONS:"};
  std::array<std::optional<std::string>, 4> sections;
  int current = -1;
  std::size_t pos = 0;
  while (pos <= reply.size()) {
    auto end = reply.find('\n', pos);
    if (end == std::string_view::npos) end = reply.size();
    auto line = reply.substr(pos, end - pos);
    pos = end + 1;

    int header = -1;
    for (std::size_t h = 0; h < kHeaders.size(); ++h) {
      if (line.substr(0, kHeaders[h].size()) == kHeaders[h]) header = static_cast<int>(h);
    }
    if (header >= 0) {
      if (sections[header]) {
        fail(ErrorCode::protocol_error, "answer repeats the " + std::string(kHeaders[header]) + " section");
      }
      sections[header] = std::string(line.substr(kHeaders[header].size()));
      current = header;
    } else if (current >= 0) {
      *sections[current] += "\n" + std::string(line);
    } else if (!trim(line).empty()) {
      fail(ErrorCode::protocol_error, "answer has text before its first section");
    }
  }

  FinalAnswer a;
  for (std::size_t h = 0; h < 3; ++h) {
    if (!sections[h] || trim(*sections[h]).empty()) {
      fail(ErrorCode::protocol_error, "answer is missing the " + std::string(kHeaders[h]) + " section");
    }
  }
  a.conclusion = trim(*sections[0]);
  a.analysis = trim(*sections[1]);
  a.suggestions = trim(*sections[2]);

  auto was_retrieved = [&](const std::string& id) {
    return std::any_of(retrieved.begin(), retrieved.end(), [&](const auto& r) { return r.id == id; });
  };
  if (sections[3]) {
    std::string list = *sections[3];
    std::size_t start = 0;
    while (start <= list.size()) {
      auto comma = list.find(',', start);
      if (comma == std::string::npos) comma = list.size();
      auto id = trim(std::string_view(list).substr(start, comma - start));
      start = comma + 1;
      if (id.empty()) continue;
      if (!was_retrieved(id)) fail(ErrorCode::protocol_error, "answer cites '" + id + "', which was not retrieved");
      if (std::find(a.cited_provisions.begin(), a.cited_provisions.end(), id) == a.cited_provisions.end()) {
        a.cited_provisions.push_back(id);
      }
    }
  } else {
    std::string body = a.conclusion + "\n" + a.analysis + "\n" + a.suggestions;
    for (const auto& r : retrieved) {
      if (body.find(r.id) != std::string::npos) a.cited_provisions.push_back(r.id);
    }
  }
  return a;
}

void MemorySessionLog::append(const SessionEvent& event) {
  std::lock_guard lock(mutex_);
  events_.push_back(event);
}

std::vector<SessionEvent> MemorySessionLog::events() const {
  std::lock_guard lock(mutex_);
  return events_;
}

FileSessionLog::FileSessionLog(std::filesystem::path path) : path_(std::move(path)) {
  std::ofstream touch(path_, std::ios::app);
  if (!touch) fail(ErrorCode::io_error, "cannot open session log " + path_.string());
}

void FileSessionLog::append(const SessionEvent& event) {
  std::lock_guard lock(mutex_);
  std::ofstream out(path_, std::ios::app);
  if (!out) fail(ErrorCode::io_error, "cannot append to session log " + path_.string());
  out << to_json(event).dump() << '\n';
  out.flush();
}

std::vector<SessionEvent> read_session_log(const std::filesystem::path& path) {
  std::vector<SessionEvent> out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    try {
      out.push_back(session_event_from_json(json::parse(line)));
    } catch (const json::parse_error& e) {
      fail(ErrorCode::parse_error, std::string("malformed session log line: ") + e.what());
    }
  }
  return out;
}

RegionRegistry::RegionRegistry(std::vector<Region> regions) : regions_(std::move(regions)) {
  std::set<std::string> seen;
  for (const auto& r : regions_) {
    if (r.code.empty()) fail(ErrorCode::config_error, "region code is empty");
    if (!seen.insert(r.code).second) fail(ErrorCode::config_error, "duplicate region code '" + r.code + "'");
  }
}

bool RegionRegistry::contains(const std::string& code) const {
  return std::any_of(regions_.begin(), regions_.end(), [&](const Region& r) { return r.code == code; });
}

RegionRegistry load_regions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io_error, "cannot read region registry " + path.string());
  try {
    std::vector<Region> regions;
    for (const auto& item : json::parse(in)) {
      regions.push_back({item.at("code").get<std::string>(), item.value("name", item.at("code").get<std::string>())});
    }
    return RegionRegistry(std::move(regions));
  } catch (const json::exception& e) {
    fail(ErrorCode::config_error, "malformed region registry " + path.string() + ": " + e.what());
  }
}

void save_regions(const RegionRegistry& registry, const std::filesystem::path& path) {
  json out = json::array();
  for (const auto& r : registry.regions()) out.push_back({{"code", r.code}, {"name", r.name}});
  std::ofstream file(path);
  if (!file) fail(ErrorCode::io_error, "cannot write " + path.string());
  file << out.dump(2) << '\n';
}

std::string utc_timestamp() {
  auto now = std::chrono::system_clock::now();
  auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%S") << '.' << std::setfill('0') << std::setw(3) << ms << 'Z';
  return out.str();
}

}  // namespace legalqa
