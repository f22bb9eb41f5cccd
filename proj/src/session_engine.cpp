#include "legalqa/session_engine.hpp"

#include <cstdio>

#include "legalqa/error.hpp"
#include "legalqa/prompts.hpp"
#include "legalqa/text.hpp"

namespace legalqa {

SessionEngine::SessionEngine(EngineResources resources, EngineOptions options)
    : resources_(std::move(resources)), options_(std::move(options)) {
  if (!resources_.graph || !resources_.templates) {
    fail(ErrorCode::config_error, "the session engine needs a graph and a template index");
  }
  if (!resources_.clock) resources_.clock = utc_timestamp;
}

std::shared_ptr<SessionEngine::Entry> SessionEngine::entry(const std::string& session_id) const {
  std::shared_lock lock(sessions_mutex_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) fail(ErrorCode::not_found, "no session '" + session_id + "'");
  return it->second;
}

std::string SessionEngine::next_session_id() {
  for (;;) {
    auto n = counter_.fetch_add(1);
    char buf[24];
    std::snprintf(buf, sizeof(buf), "s-%016llx",
                  static_cast<unsigned long long>(fnv1a64(std::to_string(n), options_.seed)));
    std::shared_lock lock(sessions_mutex_);
    if (sessions_.count(buf) == 0) return buf;
  }
}

void SessionEngine::commit(Entry& e, const std::string& kind, json payload) {
  SessionEvent event{e.session.session_id, e.session.version, kind, std::move(payload), resources_.clock()};
  DialogueSession next = e.session;
  apply(next, event);
  if (resources_.log) resources_.log->append(event);
  e.session = std::move(next);
}

void SessionEngine::fail_session(Entry& e, const Error& error) {
  commit(e, "failed", {{"code", to_string(error.code())}, {"message", error.what()}});
}

std::string SessionEngine::augmented_question(const DialogueSession& s) const {
  std::string text = s.question;
  for (const auto& c : s.clarifications) {
    if (!c.selection || c.question.is_terminal(c.selection->k)) continue;
    std::string label = resources_.graph->contains(c.question.node_id)
                            ? resources_.graph->node(c.question.node_id).label
                            : std::string();
    text += "\n" + label + " " + c.selection->option_text;
  }
  return text;
}

std::vector<std::string> SessionEngine::missing_nodes(const std::string& text,
                                                      const std::vector<std::string>& oracle) const {
  if (!resources_.predictor || oracle.empty()) return oracle;
  auto known = match_known_nodes(*resources_.graph, text, options_.detector_options.match_threshold);
  auto predicted = predict_missing(*resources_.graph, known.id_set(), *resources_.predictor, oracle.size());
  return predicted.empty() ? oracle : predicted;
}

Completeness SessionEngine::check_completeness(const DialogueSession& s) const {
  auto text = augmented_question(s);
  auto known = match_known_nodes(*resources_.graph, text, options_.detector_options.match_threshold);
  auto match = resources_.templates->nearest(known, options_.detector_options.min_overlap);
  Completeness c;
  if (!match) return c;
  c.template_id = match->question->question_id;
  std::vector<std::string> oracle;
  for (const auto& id : match->question->key_nodes) {
    if (!known.contains(id)) oracle.push_back(id);
  }
  c.complete = oracle.empty();
  c.missing = missing_nodes(text, oracle);
  return c;
}

void SessionEngine::advance(Entry& e, const Completeness& c) {
  const auto& s = e.session;
  if (c.complete) {
    commit(e, "completed", {{"best_effort", false}});
    return;
  }
  if (c.missing.empty() || s.round >= options_.max_rounds) {
    commit(e, "completed", {{"best_effort", true}});
    return;
  }
  auto questions = generate_clarifications(s.question, c.missing, *resources_.graph, resources_.model.get(), 0,
                                           s.clarifications.size(), options_.clarifier_options);
  json items = json::array();
  for (const auto& q : questions) items.push_back(to_json(q));
  commit(e, "clarifications_issued", {{"round", s.round + 1}, {"clarifications", items}});
}

DialogueSession SessionEngine::open_session(const std::string& question, const std::string& location) {
  if (trim(question).empty()) fail(ErrorCode::invalid_argument, "question is empty");
  if (!resources_.regions.contains(location)) {
    fail(ErrorCode::unsupported_region, "location '" + location + "' is not a supported region");
  }
  auto e = std::make_shared<Entry>();
  std::lock_guard entry_lock(e->mutex);
  e->session.session_id = next_session_id();
  commit(*e, "opened", {{"question", question}, {"location", location}});
  {
    std::unique_lock lock(sessions_mutex_);
    sessions_.emplace(e->session.session_id, e);
  }

  try {
    auto verdict = detect_deficiency(question, *resources_.graph, *resources_.templates, options_.detector,
                                     resources_.model.get(), options_.detector_options);
    Completeness c;
    c.complete = !verdict.deficient;
    c.template_id = verdict.template_id;
    if (verdict.deficient) c.missing = missing_nodes(question, verdict.missing_nodes);
    advance(*e, c);
  } catch (const Error& error) {
    fail_session(*e, error);
  }
  return e->session;
}

DialogueSession SessionEngine::submit_selections(const std::string& session_id,
                                                 std::span<const SelectionInput> selections) {
  auto e = entry(session_id);
  std::lock_guard lock(e->mutex);
  const auto& s = e->session;
  if (s.state != SessionState::clarifying) {
    fail(ErrorCode::state_error, "session is " + std::string(to_string(s.state)) + ", not clarifying");
  }
  json items = json::array();
  for (const auto& input : selections) {
    if (input.clarification >= s.clarifications.size()) {
      fail(ErrorCode::invalid_argument, "no clarification " + std::to_string(input.clarification));
    }
    const auto& q = s.clarifications[input.clarification].question;
    if (input.option >= q.options.size()) {
      fail(ErrorCode::invalid_argument, "option " + std::to_string(input.option) + " is out of range for clarification " +
                                            std::to_string(input.clarification));
    }
    items.push_back(to_json(Selection{q.question_index, input.clarification, input.option, q.options[input.option]}));
  }
  commit(*e, "selections_recorded", {{"selections", items}});

  try {
    advance(*e, check_completeness(e->session));
  } catch (const Error& error) {
    fail_session(*e, error);
  }
  return e->session;
}

DialogueSession SessionEngine::compose_answer(const std::string& session_id) {
  auto e = entry(session_id);
  std::lock_guard lock(e->mutex);
  const auto& s = e->session;
  if (s.state != SessionState::complete) {
    fail(ErrorCode::state_error, "session is " + std::string(to_string(s.state)) + ", not complete");
  }
  if (!resources_.model || !resources_.provisions || !resources_.embedder) {
    fail(ErrorCode::config_error, "answering needs a language model, an embedder and a provision store");
  }

  std::vector<AnsweredClarification> answered;
  json clarifications = json::array();
  for (const auto& c : s.clarifications) {
    if (!c.selection) continue;
    answered.push_back({&c.question, c.selection->k});
    clarifications.push_back({{"question", c.question.text}, {"selection", c.selection->option_text}});
  }

  try {
    auto query = compose_query(s.question, answered);
    auto retrieved = resources_.provisions->top_k(embed(query, *resources_.embedder), options_.retrieval_m,
                                                  s.location);
    json provisions = json::array();
    json retrieved_json = json::array();
    for (const auto& r : retrieved) {
      const auto& p = resources_.provisions->find(r.id);
      provisions.push_back({{"id", p.id}, {"title", p.title}, {"text", p.text}});
      retrieved_json.push_back({{"id", r.id}, {"score", r.score}});
    }
    auto reply = resources_.model->complete(prompts::answer(s.question, s.location, clarifications, provisions));
    auto answer = parse_answer(reply, retrieved);
    commit(*e, "answered", {{"query", query}, {"retrieved", retrieved_json}, {"answer", to_json(answer)}});
  } catch (const Error& error) {
    if (error.retryable()) throw;
    fail_session(*e, error);
    throw;
  }
  return e->session;
}

DialogueSession SessionEngine::get(const std::string& session_id) const {
  auto e = entry(session_id);
  std::lock_guard lock(e->mutex);
  return e->session;
}

std::vector<std::string> SessionEngine::session_ids() const {
  std::shared_lock lock(sessions_mutex_);
  std::vector<std::string> out;
  for (const auto& [id, e] : sessions_) out.push_back(id);
  return out;
}

void SessionEngine::restore(std::span<const SessionEvent> events) {
  std::map<std::string, std::vector<SessionEvent>> grouped;
  for (const auto& e : events) grouped[e.session_id].push_back(e);
  std::unique_lock lock(sessions_mutex_);
  for (auto& [id, list] : grouped) {
    auto e = std::make_shared<Entry>();
    e->session = replay(list);
    sessions_[id] = e;
  }
  counter_ += grouped.size();
}

}  // namespace legalqa
