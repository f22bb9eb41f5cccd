#include <gtest/gtest.h>

#include <thread>

#include "legalqa/error.hpp"
#include "legalqa/session.hpp"
#include "legalqa/session_engine.hpp"
#include "support.hpp"

using namespace legalqa;

namespace {

/// Reference model whose answer touchpoint can be made to misbehave.
class ScriptedModel : public LanguageModel {
 public:
  enum class Answer { ok, garbage, busy_once };
  explicit ScriptedModel(Answer mode) : mode_(mode) {}
  std::string complete(const LmRequest& request) override {
    if (request.touchpoint == Touchpoint::answer) {
      if (mode_ == Answer::garbage) return "I cannot help with that.";
      if (mode_ == Answer::busy_once && !busy_spent_.exchange(true)) fail_retryable("model busy");
    }
    return reference_.complete(request);
  }
  std::string name() const override { return "scripted"; }
  void reset() { busy_spent_ = false; }

 private:
  Answer mode_;
  ReferenceLanguageModel reference_;
  std::atomic<bool> busy_spent_{false};
};

SessionEvent ev(const std::string& id, std::uint64_t seq, const std::string& kind, json payload) {
  return {id, seq, kind, std::move(payload), "t"};
}

json one_clarification(std::size_t j) {
  ClarifyingQuestion q{0, j, "About x?", "x", {"a", "b", std::string(kTerminalOption)}};
  return to_json(q);
}

bool allowed_edge(SessionState from, SessionState to) {
  using S = SessionState;
  if (from == to) return from == S::awaiting_intake || from == S::clarifying;
  switch (from) {
    case S::awaiting_intake:
      return to == S::clarifying || to == S::complete || to == S::failed;
    case S::clarifying:
      return to == S::complete || to == S::failed;
    case S::complete:
      return to == S::answered || to == S::failed;
    default:
      return false;
  }
}

std::vector<SessionEvent> events_of(const MemorySessionLog& log, const std::string& id) {
  std::vector<SessionEvent> out;
  for (const auto& e : log.events()) {
    if (e.session_id == id) out.push_back(e);
  }
  return out;
}

std::vector<SelectionInput> answer_all(const DialogueSession& s, Rng& rng) {
  std::vector<SelectionInput> out;
  for (auto j : s.pending()) out.push_back({j, rng.index(s.clarifications[j].question.options.size())});
  return out;
}

}  // namespace

TEST(SessionEvents, HappyPathFold) {
  std::vector<SessionEvent> events{
      ev("s", 0, "opened", {{"question", "q"}, {"location", "CA"}}),
      ev("s", 1, "clarifications_issued", {{"round", 1}, {"clarifications", {one_clarification(0)}}}),
      ev("s", 2, "selections_recorded", {{"selections", {{{"i", 0}, {"j", 0}, {"k", 1}, {"option", "b"}}}}}),
      ev("s", 3, "completed", {{"best_effort", false}}),
      ev("s", 4, "answered",
         {{"query", "z"},
          {"retrieved", {{{"id", "CA-1"}, {"score", 0.5}}}},
          {"answer", {{"conclusion", "c"}, {"analysis", "a"}, {"suggestions", "s"}, {"citations", {"CA-1"}}}}}),
  };
  auto s = replay(events);
  EXPECT_EQ(s.state, SessionState::answered);
  EXPECT_EQ(s.version, 5u);
  EXPECT_EQ(s.round, 1u);
  EXPECT_EQ(s.clarifications[0].selection->option_text, "b");
  EXPECT_EQ(s.answer->cited_provisions, (std::vector<std::string>{"CA-1"}));
  for (const auto& e : events) EXPECT_EQ(session_event_from_json(to_json(e)), e);
}

TEST(SessionEvents, IllegalEventsAreRefusedWithoutChange) {
  DialogueSession s;
  EXPECT_THROW(apply(s, ev("s", 0, "completed", {{"best_effort", false}})), Error);
  apply(s, ev("s", 0, "opened", {{"question", "q"}, {"location", "CA"}}));
  auto before = s;
  auto expect_refused = [&](const SessionEvent& e, ErrorCode code) {
    try {
      apply(s, e);
      ADD_FAILURE() << e.event;
    } catch (const Error& err) {
      EXPECT_EQ(err.code(), code) << e.event << ": " << err.what();
    }
    EXPECT_EQ(s, before);
  };
  expect_refused(ev("s", 5, "completed", {{"best_effort", false}}), ErrorCode::state_error);
  expect_refused(ev("s", 1, "opened", {{"question", "q"}, {"location", "CA"}}), ErrorCode::state_error);
  expect_refused(ev("s", 1, "selections_recorded", {{"selections", json::array()}}), ErrorCode::state_error);
  expect_refused(ev("s", 1, "answered", {{"retrieved", json::array()}, {"answer", json::object()}}),
                 ErrorCode::state_error);
  expect_refused(ev("s", 1, "clarifications_issued", {{"round", 2}, {"clarifications", {one_clarification(0)}}}),
                 ErrorCode::invalid_argument);
  expect_refused(ev("s", 1, "mystery", json::object()), ErrorCode::invalid_argument);

  apply(s, ev("s", 1, "clarifications_issued",
              {{"round", 1}, {"clarifications", {one_clarification(0), one_clarification(1)}}}));
  before = s;
  expect_refused(ev("s", 2, "selections_recorded", {{"selections", {{{"i", 0}, {"j", 0}, {"k", 0}, {"option", "a"}}}}}),
                 ErrorCode::incomplete_submission);
  expect_refused(ev("s", 2, "selections_recorded", {{"selections", {{{"i", 0}, {"j", 0}, {"k", 0}, {"option", "a"}},
                                                                    {{"i", 0}, {"j", 0}, {"k", 1}, {"option", "b"}}}}}),
                 ErrorCode::invalid_argument);
  expect_refused(ev("s", 2, "selections_recorded", {{"selections", {{{"i", 0}, {"j", 0}, {"k", 9}, {"option", "a"}},
                                                                    {{"i", 0}, {"j", 1}, {"k", 0}, {"option", "a"}}}}}),
                 ErrorCode::invalid_argument);
  expect_refused(ev("s", 2, "completed", {{"best_effort", false}}), ErrorCode::state_error);
  expect_refused(ev("s", 2, "clarifications_issued", {{"round", 2}, {"clarifications", {one_clarification(2)}}}),
                 ErrorCode::state_error);

  apply(s, ev("s", 2, "failed", {{"code", "protocol_error"}, {"message", "m"}}));
  before = s;
  expect_refused(ev("s", 3, "failed", {{"code", "x"}, {"message", "m"}}), ErrorCode::state_error);
}

TEST(SessionEvents, ParseAnswerIsStrict) {
  std::vector<RetrievedProvision> retrieved{{"CA-1", 0.9}, {"CA-2", 0.8}};
  auto a = parse_answer("CONCLUSION: yes\nANALYSIS: line one\nline two\nSUGGESTIONS: act\nCITATIONS: CA-2, CA-1",
                        retrieved);
  EXPECT_EQ(a.conclusion, "yes");
  EXPECT_EQ(a.analysis, "line one\nline two");
  EXPECT_EQ(a.cited_provisions, (std::vector<std::string>{"CA-2", "CA-1"}));
  auto implicit = parse_answer("CONCLUSION: per CA-2\nANALYSIS: a\nSUGGESTIONS: s", retrieved);
  EXPECT_EQ(implicit.cited_provisions, (std::vector<std::string>{"CA-2"}));
  for (const auto* bad : {"CONCLUSION: a\nANALYSIS: b", "preamble\nCONCLUSION: a\nANALYSIS: b\nSUGGESTIONS: c",
                          "CONCLUSION: a\nANALYSIS: b\nSUGGESTIONS: c\nCITATIONS: NY-9",
                          "CONCLUSION: a\nCONCLUSION: a\nANALYSIS: b\nSUGGESTIONS: c",
                          "CONCLUSION: \nANALYSIS: b\nSUGGESTIONS: c"}) {
    try {
      parse_answer(bad, retrieved);
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::protocol_error);
    }
  }
}

TEST(SessionLog, FileLogRoundTripsAndRestores) {
  testkit::TempDir dir("slog");
  auto rig = testkit::make_engine_rig(testkit::learnable_options(5), std::make_shared<ReferenceLanguageModel>(),
                                      std::make_shared<ReferenceEmbedder>());
  FileSessionLog file(dir / "log.jsonl");
  auto masked = mask_nodes(rig.corpus.truth[0].question, rig.corpus.truth[0].graph.nodes, 0.4, 1);
  auto s = rig.engine->open_session(masked.text, "CA");
  Rng rng(1);
  while (s.state == SessionState::clarifying) s = rig.engine->submit_selections(s.session_id, answer_all(s, rng));
  s = rig.engine->compose_answer(s.session_id);
  for (const auto& e : rig.log->events()) file.append(e);
  auto events = read_session_log(dir / "log.jsonl");
  EXPECT_EQ(events, rig.log->events());
  EXPECT_EQ(replay(events), s);

  auto fresh = testkit::make_engine_rig(testkit::learnable_options(5), std::make_shared<ReferenceLanguageModel>(),
                                        std::make_shared<ReferenceEmbedder>());
  fresh.engine->restore(events);
  EXPECT_EQ(fresh.engine->get(s.session_id), s);
  auto other = fresh.engine->open_session(masked.text, "NY");
  EXPECT_NE(other.session_id, s.session_id);
}

TEST(SessionLog, RegionsRoundTrip) {
  testkit::TempDir dir("regions");
  RegionRegistry r(testkit::regions_for({"CA", "NY"}));
  save_regions(r, dir / "r.json");
  auto loaded = load_regions(dir / "r.json");
  EXPECT_EQ(loaded.regions(), r.regions());
  EXPECT_TRUE(loaded.contains("NY"));
  EXPECT_FALSE(loaded.contains("TX"));
  EXPECT_THROW(RegionRegistry({{"CA", "a"}, {"CA", "b"}}), Error);
}

TEST(SessionEngine, CompleteQuestionSkipsClarification) {
  auto rig = testkit::make_engine_rig(testkit::learnable_options(6), std::make_shared<ReferenceLanguageModel>(),
                                      std::make_shared<ReferenceEmbedder>());
  auto s = rig.engine->open_session(rig.corpus.truth[1].question.text, "TX");
  EXPECT_EQ(s.state, SessionState::complete);
  EXPECT_FALSE(s.best_effort);
  s = rig.engine->compose_answer(s.session_id);
  EXPECT_EQ(s.state, SessionState::answered);
  EXPECT_FALSE(s.answer->conclusion.empty());
  EXPECT_FALSE(s.answer->analysis.empty());
  EXPECT_FALSE(s.answer->suggestions.empty());
  for (const auto& id : s.answer->cited_provisions) {
    EXPECT_TRUE(std::any_of(s.retrieved.begin(), s.retrieved.end(), [&](const auto& r) { return r.id == id; }));
  }
  for (const auto& r : s.retrieved) EXPECT_EQ(r.id.substr(0, 2), "TX");
  EXPECT_EQ(s.retrieved.size(), kDefaultRetrievalCount);
}

TEST(SessionEngine, DeficientQuestionAsksAboutMaskedFacts) {
  auto rig = testkit::make_engine_rig(testkit::learnable_options(7), std::make_shared<ReferenceLanguageModel>(),
                                      std::make_shared<ReferenceEmbedder>());
  const auto& truth = rig.corpus.truth[2];
  auto masked = mask_nodes(truth.question, truth.graph.nodes, 0.4, 3);
  auto s = rig.engine->open_session(masked.text, "CA");
  ASSERT_EQ(s.state, SessionState::clarifying);
  std::set<std::string> asked;
  for (const auto& c : s.clarifications) asked.insert(c.question.node_id);
  EXPECT_EQ(asked, masked.masked_nodes);

  // Picking a non-terminal option supplies the fact, so one round suffices.
  std::vector<SelectionInput> picks;
  for (auto j : s.pending()) picks.push_back({j, 0});
  s = rig.engine->submit_selections(s.session_id, picks);
  EXPECT_EQ(s.state, SessionState::complete);
  EXPECT_FALSE(s.best_effort);
}

TEST(SessionEngine, TerminalAnswersExhaustRoundsIntoBestEffort) {
  EngineOptions o;
  o.max_rounds = 2;
  auto rig = testkit::make_engine_rig(testkit::learnable_options(8), std::make_shared<ReferenceLanguageModel>(),
                                      std::make_shared<ReferenceEmbedder>(), o);
  const auto& truth = rig.corpus.truth[0];
  auto masked = mask_nodes(truth.question, truth.graph.nodes, 0.4, 5);
  auto s = rig.engine->open_session(masked.text, "CA");
  while (s.state == SessionState::clarifying) {
    std::vector<SelectionInput> terminal;
    for (auto j : s.pending()) terminal.push_back({j, s.clarifications[j].question.options.size() - 1});
    s = rig.engine->submit_selections(s.session_id, terminal);
    EXPECT_LE(s.round, 2u);
  }
  EXPECT_EQ(s.state, SessionState::complete);
  EXPECT_TRUE(s.best_effort);
  EXPECT_EQ(s.round, 2u);
}

TEST(SessionEngine, ErrorsMapToCodes) {
  auto rig = testkit::make_engine_rig(testkit::learnable_options(9), std::make_shared<ReferenceLanguageModel>(),
                                      std::make_shared<ReferenceEmbedder>());
  auto code = [](auto f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::io_error;
  };
  auto& e = *rig.engine;
  EXPECT_EQ(code([&] { e.open_session(" ", "CA"); }), ErrorCode::invalid_argument);
  EXPECT_EQ(code([&] { e.open_session("q", "ZZ"); }), ErrorCode::unsupported_region);
  EXPECT_EQ(code([&] { e.get("nope"); }), ErrorCode::not_found);
  auto complete = e.open_session(rig.corpus.truth[0].question.text, "CA");
  EXPECT_EQ(code([&] { e.submit_selections(complete.session_id, {}); }), ErrorCode::state_error);
  const auto& truth = rig.corpus.truth[1];
  auto s = e.open_session(mask_nodes(truth.question, truth.graph.nodes, 0.6, 2).text, "CA");
  ASSERT_EQ(s.state, SessionState::clarifying);
  EXPECT_EQ(code([&] { e.compose_answer(s.session_id); }), ErrorCode::state_error);
  if (s.pending().size() > 1) {
    std::vector<SelectionInput> partial{{s.pending()[0], 0}};
    EXPECT_EQ(code([&] { e.submit_selections(s.session_id, partial); }), ErrorCode::incomplete_submission);
  }
  std::vector<SelectionInput> out_of_range{{99, 0}};
  EXPECT_EQ(code([&] { e.submit_selections(s.session_id, out_of_range); }), ErrorCode::invalid_argument);
  EXPECT_EQ(e.get(s.session_id), s);
}

TEST(SessionEngine, BrokenAnswerFailsSessionAndBusyModelLeavesItComplete) {
  auto garbage = testkit::make_engine_rig(testkit::learnable_options(10),
                                          std::make_shared<ScriptedModel>(ScriptedModel::Answer::garbage),
                                          std::make_shared<ReferenceEmbedder>());
  auto s = garbage.engine->open_session(garbage.corpus.truth[0].question.text, "CA");
  try {
    garbage.engine->compose_answer(s.session_id);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::protocol_error);
  }
  EXPECT_EQ(garbage.engine->get(s.session_id).state, SessionState::failed);
  EXPECT_EQ(garbage.engine->get(s.session_id).failure->code, "protocol_error");

  auto busy = testkit::make_engine_rig(testkit::learnable_options(10),
                                       std::make_shared<ScriptedModel>(ScriptedModel::Answer::busy_once),
                                       std::make_shared<ReferenceEmbedder>());
  s = busy.engine->open_session(busy.corpus.truth[0].question.text, "CA");
  try {
    busy.engine->compose_answer(s.session_id);
    FAIL();
  } catch (const Error& e) {
    EXPECT_TRUE(e.retryable());
  }
  EXPECT_EQ(busy.engine->get(s.session_id), s);
  EXPECT_EQ(busy.engine->compose_answer(s.session_id).state, SessionState::answered);
}

TEST(SessionEngine, RandomizedScriptsKeepTheStateMachineSound) {
  struct Rig {
    testkit::EngineRig rig;
    std::shared_ptr<ScriptedModel> model;
    std::size_t max_rounds;
  };
  std::vector<Rig> rigs;
  for (auto [mode, rounds] : {std::pair{ScriptedModel::Answer::ok, std::size_t{3}},
                              std::pair{ScriptedModel::Answer::ok, std::size_t{1}},
                              std::pair{ScriptedModel::Answer::garbage, std::size_t{2}},
                              std::pair{ScriptedModel::Answer::busy_once, std::size_t{3}}}) {
    auto model = std::make_shared<ScriptedModel>(mode);
    EngineOptions o;
    o.max_rounds = rounds;
    rigs.push_back({testkit::make_engine_rig(testkit::learnable_options(42, 8, 5), model,
                                             std::make_shared<ReferenceEmbedder>(), o),
                    model, rounds});
  }

  std::size_t answered = 0, failed = 0, clarified = 0;
  for (std::uint64_t script = 0; script < 1000; ++script) {
    Rng rng(script);
    auto& r = rigs[rng.index(rigs.size())];
    auto& engine = *r.rig.engine;
    r.model->reset();

    const auto& truth = r.rig.corpus.truth[rng.index(r.rig.corpus.truth.size())];
    std::string question;
    switch (rng.index(4)) {
      case 0: question = truth.question.text; break;
      case 1: question = "A question about nothing in particular."; break;
      default: question = mask_nodes(truth.question, truth.graph.nodes, rng.uniform(0.2, 1.0), rng.next()).text;
    }
    if (trim(question).empty()) question = "empty after masking";

    std::optional<std::string> id;
    auto guarded = [&](const std::function<void()>& op) {
      std::optional<DialogueSession> before;
      if (id) before = engine.get(*id);
      try {
        op();
      } catch (const Error&) {
        if (before) {
          auto after = engine.get(*id);
          bool retry_fail = after.state == SessionState::failed && before->state == SessionState::complete;
          if (!retry_fail) {
            EXPECT_EQ(after, *before) << "script " << script;
          }
        }
      }
      if (id) {
        auto s = engine.get(*id);
        EXPECT_LE(s.round, r.max_rounds) << "script " << script;
      }
    };

    for (std::size_t step = 0, n = rng.index(12); step < n; ++step) {
      auto op = rng.index(7);
      if (!id || op == 0) {
        guarded([&] {
          auto loc = rng.index(5) == 0 ? std::string("XX") : std::string(rng.index(2) ? "CA" : "NY");
          auto s = engine.open_session(rng.index(8) == 0 ? std::string(" ") : question, loc);
          if (!id) id = s.session_id;
        });
        continue;
      }
      auto s = engine.get(*id);
      switch (op) {
        case 1:
        case 2:
          guarded([&] { engine.submit_selections(*id, answer_all(s, rng)); });
          break;
        case 3: {
          auto sel = answer_all(s, rng);
          if (!sel.empty()) sel.pop_back();
          if (!sel.empty() && rng.index(2)) sel.push_back(sel.front());
          if (rng.index(3) == 0) sel.push_back({rng.index(20), rng.index(6)});
          guarded([&] { engine.submit_selections(*id, sel); });
          break;
        }
        case 4:
        case 5:
          guarded([&] { engine.compose_answer(*id); });
          break;
        default:
          guarded([&] { engine.get("missing-" + std::to_string(script)); });
      }
    }
    if (!id) continue;

    // Drive to a terminal state.
    for (int guard = 0; guard < 20; ++guard) {
      auto s = engine.get(*id);
      if (s.state == SessionState::clarifying) {
        ++clarified;
        engine.submit_selections(*id, answer_all(s, rng));
      } else if (s.state == SessionState::complete) {
        try {
          engine.compose_answer(*id);
        } catch (const Error& e) {
          if (!e.retryable()) {
            EXPECT_EQ(engine.get(*id).state, SessionState::failed);
          }
        }
      } else {
        break;
      }
    }
    auto final_state = engine.get(*id);
    EXPECT_TRUE(final_state.state == SessionState::answered || final_state.state == SessionState::failed)
        << "script " << script << " ended " << to_string(final_state.state);
    answered += final_state.state == SessionState::answered;
    failed += final_state.state == SessionState::failed;

    auto events = events_of(*r.rig.log, *id);
    EXPECT_EQ(replay(events), final_state) << "script " << script;
    DialogueSession fold;
    for (const auto& e : events) {
      auto prev = fold.state;
      bool first = fold.version == 0;
      apply(fold, e);
      if (!first) {
        EXPECT_TRUE(allowed_edge(prev, fold.state)) << to_string(prev) << " -> " << to_string(fold.state);
      }
      EXPECT_LE(fold.round, r.max_rounds);
    }
  }
  EXPECT_GT(answered, 0u);
  EXPECT_GT(failed, 0u);
  EXPECT_GT(clarified, 0u);
}

TEST(SessionEngine, ConcurrentSessionsStayIndependent) {
  auto rig = testkit::make_engine_rig(testkit::learnable_options(11, 6, 4), std::make_shared<ReferenceLanguageModel>(),
                                      std::make_shared<ReferenceEmbedder>());
  std::vector<std::thread> threads;
  std::vector<std::string> ids(8);
  for (std::size_t t = 0; t < ids.size(); ++t) {
    threads.emplace_back([&, t] {
      Rng rng(t);
      const auto& truth = rig.corpus.truth[t % rig.corpus.truth.size()];
      auto s = rig.engine->open_session(mask_nodes(truth.question, truth.graph.nodes, 0.5, t).text, "CA");
      while (s.state == SessionState::clarifying) s = rig.engine->submit_selections(s.session_id, answer_all(s, rng));
      s = rig.engine->compose_answer(s.session_id);
      ids[t] = s.session_id;
    });
  }
  for (auto& th : threads) th.join();
  std::set<std::string> unique(ids.begin(), ids.end());
  EXPECT_EQ(unique.size(), ids.size());
  for (const auto& id : ids) {
    EXPECT_EQ(rig.engine->get(id).state, SessionState::answered);
    EXPECT_EQ(replay(events_of(*rig.log, id)), rig.engine->get(id));
  }
}
