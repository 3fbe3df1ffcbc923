#include <sstream>

#include "doctest.h"
#include "hrc/replay.hpp"
#include "hrc/session.hpp"
#include "hrc/simulator.hpp"

using namespace hrc;

namespace {

struct FakeClock {
  double t = 100.0;
  LiveSession::Clock fn() {
    return [this] { return t; };
  }
};

SessionConfig config() { return {study_scenario('A'), deterministic_params(), 7, 0.2}; }

Json human(const AgentAction& a) { return make_message("human_action", {{"action", to_json(a)}}); }

std::vector<std::string> types(const std::vector<Json>& msgs) {
  std::vector<std::string> t;
  for (const auto& m : msgs) t.push_back(m.at("type"));
  return t;
}

const Json* last_of(const std::vector<Json>& msgs, const std::string& type) {
  const Json* found = nullptr;
  for (const auto& m : msgs) {
    if (m.at("type") == type) found = &m;
  }
  return found;
}

bool answered(const std::vector<Json>& msgs) {
  return last_of(msgs, "snapshot") || last_of(msgs, "action_rejected");
}

// Runs the wall clock forward in small steps, collecting every message.
std::vector<Json> run_for(LiveSession& s, FakeClock& clock, double wall, double step = 0.05) {
  std::vector<Json> all;
  for (double t = 0; t < wall; t += step) {
    clock.t += step;
    for (auto& m : s.tick()) all.push_back(std::move(m));
  }
  return all;
}

AgentAction correct(const LiveSession& s, ActionKind kind, SubtaskId id) {
  return make_action(kind, id, s.episode().state().graph.subtask(id).required_color);
}

}  // namespace

TEST_CASE("join hands out a token and the full state; only chain heads are open") {
  FakeClock clock;
  LiveSession s(config(), clock.fn());
  auto msgs = s.handle(make_message("join", Json::object()));
  REQUIRE(!msgs.empty());
  CHECK(msgs[0]["type"] == "join");
  CHECK(msgs[0]["body"]["ok"] == true);
  CHECK(msgs[0]["body"]["token"].get<std::string>().size() == 16);
  const Json* legal = last_of(msgs, "legal_actions");
  REQUIRE(legal);
  for (const auto& a : legal->at("body").at("actions")) {
    if (a.at("kind") == "H1") CHECK((a.at("subtask").get<int>() - 1) % 5 == 0);
  }
  CHECK(last_of(msgs, "snapshot")->at("body").at("graph").at("subtasks").size() == 20);
  CHECK(last_of(msgs, "light_state")->at("body").at("state") == "green");
  // A second client is turned away.
  auto again = s.join(std::nullopt);
  CHECK(again[0]["body"]["ok"] == false);
}

TEST_CASE("sim time follows the wall clock and stops while disconnected") {
  FakeClock clock;
  LiveSession s(config(), clock.fn());
  CHECK(s.sim_now() == 0.0);
  s.join(std::nullopt);
  clock.t += 1.0;
  CHECK(s.sim_now() == doctest::Approx(5.0));
  s.disconnect();
  clock.t += 30.0;
  CHECK(s.sim_now() == doctest::Approx(5.0));
  CHECK(s.tick().empty());
  CHECK(s.join(std::string("wrong"))[0]["body"]["ok"] == false);
  auto back = s.join(s.token());
  CHECK(back[0]["body"]["resumed"] == true);
  clock.t += 1.0;
  CHECK(s.sim_now() == doctest::Approx(10.0));
}

TEST_CASE("precedence-blocked placement is refused with its reason") {
  FakeClock clock;
  LiveSession s(config(), clock.fn());
  s.join(std::nullopt);
  auto msgs = s.handle(human(correct(s, ActionKind::H1, 2)));
  const Json* rej = last_of(msgs, "action_rejected");
  REQUIRE(rej);
  CHECK(rej->at("body").at("reason") == "precedence");
  msgs = s.handle(make_message("human_action", {{"action", {{"kind", "H1"}}}}));
  CHECK(last_of(msgs, "action_rejected"));
  msgs = s.handle(make_message("human_action", {{"action", {{"kind", "H1"}, {"subtask", 99}, {"color", "pink"}}}}));
  CHECK(last_of(msgs, "action_rejected")->at("body").at("reason") == "unknown_subtask");
  msgs = s.handle(make_message("dance", {}));
  CHECK(last_of(msgs, "action_rejected"));
}

TEST_CASE("a correct assignment to the robot is eventually placed by it") {
  FakeClock clock;
  LiveSession s(config(), clock.fn());
  s.join(std::nullopt);
  auto msgs = s.handle(human(correct(s, ActionKind::H2, 1)));
  REQUIRE(last_of(msgs, "snapshot"));
  auto later = run_for(s, clock, 60.0);
  bool placed = false;
  for (const auto& m : later) {
    placed = placed || (m["type"] == "robot_action" && m["body"]["phase"] == "complete" &&
                        m["body"]["action"]["kind"] == "R4" && m["body"]["action"]["subtask"] == 1);
  }
  CHECK(placed);
  CHECK(s.episode().state().graph.state(1) == SubtaskState::PlacedCorrectly);
}

TEST_CASE("rejecting a robot assignment frees the spot and lowers the following belief") {
  FakeClock clock;
  LiveSession s(config(), clock.fn());
  s.join(std::nullopt, true);
  // Let the robot plan and hand out work.
  std::optional<SubtaskId> assigned;
  std::vector<Json> seen;
  for (int i = 0; i < 2000 && !assigned; ++i) {
    clock.t += 0.05;
    for (auto& m : s.tick()) {
      if (m["type"] == "assignment_notice") assigned = m["body"]["subtask"].get<SubtaskId>();
      seen.push_back(m);
    }
  }
  REQUIRE(assigned);
  const double before = expected_value(s.episode().state().belief_f);
  auto msgs = s.handle(human(make_action(ActionKind::H6, *assigned)));
  REQUIRE(last_of(msgs, "snapshot"));
  // H6 is a tablet action: it takes effect after the short GUI time.
  auto after = run_for(s, clock, 1.0);
  // The robot may hand the spot out again at once; the log shows the return to Initial.
  bool freed = false;
  for (const auto& rec : s.log().records()) {
    freed = freed || (rec.kind == RecordKind::StateChange && rec.payload.at("subtask") == *assigned &&
                      rec.payload.at("by") == "H6" && rec.payload.at("to") == "Initial");
  }
  CHECK(freed);
  CHECK(expected_value(s.episode().state().belief_f) < before);
  CHECK(last_of(after, "belief_debug"));
}

TEST_CASE("placements are refused while the light is red, and legal_actions agrees") {
  FakeClock clock;
  LiveSession s(config(), clock.fn());
  s.join(std::nullopt);
  bool tried = false;
  for (int i = 0; i < 4000 && !tried; ++i) {
    clock.t += 0.05;
    auto msgs = s.tick();
    if (!s.episode().light_red()) continue;
    for (const auto& a : s.episode().human_legal()) {
      CHECK(a.kind != ActionKind::H1);
      CHECK(a.kind != ActionKind::H4);
    }
    for (const auto& a : feasible_actions(s.episode().state().graph, Agent::Human)) {
      if (a.kind != ActionKind::H1 || a.subtask == s.episode().robot_busy()->action.subtask) continue;
      if (a.color != s.episode().state().graph.subtask(a.subtask).required_color) continue;
      auto reply = s.handle(human(a));
      REQUIRE(last_of(reply, "action_rejected"));
      CHECK(last_of(reply, "action_rejected")->at("body").at("reason") == "light_red");
      tried = true;
      break;
    }
  }
  CHECK(tried);
}

namespace {

// Plays the first offered legal action each time the human is free.
std::vector<Json> play_greedy(LiveSession& s, FakeClock& clock, int& offered_rejected, int& unanswered) {
  std::vector<Json> all;
  for (int i = 0; i < 40000 && !s.ended(); ++i) {
    clock.t += 0.05;
    auto msgs = s.tick();
    if (!s.episode().human_busy() && !s.ended()) {
      const Json legal = s.legal_actions();
      for (const auto& a : legal["body"]["actions"]) {
        const AgentAction act = action_from_json(a);
        const auto& g = s.episode().state().graph;
        if (act.color && *act.color != g.subtask(act.subtask).required_color) continue;
        if (act.kind == ActionKind::H5 || act.kind == ActionKind::H6) continue;
        auto reply = s.handle(human(act));
        unanswered += !answered(reply);
        offered_rejected += last_of(reply, "action_rejected") != nullptr;
        for (auto& m : reply) msgs.push_back(std::move(m));
        break;
      }
    }
    for (auto& m : msgs) all.push_back(std::move(m));
  }
  return all;
}

}  // namespace

TEST_CASE("a full session: every answer arrives, offered actions are never refused, the log replays") {
  FakeClock clock;
  std::ostringstream sink;
  LiveSession s(config(), clock.fn(), &sink);
  s.join(std::nullopt);
  int refused = 0, unanswered = 0;
  auto all = play_greedy(s, clock, refused, unanswered);
  CHECK(s.ended());
  CHECK(s.episode().state().graph.all_placed());
  CHECK(refused == 0);
  CHECK(unanswered == 0);
  const Json* done = last_of(all, "task_complete");
  REQUIRE(done);
  CHECK(done->at("body").at("run").at("status") == "complete");
  std::istringstream in(sink.str());
  const ReplayReport r = replay_stream(in);
  CHECK(r.mode == "session");
  CHECK(r.exact);
  CHECK(r.complete);
  // Every accepted client action shows up in the log.
  int starts = 0;
  for (const auto& rec : s.log().records()) {
    starts += rec.kind == RecordKind::HumanAction && rec.payload.at("phase") == "start" && !rec.payload.contains("rejected");
  }
  CHECK(starts > 0);
}

TEST_CASE("same client trace, same session log") {
  std::string logs[2];
  for (auto& text : logs) {
    FakeClock clock;
    std::ostringstream sink;
    LiveSession s(config(), clock.fn(), &sink);
    s.join(std::nullopt);
    int a = 0, b = 0;
    play_greedy(s, clock, a, b);
    text = sink.str();
  }
  CHECK(logs[0] == logs[1]);
}

TEST_CASE("a session closed early, and one with rejected actions and a pause, replay exactly") {
  FakeClock clock;
  std::ostringstream sink;
  LiveSession s(config(), clock.fn(), &sink);
  s.join(std::nullopt);
  s.handle(human(correct(s, ActionKind::H1, 2)));
  s.handle(human(correct(s, ActionKind::H1, 1)));
  s.handle(human(correct(s, ActionKind::H1, 6)));  // human busy
  run_for(s, clock, 3.0);
  s.disconnect();
  clock.t += 20;
  s.join(s.token());
  run_for(s, clock, 2.0);
  s.handle(human(correct(s, ActionKind::H2, 11)));
  run_for(s, clock, 4.0);
  s.close();
  CHECK(s.ended());
  CHECK(s.log().records().back().payload.at("status") == "closed");
  std::istringstream in(sink.str());
  const ReplayReport r = replay_stream(in);
  CHECK(to_string(r) == "exact");
  // Shift one human start in time: the rebuilt run no longer matches there.
  std::vector<EventRecord> recs = s.log().records();
  for (auto& rec : recs) {
    if (rec.kind == RecordKind::HumanAction && !rec.payload.contains("rejected") && rec.sim_time > 0) {
      rec.sim_time += 0.5;
      const ReplayReport bad = replay_records(recs);
      REQUIRE(bad.divergence_seq);
      CHECK(*bad.divergence_seq <= rec.seq);
      break;
    }
  }
}
