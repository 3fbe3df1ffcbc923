#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "hrc/event_log.hpp"
#include "hrc/scenario_io.hpp"
#include "hrc/simulator.hpp"

using namespace hrc;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  fs::path d = fs::temp_directory_path() / "hrc_test_io";
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("records round-trip and reject malformed input") {
  EventRecord r{7, 12.5, RecordKind::Allocation, {{"p_f", 0.7}}};
  const std::string line = to_jsonl_line(r);
  CHECK(line == R"({"kind":"allocation","payload":{"p_f":0.7},"seq":7,"sim_time":12.5})");
  EventRecord back = record_from_json(Json::parse(line));
  CHECK(to_jsonl_line(back) == line);
  for (const char* bad : {R"({"kind":"allocation","payload":{},"seq":1})",
                          R"({"kind":"nope","payload":{},"seq":1,"sim_time":0})",
                          R"({"kind":"allocation","payload":{},"seq":"1","sim_time":0})", "[1,2]"}) {
    CHECK_THROWS_AS(record_from_json(Json::parse(bad)), ConfigError);
  }
  for (std::string_view k : {"human_action", "robot_action", "belief_f", "belief_e", "allocation", "schedule",
                             "state_change", "run_meta"}) {
    REQUIRE(parse_record_kind(k));
    CHECK(to_string(*parse_record_kind(k)) == k);
  }
}

TEST_CASE("log numbers records from 1 and mirrors them to the sink") {
  std::ostringstream sink;
  EventLog log;
  log.attach(&sink);
  log.append(0, RecordKind::RunMeta, {{"phase", "start"}});
  log.append(1, RecordKind::BeliefF, {{"mean", 0.7}});
  CHECK(log.records()[0].seq == 1);
  CHECK(log.records()[1].seq == 2);
  std::ostringstream again;
  log.write_jsonl(again);
  CHECK(sink.str() == again.str());
  std::istringstream in(sink.str() + "\n   \n");
  CHECK(read_jsonl(in).size() == 2);
}

TEST_CASE("reader stops at the first bad line") {
  std::istringstream in(
      R"({"kind":"run_meta","payload":{},"seq":1,"sim_time":0})"
      "\n{not json\n"
      R"({"kind":"run_meta","payload":{},"seq":3,"sim_time":0})"
      "\n");
  std::optional<LogReadError> err;
  auto recs = read_jsonl(in, &err);
  CHECK(recs.size() == 1);
  REQUIRE(err);
  CHECK(err->line == 2);
}

TEST_CASE("actions, beliefs and schedules round-trip") {
  const AgentAction a = make_action(ActionKind::H2, 4, Color::Pink);
  CHECK(action_from_json(to_json(a)) == a);
  CHECK(action_from_json(Json{{"kind", "H4"}, {"subtask", 3}}).agent == Agent::Human);
  CHECK_THROWS_AS(action_from_json(Json{{"kind", "H9"}, {"subtask", 3}}), ConfigError);
  CHECK_THROWS_AS(action_from_json(Json{{"kind", "H1"}, {"subtask", "x"}}), ConfigError);
  Belief b = init_belief(BeliefKind::Error, EstimatorParams{});
  CHECK(belief_from_json(to_json(b)) == b);
  Schedule s;
  s.entries = {{{2, TaskKind::Base}, Agent::Robot, 0, 35}, {{3, TaskKind::Allocate}, Agent::Robot, 35, 35}};
  s.makespan = 35;
  CHECK(to_json(schedule_from_json(to_json(s))) == to_json(s));
}

TEST_CASE("scenario files: full form, study shorthand with overrides, errors") {
  const fs::path d = temp_dir();
  const ScenarioConfig a = study_scenario('A');
  write_json_file(d / "full.json", to_json(a));
  CHECK(to_json(load_scenario(d / "full.json")) == to_json(a));

  write_json_file(d / "short.json", Json{{"study_pattern", "C"}, {"name", "mine"}});
  ScenarioConfig c = load_scenario(d / "short.json");
  CHECK(c.name == "mine");
  CHECK(c.distractors == study_scenario('C').distractors);

  CHECK_THROWS_AS(load_scenario(d / "absent.json"), FileMissing);
  {
    std::ofstream(d / "broken.json") << "{\"pattern\": [";
  }
  CHECK_THROWS_AS(load_scenario(d / "broken.json"), ConfigError);
  CHECK_FALSE(std::is_base_of_v<FileMissing, ConfigError>);
  write_json_file(d / "bad.json", Json{{"study_pattern", "Q"}});
  CHECK_THROWS_AS(load_scenario(d / "bad.json"), ConfigError);
  Json neg = to_json(a);
  neg["inventory"]["robot"]["pink"] = -2;
  write_json_file(d / "neg.json", neg);
  CHECK_THROWS_AS(load_scenario(d / "neg.json"), ConfigError);
}

TEST_CASE("parameter files override only what they name") {
  const fs::path d = temp_dir();
  write_json_file(d / "p.json", Json{{"cost", {{"c_f", 40}}}, {"planner", {{"lock_window", 5}}}});
  PlannerParams p = load_params(d / "p.json", deterministic_params());
  CHECK(p.cost.c_f == 40);
  CHECK(p.cost.c_e == 30);
  CHECK(p.lock_window == 5);
  CHECK(p.deterministic());
  write_json_file(d / "q.json", Json{{"cost", {{"c_f", -1}}}});
  CHECK_THROWS_AS(load_params(d / "q.json", PlannerParams{}), ConfigError);
}

TEST_CASE("graph snapshot lists every spot and both stocks") {
  TaskGraph g = build_study_graph(fixture::config());
  g = fixture::misplace(g, 1);
  Json j = graph_snapshot(g);
  CHECK(j["subtasks"].size() == 20);
  CHECK(j["subtasks"][0]["state"] == "Misplaced");
  CHECK(!j["subtasks"][0]["block"].is_null());
  CHECK(j["inventory"]["robot"].size() == 4);
  CHECK(j["digest"] == digest_hex(g.digest()));
}
