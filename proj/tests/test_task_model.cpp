#include <random>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "hrc/task_model.hpp"
#include "oracles.hpp"

using namespace hrc;

namespace {

std::vector<AgentAction> canonical_actions(const TaskGraph& g) {
  std::vector<AgentAction> out;
  for (const auto& t : g.subtasks()) {
    for (ActionKind k : kActionKinds) {
      if (needs_color(k)) {
        for (Color c : kColors) out.push_back(make_action(k, t.id, c));
      } else if (k == ActionKind::H4 || k == ActionKind::R1 || k == ActionKind::R4) {
        out.push_back(make_action(k, t.id, t.required_color));
      } else {
        out.push_back(make_action(k, t.id));
      }
    }
  }
  return out;
}

ColorMap<int> block_totals(const TaskGraph& g) {
  ColorMap<int> total{};
  for (Color c : kColors) {
    total[index(c)] = g.inventory(Agent::Human, c) + g.inventory(Agent::Robot, c) + g.shared_blocks(c);
  }
  return total;
}

}  // namespace

TEST_CASE("study graph has four chains of five between two dummy nodes") {
  TaskGraph g = build_study_graph(fixture::config());
  CHECK(g.size() == 20);
  CHECK(g.finish_id() == 21);
  for (SubtaskId head : {1, 6, 11, 16}) {
    CHECK(g.subtask(head).predecessors.empty());
    CHECK(g.node_predecessors(head) == std::vector<SubtaskId>{TaskGraph::kStart});
  }
  CHECK(g.subtask(7).predecessors == std::vector<SubtaskId>{6});
  CHECK(g.subtask(20).predecessors == std::vector<SubtaskId>{19});
  CHECK(g.node_predecessors(21) == std::vector<SubtaskId>{5, 10, 15, 20});
  for (const auto& t : g.subtasks()) {
    CHECK(t.state == SubtaskState::Initial);
    CHECK(t.t_h > 0.0);
    CHECK(t.t_r > 0.0);
  }
  // Pink is near the robot and far from the human.
  CHECK(g.subtask(2).t_h == 20.0);
  CHECK(g.subtask(2).t_r == 35.0);
  CHECK(g.subtask(3).t_h == 12.0);
  CHECK(g.subtask(3).t_r == 60.0);
}

TEST_CASE("topological order covers every node once") {
  TaskGraph g = build_study_graph(fixture::config());
  auto order = g.topological_order();
  REQUIRE(order.size() == 22);
  std::vector<int> pos(22);
  for (std::size_t i = 0; i < order.size(); ++i) pos[static_cast<std::size_t>(order[i])] = static_cast<int>(i);
  for (SubtaskId v = 0; v < 22; ++v) {
    for (SubtaskId p : g.node_predecessors(v)) CHECK(pos[static_cast<std::size_t>(p)] < pos[static_cast<std::size_t>(v)]);
  }
}

TEST_CASE("one workspace with one spot gives three nodes") {
  ScenarioConfig c = study_defaults();
  c.workspaces = 1;
  c.spots_per_workspace = 1;
  c.pattern[1] = Color::Blue;
  TaskGraph g = build_study_graph(c);
  CHECK(g.topological_order() == std::vector<SubtaskId>{0, 1, 2});
}

TEST_CASE("missing pattern entry is a configuration error") {
  ScenarioConfig c = fixture::config();
  c.pattern.erase(13);
  CHECK_THROWS_AS(build_study_graph(c), ConfigError);
  c = fixture::config();
  c.inventory[0][1] = -1;
  CHECK_THROWS_AS(build_study_graph(c), ConfigError);
}

TEST_CASE("transition table matches the hand-written edge list") {
  int mismatches = 0;
  for (SubtaskState s : kStates) {
    for (ActionKind k : kActionKinds) {
      for (bool correct : {true, false}) {
        if (transition(s, k, correct) != oracle::edge_target(s, k, correct)) ++mismatches;
      }
    }
  }
  CHECK(mismatches == 0);
}

TEST_CASE("correct placement on an open spot") {
  TaskGraph g = build_study_graph(fixture::config());
  g = fixture::place(g, 1);
  g = fixture::place(g, 2);
  const Color c = g.subtask(3).required_color;
  TaskGraph next = apply_action(g, make_action(ActionKind::H1, 3, c));
  CHECK(next.state(3) == SubtaskState::PlacedCorrectly);
  CHECK(next.inventory(Agent::Human, c) == g.inventory(Agent::Human, c) - 1);
  for (ActionKind k : kActionKinds) {
    std::optional<Color> col;
    if (needs_color(k) || k == ActionKind::H4 || k == ActionKind::R1 || k == ActionKind::R4) col = c;
    CHECK_THROWS_AS(apply_action(next, make_action(k, 3, col)), RejectedAction);
  }
}

TEST_CASE("rejections leave the graph untouched and name a reason") {
  TaskGraph g = build_study_graph(fixture::config());
  const auto before = g.digest();
  try {
    (void)apply_action(g, make_action(ActionKind::H1, 2, g.subtask(2).required_color));
    FAIL("expected rejection");
  } catch (const RejectedAction& e) {
    CHECK(e.reason() == RejectReason::PrecedenceViolation);
  }
  CHECK(g.digest() == before);
  CHECK(check_action(g, make_action(ActionKind::H4, 1, g.subtask(1).required_color)) ==
        RejectReason::IllegalTransition);
  CHECK(check_action(g, make_action(ActionKind::H1, 1)) == RejectReason::MissingColor);
  CHECK(check_action(g, make_action(ActionKind::R1, 1, fixture::wrong_color(g.subtask(1).required_color))) ==
        RejectReason::WrongColor);
  CHECK(check_action(g, make_action(ActionKind::H1, 99, Color::Green)) == RejectReason::UnknownSubtask);
  AgentAction mismatch = make_action(ActionKind::R1, 1, g.subtask(1).required_color);
  mismatch.agent = Agent::Human;
  CHECK(check_action(g, mismatch) == RejectReason::AgentMismatch);
}

TEST_CASE("fresh graph offers the human only chain heads") {
  TaskGraph g = build_study_graph(fixture::config());
  std::set<SubtaskId> ids;
  for (const auto& a : feasible_actions(g, Agent::Human)) {
    CHECK((a.kind == ActionKind::H1 || a.kind == ActionKind::H2));
    ids.insert(a.subtask);
  }
  CHECK(ids == std::set<SubtaskId>{1, 6, 11, 16});
  for (const auto& a : feasible_actions(g, Agent::Human)) {
    CHECK(a.kind != ActionKind::H4);
    CHECK(a.kind != ActionKind::H6);
  }
}

TEST_CASE("robot-ready set on a fresh graph and on a mid-task snapshot") {
  TaskGraph g = build_study_graph(fixture::config());
  CHECK(immediately_feasible_robot_set(g) == std::vector<SubtaskId>{1, 6, 11, 16});

  // 6 and 16 done, 1 and 17 misplaced.
  g = fixture::place(g, 6);
  g = fixture::place(g, 16);
  g = fixture::misplace(g, 1);
  g = fixture::misplace(g, 17);
  CHECK(immediately_feasible_robot_set(g) == std::vector<SubtaskId>{1, 7, 11, 17});

  TaskGraph done = build_study_graph(fixture::config());
  for (SubtaskId id = 1; id <= 20; ++id) done = fixture::place(done, id);
  CHECK(done.all_placed());
  CHECK(immediately_feasible_robot_set(done).empty());
}

TEST_CASE("random walks: legality agrees with apply_action, blocks are conserved") {
  std::mt19937_64 rng(7);
  for (int walk = 0; walk < 40; ++walk) {
    TaskGraph g = build_study_graph(fixture::config());
    const auto totals = block_totals(g);
    for (int step = 0; step < 120 && !g.all_placed(); ++step) {
      std::vector<AgentAction> legal;
      for (Agent a : {Agent::Human, Agent::Robot}) {
        auto f = feasible_actions(g, a);
        legal.insert(legal.end(), f.begin(), f.end());
      }
      for (const auto& a : canonical_actions(g)) {
        const bool listed = std::find(legal.begin(), legal.end(), a) != legal.end();
        bool applies = true;
        try {
          (void)apply_action(g, a);
        } catch (const RejectedAction&) {
          applies = false;
        }
        CHECK(listed == applies);
      }
      for (SubtaskId id : immediately_feasible_robot_set(g)) CHECK(g.predecessors_done(id));
      if (legal.empty()) break;
      const int placed = g.placed_count();
      const auto& pick = legal[rng() % legal.size()];
      TaskGraph next = apply_action(g, pick);
      int changed = 0;
      for (SubtaskId id = 1; id <= 20; ++id) changed += next.state(id) != g.state(id);
      CHECK(changed == 1);
      CHECK(next.placed_count() >= placed);
      CHECK(block_totals(next) == totals);
      g = next;
    }
  }
}

TEST_CASE("enum names round-trip") {
  for (ActionKind k : kActionKinds) CHECK(parse_kind(to_string(k)) == k);
  for (SubtaskState s : kStates) CHECK(parse_state(to_string(s)) == s);
  for (Color c : kColors) CHECK(parse_color(to_string(c)) == c);
  CHECK(parse_agent("robot") == Agent::Robot);
  CHECK(parse_distance("far") == Distance::Far);
  CHECK_FALSE(parse_color("purple"));
}
