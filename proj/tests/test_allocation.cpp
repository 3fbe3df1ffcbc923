#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "hrc/allocation.hpp"
#include "oracles.hpp"

using namespace hrc;

namespace {

Subtask task(double th, double tr) {
  Subtask t;
  t.id = 1;
  t.t_h = th;
  t.t_r = tr;
  return t;
}

SolverLimits unbounded() { return {0.0, 0}; }

}  // namespace

TEST_CASE("cost formula examples") {
  CostParams c;
  c.c_f = 30;
  c.c_v = 5;
  CHECK(assignment_cost(task(10, 35), Agent::Human, {1.0, 0.0}, c) == doctest::Approx(10));
  Allocation prev;
  prev.q[1] = Agent::Robot;
  CHECK(assignment_cost(task(10, 35), Agent::Human, {0.0, 0.0}, c, &prev) == doctest::Approx(35));
  c.c_e = 40;
  CHECK(assignment_cost(task(10, 35), Agent::Robot, {0.0, 0.5}, c) == doctest::Approx(55));
  CHECK(assignment_cost(task(10, 35), Agent::Robot, {0.0, 0.5}, c, &prev) == doctest::Approx(55));
}

TEST_CASE("two-task instance") {
  AllocationProblem p;
  p.items = {{1, 5, 6, {}}, {2, 5, 6, {}}};
  p.robot_ready = {1, 2};
  Allocation a = solve_allocation_problem(p, unbounded());
  CHECK(a.objective == doctest::Approx(6));
  CHECK(a.incumbent_optimal);
  // Lexicographically smallest optimum puts the lower id on the robot.
  CHECK(a.q.at(1) == Agent::Robot);
  CHECK(a.q.at(2) == Agent::Human);
}

TEST_CASE("single ready task is forced to the robot") {
  AllocationProblem p;
  p.items = {{1, 1, 100, {}}};
  p.robot_ready = {1};
  CHECK(solve_allocation_problem(p, unbounded()).q.at(1) == Agent::Robot);
}

TEST_CASE("error cases") {
  AllocationProblem p;
  CHECK_THROWS_AS(solve_allocation_problem(p, unbounded()), EmptyTaskSet);
  p.items = {{1, 1, 1, {}}};
  CHECK_THROWS_AS(solve_allocation_problem(p, unbounded()), InfeasibleAllocation);
  p.require_robot_task = false;
  CHECK_NOTHROW(solve_allocation_problem(p, unbounded()));
}

TEST_CASE("matches exhaustive enumeration including ties, fixed items and cuts") {
  std::mt19937_64 rng(11);
  CostParams c;
  for (int trial = 0; trial < 300; ++trial) {
    const double pf = (trial % 3) * 0.5;
    const double pe = ((trial / 3) % 3) * 0.5;
    AllocationProblem p = oracle::random_allocation_problem(rng, pf, pe, c, 1 + trial % 12);
    if (trial % 4 == 1 && p.items.size() > 2) p.items[1].fixed = Agent::Human;
    if (trial % 5 == 2) {
      for (auto& it : p.items) it.human_cost = std::round(it.human_cost / 10) * 10;
      for (auto& it : p.items) it.robot_cost = std::round(it.robot_cost / 10) * 10;
    }
    auto expect = oracle::brute_force_allocation(p);
    if (!expect.feasible) continue;
    if (trial % 3 == 0) p.excluded.push_back(expect.q);
    expect = oracle::brute_force_allocation(p);
    if (!expect.feasible) {
      CHECK_THROWS(solve_allocation_problem(p, unbounded()));
      continue;
    }
    Allocation a = solve_allocation_problem(p, unbounded());
    CHECK(a.objective == doctest::Approx(expect.objective).epsilon(1e-12));
    CHECK(a.q == expect.q);
    CHECK(allocation_feasible(p, a.q));
    CHECK(allocation_objective(p, a.q) == doctest::Approx(a.objective));
  }
}

TEST_CASE("scaling every cost keeps the optimum") {
  std::mt19937_64 rng(5);
  CostParams c;
  for (int trial = 0; trial < 50; ++trial) {
    AllocationProblem p = oracle::random_allocation_problem(rng, 0.5, 0.5, c, 8);
    Allocation a = solve_allocation_problem(p, unbounded());
    for (auto& it : p.items) {
      it.human_cost *= 3.5;
      it.robot_cost *= 3.5;
    }
    Allocation b = solve_allocation_problem(p, unbounded());
    CHECK(a.q == b.q);
    CHECK(b.objective == doctest::Approx(3.5 * a.objective));
  }
}

TEST_CASE("seed is confirmed and warm start shrinks the search") {
  TaskGraph g = build_study_graph(fixture::config());
  CostParams c;
  c.time_limit = 0;
  Allocation first = solve_allocation(g, {0.9, 0.1}, c);
  CHECK(first.incumbent_optimal);
  Allocation again = solve_allocation(g, {0.9, 0.1}, c, &first);
  CHECK(again.q == first.q);

  int better_or_equal = 0;
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    auto p = oracle::random_allocation_problem(rng, 0.5, 0.2, c, 10);
    Allocation cold = solve_allocation_problem(p, unbounded());
    AllocationProblem q = p;
    q.items.erase(q.items.begin() + static_cast<long>(rng() % q.items.size()));
    std::erase_if(q.robot_ready, [&](SubtaskId id) {
      return std::none_of(q.items.begin(), q.items.end(), [&](const auto& it) { return it.id == id; });
    });
    if (q.robot_ready.empty()) q.robot_ready.push_back(q.items.front().id);
    Allocation cold2 = solve_allocation_problem(q, unbounded());
    for (const auto& [id, agent] : cold.q) {
      if (std::any_of(q.items.begin(), q.items.end(), [&](const auto& it) { return it.id == id; })) q.seed[id] = agent;
    }
    Allocation warm = solve_allocation_problem(q, unbounded());
    CHECK(warm.objective == doctest::Approx(cold2.objective));
    better_or_equal += warm.nodes <= cold2.nodes;
  }
  CHECK(better_or_equal >= 90);
}

TEST_CASE("warm start drops finished and contradicting entries") {
  TaskGraph g = build_study_graph(fixture::config());
  Allocation prev;
  for (SubtaskId id = 1; id <= 20; ++id) prev.q[id] = Agent::Robot;
  g = fixture::place(g, 1);
  g = apply_action(g, make_action(ActionKind::R2, 6));
  Assignment seed = warm_start_from(prev, g);
  CHECK_FALSE(seed.contains(1));
  CHECK_FALSE(seed.contains(6));
  CHECK(seed.size() == 18);
}

TEST_CASE("huge churn penalty reproduces the previous allocation") {
  TaskGraph g = build_study_graph(fixture::config());
  CostParams c;
  c.time_limit = 0;
  Allocation prev = solve_allocation(g, {0.3, 0.4}, c);
  g = fixture::place(g, 6);
  c.c_v = 1e6;
  Allocation next = solve_allocation(g, {0.9, 0.0}, c, &prev);
  for (const auto& [id, agent] : next.q) CHECK(agent == prev.q.at(id));
}

TEST_CASE("fixed items follow the graph state") {
  TaskGraph g = build_study_graph(fixture::config());
  g = apply_action(g, make_action(ActionKind::R2, 1));
  g = apply_action(g, make_action(ActionKind::H2, 6, g.subtask(6).required_color));
  CostParams c;
  AllocationProblem p = make_allocation_problem(g, {0.0, 1.0}, c, nullptr, {{11, Agent::Human}});
  for (const auto& it : p.items) {
    if (it.id == 1) CHECK(it.fixed == Agent::Human);
    if (it.id == 6) CHECK(it.fixed == Agent::Robot);
    if (it.id == 11) CHECK(it.fixed == Agent::Human);
  }
  CHECK(p.robot_ready == std::vector<SubtaskId>{16});
  Allocation a = solve_allocation_problem(p, c.limits());
  CHECK(a.q.at(1) == Agent::Human);
  CHECK(a.q.at(6) == Agent::Robot);
  CHECK(a.q.at(16) == Agent::Robot);
}

TEST_CASE("node limit returns a flagged incumbent") {
  TaskGraph g = build_study_graph(fixture::config());
  CostParams c;
  c.time_limit = 0;
  c.node_limit = 5;
  Allocation a = solve_allocation(g, {0.5, 0.5}, c);
  CHECK_FALSE(a.incumbent_optimal);
  CHECK(a.q.size() == 20);
}
