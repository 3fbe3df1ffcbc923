#pragma once

// Min-max human/robot task allocation, solved exactly by depth-first
// branch-and-bound over the binary assignment vector.

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "hrc/task_model.hpp"

namespace hrc {

/// Anytime cutoff shared by both solvers. A zero node limit means unbounded.
struct SolverLimits {
  double time_limit = 2.0;
  std::int64_t node_limit = 0;
};

struct CostParams {
  double c_f = 25.0;  // penalty for handing work to a human who prefers to lead
  double c_e = 30.0;  // penalty for keeping work away from an error-prone human
  double c_v = 5.0;   // reallocation churn penalty
  double time_limit = 2.0;
  std::int64_t node_limit = 0;

  void validate() const;
  SolverLimits limits() const { return {time_limit, node_limit}; }
};

struct PointEstimates {
  double p_f = 0.7;
  double p_e = 0.1;
};

using Assignment = std::map<SubtaskId, Agent>;

struct Allocation {
  Assignment q;
  double objective = 0.0;
  double human_load = 0.0;
  double robot_load = 0.0;
  bool incumbent_optimal = true;
  std::int64_t nodes = 0;
};

/// Cost of handing `subtask` to `agent`; the churn term applies when `prev`
/// gave the subtask to the other agent.
double assignment_cost(const Subtask& subtask, Agent agent, const PointEstimates& estimates,
                       const CostParams& params, const Allocation* prev = nullptr);

struct AllocationItem {
  SubtaskId id = 0;
  double human_cost = 0.0;
  double robot_cost = 0.0;
  std::optional<Agent> fixed;
};

/// The allocation MILP in explicit form. Items are kept sorted by id; the
/// robot_ready set (U) must name non-fixed items.
struct AllocationProblem {
  std::vector<AllocationItem> items;
  std::vector<SubtaskId> robot_ready;
  bool require_robot_task = true;
  std::vector<Assignment> excluded;
  Assignment seed;
};

/// z = max(human load, robot load) for a complete assignment.
double allocation_objective(const AllocationProblem& problem, const Assignment& q);

/// True when q covers every item, honours fixed items, the U constraint and
/// every no-good cut.
bool allocation_feasible(const AllocationProblem& problem, const Assignment& q);

/// Exact solve (or best incumbent when a limit binds). Among optimal vectors
/// the lexicographically smallest is returned, robot < human, ordered by id.
Allocation solve_allocation_problem(const AllocationProblem& problem, const SolverLimits& limits);

/// Builds the problem for every open subtask. Subtasks already assigned in
/// the graph, and any entries of `pinned`, become fixed items.
AllocationProblem make_allocation_problem(const TaskGraph& graph, const PointEstimates& estimates,
                                          const CostParams& params, const Allocation* prev,
                                          const Assignment& pinned = {});

Allocation solve_allocation(const TaskGraph& graph, const PointEstimates& estimates,
                            const CostParams& params, const Allocation* prev = nullptr);

/// Projects a previous allocation onto the subtasks that are still open and
/// not already committed to the other agent.
Assignment warm_start_from(const Allocation& prev, const TaskGraph& graph);

}  // namespace hrc
