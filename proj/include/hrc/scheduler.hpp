#pragma once

// Extended task set (base subtasks plus allocation-communication and
// error-fix subtasks) and the makespan-minimising two-agent schedule.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hrc/allocation.hpp"
#include "hrc/task_model.hpp"

namespace hrc {

// Ordered so that within one subtask the fix comes before the assignment
// message, which comes before the placement.
enum class TaskKind : std::uint8_t { ErrorFix, Allocate, Base };

struct ExtendedId {
  SubtaskId subtask = 0;
  TaskKind kind = TaskKind::Base;

  auto operator<=>(const ExtendedId&) const = default;
};

/// "t7", "t7a" (allocation message) or "t7e" (error fix).
std::string to_string(ExtendedId id);
std::optional<ExtendedId> parse_extended_id(std::string_view text);

struct ExtendedTask {
  ExtendedId id;
  Agent agent = Agent::Robot;
  double duration = 0.0;
  std::vector<ExtendedId> predecessors;
  /// Already running on its agent: pinned first, starting at 0.
  bool in_progress = false;
};

struct ScheduleEntry {
  ExtendedId id;
  Agent agent = Agent::Robot;
  double start = 0.0;
  double finish = 0.0;
};

struct Schedule {
  std::vector<ScheduleEntry> entries;
  double makespan = 0.0;
  bool incumbent_optimal = true;
  std::int64_t nodes = 0;

  const ScheduleEntry* find(ExtendedId id) const;
};

/// The human's in-flight placement, with the time it still needs.
struct HumanClaim {
  SubtaskId subtask = 0;
  double remaining = 0.0;
};

/// The robot's own in-flight action (a placement or a fix).
struct RobotClaim {
  ExtendedId node;
  double remaining = 0.0;
};

/// Builds tau_new for every open subtask. Human-allocated subtasks that were
/// not yet communicated get a zero-duration robot message node; misplaced
/// subtasks get a robot fix node (near-table time) ahead of everything else
/// on their spot.
std::vector<ExtendedTask> build_tau_new(const TaskGraph& graph, const Allocation& allocation,
                                        std::optional<HumanClaim> claim = std::nullopt,
                                        std::optional<RobotClaim> robot = std::nullopt);

/// V: robot nodes that can start right now. The first robot node of every
/// robot-allocated subtask in U, the fix node of every misplaced subtask in
/// U, and robot placements the human assigned correctly whose spot is free.
/// While the robot is busy, just its in-flight node.
std::vector<ExtendedId> robot_start_set(const TaskGraph& graph, const Allocation& allocation,
                                        std::optional<HumanClaim> claim = std::nullopt,
                                        std::optional<RobotClaim> robot = std::nullopt);

/// Exact makespan minimisation by branch-and-bound over active schedules,
/// with at least one V node starting at time 0 when V is non-empty. Throws
/// InfeasibleSchedule on cyclic precedence, on an empty V while robot nodes
/// exist, or when no schedule satisfies the constraints.
Schedule solve_schedule(std::span<const ExtendedTask> tau_new, std::span<const ExtendedId> start_set,
                        const SolverLimits& limits = {});

/// max(total human work, total robot work, critical path).
double makespan_lower_bound(std::span<const ExtendedTask> tau_new);

/// Independent constraint check; returns human-readable violations.
std::vector<std::string> validate_schedule(std::span<const ExtendedTask> tau_new,
                                           std::span<const ExtendedId> start_set,
                                           const Schedule& schedule);

struct RobotStep {
  AgentAction action;
  ExtendedId node;
  double start = 0.0;
  double duration = 0.0;
};

/// Earliest robot entry (ties by finish, then id) as an R-action, or nullopt
/// when the schedule gives the robot nothing.
std::optional<RobotStep> next_robot_action(const Schedule& schedule, const TaskGraph& graph);

/// One row per entry: agent,id,start,finish.
void write_gantt_csv(std::ostream& out, const Schedule& schedule);

}  // namespace hrc
