#pragma once

// The robot's sense / estimate / allocate / schedule / act loop, and the
// event-driven episode that interleaves it with a human agent.

#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hrc/allocation.hpp"
#include "hrc/belief.hpp"
#include "hrc/event_log.hpp"
#include "hrc/scheduler.hpp"
#include "hrc/task_model.hpp"

namespace hrc {

struct PlannerParams {
  CostParams cost;
  EstimatorParams estimator;
  SolverLimits schedule_limits{2.0, 0};
  double belief_shift = 0.1;  // replan when E[alpha_f] moved this far since the last plan
  int retry_cap = 5;
  double initial_wait = 10.0;  // robot waits for the first human action, at most this long
  double lock_window = 8.0;    // tail of a robot placement during which the shared area is closed
  double gui_time = 2.0;       // duration of tablet-only human actions (H2, H5, H6)
  double stall_horizon = 1800.0;
  double horizon = 14400.0;

  void validate() const;
  /// Both solvers deterministic: wall-clock limits off.
  bool deterministic() const { return cost.time_limit == 0.0 && schedule_limits.time_limit == 0.0; }
};

Json to_json(const PlannerParams& params);
void update_from_json(PlannerParams& params, const Json& j);

enum class ReplanTrigger {
  HumanActionChangedState,
  RobotActionCompleted,
  ErrorDetected,
  ScheduleInvalidated,
  BeliefShift,
};

struct PlannerState {
  TaskGraph graph;
  Belief belief_f;
  Belief belief_e;
  ActionHistory<FollowingClass> history_f{3};
  ActionHistory<ErrorClass> history_e{3};
  std::optional<Allocation> allocation;
  std::optional<Schedule> schedule;
  std::vector<ExtendedTask> tau_new;
  std::set<ReplanTrigger> triggers;
  double planned_pf = 0.0;  // E[alpha_f] used by the last plan
  double clock = 0.0;
  int errors_detected = 0;
};

PlannerState initial_state(TaskGraph graph, const PlannerParams& params);

struct HumanEvidence {
  std::optional<FollowingClass> following;
  std::optional<ErrorClass> error;
};

/// F1 = H2, F2 = H4, F3 = H6; M1/M2 = H1 or H2 with a wrong/correct colour.
HumanEvidence classify_human_action(const TaskGraph& before, const AgentAction& action);

/// Applies a completed human action, updates both beliefs and raises the
/// replan triggers. Throws RejectedAction with `state` untouched.
PlannerState observe_human_action(const PlannerState& state, const AgentAction& action,
                                  const PlannerParams& params, EventLog* log = nullptr);

enum class PlanStatus { Act, Wait, Done };

struct PlanOutcome {
  PlanStatus status = PlanStatus::Wait;
  std::optional<RobotStep> step;
};

/// One pass of the allocation / scheduling handshake when a trigger is
/// pending. Wrong robot assignments are answered with R6 before anything
/// else. With `robot` set the robot is mid-action; the plan keeps that
/// action running and only a zero-length step can come out. Throws
/// PlannerFault when the retry cap is exhausted.
PlanOutcome plan_step(PlannerState& state, const PlannerParams& params,
                      std::optional<HumanClaim> claim = std::nullopt, EventLog* log = nullptr,
                      std::optional<RobotClaim> robot = std::nullopt);

/// Applies a finished robot action to the graph.
void complete_robot_action(PlannerState& state, const AgentAction& action, EventLog* log = nullptr);

struct InFlight {
  AgentAction action;
  double start = 0.0;
  double finish = 0.0;
  std::optional<RobotStep> step;
};

/// What a human agent sees when deciding.
struct HumanView {
  const TaskGraph& graph;
  double now;
  std::vector<AgentAction> legal;
  std::optional<SubtaskId> robot_claim;
  bool light_red;
};

struct HumanChoice {
  std::optional<AgentAction> action;
  double duration = 0.0;
  /// When waiting, ask again no later than this time.
  std::optional<double> wake_at;
};

class HumanDriver {
 public:
  virtual ~HumanDriver() = default;
  virtual HumanChoice decide(const HumanView& view) = 0;
  virtual void completed(const AgentAction&, const TaskGraph& /*after*/) {}
  virtual void rejected(const AgentAction&, RejectReason) {}
};

/// Shared event engine behind simulation runs and live sessions. Human
/// actions claim their subtask when they start and take effect when they
/// finish; robot actions likewise, except the zero-length R2/R6.
class Episode {
 public:
  Episode(TaskGraph graph, PlannerParams params, EventLog* log);

  double now() const { return now_; }
  const PlannerState& state() const { return state_; }
  const PlannerParams& params() const { return params_; }
  const std::optional<InFlight>& human_busy() const { return human_; }
  const std::optional<InFlight>& robot_busy() const { return robot_; }
  bool finished() const { return state_.graph.all_placed() && !human_ && !robot_; }
  bool light_red() const;
  bool human_started() const { return human_started_; }

  /// Live sessions refuse human placements while the light is red instead
  /// of deferring them.
  void set_light_lock(bool on) { light_lock_ = on; }
  bool light_lock() const { return light_lock_; }

  /// Runs every engine step due at the current instant until nothing changes.
  /// Returns whether anything happened.
  bool settle(HumanDriver* driver = nullptr);

  /// Plays every engine event up to `t`, settling after each, then moves the
  /// clock to `t` and settles once more. No human decisions are taken.
  void run_until(double t);

  /// Legal human actions now: feasible in the graph and not on the robot's subtask.
  std::vector<AgentAction> human_legal() const;
  HumanView view() const;

  /// Starts a human action; returns why it was refused, if it was.
  std::optional<RejectReason> human_start(const AgentAction& action, double duration);

  bool complete_due_robot();
  bool complete_due_human(HumanDriver* driver = nullptr);
  /// Plans when a trigger is pending; true when something started or happened.
  /// A busy robot can still send assignments and refusals.
  bool robot_turn();

  /// Time of the next engine event strictly after now, if any.
  std::optional<double> next_event_time() const;
  void advance_to(double t);

  /// Human completion time after any shared-area deferral.
  double human_due() const;

 private:
  PlannerState state_;
  PlannerParams params_;
  EventLog* log_;
  double now_ = 0.0;
  std::optional<InFlight> human_;
  std::optional<InFlight> robot_;
  bool human_started_ = false;
  bool light_lock_ = false;
};

struct RunResult {
  bool completed = false;
  std::string status;  // "complete", "stalled", "horizon"
  double makespan = 0.0;
  PlannerState final_state;
};

/// Runs until every subtask is placed, the run stalls for stall_horizon
/// seconds, or the horizon passes.
RunResult run_to_completion(Episode& episode, HumanDriver& driver);

double human_action_duration(const TaskGraph& graph, const AgentAction& action,
                             const PlannerParams& params, double speed_factor = 1.0);

}  // namespace hrc
