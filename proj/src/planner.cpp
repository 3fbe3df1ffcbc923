#include "hrc/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hrc {

void PlannerParams::validate() const {
  cost.validate();
  estimator.validate();
  if (schedule_limits.time_limit < 0 || schedule_limits.node_limit < 0) {
    throw ConfigError("schedule limits must be nonnegative");
  }
  if (belief_shift < 0 || retry_cap < 1 || initial_wait < 0 || lock_window < 0 || gui_time < 0 ||
      !(stall_horizon > 0) || !(horizon > 0)) {
    throw ConfigError("planner parameters out of range");
  }
}

Json to_json(const PlannerParams& p) {
  return {{"cost", to_json(p.cost)},
          {"estimator", to_json(p.estimator)},
          {"schedule", {{"time_limit", p.schedule_limits.time_limit},
                        {"node_limit", p.schedule_limits.node_limit}}},
          {"planner", {{"belief_shift", p.belief_shift},
                       {"retry_cap", p.retry_cap},
                       {"initial_wait", p.initial_wait},
                       {"lock_window", p.lock_window},
                       {"gui_time", p.gui_time},
                       {"stall_horizon", p.stall_horizon},
                       {"horizon", p.horizon}}}};
}

void update_from_json(PlannerParams& p, const Json& j) {
  if (!j.is_object()) throw ConfigError("parameters must be a JSON object");
  try {
    if (j.contains("cost")) update_from_json(p.cost, j.at("cost"));
    if (j.contains("estimator")) update_from_json(p.estimator, j.at("estimator"));
    if (j.contains("schedule")) {
      const Json& s = j.at("schedule");
      p.schedule_limits.time_limit = s.value("time_limit", p.schedule_limits.time_limit);
      p.schedule_limits.node_limit = s.value("node_limit", p.schedule_limits.node_limit);
    }
    if (j.contains("planner")) {
      const Json& s = j.at("planner");
      p.belief_shift = s.value("belief_shift", p.belief_shift);
      p.retry_cap = s.value("retry_cap", p.retry_cap);
      p.initial_wait = s.value("initial_wait", p.initial_wait);
      p.lock_window = s.value("lock_window", p.lock_window);
      p.gui_time = s.value("gui_time", p.gui_time);
      p.stall_horizon = s.value("stall_horizon", p.stall_horizon);
      p.horizon = s.value("horizon", p.horizon);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad parameter value: ") + e.what());
  }
  p.validate();
}

PlannerState initial_state(TaskGraph graph, const PlannerParams& params) {
  params.validate();
  PlannerState s;
  s.graph = std::move(graph);
  s.belief_f = init_belief(BeliefKind::Following, params.estimator);
  s.belief_e = init_belief(BeliefKind::Error, params.estimator);
  s.history_f = ActionHistory<FollowingClass>(params.estimator.memory);
  s.history_e = ActionHistory<ErrorClass>(params.estimator.memory);
  s.planned_pf = expected_value(s.belief_f);
  s.triggers.insert(ReplanTrigger::ScheduleInvalidated);
  return s;
}

HumanEvidence classify_human_action(const TaskGraph& before, const AgentAction& action) {
  HumanEvidence ev;
  switch (action.kind) {
    case ActionKind::H2:
      ev.following = FollowingClass::F1;
      break;
    case ActionKind::H4:
      ev.following = FollowingClass::F2;
      break;
    case ActionKind::H6:
      ev.following = FollowingClass::F3;
      break;
    default:
      break;
  }
  if (action.kind == ActionKind::H1 || action.kind == ActionKind::H2) {
    const bool correct = action.color && *action.color == before.subtask(action.subtask).required_color;
    ev.error = correct ? ErrorClass::M2 : ErrorClass::M1;
  }
  return ev;
}

namespace {

const char* class_name(FollowingClass c) {
  return c == FollowingClass::F1 ? "F1" : c == FollowingClass::F2 ? "F2" : "F3";
}

const char* class_name(ErrorClass c) { return c == ErrorClass::M1 ? "M1" : "M2"; }

void log_state_change(EventLog* log, double t, const TaskGraph& before, const TaskGraph& after,
                      const AgentAction& action) {
  if (!log) return;
  for (const auto& s : after.subtasks()) {
    const SubtaskState was = before.state(s.id);
    if (was == s.state) continue;
    log->append(t, RecordKind::StateChange,
                {{"subtask", s.id},
                 {"from", to_string(was)},
                 {"to", to_string(s.state)},
                 {"by", to_string(action.kind)}});
  }
}

Json action_payload(const AgentAction& action, const TaskGraph& after) {
  Json j{{"action", to_json(action)},
         {"result_state", to_string(after.state(action.subtask))},
         {"digest", digest_hex(after.digest())}};
  if (action.kind == ActionKind::H6) j["realized_as"] = {"H4", "H3"};
  return j;
}

bool shared_area_kind(ActionKind k) {
  return k == ActionKind::R1 || k == ActionKind::R3 || k == ActionKind::R4;
}

bool human_shared_kind(ActionKind k) {
  return k == ActionKind::H1 || k == ActionKind::H3 || k == ActionKind::H4;
}

}  // namespace

PlannerState observe_human_action(const PlannerState& state, const AgentAction& action,
                                  const PlannerParams& params, EventLog* log) {
  PlannerState next = state;
  next.graph = apply_action(state.graph, action);
  const HumanEvidence ev = classify_human_action(state.graph, action);
  next.triggers.insert(ReplanTrigger::HumanActionChangedState);

  if (log) {
    Json payload = action_payload(action, next.graph);
    payload["phase"] = "complete";
    payload["following_class"] = ev.following ? Json(class_name(*ev.following)) : Json(nullptr);
    payload["error_class"] = ev.error ? Json(class_name(*ev.error)) : Json(nullptr);
    log->append(state.clock, RecordKind::HumanAction, std::move(payload));
  }
  log_state_change(log, state.clock, state.graph, next.graph, action);

  if (ev.following) {
    next.history_f.push(*ev.following);
    next.belief_f = update_following(next.belief_f, next.history_f, *ev.following, params.estimator);
    if (log) log->append(state.clock, RecordKind::BeliefF, to_json(next.belief_f));
  }
  if (ev.error) {
    next.history_e.push(*ev.error);
    next.belief_e = update_error(next.belief_e, next.history_e, *ev.error, params.estimator);
    if (log) log->append(state.clock, RecordKind::BeliefE, to_json(next.belief_e));
    if (*ev.error == ErrorClass::M1) {
      ++next.errors_detected;
      next.triggers.insert(ReplanTrigger::ErrorDetected);
    }
  }
  return next;
}

PlanOutcome plan_step(PlannerState& state, const PlannerParams& params, std::optional<HumanClaim> claim,
                      EventLog* log, std::optional<RobotClaim> robot) {
  const TaskGraph& g = state.graph;
  if (g.all_placed()) return {PlanStatus::Done, std::nullopt};
  const bool claimed_any = claim.has_value();
  auto is_claimed = [&](SubtaskId id) { return claimed_any && claim->subtask == id; };

  // A wrong assignment to the robot is turned down at once.
  for (const auto& t : g.subtasks()) {
    if (t.state == SubtaskState::AssignedToRobotIncorrectly && !is_claimed(t.id)) {
      RobotStep step;
      step.action = make_action(ActionKind::R6, t.id);
      step.node = {t.id, TaskKind::Base};
      return {PlanStatus::Act, step};
    }
  }

  const double mean_f = expected_value(state.belief_f);
  if (std::abs(mean_f - state.planned_pf) >= params.belief_shift) {
    state.triggers.insert(ReplanTrigger::BeliefShift);
  }
  if (state.triggers.empty()) return {PlanStatus::Wait, std::nullopt};
  state.triggers.clear();
  state.planned_pf = mean_f;

  const PointEstimates est{mean_f, expected_value(state.belief_e)};
  Assignment pinned;
  if (claim) pinned[claim->subtask] = Agent::Human;
  if (robot && robot->node.kind == TaskKind::Base) pinned[robot->node.subtask] = Agent::Robot;
  const Allocation* prev = state.allocation ? &*state.allocation : nullptr;
  AllocationProblem problem = make_allocation_problem(g, est, params.cost, prev, pinned);
  if (robot) {
    // The running action already gives the robot its start.
    problem.require_robot_task = false;
  } else if (problem.robot_ready.empty()) {
    bool r4_ready = false;
    for (const auto& t : g.subtasks()) {
      r4_ready = r4_ready || (t.state == SubtaskState::AssignedToRobotCorrectly && !is_claimed(t.id) &&
                              g.predecessors_done(t.id) &&
                              g.inventory(Agent::Robot, t.required_color) > 0);
    }
    if (!r4_ready) return {PlanStatus::Wait, std::nullopt};
    problem.require_robot_task = false;
  }

  for (int attempt = 0; attempt < params.retry_cap; ++attempt) {
    Allocation alloc;
    try {
      alloc = solve_allocation_problem(problem, params.cost.limits());
    } catch (const InfeasibleAllocation& e) {
      throw PlannerFault(std::string("allocation failed: ") + e.what());
    }
    if (log) {
      Json j = to_json(alloc);
      j["attempt"] = attempt;
      j["p_f"] = est.p_f;
      j["p_e"] = est.p_e;
      j["pinned"] = to_json(pinned);
      j["require_robot_task"] = problem.require_robot_task;
      log->append(state.clock, RecordKind::Allocation, std::move(j));
    }
    std::vector<ExtendedTask> tau = build_tau_new(g, alloc, claim, robot);
    std::vector<ExtendedId> v = robot_start_set(g, alloc, claim, robot);
    Json tau_json = Json::array();
    Json v_json = Json::array();
    if (log) {
      for (const auto& t : tau) tau_json.push_back(to_json(t));
      for (const auto& id : v) v_json.push_back(to_string(id));
    }
    Json claim_json = claim ? Json{{"subtask", claim->subtask}, {"remaining", claim->remaining}} : Json(nullptr);
    Json robot_json =
        robot ? Json{{"node", to_string(robot->node)}, {"remaining", robot->remaining}} : Json(nullptr);
    Schedule sched;
    try {
      sched = solve_schedule(tau, v, params.schedule_limits);
    } catch (const InfeasibleSchedule& e) {
      if (log) {
        log->append(state.clock, RecordKind::Schedule,
                    {{"attempt", attempt}, {"tau_new", tau_json}, {"V", v_json}, {"claim", claim_json},
                     {"robot_busy", robot_json}, {"infeasible", e.what()}});
      }
      problem.excluded.push_back(alloc.q);
      continue;
    }
    if (log) {
      log->append(state.clock, RecordKind::Schedule,
                  {{"attempt", attempt}, {"tau_new", tau_json}, {"V", v_json}, {"claim", claim_json},
                   {"robot_busy", robot_json}, {"schedule", to_json(sched)}});
    }
    state.allocation = alloc;
    state.schedule = sched;
    state.tau_new = std::move(tau);
    auto step = next_robot_action(sched, g);
    if (!step || (robot && (step->node == robot->node || step->duration > 0.0))) {
      return {PlanStatus::Wait, std::nullopt};
    }
    return {PlanStatus::Act, step};
  }
  throw PlannerFault("no schedulable allocation after " + std::to_string(params.retry_cap) + " attempts");
}

void complete_robot_action(PlannerState& state, const AgentAction& action, EventLog* log) {
  const TaskGraph before = state.graph;
  state.graph = apply_action(state.graph, action);
  state.triggers.insert(ReplanTrigger::RobotActionCompleted);
  if (log) {
    Json payload = action_payload(action, state.graph);
    payload["phase"] = "complete";
    log->append(state.clock, RecordKind::RobotAction, std::move(payload));
  }
  log_state_change(log, state.clock, before, state.graph, action);
}

double human_action_duration(const TaskGraph& graph, const AgentAction& action,
                             const PlannerParams& params, double speed_factor) {
  const Subtask& t = graph.subtask(action.subtask);
  const ScenarioConfig& c = graph.config();
  switch (action.kind) {
    case ActionKind::H1:
      return speed_factor * c.nominal_time(Agent::Human, action.color.value_or(t.required_color));
    case ActionKind::H3:
      return speed_factor * c.nominal_time(Agent::Human, t.block.value_or(t.required_color));
    case ActionKind::H4:
      return speed_factor * t.t_h;
    default:
      return params.gui_time;
  }
}

Episode::Episode(TaskGraph graph, PlannerParams params, EventLog* log)
    : state_(initial_state(std::move(graph), params)), params_(std::move(params)), log_(log) {
  if (log_) {
    log_->append(0.0, RecordKind::BeliefF, to_json(state_.belief_f));
    log_->append(0.0, RecordKind::BeliefE, to_json(state_.belief_e));
  }
}

bool Episode::light_red() const {
  return robot_ && shared_area_kind(robot_->action.kind) && now_ >= robot_->finish - params_.lock_window &&
         now_ < robot_->finish;
}

std::vector<AgentAction> Episode::human_legal() const {
  std::vector<AgentAction> out;
  if (human_) return out;
  const bool blocked = light_lock_ && light_red();
  for (const auto& a : feasible_actions(state_.graph, Agent::Human)) {
    if (robot_ && robot_->action.subtask == a.subtask) continue;
    if (blocked && human_shared_kind(a.kind)) continue;
    out.push_back(a);
  }
  return out;
}

HumanView Episode::view() const {
  std::optional<SubtaskId> claim;
  if (robot_) claim = robot_->action.subtask;
  return HumanView{state_.graph, now_, human_legal(), claim, light_red()};
}

std::optional<RejectReason> Episode::human_start(const AgentAction& action, double duration) {
  std::optional<RejectReason> reason;
  if (human_ || (robot_ && robot_->action.subtask == action.subtask)) {
    reason = RejectReason::Claimed;
  } else if (light_lock_ && light_red() && human_shared_kind(action.kind)) {
    reason = RejectReason::LightRed;
  } else {
    reason = check_action(state_.graph, action);
  }
  if (reason) {
    if (log_) {
      log_->append(now_, RecordKind::HumanAction,
                   {{"phase", "start"}, {"action", to_json(action)}, {"rejected", to_string(*reason)}});
    }
    return reason;
  }
  human_ = InFlight{action, now_, now_ + std::max(0.0, duration), std::nullopt};
  if (!human_started_) {
    human_started_ = true;
    state_.triggers.insert(ReplanTrigger::ScheduleInvalidated);
  }
  if (log_) {
    log_->append(now_, RecordKind::HumanAction,
                 {{"phase", "start"}, {"action", to_json(action)}, {"duration", human_->finish - now_}});
  }
  return std::nullopt;
}

double Episode::human_due() const {
  if (!human_) return std::numeric_limits<double>::infinity();
  const double f = human_->finish;
  if (robot_ && human_shared_kind(human_->action.kind) && shared_area_kind(robot_->action.kind)) {
    const double lock_start = robot_->finish - params_.lock_window;
    if (f >= lock_start && f < robot_->finish) return robot_->finish;
  }
  return f;
}

bool Episode::complete_due_robot() {
  if (!robot_ || robot_->finish > now_) return false;
  state_.clock = now_;
  complete_robot_action(state_, robot_->action, log_);
  robot_.reset();
  return true;
}

bool Episode::complete_due_human(HumanDriver* driver) {
  if (!human_ || human_due() > now_) return false;
  const InFlight done = *human_;
  human_.reset();
  state_.clock = now_;
  try {
    state_ = observe_human_action(state_, done.action, params_, log_);
    if (driver) driver->completed(done.action, state_.graph);
  } catch (const RejectedAction& e) {
    if (log_) {
      log_->append(now_, RecordKind::HumanAction,
                   {{"phase", "complete"}, {"action", to_json(done.action)}, {"rejected", to_string(e.reason())}});
    }
    if (driver) driver->rejected(done.action, e.reason());
  }
  return true;
}

bool Episode::robot_turn() {
  if (!human_started_ && now_ < params_.initial_wait) return false;
  state_.clock = now_;
  std::optional<HumanClaim> claim;
  if (human_) claim = HumanClaim{human_->action.subtask, human_due() - now_};
  std::optional<RobotClaim> busy;
  if (robot_) busy = RobotClaim{robot_->step->node, robot_->finish - now_};
  PlanOutcome out = plan_step(state_, params_, claim, log_, busy);
  if (out.status != PlanStatus::Act) return false;
  const RobotStep& step = *out.step;
  if (auto reason = check_action(state_.graph, step.action)) {
    throw PlannerFault("planner chose an illegal robot action: " + std::string(to_string(step.action.kind)) +
                       " on " + std::to_string(step.action.subtask) + " (" + to_string(*reason) + ")");
  }
  if (step.duration <= 0.0) {
    complete_robot_action(state_, step.action, log_);
    return true;
  }
  robot_ = InFlight{step.action, now_, now_ + step.duration, step};
  if (log_) {
    log_->append(now_, RecordKind::RobotAction,
                 {{"phase", "start"},
                  {"action", to_json(step.action)},
                  {"node", to_string(step.node)},
                  {"duration", step.duration}});
  }
  return true;
}

std::optional<double> Episode::next_event_time() const {
  double t = std::numeric_limits<double>::infinity();
  if (robot_ && robot_->finish > now_) t = std::min(t, robot_->finish);
  if (human_) {
    const double due = human_due();
    if (due > now_) t = std::min(t, due);
  }
  if (!human_started_ && params_.initial_wait > now_) t = std::min(t, params_.initial_wait);
  if (!std::isfinite(t)) return std::nullopt;
  return t;
}

void Episode::advance_to(double t) {
  if (t < now_) throw PlannerFault("clock cannot run backwards");
  now_ = t;
  state_.clock = t;
}

bool Episode::settle(HumanDriver* driver) {
  bool any = false;
  for (int guard = 0;; ++guard) {
    if (guard > 10000) throw PlannerFault("no quiescence at t=" + std::to_string(now_));
    bool changed = complete_due_robot();
    changed |= complete_due_human(driver);
    changed |= robot_turn();
    if (!changed) return any;
    any = true;
  }
}

void Episode::run_until(double t) {
  while (auto next = next_event_time()) {
    if (*next > t) break;
    advance_to(*next);
    settle();
  }
  if (t > now_) advance_to(t);
  settle();
}

RunResult run_to_completion(Episode& ep, HumanDriver& driver) {
  RunResult result;
  double last_progress = ep.now();
  std::uint64_t last_digest = ep.state().graph.digest();
  for (;;) {
    std::optional<double> wake;
    bool changed = true;
    int guard = 0;
    while (changed) {
      if (++guard > 10000) throw PlannerFault("no quiescence at t=" + std::to_string(ep.now()));
      changed = false;
      changed |= ep.complete_due_robot();
      changed |= ep.complete_due_human(&driver);
      if (!ep.human_busy() && !ep.state().graph.all_placed()) {
        HumanChoice choice = driver.decide(ep.view());
        if (choice.action) {
          auto reason = ep.human_start(*choice.action, choice.duration);
          if (!reason) {
            changed = true;
          } else {
            driver.rejected(*choice.action, *reason);
          }
        } else if (choice.wake_at && *choice.wake_at > ep.now()) {
          wake = wake ? std::min(*wake, *choice.wake_at) : *choice.wake_at;
        }
      }
      changed |= ep.robot_turn();
    }
    if (ep.state().graph.digest() != last_digest) {
      last_digest = ep.state().graph.digest();
      last_progress = ep.now();
    }
    if (ep.finished()) {
      result.completed = true;
      result.status = "complete";
      break;
    }
    std::optional<double> next = ep.next_event_time();
    if (wake && (!next || *wake < *next)) next = wake;
    if (!next || *next - last_progress > ep.params().stall_horizon) {
      result.status = "stalled";
      break;
    }
    if (*next > ep.params().horizon) {
      result.status = "horizon";
      break;
    }
    ep.advance_to(*next);
  }
  result.makespan = ep.now();
  result.final_state = ep.state();
  return result;
}

}  // namespace hrc
