#include "hrc/scheduler.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

namespace hrc {

std::string to_string(ExtendedId id) {
  std::string s = "t" + std::to_string(id.subtask);
  if (id.kind == TaskKind::Allocate) s += 'a';
  if (id.kind == TaskKind::ErrorFix) s += 'e';
  return s;
}

std::optional<ExtendedId> parse_extended_id(std::string_view text) {
  if (text.size() < 2 || text.front() != 't') return std::nullopt;
  text.remove_prefix(1);
  ExtendedId id;
  if (text.back() == 'a' || text.back() == 'e') {
    id.kind = text.back() == 'a' ? TaskKind::Allocate : TaskKind::ErrorFix;
    text.remove_suffix(1);
  }
  if (text.empty()) return std::nullopt;
  int value = 0;
  for (char c : text) {
    if (c < '0' || c > '9') return std::nullopt;
    value = value * 10 + (c - '0');
  }
  id.subtask = value;
  return id;
}

const ScheduleEntry* Schedule::find(ExtendedId id) const {
  for (const auto& e : entries) {
    if (e.id == id) return &e;
  }
  return nullptr;
}

std::vector<ExtendedTask> build_tau_new(const TaskGraph& graph, const Allocation& allocation,
                                        std::optional<HumanClaim> claim, std::optional<RobotClaim> robot) {
  std::vector<ExtendedTask> out;
  const double fix_time = graph.config().nominal_times[index(Agent::Robot)][0];
  for (SubtaskId id : graph.open_subtasks()) {
    const Subtask& t = graph.subtask(id);
    auto it = allocation.q.find(id);
    if (it == allocation.q.end()) {
      throw InfeasibleSchedule("allocation does not cover open subtask " + std::to_string(id));
    }
    const Agent agent = it->second;
    const bool claimed = claim && claim->subtask == id;

    std::vector<ExtendedId> chain_preds;
    for (SubtaskId p : t.predecessors) {
      if (graph.state(p) != SubtaskState::PlacedCorrectly) chain_preds.push_back({p, TaskKind::Base});
    }

    const bool robot_fixing = robot && robot->node == ExtendedId{id, TaskKind::ErrorFix};
    const bool robot_placing = robot && robot->node == ExtendedId{id, TaskKind::Base};
    if (robot_placing) {
      out.push_back({{id, TaskKind::Base}, Agent::Robot, std::max(0.0, robot->remaining), {}, true});
      continue;
    }
    std::optional<ExtendedId> last;
    if (t.state == SubtaskState::Misplaced && !claimed) {
      ExtendedTask fix{{id, TaskKind::ErrorFix}, Agent::Robot, fix_time, chain_preds, false};
      if (robot_fixing) fix = {fix.id, Agent::Robot, std::max(0.0, robot->remaining), {}, true};
      last = fix.id;
      out.push_back(std::move(fix));
    }
    const bool communicated = t.state == SubtaskState::AssignedToHuman || claimed;
    if (agent == Agent::Human && !communicated) {
      ExtendedTask msg{{id, TaskKind::Allocate}, Agent::Robot, 0.0, chain_preds, false};
      if (last) msg.predecessors.push_back(*last);
      last = msg.id;
      out.push_back(std::move(msg));
    }
    ExtendedTask base{{id, TaskKind::Base}, agent, agent == Agent::Human ? t.t_h : t.t_r,
                      chain_preds, claimed};
    if (claimed) base.duration = std::max(0.0, claim->remaining);
    if (last) base.predecessors.push_back(*last);
    out.push_back(std::move(base));
  }
  return out;
}

std::vector<ExtendedId> robot_start_set(const TaskGraph& graph, const Allocation& allocation,
                                        std::optional<HumanClaim> claim, std::optional<RobotClaim> robot) {
  if (robot) return {robot->node};
  std::vector<ExtendedId> v;
  for (SubtaskId id : immediately_feasible_robot_set(graph)) {
    if (claim && claim->subtask == id) continue;
    auto it = allocation.q.find(id);
    if (it == allocation.q.end()) continue;
    if (graph.state(id) == SubtaskState::Misplaced) {
      v.push_back({id, TaskKind::ErrorFix});
    } else if (it->second == Agent::Robot) {
      v.push_back({id, TaskKind::Base});
    }
  }
  for (const auto& t : graph.subtasks()) {
    if (t.state != SubtaskState::AssignedToRobotCorrectly) continue;
    if (!graph.predecessors_done(t.id)) continue;
    if (graph.inventory(Agent::Robot, t.required_color) == 0) continue;
    v.push_back({t.id, TaskKind::Base});
  }
  std::sort(v.begin(), v.end());
  return v;
}

namespace {

using Clock = std::chrono::steady_clock;
constexpr double kEps = 1e-9;

struct IndexedInstance {
  std::vector<ExtendedId> ids;
  std::vector<Agent> agent;
  std::vector<double> duration;
  std::vector<bool> in_progress;
  std::vector<std::vector<int>> preds;
  std::vector<std::vector<int>> succs;
  std::vector<bool> in_v;
  std::vector<int> topo;
  std::vector<double> tail;  // longest path from the node's finish to the end
  bool has_v = false;
};

IndexedInstance index_instance(std::span<const ExtendedTask> tau_new,
                               std::span<const ExtendedId> start_set) {
  IndexedInstance inst;
  std::map<ExtendedId, int> pos;
  for (const auto& t : tau_new) {
    if (pos.contains(t.id)) throw InfeasibleSchedule("duplicate task " + to_string(t.id));
    pos[t.id] = static_cast<int>(inst.ids.size());
    inst.ids.push_back(t.id);
    inst.agent.push_back(t.agent);
    inst.duration.push_back(t.duration);
    inst.in_progress.push_back(t.in_progress);
  }
  const std::size_t n = inst.ids.size();
  inst.preds.resize(n);
  inst.succs.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& p : tau_new[i].predecessors) {
      auto it = pos.find(p);
      if (it == pos.end()) {
        throw InfeasibleSchedule("unknown predecessor " + to_string(p) + " of " +
                                 to_string(tau_new[i].id));
      }
      inst.preds[i].push_back(it->second);
      inst.succs[static_cast<std::size_t>(it->second)].push_back(static_cast<int>(i));
    }
  }
  inst.in_v.assign(n, false);
  for (const auto& v : start_set) {
    auto it = pos.find(v);
    if (it == pos.end()) throw InfeasibleSchedule("start-set node " + to_string(v) + " not in tau_new");
    if (inst.agent[static_cast<std::size_t>(it->second)] != Agent::Robot) {
      throw InfeasibleSchedule("start-set node " + to_string(v) + " is not a robot task");
    }
    inst.in_v[static_cast<std::size_t>(it->second)] = true;
    inst.has_v = true;
  }

  std::vector<int> indegree(n);
  for (std::size_t i = 0; i < n; ++i) indegree[i] = static_cast<int>(inst.preds[i].size());
  std::vector<int> ready;
  for (std::size_t i = 0; i < n; ++i) {
    if (indegree[i] == 0) ready.push_back(static_cast<int>(i));
  }
  while (!ready.empty()) {
    int v = ready.back();
    ready.pop_back();
    inst.topo.push_back(v);
    for (int s : inst.succs[static_cast<std::size_t>(v)]) {
      if (--indegree[static_cast<std::size_t>(s)] == 0) ready.push_back(s);
    }
  }
  if (inst.topo.size() != n) throw InfeasibleSchedule("cyclic precedence in tau_new");

  inst.tail.assign(n, 0.0);
  for (auto it = inst.topo.rbegin(); it != inst.topo.rend(); ++it) {
    const auto v = static_cast<std::size_t>(*it);
    for (int s : inst.succs[v]) {
      const auto su = static_cast<std::size_t>(s);
      inst.tail[v] = std::max(inst.tail[v], inst.duration[su] + inst.tail[su]);
    }
  }
  return inst;
}

// Depth-first Giffler-Thompson enumeration of active schedules on the two
// agent "machines", bounded by machine load and head + tail paths.
class ScheduleSearch {
 public:
  ScheduleSearch(const IndexedInstance& inst, const SolverLimits& limits)
      : inst_(inst), limits_(limits), start_clock_(Clock::now()) {
    const std::size_t n = inst.ids.size();
    start_.assign(n, 0.0);
    finish_.assign(n, 0.0);
    scheduled_.assign(n, false);
    waiting_.resize(n);
    for (std::size_t i = 0; i < n; ++i) waiting_[i] = static_cast<int>(inst.preds[i].size());
  }

  Schedule run() {
    const std::size_t n = inst_.ids.size();
    // In-progress work starts at time 0; only zero-length nodes may precede it.
    for (std::size_t i = 0; i < n; ++i) {
      if (!inst_.in_progress[i]) continue;
      if (!inst_.preds[i].empty()) throw InfeasibleSchedule("in-progress task has open predecessors");
      if (pending_[index(inst_.agent[i])] >= 0) throw InfeasibleSchedule("two in-progress tasks on one agent");
      pending_[index(inst_.agent[i])] = static_cast<int>(i);
    }
    dfs();
    if (!best_) {
      if (stopped_) throw InfeasibleSchedule("schedule search stopped before a feasible schedule");
      throw InfeasibleSchedule("no schedule satisfies the start-at-zero constraint");
    }
    Schedule s;
    for (std::size_t i = 0; i < n; ++i) {
      s.entries.push_back({inst_.ids[i], inst_.agent[i], (*best_)[i],
                           (*best_)[i] + inst_.duration[i]});
    }
    std::sort(s.entries.begin(), s.entries.end(), [](const auto& a, const auto& b) {
      if (a.start != b.start) return a.start < b.start;
      if (a.finish != b.finish) return a.finish < b.finish;
      return a.id < b.id;
    });
    s.makespan = best_value_;
    s.incumbent_optimal = !stopped_;
    s.nodes = nodes_;
    return s;
  }

 private:
  bool limit_hit() {
    if (stopped_) return true;
    if (limits_.node_limit > 0 && nodes_ >= limits_.node_limit && best_) stopped_ = true;
    if ((nodes_ & 127) == 0 && limits_.time_limit > 0 && best_) {
      std::chrono::duration<double> elapsed = Clock::now() - start_clock_;
      if (elapsed.count() > limits_.time_limit) stopped_ = true;
    }
    return stopped_;
  }

  void place(int i, double s) {
    const auto u = static_cast<std::size_t>(i);
    scheduled_[u] = true;
    start_[u] = s;
    finish_[u] = s + inst_.duration[u];
    free_[index(inst_.agent[u])] = finish_[u];
    makespan_ = std::max(makespan_, finish_[u]);
    if (inst_.in_v[u] && s <= kEps) v_started_ = true;
    for (int su : inst_.succs[u]) --waiting_[static_cast<std::size_t>(su)];
    ++count_;
  }

  double earliest_start(std::size_t i) const {
    double s = free_[index(inst_.agent[i])];
    for (int p : inst_.preds[i]) s = std::max(s, finish_[static_cast<std::size_t>(p)]);
    return s;
  }

  double lower_bound() const {
    const std::size_t n = inst_.ids.size();
    std::vector<double> head(n, 0.0);
    AgentMap<double> work{0.0, 0.0};
    AgentMap<double> min_head{std::numeric_limits<double>::infinity(),
                              std::numeric_limits<double>::infinity()};
    double bound = makespan_;
    for (int v : inst_.topo) {
      const auto u = static_cast<std::size_t>(v);
      if (scheduled_[u]) continue;
      double h = free_[index(inst_.agent[u])];
      for (int p : inst_.preds[u]) {
        const auto pu = static_cast<std::size_t>(p);
        h = std::max(h, scheduled_[pu] ? finish_[pu] : head[pu] + inst_.duration[pu]);
      }
      head[u] = h;
      bound = std::max(bound, h + inst_.duration[u] + inst_.tail[u]);
      work[index(inst_.agent[u])] += inst_.duration[u];
      min_head[index(inst_.agent[u])] = std::min(min_head[index(inst_.agent[u])], h);
    }
    for (std::size_t a = 0; a < 2; ++a) {
      if (std::isfinite(min_head[a])) bound = std::max(bound, min_head[a] + work[a]);
    }
    return bound;
  }

  void dfs() {
    ++nodes_;
    if (limit_hit()) return;
    const std::size_t n = inst_.ids.size();
    if (inst_.has_v && !v_started_ && free_[index(Agent::Robot)] > kEps) return;
    for (std::size_t a = 0; a < 2; ++a) {
      if (pending_[a] >= 0 && !scheduled_[static_cast<std::size_t>(pending_[a])] && free_[a] > kEps) return;
    }
    if (count_ == n) {
      if (inst_.has_v && !v_started_) return;
      if (!best_ || makespan_ < best_value_ - kEps) {
        best_ = start_;
        best_value_ = makespan_;
      }
      return;
    }
    if (best_ && lower_bound() >= best_value_ - kEps) return;

    int pick = -1;
    double pick_ec = std::numeric_limits<double>::infinity();
    double pick_es = 0.0;
    std::vector<std::pair<int, double>> eligible;
    for (std::size_t i = 0; i < n; ++i) {
      if (scheduled_[i] || waiting_[i] != 0) continue;
      const double es = earliest_start(i);
      eligible.emplace_back(static_cast<int>(i), es);
      const double ec = es + inst_.duration[i];
      if (ec < pick_ec - kEps || (std::abs(ec - pick_ec) <= kEps && es < pick_es)) {
        pick = static_cast<int>(i);
        pick_ec = ec;
        pick_es = es;
      }
    }
    const Agent machine = inst_.agent[static_cast<std::size_t>(pick)];
    std::vector<std::pair<int, double>> conflict;
    for (const auto& [i, es] : eligible) {
      if (inst_.agent[static_cast<std::size_t>(i)] != machine) continue;
      if (i == pick || es < pick_ec - kEps) conflict.emplace_back(i, es);
    }
    const bool need_v = inst_.has_v && !v_started_ && machine == Agent::Robot;
    std::sort(conflict.begin(), conflict.end(), [&](const auto& a, const auto& b) {
      const auto ua = static_cast<std::size_t>(a.first);
      const auto ub = static_cast<std::size_t>(b.first);
      if (need_v && inst_.in_v[ua] != inst_.in_v[ub]) return static_cast<bool>(inst_.in_v[ua]);
      const double ka = inst_.tail[ua] + inst_.duration[ua];
      const double kb = inst_.tail[ub] + inst_.duration[ub];
      if (std::abs(ka - kb) > kEps) return ka > kb;
      return inst_.ids[ua] < inst_.ids[ub];
    });

    for (const auto& [i, es] : conflict) {
      const auto u = static_cast<std::size_t>(i);
      const AgentMap<double> saved_free = free_;
      const double saved_makespan = makespan_;
      const bool saved_v = v_started_;
      place(i, es);
      dfs();
      scheduled_[u] = false;
      for (int su : inst_.succs[u]) ++waiting_[static_cast<std::size_t>(su)];
      --count_;
      free_ = saved_free;
      makespan_ = saved_makespan;
      v_started_ = saved_v;
      if (stopped_) return;
    }
  }

  const IndexedInstance& inst_;
  SolverLimits limits_;
  Clock::time_point start_clock_;
  std::vector<double> start_;
  std::vector<double> finish_;
  std::vector<bool> scheduled_;
  std::vector<int> waiting_;
  AgentMap<double> free_{0.0, 0.0};
  AgentMap<int> pending_{-1, -1};  // in-progress task per agent
  double makespan_ = 0.0;
  bool v_started_ = false;
  std::size_t count_ = 0;
  std::optional<std::vector<double>> best_;
  double best_value_ = std::numeric_limits<double>::infinity();
  std::int64_t nodes_ = 0;
  bool stopped_ = false;
};

}  // namespace

Schedule solve_schedule(std::span<const ExtendedTask> tau_new, std::span<const ExtendedId> start_set,
                        const SolverLimits& limits) {
  IndexedInstance inst = index_instance(tau_new, start_set);
  const bool has_robot_work = std::any_of(tau_new.begin(), tau_new.end(), [](const auto& t) {
    return t.agent == Agent::Robot && !t.in_progress;
  });
  if (has_robot_work && !inst.has_v) {
    throw InfeasibleSchedule("robot has work but nothing it can start immediately");
  }
  if (tau_new.empty()) return Schedule{};
  return ScheduleSearch(inst, limits).run();
}

double makespan_lower_bound(std::span<const ExtendedTask> tau_new) {
  if (tau_new.empty()) return 0.0;
  IndexedInstance inst = index_instance(tau_new, {});
  AgentMap<double> work{0.0, 0.0};
  double path = 0.0;
  for (std::size_t i = 0; i < inst.ids.size(); ++i) {
    work[index(inst.agent[i])] += inst.duration[i];
    if (inst.preds[i].empty()) path = std::max(path, inst.duration[i] + inst.tail[i]);
  }
  return std::max({work[0], work[1], path});
}

std::vector<std::string> validate_schedule(std::span<const ExtendedTask> tau_new,
                                           std::span<const ExtendedId> start_set,
                                           const Schedule& schedule) {
  std::vector<std::string> problems;
  auto fail = [&problems](const std::string& msg) { problems.push_back(msg); };
  std::map<ExtendedId, const ScheduleEntry*> by_id;
  for (const auto& e : schedule.entries) {
    if (by_id.contains(e.id)) fail("duplicate entry " + to_string(e.id));
    by_id[e.id] = &e;
  }
  if (by_id.size() != tau_new.size()) fail("entry count differs from task count");
  constexpr double tol = 1e-6;
  double latest = 0.0;
  for (const auto& t : tau_new) {
    auto it = by_id.find(t.id);
    if (it == by_id.end()) {
      fail("missing entry " + to_string(t.id));
      continue;
    }
    const ScheduleEntry& e = *it->second;
    if (e.agent != t.agent) fail("agent mismatch at " + to_string(t.id));
    if (e.start < -tol) fail("negative start at " + to_string(t.id));
    if (std::abs(e.finish - (e.start + t.duration)) > tol) fail("finish != start + duration at " + to_string(t.id));
    if (t.in_progress && std::abs(e.start) > tol) fail("in-progress task not at 0: " + to_string(t.id));
    latest = std::max(latest, e.finish);
    for (const auto& p : t.predecessors) {
      auto pit = by_id.find(p);
      if (pit == by_id.end()) continue;
      if (pit->second->finish > e.start + tol) {
        fail("precedence " + to_string(p) + " -> " + to_string(t.id) + " violated");
      }
    }
  }
  for (std::size_t i = 0; i < schedule.entries.size(); ++i) {
    for (std::size_t j = i + 1; j < schedule.entries.size(); ++j) {
      const auto& a = schedule.entries[i];
      const auto& b = schedule.entries[j];
      if (a.agent != b.agent) continue;
      if (a.start < b.finish - tol && b.start < a.finish - tol) {
        fail("overlap " + to_string(a.id) + " / " + to_string(b.id));
      }
    }
  }
  if (!start_set.empty()) {
    bool any = false;
    for (const auto& v : start_set) {
      auto it = by_id.find(v);
      if (it != by_id.end() && std::abs(it->second->start) <= tol) any = true;
    }
    if (!any) fail("no start-set task begins at time 0");
  }
  if (std::abs(schedule.makespan - latest) > tol) fail("makespan differs from latest finish");
  return problems;
}

std::optional<RobotStep> next_robot_action(const Schedule& schedule, const TaskGraph& graph) {
  const ScheduleEntry* best = nullptr;
  for (const auto& e : schedule.entries) {
    if (e.agent != Agent::Robot) continue;
    if (!best || e.start < best->start ||
        (e.start == best->start && (e.finish < best->finish ||
                                    (e.finish == best->finish && e.id < best->id)))) {
      best = &e;
    }
  }
  if (!best) return std::nullopt;
  const Subtask& t = graph.subtask(best->id.subtask);
  RobotStep step;
  step.node = best->id;
  step.start = best->start;
  step.duration = best->finish - best->start;
  switch (best->id.kind) {
    case TaskKind::ErrorFix:
      step.action = make_action(ActionKind::R3, t.id);
      break;
    case TaskKind::Allocate:
      step.action = make_action(ActionKind::R2, t.id);
      break;
    case TaskKind::Base:
      if (t.state == SubtaskState::AssignedToRobotCorrectly) {
        step.action = make_action(ActionKind::R4, t.id, t.required_color);
      } else if (t.state == SubtaskState::AssignedToRobotIncorrectly) {
        step.action = make_action(ActionKind::R6, t.id);
        step.duration = 0.0;
      } else {
        step.action = make_action(ActionKind::R1, t.id, t.required_color);
      }
      break;
  }
  return step;
}

void write_gantt_csv(std::ostream& out, const Schedule& schedule) {
  out << "agent,id,start,finish\n";
  std::vector<ScheduleEntry> rows = schedule.entries;
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return a.agent < b.agent;
  });
  for (const auto& e : rows) {
    out << to_string(e.agent) << ',' << to_string(e.id) << ',' << e.start << ',' << e.finish << '\n';
  }
}

}  // namespace hrc
