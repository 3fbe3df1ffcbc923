#include "hrc/allocation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <set>

namespace hrc {

void CostParams::validate() const {
  if (c_f < 0 || c_e < 0 || c_v < 0 || time_limit < 0 || node_limit < 0) {
    throw ConfigError("cost parameters must be non-negative");
  }
}

double assignment_cost(const Subtask& subtask, Agent agent, const PointEstimates& estimates,
                       const CostParams& params, const Allocation* prev) {
  double churn = 0.0;
  if (prev) {
    auto it = prev->q.find(subtask.id);
    if (it != prev->q.end() && it->second != agent) churn = params.c_v;
  }
  if (agent == Agent::Human) {
    return subtask.t_h * estimates.p_f + params.c_f * (1.0 - estimates.p_f) + churn;
  }
  return subtask.t_r + estimates.p_e * params.c_e + churn;
}

double allocation_objective(const AllocationProblem& problem, const Assignment& q) {
  double human = 0.0;
  double robot = 0.0;
  for (const auto& item : problem.items) {
    Agent a = item.fixed ? *item.fixed : q.at(item.id);
    (a == Agent::Human ? human : robot) += a == Agent::Human ? item.human_cost : item.robot_cost;
  }
  return std::max(human, robot);
}

bool allocation_feasible(const AllocationProblem& problem, const Assignment& q) {
  for (const auto& item : problem.items) {
    auto it = q.find(item.id);
    if (it == q.end()) return false;
    if (item.fixed && it->second != *item.fixed) return false;
  }
  if (problem.require_robot_task) {
    bool any = std::any_of(problem.robot_ready.begin(), problem.robot_ready.end(),
                           [&](SubtaskId id) { return q.at(id) == Agent::Robot; });
    if (!any) return false;
  }
  for (const auto& cut : problem.excluded) {
    bool same = std::all_of(problem.items.begin(), problem.items.end(), [&](const auto& item) {
      auto it = cut.find(item.id);
      return it != cut.end() && it->second == q.at(item.id);
    });
    if (same) return false;
  }
  return true;
}

namespace {

using Clock = std::chrono::steady_clock;

class AllocationSearch {
 public:
  AllocationSearch(const AllocationProblem& problem, const SolverLimits& limits)
      : problem_(problem), limits_(limits), start_(Clock::now()) {
    for (std::size_t i = 0; i < problem.items.size(); ++i) {
      const auto& item = problem.items[i];
      if (item.fixed) {
        (*item.fixed == Agent::Human ? fixed_human_ : fixed_robot_) +=
            *item.fixed == Agent::Human ? item.human_cost : item.robot_cost;
      } else {
        vars_.push_back(i);
      }
    }
    std::set<SubtaskId> ready(problem.robot_ready.begin(), problem.robot_ready.end());
    in_ready_.resize(vars_.size());
    suffix_min_.assign(vars_.size() + 1, 0.0);
    suffix_ready_.assign(vars_.size() + 1, 0);
    for (std::size_t k = vars_.size(); k-- > 0;) {
      const auto& item = problem.items[vars_[k]];
      in_ready_[k] = ready.contains(item.id);
      suffix_min_[k] = suffix_min_[k + 1] + std::min(item.human_cost, item.robot_cost);
      suffix_ready_[k] = suffix_ready_[k + 1] + (in_ready_[k] ? 1 : 0);
    }
    values_.assign(vars_.size(), Agent::Robot);
  }

  Allocation run() {
    seed_incumbent(problem_.seed);
    seed_incumbent({});
    dfs(0, fixed_human_, fixed_robot_, false);

    Allocation out;
    if (!best_) {
      if (stopped_) throw InfeasibleAllocation("allocation search stopped before any feasible vector");
      throw InfeasibleAllocation("no allocation satisfies the constraints");
    }
    for (const auto& item : problem_.items) {
      out.q[item.id] = item.fixed ? *item.fixed : Agent::Robot;
    }
    for (std::size_t k = 0; k < vars_.size(); ++k) {
      out.q[problem_.items[vars_[k]].id] = (*best_)[k];
    }
    out.human_load = 0.0;
    out.robot_load = 0.0;
    for (const auto& item : problem_.items) {
      if (out.q[item.id] == Agent::Human) out.human_load += item.human_cost;
      else out.robot_load += item.robot_cost;
    }
    out.objective = std::max(out.human_load, out.robot_load);
    out.incumbent_optimal = !stopped_;
    out.nodes = nodes_;
    return out;
  }

 private:
  double tolerance() const { return 1e-9 * std::max(1.0, std::abs(best_value_)); }

  bool limit_hit() {
    if (stopped_) return true;
    if (limits_.node_limit > 0 && nodes_ >= limits_.node_limit) stopped_ = true;
    if ((nodes_ & 255) == 0 && limits_.time_limit > 0) {
      std::chrono::duration<double> elapsed = Clock::now() - start_;
      if (elapsed.count() > limits_.time_limit) stopped_ = true;
    }
    return stopped_;
  }

  // Lexicographic order with robot before human.
  static bool robot_first_less(const std::vector<Agent>& a, const std::vector<Agent>& b) {
    for (std::size_t k = 0; k < a.size(); ++k) {
      if (a[k] != b[k]) return a[k] == Agent::Robot;
    }
    return false;
  }

  // -1 / 0 / +1 comparing values_[0..depth) against the incumbent prefix.
  int compare_prefix(std::size_t depth) const {
    for (std::size_t k = 0; k < depth; ++k) {
      if (values_[k] != (*best_)[k]) return values_[k] == Agent::Robot ? -1 : 1;
    }
    return 0;
  }

  bool excluded(const std::vector<Agent>& vals) const {
    for (const auto& cut : problem_.excluded) {
      bool same = true;
      for (const auto& item : problem_.items) {
        auto it = cut.find(item.id);
        if (it == cut.end()) {
          same = false;
          break;
        }
        Agent v = item.fixed ? *item.fixed : Agent::Robot;
        if (!item.fixed) {
          auto pos = std::find_if(vars_.begin(), vars_.end(), [&](std::size_t i) {
            return problem_.items[i].id == item.id;
          });
          v = vals[static_cast<std::size_t>(pos - vars_.begin())];
        }
        if (it->second != v) {
          same = false;
          break;
        }
      }
      if (same) return true;
    }
    return false;
  }

  void offer(const std::vector<Agent>& vals, double value) {
    if (problem_.require_robot_task) {
      bool any = false;
      for (std::size_t k = 0; k < vars_.size(); ++k) any |= in_ready_[k] && vals[k] == Agent::Robot;
      if (!any) return;
    }
    if (excluded(vals)) return;
    if (!best_ || value < best_value_ - tolerance() ||
        (std::abs(value - best_value_) <= tolerance() && robot_first_less(vals, *best_))) {
      best_ = vals;
      best_value_ = value;
    }
  }

  // Completes a partial seed greedily (unset variables go to the agent that
  // keeps the running maximum lowest) and offers it as an incumbent.
  void seed_incumbent(const Assignment& seed) {
    std::vector<Agent> vals(vars_.size(), Agent::Robot);
    std::vector<bool> set(vars_.size(), false);
    double human = fixed_human_;
    double robot = fixed_robot_;
    for (std::size_t k = 0; k < vars_.size(); ++k) {
      const auto& item = problem_.items[vars_[k]];
      auto it = seed.find(item.id);
      if (it == seed.end()) continue;
      vals[k] = it->second;
      set[k] = true;
      (it->second == Agent::Human ? human : robot) +=
          it->second == Agent::Human ? item.human_cost : item.robot_cost;
    }
    for (std::size_t k = 0; k < vars_.size(); ++k) {
      if (set[k]) continue;
      const auto& item = problem_.items[vars_[k]];
      if (std::max(human + item.human_cost, robot) < std::max(human, robot + item.robot_cost)) {
        vals[k] = Agent::Human;
        human += item.human_cost;
      } else {
        robot += item.robot_cost;
      }
    }
    if (problem_.require_robot_task) {
      bool any = false;
      for (std::size_t k = 0; k < vars_.size(); ++k) any |= in_ready_[k] && vals[k] == Agent::Robot;
      if (!any) {
        for (std::size_t k = 0; k < vars_.size(); ++k) {
          if (in_ready_[k] && !set[k]) {
            const auto& item = problem_.items[vars_[k]];
            vals[k] = Agent::Robot;
            human -= item.human_cost;
            robot += item.robot_cost;
            break;
          }
        }
      }
    }
    offer(vals, std::max(human, robot));
  }

  void dfs(std::size_t depth, double human, double robot, bool robot_ready_taken) {
    ++nodes_;
    if (limit_hit()) return;
    if (problem_.require_robot_task && !robot_ready_taken && suffix_ready_[depth] == 0) return;

    const double bound = std::max({human, robot, 0.5 * (human + robot + suffix_min_[depth])});
    if (best_) {
      if (bound > best_value_ + tolerance()) return;
      if (bound >= best_value_ - tolerance() && compare_prefix(depth) > 0) return;
    }
    if (depth == vars_.size()) {
      offer(values_, std::max(human, robot));
      return;
    }
    const auto& item = problem_.items[vars_[depth]];
    values_[depth] = Agent::Robot;
    dfs(depth + 1, human, robot + item.robot_cost, robot_ready_taken || in_ready_[depth]);
    values_[depth] = Agent::Human;
    dfs(depth + 1, human + item.human_cost, robot, robot_ready_taken);
    values_[depth] = Agent::Robot;
  }

  const AllocationProblem& problem_;
  SolverLimits limits_;
  Clock::time_point start_;
  std::vector<std::size_t> vars_;
  std::vector<bool> in_ready_;
  std::vector<double> suffix_min_;
  std::vector<int> suffix_ready_;
  std::vector<Agent> values_;
  double fixed_human_ = 0.0;
  double fixed_robot_ = 0.0;
  std::optional<std::vector<Agent>> best_;
  double best_value_ = std::numeric_limits<double>::infinity();
  std::int64_t nodes_ = 0;
  bool stopped_ = false;
};

}  // namespace

Allocation solve_allocation_problem(const AllocationProblem& problem, const SolverLimits& limits) {
  if (problem.items.empty()) throw EmptyTaskSet("no open subtasks to allocate");
  if (problem.require_robot_task) {
    std::set<SubtaskId> free_ids;
    for (const auto& item : problem.items) {
      if (!item.fixed) free_ids.insert(item.id);
    }
    bool any = std::any_of(problem.robot_ready.begin(), problem.robot_ready.end(),
                           [&](SubtaskId id) { return free_ids.contains(id); });
    if (!any) throw InfeasibleAllocation("no subtask the robot can start immediately (U is empty)");
  }
  return AllocationSearch(problem, limits).run();
}

AllocationProblem make_allocation_problem(const TaskGraph& graph, const PointEstimates& estimates,
                                          const CostParams& params, const Allocation* prev,
                                          const Assignment& pinned) {
  AllocationProblem problem;
  for (SubtaskId id : graph.open_subtasks()) {
    const Subtask& t = graph.subtask(id);
    AllocationItem item;
    item.id = id;
    item.human_cost = assignment_cost(t, Agent::Human, estimates, params, prev);
    item.robot_cost = assignment_cost(t, Agent::Robot, estimates, params, prev);
    if (t.state == SubtaskState::AssignedToHuman) item.fixed = Agent::Human;
    if (t.state == SubtaskState::AssignedToRobotCorrectly) item.fixed = Agent::Robot;
    if (auto it = pinned.find(id); it != pinned.end()) item.fixed = it->second;
    if (item.fixed) {
      // Committed work carries no churn.
      item.human_cost = assignment_cost(t, Agent::Human, estimates, params, nullptr);
      item.robot_cost = assignment_cost(t, Agent::Robot, estimates, params, nullptr);
    }
    problem.items.push_back(item);
  }
  for (SubtaskId id : immediately_feasible_robot_set(graph)) {
    if (!pinned.contains(id)) problem.robot_ready.push_back(id);
  }
  if (prev) problem.seed = warm_start_from(*prev, graph);
  return problem;
}

Allocation solve_allocation(const TaskGraph& graph, const PointEstimates& estimates,
                            const CostParams& params, const Allocation* prev) {
  params.validate();
  AllocationProblem problem = make_allocation_problem(graph, estimates, params, prev);
  return solve_allocation_problem(problem, params.limits());
}

Assignment warm_start_from(const Allocation& prev, const TaskGraph& graph) {
  Assignment seed;
  for (const auto& [id, agent] : prev.q) {
    if (!graph.contains(id)) continue;
    SubtaskState s = graph.state(id);
    if (s == SubtaskState::PlacedCorrectly) continue;
    if (s == SubtaskState::AssignedToHuman && agent != Agent::Human) continue;
    if (s == SubtaskState::AssignedToRobotCorrectly && agent != Agent::Robot) continue;
    seed[id] = agent;
  }
  return seed;
}

}  // namespace hrc
