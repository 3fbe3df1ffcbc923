#include "hrc/task_model.hpp"

#include <algorithm>
#include <deque>
#include <sstream>

namespace hrc {

const char* to_string(RejectReason reason) {
  switch (reason) {
    case RejectReason::UnknownSubtask: return "unknown_subtask";
    case RejectReason::AgentMismatch: return "agent_mismatch";
    case RejectReason::IllegalTransition: return "illegal_transition";
    case RejectReason::PrecedenceViolation: return "precedence";
    case RejectReason::MissingColor: return "missing_color";
    case RejectReason::WrongColor: return "wrong_color";
    case RejectReason::OutOfStock: return "out_of_stock";
    case RejectReason::Claimed: return "claimed";
    case RejectReason::LightRed: return "light_red";
  }
  return "unknown";
}

AgentAction make_action(ActionKind kind, SubtaskId subtask, std::optional<Color> color) {
  return AgentAction{agent_of(kind), kind, subtask, color};
}

void ScenarioConfig::validate() const {
  if (workspaces < 1 || spots_per_workspace < 1) {
    throw ConfigError("scenario needs at least one workspace and one spot");
  }
  for (SubtaskId id = 1; id <= subtask_count(); ++id) {
    if (!pattern.contains(id)) {
      throw ConfigError("pattern has no colour for subtask " + std::to_string(id));
    }
  }
  for (const auto& [id, color] : pattern) {
    if (id < 1 || id > subtask_count()) {
      throw ConfigError("pattern entry for unknown subtask " + std::to_string(id));
    }
  }
  for (const auto& [id, color] : distractors) {
    if (id < 1 || id > subtask_count()) {
      throw ConfigError("distractor for unknown subtask " + std::to_string(id));
    }
    if (pattern.at(id) == color) {
      throw ConfigError("distractor equals the required colour at subtask " + std::to_string(id));
    }
  }
  for (const auto& per_agent : inventory) {
    for (int n : per_agent) {
      if (n < 0) throw ConfigError("negative block inventory");
    }
  }
  for (const auto& times : nominal_times) {
    for (double t : times) {
      if (!(t > 0.0)) throw ConfigError("nominal times must be positive");
    }
  }
}

ScenarioConfig study_defaults() {
  ScenarioConfig c;
  c.name = "study";
  c.workspaces = 4;
  c.spots_per_workspace = 5;
  c.inventory[index(Agent::Human)] = {10, 10, 10, 10};
  c.inventory[index(Agent::Robot)] = {8, 8, 8, 8};
  // green near/near, pink far for the human and near for the robot,
  // orange near for the human and far for the robot, blue far/far.
  c.distance[index(Agent::Human)] = {Distance::Near, Distance::Far, Distance::Near, Distance::Far};
  c.distance[index(Agent::Robot)] = {Distance::Near, Distance::Near, Distance::Far, Distance::Far};
  c.nominal_times[index(Agent::Human)] = {12.0, 20.0};
  c.nominal_times[index(Agent::Robot)] = {35.0, 60.0};
  return c;
}

const Subtask& TaskGraph::subtask(SubtaskId id) const {
  if (!contains(id)) {
    throw RejectedAction(RejectReason::UnknownSubtask, "no subtask " + std::to_string(id));
  }
  return subtasks_[static_cast<std::size_t>(id - 1)];
}

std::vector<SubtaskId> TaskGraph::node_predecessors(SubtaskId node) const {
  if (node == kStart) return {};
  if (node == finish_id()) {
    std::vector<SubtaskId> tails;
    for (const auto& s : subtasks_) {
      if (s.spot == config_->spots_per_workspace) tails.push_back(s.id);
    }
    return tails;
  }
  const auto& preds = subtask(node).predecessors;
  if (preds.empty()) return {kStart};
  return preds;
}

bool TaskGraph::predecessors_done(SubtaskId id) const {
  return std::all_of(subtask(id).predecessors.begin(), subtask(id).predecessors.end(),
                     [&](SubtaskId p) { return state(p) == SubtaskState::PlacedCorrectly; });
}

bool TaskGraph::all_placed() const {
  return std::all_of(subtasks_.begin(), subtasks_.end(),
                     [](const Subtask& s) { return s.state == SubtaskState::PlacedCorrectly; });
}

int TaskGraph::placed_count() const {
  return static_cast<int>(std::count_if(subtasks_.begin(), subtasks_.end(), [](const Subtask& s) {
    return s.state == SubtaskState::PlacedCorrectly;
  }));
}

std::vector<SubtaskId> TaskGraph::open_subtasks() const {
  std::vector<SubtaskId> ids;
  for (const auto& s : subtasks_) {
    if (s.state != SubtaskState::PlacedCorrectly) ids.push_back(s.id);
  }
  return ids;
}

int TaskGraph::shared_blocks(Color c) const {
  int n = 0;
  for (const auto& s : subtasks_) {
    bool on_table = s.state == SubtaskState::PlacedCorrectly || s.state == SubtaskState::Misplaced;
    if (on_table && s.block == c) ++n;
  }
  return n;
}

std::vector<SubtaskId> TaskGraph::topological_order() const {
  const int nodes = size() + 2;
  std::vector<int> indegree(static_cast<std::size_t>(nodes), 0);
  std::vector<std::vector<SubtaskId>> succ(static_cast<std::size_t>(nodes));
  for (SubtaskId v = 0; v < nodes; ++v) {
    for (SubtaskId p : node_predecessors(v)) {
      succ[static_cast<std::size_t>(p)].push_back(v);
      ++indegree[static_cast<std::size_t>(v)];
    }
  }
  std::deque<SubtaskId> ready;
  for (SubtaskId v = 0; v < nodes; ++v) {
    if (indegree[static_cast<std::size_t>(v)] == 0) ready.push_back(v);
  }
  std::vector<SubtaskId> order;
  while (!ready.empty()) {
    SubtaskId v = ready.front();
    ready.pop_front();
    order.push_back(v);
    for (SubtaskId w : succ[static_cast<std::size_t>(v)]) {
      if (--indegree[static_cast<std::size_t>(w)] == 0) ready.push_back(w);
    }
  }
  return order;
}

std::uint64_t TaskGraph::digest() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::uint64_t v) {
    h ^= v;
    h *= 1099511628211ULL;
  };
  for (const auto& s : subtasks_) {
    mix(static_cast<std::uint64_t>(s.id));
    mix(static_cast<std::uint64_t>(s.state));
    mix(s.block ? static_cast<std::uint64_t>(*s.block) + 1 : 0);
  }
  for (const auto& per_agent : inventory_) {
    for (int n : per_agent) mix(static_cast<std::uint64_t>(n));
  }
  return h;
}

TaskGraph build_study_graph(const ScenarioConfig& config) {
  config.validate();
  TaskGraph g;
  g.config_ = std::make_shared<const ScenarioConfig>(config);
  g.inventory_ = config.inventory;
  for (int w = 1; w <= config.workspaces; ++w) {
    for (int s = 1; s <= config.spots_per_workspace; ++s) {
      Subtask t;
      t.id = (w - 1) * config.spots_per_workspace + s;
      t.workspace = w;
      t.spot = s;
      t.required_color = config.pattern.at(t.id);
      if (s > 1) t.predecessors = {t.id - 1};
      t.t_h = config.nominal_time(Agent::Human, t.required_color);
      t.t_r = config.nominal_time(Agent::Robot, t.required_color);
      g.subtasks_.push_back(std::move(t));
    }
  }
  return g;
}

std::optional<SubtaskState> transition(SubtaskState from, ActionKind kind, bool correct_color) {
  using S = SubtaskState;
  using K = ActionKind;
  switch (from) {
    case S::Initial:
      switch (kind) {
        case K::H1: return correct_color ? S::PlacedCorrectly : S::Misplaced;
        case K::H2: return correct_color ? S::AssignedToRobotCorrectly : S::AssignedToRobotIncorrectly;
        case K::R1: return S::PlacedCorrectly;
        case K::R2: return S::AssignedToHuman;
        default: return std::nullopt;
      }
    case S::Misplaced:
      if (kind == K::H3 || kind == K::R3) return S::Initial;
      return std::nullopt;
    case S::AssignedToRobotIncorrectly:
      if (kind == K::H5 || kind == K::R6) return S::Initial;
      return std::nullopt;
    case S::AssignedToRobotCorrectly:
      if (kind == K::H5) return S::Initial;
      if (kind == K::R4) return S::PlacedCorrectly;
      return std::nullopt;
    case S::AssignedToHuman:
      if (kind == K::R5 || kind == K::H6) return S::Initial;
      if (kind == K::H4) return S::PlacedCorrectly;
      return std::nullopt;
    case S::PlacedCorrectly:
      return std::nullopt;
  }
  return std::nullopt;
}

namespace {

bool needs_precedence(ActionKind k) {
  return k == ActionKind::H1 || k == ActionKind::H2 || k == ActionKind::R1 || k == ActionKind::R2;
}

}  // namespace

std::optional<RejectReason> check_action(const TaskGraph& graph, const AgentAction& action) {
  if (!graph.contains(action.subtask)) return RejectReason::UnknownSubtask;
  if (agent_of(action.kind) != action.agent) return RejectReason::AgentMismatch;
  const Subtask& t = graph.subtask(action.subtask);
  if (needs_color(action.kind) && !action.color) return RejectReason::MissingColor;
  const bool places_required = action.kind == ActionKind::H4 || action.kind == ActionKind::R1 ||
                               action.kind == ActionKind::R4;
  if (places_required && action.color && *action.color != t.required_color) {
    return RejectReason::WrongColor;
  }
  const bool correct = !action.color || *action.color == t.required_color;
  if (!transition(t.state, action.kind, correct)) return RejectReason::IllegalTransition;
  if (needs_precedence(action.kind) && !graph.predecessors_done(t.id)) {
    return RejectReason::PrecedenceViolation;
  }
  switch (action.kind) {
    case ActionKind::H1:
      if (graph.inventory(Agent::Human, *action.color) == 0) return RejectReason::OutOfStock;
      break;
    case ActionKind::H4:
      if (graph.inventory(Agent::Human, t.required_color) == 0) return RejectReason::OutOfStock;
      break;
    case ActionKind::R1:
    case ActionKind::R4:
      if (graph.inventory(Agent::Robot, t.required_color) == 0) return RejectReason::OutOfStock;
      break;
    default:
      break;
  }
  return std::nullopt;
}

TaskGraph apply_action(const TaskGraph& graph, const AgentAction& action) {
  if (auto reason = check_action(graph, action)) {
    std::ostringstream msg;
    msg << to_string(action.kind) << " on subtask " << action.subtask << " rejected: "
        << to_string(*reason);
    throw RejectedAction(*reason, msg.str());
  }
  TaskGraph next = graph;
  Subtask& t = next.mutable_subtask(action.subtask);
  const bool correct = !action.color || *action.color == t.required_color;
  const SubtaskState to = *transition(t.state, action.kind, correct);
  auto& human_inv = next.inventory_[index(Agent::Human)];
  auto& robot_inv = next.inventory_[index(Agent::Robot)];

  switch (action.kind) {
    case ActionKind::H1:
      --human_inv[index(*action.color)];
      t.block = *action.color;
      break;
    case ActionKind::H2:
      t.block = *action.color;
      break;
    case ActionKind::H4:
      --human_inv[index(t.required_color)];
      t.block = t.required_color;
      break;
    case ActionKind::R1:
    case ActionKind::R4:
      --robot_inv[index(t.required_color)];
      t.block = t.required_color;
      break;
    case ActionKind::H3:
    case ActionKind::R3:
      // Misplaced blocks always came from the human's tables.
      ++human_inv[index(*t.block)];
      t.block.reset();
      break;
    case ActionKind::H5:
    case ActionKind::R6:
      t.block.reset();
      break;
    case ActionKind::R2:
    case ActionKind::R5:
    case ActionKind::H6:
      break;
  }
  t.state = to;
  return next;
}

std::vector<AgentAction> feasible_actions(const TaskGraph& graph, Agent agent) {
  std::vector<AgentAction> out;
  for (const auto& t : graph.subtasks()) {
    for (ActionKind k : kActionKinds) {
      if (agent_of(k) != agent) continue;
      if (needs_color(k)) {
        for (Color c : kColors) {
          AgentAction a = make_action(k, t.id, c);
          if (!check_action(graph, a)) out.push_back(a);
        }
        continue;
      }
      std::optional<Color> color;
      if (k == ActionKind::H4 || k == ActionKind::R1 || k == ActionKind::R4) color = t.required_color;
      AgentAction a = make_action(k, t.id, color);
      if (!check_action(graph, a)) out.push_back(a);
    }
  }
  return out;
}

std::vector<SubtaskId> immediately_feasible_robot_set(const TaskGraph& graph) {
  std::vector<SubtaskId> u;
  for (const auto& t : graph.subtasks()) {
    if (t.state != SubtaskState::Initial && t.state != SubtaskState::Misplaced) continue;
    if (!graph.predecessors_done(t.id)) continue;
    if (graph.inventory(Agent::Robot, t.required_color) == 0) continue;
    u.push_back(t.id);
  }
  return u;
}

std::string_view to_string(Agent a) { return a == Agent::Human ? "human" : "robot"; }

std::string_view to_string(Color c) {
  switch (c) {
    case Color::Green: return "green";
    case Color::Pink: return "pink";
    case Color::Orange: return "orange";
    case Color::Blue: return "blue";
  }
  return "?";
}

std::string_view to_string(Distance d) { return d == Distance::Near ? "near" : "far"; }

std::string_view to_string(SubtaskState s) {
  switch (s) {
    case SubtaskState::Initial: return "Initial";
    case SubtaskState::PlacedCorrectly: return "PlacedCorrectly";
    case SubtaskState::Misplaced: return "Misplaced";
    case SubtaskState::AssignedToRobotCorrectly: return "AssignedToRobotCorrectly";
    case SubtaskState::AssignedToRobotIncorrectly: return "AssignedToRobotIncorrectly";
    case SubtaskState::AssignedToHuman: return "AssignedToHuman";
  }
  return "?";
}

std::string_view to_string(ActionKind k) {
  static constexpr std::array<std::string_view, 12> names{"H1", "H2", "H3", "H4", "H5", "H6",
                                                          "R1", "R2", "R3", "R4", "R5", "R6"};
  return names[static_cast<std::size_t>(k)];
}

std::optional<Agent> parse_agent(std::string_view s) {
  if (s == "human") return Agent::Human;
  if (s == "robot") return Agent::Robot;
  return std::nullopt;
}

std::optional<Color> parse_color(std::string_view s) {
  for (Color c : kColors) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

std::optional<Distance> parse_distance(std::string_view s) {
  if (s == "near") return Distance::Near;
  if (s == "far") return Distance::Far;
  return std::nullopt;
}

std::optional<SubtaskState> parse_state(std::string_view s) {
  for (SubtaskState st : kStates) {
    if (to_string(st) == s) return st;
  }
  return std::nullopt;
}

std::optional<ActionKind> parse_kind(std::string_view s) {
  for (ActionKind k : kActionKinds) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

}  // namespace hrc
