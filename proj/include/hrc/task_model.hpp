#pragma once

// Collaborative block-placement task: precedence DAG of subtasks, the
// per-subtask state machine and the twelve agent actions.

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hrc/error.hpp"

namespace hrc {

enum class Agent : std::uint8_t { Human, Robot };
enum class Color : std::uint8_t { Green, Pink, Orange, Blue };
enum class Distance : std::uint8_t { Near, Far };

inline constexpr std::array<Color, 4> kColors{Color::Green, Color::Pink, Color::Orange,
                                              Color::Blue};

template <class T>
using ColorMap = std::array<T, 4>;
template <class T>
using AgentMap = std::array<T, 2>;

constexpr std::size_t index(Color c) { return static_cast<std::size_t>(c); }
constexpr std::size_t index(Agent a) { return static_cast<std::size_t>(a); }
constexpr Agent other(Agent a) { return a == Agent::Human ? Agent::Robot : Agent::Human; }

enum class SubtaskState : std::uint8_t {
  Initial,
  PlacedCorrectly,
  Misplaced,
  AssignedToRobotCorrectly,
  AssignedToRobotIncorrectly,
  AssignedToHuman,
};

inline constexpr std::array<SubtaskState, 6> kStates{
    SubtaskState::Initial,
    SubtaskState::PlacedCorrectly,
    SubtaskState::Misplaced,
    SubtaskState::AssignedToRobotCorrectly,
    SubtaskState::AssignedToRobotIncorrectly,
    SubtaskState::AssignedToHuman,
};

// H1 select-for-self, H2 assign-to-robot, H3 return block, H4 perform robot
// assignment, H5 cancel robot assignment, H6 reject robot assignment; R1..R6
// mirror them for the robot.
enum class ActionKind : std::uint8_t { H1, H2, H3, H4, H5, H6, R1, R2, R3, R4, R5, R6 };

inline constexpr std::array<ActionKind, 12> kActionKinds{
    ActionKind::H1, ActionKind::H2, ActionKind::H3, ActionKind::H4,
    ActionKind::H5, ActionKind::H6, ActionKind::R1, ActionKind::R2,
    ActionKind::R3, ActionKind::R4, ActionKind::R5, ActionKind::R6,
};

constexpr Agent agent_of(ActionKind k) {
  return static_cast<int>(k) < 6 ? Agent::Human : Agent::Robot;
}

/// Kinds whose effect depends on the block colour chosen by the actor.
constexpr bool needs_color(ActionKind k) { return k == ActionKind::H1 || k == ActionKind::H2; }

/// Kinds that put a block on the shared area.
constexpr bool is_placement(ActionKind k) {
  return k == ActionKind::H1 || k == ActionKind::H4 || k == ActionKind::R1 ||
         k == ActionKind::R4;
}

using SubtaskId = int;

struct AgentAction {
  Agent agent = Agent::Human;
  ActionKind kind = ActionKind::H1;
  SubtaskId subtask = 0;
  std::optional<Color> color;

  friend bool operator==(const AgentAction&, const AgentAction&) = default;
};

AgentAction make_action(ActionKind kind, SubtaskId subtask,
                        std::optional<Color> color = std::nullopt);

struct ScenarioConfig {
  std::string name = "custom";
  int workspaces = 4;
  int spots_per_workspace = 5;
  /// Required colour per subtask id (1-based, workspace-major).
  std::map<SubtaskId, Color> pattern;
  /// Partially known spots: id -> the distractor colour shown next to the true one.
  std::map<SubtaskId, Color> distractors;
  AgentMap<ColorMap<int>> inventory{};
  AgentMap<ColorMap<Distance>> distance{};
  /// Seconds per placement, indexed [agent][near=0 / far=1].
  AgentMap<std::array<double, 2>> nominal_times{};

  int subtask_count() const { return workspaces * spots_per_workspace; }
  double nominal_time(Agent a, Color c) const {
    return nominal_times[index(a)][static_cast<std::size_t>(distance[index(a)][index(c)])];
  }
  /// Throws ConfigError when inconsistent.
  void validate() const;
};

/// Four workspaces of five spots, 10/8 blocks per colour, the study distances
/// and the default nominal times. The pattern is left empty.
ScenarioConfig study_defaults();

struct Subtask {
  SubtaskId id = 0;
  int workspace = 1;
  int spot = 1;
  Color required_color = Color::Green;
  SubtaskState state = SubtaskState::Initial;
  std::vector<SubtaskId> predecessors;
  double t_h = 0.0;
  double t_r = 0.0;
  /// Block on the shared area (Placed/Misplaced) or colour named in a
  /// human-to-robot assignment.
  std::optional<Color> block;
};

class TaskGraph {
 public:
  static constexpr SubtaskId kStart = 0;

  TaskGraph() = default;

  const ScenarioConfig& config() const { return *config_; }
  int size() const { return static_cast<int>(subtasks_.size()); }
  SubtaskId finish_id() const { return size() + 1; }
  bool contains(SubtaskId id) const { return id >= 1 && id <= size(); }

  const Subtask& subtask(SubtaskId id) const;
  const std::vector<Subtask>& subtasks() const { return subtasks_; }
  SubtaskState state(SubtaskId id) const { return subtask(id).state; }

  /// Predecessors of a dummy-inclusive node; the finish node depends on chain tails.
  std::vector<SubtaskId> node_predecessors(SubtaskId node) const;
  bool predecessors_done(SubtaskId id) const;
  bool all_placed() const;
  int placed_count() const;
  std::vector<SubtaskId> open_subtasks() const;

  int inventory(Agent a, Color c) const { return inventory_[index(a)][index(c)]; }
  /// Blocks of colour c currently lying on the shared area.
  int shared_blocks(Color c) const;

  /// Kahn ordering over all nodes including the dummy start and finish.
  std::vector<SubtaskId> topological_order() const;

  /// Order-independent fingerprint of states, blocks and inventories.
  std::uint64_t digest() const;

  friend TaskGraph build_study_graph(const ScenarioConfig& config);
  friend TaskGraph apply_action(const TaskGraph& graph, const AgentAction& action);

 private:
  Subtask& mutable_subtask(SubtaskId id) { return subtasks_.at(static_cast<std::size_t>(id - 1)); }

  std::shared_ptr<const ScenarioConfig> config_;
  std::vector<Subtask> subtasks_;
  AgentMap<ColorMap<int>> inventory_{};
};

TaskGraph build_study_graph(const ScenarioConfig& config);

/// Per-spot state graph: resulting state, or nullopt when (state, kind) is no edge.
/// `correct_color` only matters for H1 and H2.
std::optional<SubtaskState> transition(SubtaskState from, ActionKind kind, bool correct_color);

/// Applies one action; throws RejectedAction (graph untouched) on any violation.
TaskGraph apply_action(const TaskGraph& graph, const AgentAction& action);

/// Returns why apply_action would reject, or nullopt when it would succeed.
std::optional<RejectReason> check_action(const TaskGraph& graph, const AgentAction& action);

/// Every action of `agent` that apply_action accepts. H1/H2 are listed once
/// per colour in stock; R1/R4/H4 carry the required colour.
std::vector<AgentAction> feasible_actions(const TaskGraph& graph, Agent agent);

/// U: subtasks the robot could start placing now (Initial, or Misplaced to be
/// fixed first) with every predecessor placed and the block in stock.
std::vector<SubtaskId> immediately_feasible_robot_set(const TaskGraph& graph);

std::string_view to_string(Agent a);
std::string_view to_string(Color c);
std::string_view to_string(Distance d);
std::string_view to_string(SubtaskState s);
std::string_view to_string(ActionKind k);
std::optional<Agent> parse_agent(std::string_view s);
std::optional<Color> parse_color(std::string_view s);
std::optional<Distance> parse_distance(std::string_view s);
std::optional<SubtaskState> parse_state(std::string_view s);
std::optional<ActionKind> parse_kind(std::string_view s);

}  // namespace hrc
