#pragma once

// Seeded discrete-event simulation of the block-placement study: scripted
// humans, the four study patterns, and run-level metrics.

#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "hrc/event_log.hpp"
#include "hrc/planner.hpp"

namespace hrc {

enum class Style {
  Leader,
  CollaborativeLeader,
  CollaborativeFollower,
  Follower,
  Switcher,
  ErrorProne,
  ConfusedTail,
};

struct HumanScript {
  Style style = Style::Leader;
  double reject_prob = 1.0;                 // H6 instead of H4 on a robot assignment
  ColorMap<double> assign_to_robot_bias{};  // H2 instead of H1, per required colour
  double memory_accuracy = 1.0;             // chance of remembering a partially known spot
  double speed_factor = 1.0;
  double error_rate = 0.0;                  // wrong colour on a spot the human knows
  double t_switch = 150.0;                  // switcher: leader before, follower after
  int tail_row = 5;                         // confused_tail: spot index that goes wrong
  double patience = 30.0;                   // collaborative follower: idle time before self-acting
  std::uint64_t rng_seed = 1;

  void validate() const;
  std::string name() const;
};

/// Presets by name: leader, collaborative_leader, collaborative_follower,
/// follower, switcher(T), error_prone(eps), confused_tail(row).
HumanScript make_script(const std::string& text);

Json to_json(const HumanScript& script);
HumanScript script_from_json(const Json& j);

/// Study patterns "A".."D" with their partially known spots and distractors.
ScenarioConfig study_scenario(char pattern = 'A');

class ScriptedHuman : public HumanDriver {
 public:
  ScriptedHuman(HumanScript script, const PlannerParams& params);

  HumanChoice decide(const HumanView& view) override;
  void completed(const AgentAction& action, const TaskGraph& after) override;
  void rejected(const AgentAction& action, RejectReason reason) override;

  /// Colour the human would pick for a self-placement right now.
  Color choose_color(const TaskGraph& graph, SubtaskId id);

 private:
  bool leads(double now) const;
  HumanChoice act(const TaskGraph& graph, const AgentAction& action);
  std::optional<AgentAction> self_action(const HumanView& view);
  double uniform();

  HumanScript script_;
  PlannerParams params_;
  std::mt19937_64 rng_;
  std::set<SubtaskId> failed_;       // spots where a wrong block was put down
  std::set<SubtaskId> remembered_;   // partially known spots decided as remembered
  std::set<SubtaskId> forgotten_;
  double last_activity_ = 0.0;
  std::optional<std::set<SubtaskId>> inbox_;  // assignments to answer before the next own placement
};

struct RunSummary {
  std::string status;  // complete, stalled, horizon, fault
  std::string message;
  double makespan = 0.0;
  double op = 0.0;
  bool op_fallback = false;
  int human_errors = 0;      // wrong colours placed or assigned
  int misplaced = 0;
  int robot_assignments = 0; // R2
  int accepted = 0;          // H4
  int rejected = 0;          // H6
  int human_assigned = 0;    // H2
  int fixes = 0;             // R3
  int refusals = 0;          // R6
  int human_placements = 0;
  int robot_placements = 0;
  double final_pf = 0.0;
  double final_pe = 0.0;
  std::string digest;
};

Json to_json(const RunSummary& summary);

struct SimResult {
  EventLog log;
  RunSummary summary;
};

/// One full run. `sink`, when given, receives each record as it is appended.
SimResult run_sim(const ScenarioConfig& config, const HumanScript& script, const PlannerParams& params,
                  std::uint64_t seed, std::ostream* sink = nullptr);

/// Appends the closing run_meta record (status, final digest, summary).
RunSummary finish_run(EventLog& log, const Episode& episode, const std::string& status,
                      const std::string& message = {});

/// Planner parameters used by simulation runs: both solvers bounded by node
/// counts rather than wall clock so every run is reproducible.
PlannerParams deterministic_params();

struct PreferenceScore {
  double value = 0.0;
  bool fallback = false;  // too few samples for the fit; trapezoid on raw points
};

/// Area under a least-squares polynomial fit of (t, E[alpha_f]) with t
/// normalized to [0, 1], integrated over [t0, 1].
PreferenceScore overall_preference(const std::vector<std::pair<double, double>>& samples, double t0 = 0.2,
                                   int degree = 4);
PreferenceScore overall_preference(const std::vector<EventRecord>& log, double t0 = 0.2, int degree = 4);

/// Summary counters recomputed from a log.
RunSummary summarize(const std::vector<EventRecord>& log);

}  // namespace hrc
