#pragma once

// JSON forms shared by the event log, scenario files and the session protocol.

#include "json.hpp"

#include "hrc/allocation.hpp"
#include "hrc/belief.hpp"
#include "hrc/scheduler.hpp"
#include "hrc/task_model.hpp"

namespace hrc {

using Json = nlohmann::json;

Json to_json(const AgentAction& action);
/// Throws ConfigError on a malformed object.
AgentAction action_from_json(const Json& j);

Json to_json(const Belief& belief);
Belief belief_from_json(const Json& j);

Json to_json(const Assignment& q);
Assignment assignment_from_json(const Json& j);
Json to_json(const Allocation& allocation);

Json to_json(const ExtendedTask& task);
ExtendedTask extended_task_from_json(const Json& j);
Json to_json(const Schedule& schedule);
Schedule schedule_from_json(const Json& j);

/// Per-subtask state, block and required colour plus both inventories.
Json graph_snapshot(const TaskGraph& graph);

Json to_json(const ScenarioConfig& config);
/// Missing keys fall back to study_defaults(); the pattern is mandatory.
ScenarioConfig scenario_from_json(const Json& j);

Json to_json(const CostParams& params);
void update_from_json(CostParams& params, const Json& j);
Json to_json(const EstimatorParams& params);
void update_from_json(EstimatorParams& params, const Json& j);

std::string digest_hex(std::uint64_t digest);

}  // namespace hrc
