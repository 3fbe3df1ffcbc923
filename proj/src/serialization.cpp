#include "hrc/serialization.hpp"

#include <cstdio>

namespace hrc {

namespace {

template <class T, class Parse>
T parse_or_throw(const Json& j, Parse parse, const char* what) {
  if (!j.is_string()) throw ConfigError(std::string(what) + " must be a string");
  auto v = parse(j.get<std::string>());
  if (!v) throw ConfigError(std::string("unknown ") + what + " '" + j.get<std::string>() + "'");
  return *v;
}

Color color_from(const Json& j) { return parse_or_throw<Color>(j, parse_color, "colour"); }
Agent agent_from(const Json& j) { return parse_or_throw<Agent>(j, parse_agent, "agent"); }

const Json& require(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(std::string("missing key '") + key + "'");
  return j.at(key);
}

double number(const Json& j, const char* key) {
  const Json& v = require(j, key);
  if (!v.is_number()) throw ConfigError(std::string("'") + key + "' must be a number");
  return v.get<double>();
}

template <class T>
void maybe(const Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("bad value for '") + key + "'");
  }
}

ExtendedId ext_id_from(const Json& j) {
  if (!j.is_string()) throw ConfigError("extended id must be a string");
  auto id = parse_extended_id(j.get<std::string>());
  if (!id) throw ConfigError("bad extended id '" + j.get<std::string>() + "'");
  return *id;
}

}  // namespace

Json to_json(const AgentAction& action) {
  Json j{{"agent", to_string(action.agent)},
         {"kind", to_string(action.kind)},
         {"subtask", action.subtask}};
  if (action.color) j["color"] = to_string(*action.color);
  return j;
}

AgentAction action_from_json(const Json& j) {
  AgentAction a;
  a.kind = parse_or_throw<ActionKind>(require(j, "kind"), parse_kind, "action kind");
  a.agent = j.contains("agent") ? agent_from(j.at("agent")) : agent_of(a.kind);
  const Json& s = require(j, "subtask");
  if (!s.is_number_integer()) throw ConfigError("subtask must be an integer");
  a.subtask = s.get<int>();
  if (j.contains("color") && !j.at("color").is_null()) a.color = color_from(j.at("color"));
  return a;
}

Json to_json(const Belief& belief) {
  Json probs = Json::array();
  for (int i = 0; i < kGridPoints; ++i) probs.push_back(belief.probs(i));
  return {{"kind", belief.kind == BeliefKind::Following ? "following" : "error"},
          {"probs", probs},
          {"mean", expected_value(belief)}};
}

Belief belief_from_json(const Json& j) {
  Belief b;
  const auto kind = require(j, "kind").get<std::string>();
  if (kind != "following" && kind != "error") throw ConfigError("bad belief kind '" + kind + "'");
  b.kind = kind == "following" ? BeliefKind::Following : BeliefKind::Error;
  const Json& probs = require(j, "probs");
  if (!probs.is_array() || probs.size() != static_cast<std::size_t>(kGridPoints)) {
    throw ConfigError("belief needs 11 probabilities");
  }
  for (int i = 0; i < kGridPoints; ++i) b.probs(i) = probs.at(static_cast<std::size_t>(i)).get<double>();
  return b;
}

Json to_json(const Assignment& q) {
  Json j = Json::object();
  for (const auto& [id, agent] : q) j[std::to_string(id)] = to_string(agent);
  return j;
}

Assignment assignment_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("assignment must be an object");
  Assignment q;
  for (const auto& [key, value] : j.items()) q[std::stoi(key)] = agent_from(value);
  return q;
}

Json to_json(const Allocation& allocation) {
  return {{"q", to_json(allocation.q)},
          {"objective", allocation.objective},
          {"human_load", allocation.human_load},
          {"robot_load", allocation.robot_load},
          {"incumbent_optimal", allocation.incumbent_optimal}};
}

Json to_json(const ExtendedTask& task) {
  Json preds = Json::array();
  for (const auto& p : task.predecessors) preds.push_back(to_string(p));
  Json j{{"id", to_string(task.id)},
         {"agent", to_string(task.agent)},
         {"duration", task.duration},
         {"predecessors", preds}};
  if (task.in_progress) j["in_progress"] = true;
  return j;
}

ExtendedTask extended_task_from_json(const Json& j) {
  ExtendedTask t;
  t.id = ext_id_from(require(j, "id"));
  t.agent = agent_from(require(j, "agent"));
  t.duration = number(j, "duration");
  for (const auto& p : require(j, "predecessors")) t.predecessors.push_back(ext_id_from(p));
  maybe(j, "in_progress", t.in_progress);
  return t;
}

Json to_json(const Schedule& schedule) {
  Json entries = Json::array();
  for (const auto& e : schedule.entries) {
    entries.push_back({{"id", to_string(e.id)},
                       {"agent", to_string(e.agent)},
                       {"start", e.start},
                       {"finish", e.finish}});
  }
  return {{"entries", entries},
          {"makespan", schedule.makespan},
          {"incumbent_optimal", schedule.incumbent_optimal}};
}

Schedule schedule_from_json(const Json& j) {
  Schedule s;
  for (const auto& e : require(j, "entries")) {
    s.entries.push_back({ext_id_from(require(e, "id")), agent_from(require(e, "agent")),
                         number(e, "start"), number(e, "finish")});
  }
  s.makespan = number(j, "makespan");
  maybe(j, "incumbent_optimal", s.incumbent_optimal);
  return s;
}

Json graph_snapshot(const TaskGraph& graph) {
  Json subtasks = Json::array();
  for (const auto& t : graph.subtasks()) {
    Json s{{"id", t.id},
           {"workspace", t.workspace},
           {"spot", t.spot},
           {"required_color", to_string(t.required_color)},
           {"state", to_string(t.state)}};
    s["block"] = t.block ? Json(to_string(*t.block)) : Json(nullptr);
    subtasks.push_back(s);
  }
  Json inv = Json::object();
  for (Agent a : {Agent::Human, Agent::Robot}) {
    Json per = Json::object();
    for (Color c : kColors) per[std::string(to_string(c))] = graph.inventory(a, c);
    inv[std::string(to_string(a))] = per;
  }
  return {{"subtasks", subtasks}, {"inventory", inv}, {"digest", digest_hex(graph.digest())}};
}

Json to_json(const ScenarioConfig& c) {
  Json rows = Json::array();
  for (int w = 0; w < c.workspaces; ++w) {
    Json row = Json::array();
    for (int s = 1; s <= c.spots_per_workspace; ++s) {
      row.push_back(to_string(c.pattern.at(w * c.spots_per_workspace + s)));
    }
    rows.push_back(row);
  }
  Json distractors = Json::object();
  for (const auto& [id, color] : c.distractors) distractors[std::to_string(id)] = to_string(color);
  Json inv = Json::object(), dist = Json::object(), times = Json::object();
  for (Agent a : {Agent::Human, Agent::Robot}) {
    const std::string an(to_string(a));
    for (Color col : kColors) {
      const std::string cn(to_string(col));
      inv[an][cn] = c.inventory[index(a)][index(col)];
      dist[an][cn] = to_string(c.distance[index(a)][index(col)]);
    }
    times[an] = {{"near", c.nominal_times[index(a)][0]}, {"far", c.nominal_times[index(a)][1]}};
  }
  return {{"name", c.name},
          {"workspaces", c.workspaces},
          {"spots_per_workspace", c.spots_per_workspace},
          {"pattern", rows},
          {"distractors", distractors},
          {"inventory", inv},
          {"distance", dist},
          {"nominal_times", times}};
}

ScenarioConfig scenario_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("scenario must be a JSON object");
  ScenarioConfig c = study_defaults();
  maybe(j, "name", c.name);
  maybe(j, "workspaces", c.workspaces);
  maybe(j, "spots_per_workspace", c.spots_per_workspace);
  const Json& pattern = require(j, "pattern");
  if (pattern.is_array()) {
    if (pattern.size() != static_cast<std::size_t>(c.workspaces)) {
      throw ConfigError("pattern needs one row per workspace");
    }
    for (int w = 0; w < c.workspaces; ++w) {
      const Json& row = pattern.at(static_cast<std::size_t>(w));
      if (!row.is_array() || row.size() != static_cast<std::size_t>(c.spots_per_workspace)) {
        throw ConfigError("pattern row " + std::to_string(w + 1) + " has the wrong length");
      }
      for (int s = 0; s < c.spots_per_workspace; ++s) {
        c.pattern[w * c.spots_per_workspace + s + 1] = color_from(row.at(static_cast<std::size_t>(s)));
      }
    }
  } else if (pattern.is_object()) {
    for (const auto& [key, value] : pattern.items()) c.pattern[std::stoi(key)] = color_from(value);
  } else {
    throw ConfigError("pattern must be an array of rows or an id -> colour object");
  }
  if (j.contains("distractors")) {
    for (const auto& [key, value] : j.at("distractors").items()) {
      c.distractors[std::stoi(key)] = color_from(value);
    }
  }
  for (Agent a : {Agent::Human, Agent::Robot}) {
    const std::string an(to_string(a));
    for (Color col : kColors) {
      const std::string cn(to_string(col));
      if (j.contains("inventory") && j["inventory"].contains(an) && j["inventory"][an].contains(cn)) {
        c.inventory[index(a)][index(col)] = j["inventory"][an][cn].get<int>();
      }
      if (j.contains("distance") && j["distance"].contains(an) && j["distance"][an].contains(cn)) {
        c.distance[index(a)][index(col)] =
            parse_or_throw<Distance>(j["distance"][an][cn], parse_distance, "distance");
      }
    }
    if (j.contains("nominal_times") && j["nominal_times"].contains(an)) {
      const Json& t = j["nominal_times"][an];
      maybe(t, "near", c.nominal_times[index(a)][0]);
      maybe(t, "far", c.nominal_times[index(a)][1]);
    }
  }
  c.validate();
  return c;
}

Json to_json(const CostParams& p) {
  return {{"c_f", p.c_f}, {"c_e", p.c_e}, {"c_v", p.c_v}, {"time_limit", p.time_limit},
          {"node_limit", p.node_limit}};
}

void update_from_json(CostParams& p, const Json& j) {
  maybe(j, "c_f", p.c_f);
  maybe(j, "c_e", p.c_e);
  maybe(j, "c_v", p.c_v);
  maybe(j, "time_limit", p.time_limit);
  maybe(j, "node_limit", p.node_limit);
  p.validate();
}

Json to_json(const EstimatorParams& p) {
  return {{"alpha_weight", p.alpha_weight}, {"sigma", p.sigma}, {"beta_wrong", p.beta_wrong},
          {"beta_correct", p.beta_correct}, {"prior_p_following", p.prior_p_following},
          {"prior_p_error", p.prior_p_error}, {"memory", p.memory}};
}

void update_from_json(EstimatorParams& p, const Json& j) {
  maybe(j, "alpha_weight", p.alpha_weight);
  maybe(j, "sigma", p.sigma);
  maybe(j, "beta_wrong", p.beta_wrong);
  maybe(j, "beta_correct", p.beta_correct);
  maybe(j, "prior_p_following", p.prior_p_following);
  maybe(j, "prior_p_error", p.prior_p_error);
  maybe(j, "memory", p.memory);
  p.validate();
}

std::string digest_hex(std::uint64_t digest) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(digest));
  return buf;
}

}  // namespace hrc
