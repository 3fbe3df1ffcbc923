#include "hrc/session.hpp"

#include <cstdio>

#include "hrc/simulator.hpp"

namespace hrc {

Json session_start_payload(const ScenarioConfig& scenario, const PlannerParams& params, std::uint64_t seed,
                           double realtime_factor) {
  return {{"phase", "start"},
          {"mode", "session"},
          {"scenario", to_json(scenario)},
          {"params", to_json(params)},
          {"seed", seed},
          {"realtime_factor", realtime_factor}};
}

Json make_message(const std::string& type, Json body) { return {{"type", type}, {"body", std::move(body)}}; }

namespace {

EventLog* opened(EventLog& log, std::ostream* sink, const SessionConfig& c) {
  if (!(c.realtime_factor > 0.0)) throw ConfigError("realtime factor must be positive");
  c.params.validate();
  log.attach(sink);
  log.append(0.0, RecordKind::RunMeta, session_start_payload(c.scenario, c.params, c.seed, c.realtime_factor));
  return &log;
}

Json in_flight(const std::optional<InFlight>& f) {
  if (!f) return nullptr;
  return {{"action", to_json(f->action)}, {"start", f->start}, {"finish", f->finish}};
}

}  // namespace

LiveSession::LiveSession(SessionConfig config, Clock clock, std::ostream* log_sink)
    : config_(std::move(config)),
      clock_(std::move(clock)),
      episode_(build_study_graph(config_.scenario), config_.params, opened(log_, log_sink, config_)),
      rng_(config_.seed) {
  episode_.set_light_lock(true);
  seen_ = log_.records().size();
}

double LiveSession::sim_now() const {
  double wall = wall_accum_;
  if (connected_) wall += clock_() - attached_at_;
  return wall / config_.realtime_factor;
}

Json LiveSession::snapshot() const {
  const auto& st = episode_.state();
  Json body{{"sim_time", episode_.now()},
            {"graph", graph_snapshot(st.graph)},
            {"human", in_flight(episode_.human_busy())},
            {"robot", in_flight(episode_.robot_busy())},
            {"light", episode_.light_red() ? "red" : "green"},
            {"ended", ended_},
            {"seq", log_.records().back().seq}};
  return make_message("snapshot", std::move(body));
}

Json LiveSession::legal_actions() const {
  Json actions = Json::array();
  if (!ended_) {
    for (const auto& a : episode_.human_legal()) actions.push_back(to_json(a));
  }
  return make_message("legal_actions", {{"actions", actions}});
}

std::vector<Json> LiveSession::join(const std::optional<std::string>& token, bool debug) {
  if (connected_) return {make_message("join", {{"ok", false}, {"reason", "session already has a client"}})};
  if (!token_.empty() && token != token_) {
    return {make_message("join", {{"ok", false}, {"reason", "unknown rejoin token"}})};
  }
  const bool resumed = !token_.empty();
  if (!resumed) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(rng_()));
    token_ = buf;
  }
  connected_ = true;
  debug_ = debug;
  attached_at_ = clock_();
  std::vector<Json> out{make_message("join", {{"ok", true}, {"token", token_}, {"resumed", resumed}})};
  drain(out, true);
  return out;
}

void LiveSession::disconnect() {
  if (!connected_) return;
  wall_accum_ += clock_() - attached_at_;
  connected_ = false;
}

std::vector<Json> LiveSession::handle(const Json& message) {
  if (!message.is_object() || !message.contains("type") || !message["type"].is_string()) {
    return {make_message("action_rejected", {{"reason", "malformed message"}})};
  }
  const std::string type = message["type"];
  const Json body = message.value("body", Json::object());
  if (type == "join") {
    std::optional<std::string> token;
    if (body.is_object() && body.contains("token") && body["token"].is_string()) token = body["token"];
    return join(token, body.is_object() && body.value("debug", false));
  }
  if (type == "human_action") return human_action(body);
  return {make_message("action_rejected", {{"reason", "unsupported message type '" + type + "'"}})};
}

std::vector<Json> LiveSession::human_action(const Json& body) {
  AgentAction a;
  try {
    a = action_from_json(body.contains("action") ? body.at("action") : body);
  } catch (const std::exception& e) {
    return {make_message("action_rejected", {{"reason", "malformed action"}, {"detail", e.what()}})};
  }
  if (!connected_) return {make_message("action_rejected", {{"action", to_json(a)}, {"reason", "not joined"}})};
  if (a.agent != Agent::Human) {
    return {make_message("action_rejected", {{"action", to_json(a)}, {"reason", "not a human action"}})};
  }
  std::vector<Json> out = advance();
  if (ended_) {
    out.push_back(make_message("action_rejected", {{"action", to_json(a)}, {"reason", "session ended"}}));
    return out;
  }
  if (!episode_.state().graph.contains(a.subtask)) {
    out.push_back(make_message("action_rejected", {{"action", to_json(a)}, {"reason", to_string(RejectReason::UnknownSubtask)}}));
    return out;
  }
  const double duration = human_action_duration(episode_.state().graph, a, config_.params);
  if (auto reason = episode_.human_start(a, duration)) {
    drain(out);
    out.push_back(make_message("action_rejected", {{"action", to_json(a)}, {"reason", to_string(*reason)}}));
    return out;
  }
  try {
    episode_.settle();
  } catch (const PlannerFault& e) {
    finish_run(log_, episode_, "fault", e.what());
    ended_ = true;
  }
  drain(out, true);
  return out;
}

std::vector<Json> LiveSession::tick() {
  if (!connected_) return {};
  return advance();
}

std::vector<Json> LiveSession::advance() {
  std::vector<Json> out;
  if (ended_) return out;
  const double t = std::max(sim_now(), episode_.now());
  try {
    episode_.run_until(t);
  } catch (const PlannerFault& e) {
    finish_run(log_, episode_, "fault", e.what());
    ended_ = true;
  }
  drain(out);
  return out;
}

void LiveSession::close(const std::string& status) {
  if (ended_) return;
  try {
    episode_.run_until(std::max(sim_now(), episode_.now()));
  } catch (const PlannerFault&) {
  }
  finish_run(log_, episode_, status);
  ended_ = true;
}

void LiveSession::drain(std::vector<Json>& out, bool force_state) {
  if (!ended_ && episode_.finished()) {
    finish_run(log_, episode_, "complete");
    ended_ = true;
  }
  const auto& recs = log_.records();
  bool changed = force_state;
  for (; seen_ < recs.size(); ++seen_) {
    const EventRecord& r = recs[seen_];
    const Json& p = r.payload;
    switch (r.kind) {
      case RecordKind::RobotAction: {
        changed = true;
        Json body{{"phase", p.at("phase")}, {"action", p.at("action")}, {"sim_time", r.sim_time}};
        if (p.contains("duration")) body["duration"] = p["duration"];
        out.push_back(make_message("robot_action", body));
        const AgentAction a = action_from_json(p.at("action"));
        if (a.kind == ActionKind::R2 && p.at("phase") == "complete") {
          out.push_back(make_message("assignment_notice", {{"subtask", a.subtask}, {"sim_time", r.sim_time}}));
        }
        break;
      }
      case RecordKind::HumanAction:
      case RecordKind::StateChange:
        changed = true;
        if (r.kind == RecordKind::StateChange && p.at("to") == "Placed") {
          out.push_back(make_message("task_complete", {{"subtask", p.at("subtask")}, {"by", p.at("by")}}));
        }
        break;
      case RecordKind::BeliefF:
      case RecordKind::BeliefE:
        if (debug_) {
          out.push_back(make_message("belief_debug", {{"belief", r.kind == RecordKind::BeliefF ? "following" : "error"},
                                                      {"mean", p.at("mean")},
                                                      {"sim_time", r.sim_time}}));
        }
        break;
      case RecordKind::RunMeta:
        if (p.value("phase", "") == "end") {
          changed = true;
          out.push_back(make_message("task_complete", {{"run", p.at("summary")}}));
        }
        break;
      default:
        break;
    }
  }
  const bool light = episode_.light_red();
  if (light != last_light_ || force_state) {
    last_light_ = light;
    out.push_back(make_message("light_state", {{"state", light ? "red" : "green"}}));
    changed = true;
  }
  if (changed) {
    out.push_back(snapshot());
    out.push_back(legal_actions());
  }
}

}  // namespace hrc
