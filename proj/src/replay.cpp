#include "hrc/replay.hpp"

#include <istream>

#include "hrc/scenario_io.hpp"
#include "hrc/session.hpp"
#include "hrc/simulator.hpp"

namespace hrc {

namespace {

struct Divergence {
  std::int64_t seq;
  std::string detail;
};

void keep_first(std::optional<Divergence>& best, std::optional<Divergence> d) {
  if (d && (!best || d->seq < best->seq)) best = std::move(d);
}

// The inputs a run was started from.
struct RunInputs {
  std::string mode;
  ScenarioConfig scenario;
  PlannerParams params;
  std::uint64_t seed = 0;
  std::optional<HumanScript> script;
  double realtime_factor = 0.0;
};

RunInputs parse_inputs(const EventRecord& r) {
  if (r.kind != RecordKind::RunMeta || r.payload.value("phase", "") != "start") {
    throw ConfigError("log does not open with a run_meta start record");
  }
  RunInputs in;
  const Json& p = r.payload;
  try {
    in.mode = p.value("mode", "sim");
    in.scenario = scenario_from_json(p.at("scenario"));
    in.scenario.validate();
    update_from_json(in.params, p.at("params"));
    in.seed = p.at("seed").get<std::uint64_t>();
    if (in.mode == "sim") {
      in.script = script_from_json(p.at("script"));
    } else if (in.mode == "session") {
      in.realtime_factor = p.at("realtime_factor").get<double>();
    } else {
      throw ConfigError("unknown run mode '" + in.mode + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad run_meta start: ") + e.what());
  }
  return in;
}

std::optional<const EventRecord*> end_record(const std::vector<EventRecord>& records) {
  if (!records.empty() && records.back().kind == RecordKind::RunMeta &&
      records.back().payload.value("phase", "") == "end") {
    return &records.back();
  }
  return std::nullopt;
}

// Rebuilds a session from its recorded human starts.
EventLog regenerate_session(const RunInputs& in, const std::vector<EventRecord>& records) {
  EventLog log;
  log.append(0.0, RecordKind::RunMeta, session_start_payload(in.scenario, in.params, in.seed, in.realtime_factor));
  Episode ep(build_study_graph(in.scenario), in.params, &log);
  ep.set_light_lock(true);
  for (const auto& r : records) {
    if (r.kind != RecordKind::HumanAction || r.payload.value("phase", "") != "start") continue;
    ep.run_until(r.sim_time);
    AgentAction a = action_from_json(r.payload.at("action"));
    ep.human_start(a, human_action_duration(ep.state().graph, a, in.params));
    ep.settle();
  }
  if (auto end = end_record(records)) {
    ep.run_until((*end)->sim_time);
    finish_run(log, ep, (*end)->payload.value("status", ""), (*end)->payload.value("message", ""));
  }
  return log;
}

std::optional<Divergence> compare_logs(const std::vector<EventRecord>& original, const std::vector<std::string>* lines,
                                       const std::vector<EventRecord>& regen) {
  for (std::size_t i = 0; i < original.size(); ++i) {
    if (i >= regen.size()) {
      return Divergence{original[i].seq, "record not produced when the run is rebuilt"};
    }
    const std::string text = lines ? (*lines)[i] : to_jsonl_line(original[i]);
    if (text != to_jsonl_line(regen[i])) {
      return Divergence{original[i].seq, std::string(to_string(original[i].kind)) + " record differs from the rebuilt run"};
    }
  }
  if (end_record(original) && regen.size() > original.size()) {
    return Divergence{regen[original.size()].seq, "rebuilt run has records past the recorded end"};
  }
  return std::nullopt;
}

std::optional<Divergence> regenerate(const RunInputs& in, const std::vector<EventRecord>& records,
                                     const std::vector<std::string>* lines) {
  try {
    if (in.mode == "sim") {
      SimResult rebuilt = run_sim(in.scenario, *in.script, in.params, in.seed);
      return compare_logs(records, lines, rebuilt.log.records());
    }
    return compare_logs(records, lines, regenerate_session(in, records).records());
  } catch (const std::exception& e) {
    // A recorded action the engine cannot even take.
    for (const auto& r : records) {
      if (r.kind == RecordKind::HumanAction) return Divergence{r.seq, std::string("rebuild failed: ") + e.what()};
    }
    return Divergence{records.front().seq, std::string("rebuild failed: ") + e.what()};
  }
}

bool same_record(const EventRecord& a, const EventRecord& b) {
  return a.kind == b.kind && a.sim_time == b.sim_time && a.payload == b.payload;
}

// Feeds the recorded completions back through the task model and the belief
// update and checks every derived record against the log.
std::optional<Divergence> reapply(const RunInputs& in, const std::vector<EventRecord>& records) {
  PlannerState state = initial_state(build_study_graph(in.scenario), in.params);
  bool initial_f = false, initial_e = false;
  std::size_t i = 1;
  auto match_scratch = [&](const EventLog& scratch) -> std::optional<Divergence> {
    for (std::size_t k = 0; k < scratch.records().size(); ++k) {
      if (i + k >= records.size()) return Divergence{records.back().seq + 1, "log ends inside an update"};
      if (!same_record(records[i + k], scratch.records()[k])) {
        return Divergence{records[i + k].seq, std::string(to_string(records[i + k].kind)) +
                                                  " record does not follow from the action before it"};
      }
    }
    i += scratch.records().size();
    return std::nullopt;
  };
  while (i < records.size()) {
    const EventRecord& r = records[i];
    const Json& p = r.payload;
    try {
      switch (r.kind) {
        case RecordKind::BeliefF:
        case RecordKind::BeliefE: {
          const bool f = r.kind == RecordKind::BeliefF;
          bool& seen = f ? initial_f : initial_e;
          if (seen || r.sim_time != 0.0) return Divergence{r.seq, "belief record without an observation"};
          seen = true;
          if (p != to_json(f ? state.belief_f : state.belief_e)) return Divergence{r.seq, "initial belief differs"};
          ++i;
          break;
        }
        case RecordKind::HumanAction: {
          const std::string phase = p.at("phase").get<std::string>();
          if (phase == "start") {
            ++i;
            break;
          }
          if (phase != "complete") return Divergence{r.seq, "unknown human_action phase"};
          const AgentAction a = action_from_json(p.at("action"));
          if (p.contains("rejected")) {
            auto reason = check_action(state.graph, a);
            if (!reason || p["rejected"].get<std::string>() != to_string(*reason)) {
              return Divergence{r.seq, "recorded rejection does not hold"};
            }
            ++i;
            break;
          }
          EventLog scratch;
          state.clock = r.sim_time;
          try {
            state = observe_human_action(state, a, in.params, &scratch);
          } catch (const RejectedAction& e) {
            return Divergence{r.seq, std::string("recorded human action is illegal: ") + e.what()};
          }
          if (auto d = match_scratch(scratch)) return d;
          break;
        }
        case RecordKind::RobotAction: {
          const std::string phase = p.at("phase").get<std::string>();
          const AgentAction a = action_from_json(p.at("action"));
          if (phase == "start") {
            if (auto reason = check_action(state.graph, a)) {
              return Divergence{r.seq, std::string("robot action illegal when started: ") + to_string(*reason)};
            }
            ++i;
            break;
          }
          if (auto reason = check_action(state.graph, a)) {
            return Divergence{r.seq, std::string("robot action illegal when finished: ") + to_string(*reason)};
          }
          EventLog scratch;
          state.clock = r.sim_time;
          complete_robot_action(state, a, &scratch);
          if (auto d = match_scratch(scratch)) return d;
          break;
        }
        case RecordKind::Allocation:
          if (p.at("p_f").get<double>() != expected_value(state.belief_f) ||
              p.at("p_e").get<double>() != expected_value(state.belief_e)) {
            return Divergence{r.seq, "allocation used estimates other than the current belief means"};
          }
          ++i;
          break;
        case RecordKind::Schedule: {
          if (p.contains("schedule")) {
            std::vector<ExtendedTask> tau;
            for (const auto& t : p.at("tau_new")) tau.push_back(extended_task_from_json(t));
            std::vector<ExtendedId> v;
            for (const auto& id : p.at("V")) {
              auto parsed = parse_extended_id(id.get<std::string>());
              if (!parsed) return Divergence{r.seq, "bad node id in V"};
              v.push_back(*parsed);
            }
            auto problems = validate_schedule(tau, v, schedule_from_json(p.at("schedule")));
            if (!problems.empty()) return Divergence{r.seq, "schedule fails validation: " + problems.front()};
          }
          ++i;
          break;
        }
        case RecordKind::StateChange:
          return Divergence{r.seq, "state change without an action"};
        case RecordKind::RunMeta:
          if (p.value("phase", "") != "end") return Divergence{r.seq, "second run_meta start"};
          if (p.value("digest", "") != digest_hex(state.graph.digest())) {
            return Divergence{r.seq, "final state digest differs"};
          }
          if (i + 1 != records.size()) return Divergence{records[i + 1].seq, "records after the run end"};
          ++i;
          break;
      }
    } catch (const std::exception& e) {
      return Divergence{r.seq, std::string("malformed payload: ") + e.what()};
    }
  }
  return std::nullopt;
}

}  // namespace

std::string to_string(const ReplayReport& r) {
  if (r.exact) return "exact";
  if (!r.divergence_seq) return "not replayable: " + r.detail;
  return "divergence at seq " + std::to_string(*r.divergence_seq) + ": " + r.detail;
}

ReplayReport replay_records(const std::vector<EventRecord>& records, const std::vector<std::string>* lines) {
  ReplayReport report;
  report.records = records.size();
  if (records.empty()) {
    report.detail = "empty log";
    return report;
  }
  std::optional<Divergence> first;
  for (std::size_t k = 0; k < records.size(); ++k) {
    const std::int64_t want = k == 0 ? 1 : records[k - 1].seq + 1;
    if (records[k].seq != want) {
      first = Divergence{want, "seq " + std::to_string(records[k].seq) + " where " + std::to_string(want) + " belongs"};
      break;
    }
  }
  RunInputs in;
  try {
    in = parse_inputs(records.front());
  } catch (const std::exception& e) {
    report.divergence_seq = records.front().seq;
    report.detail = e.what();
    return report;
  }
  report.mode = in.mode;
  report.complete = end_record(records).has_value();
  keep_first(first, regenerate(in, records, lines));
  keep_first(first, reapply(in, records));
  if (first) {
    report.divergence_seq = first->seq;
    report.detail = first->detail;
  } else {
    report.exact = true;
  }
  return report;
}

ReplayReport replay_stream(std::istream& in) {
  std::vector<EventRecord> records;
  std::vector<std::string> lines;
  std::optional<Divergence> corrupt;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      records.push_back(record_from_json(Json::parse(line)));
      lines.push_back(line);
    } catch (const std::exception& e) {
      corrupt = Divergence{records.empty() ? 1 : records.back().seq + 1, std::string("corrupt record: ") + e.what()};
      break;
    }
  }
  ReplayReport report = records.empty() && corrupt ? ReplayReport{} : replay_records(records, &lines);
  if (corrupt && (report.exact || !report.divergence_seq || *report.divergence_seq >= corrupt->seq)) {
    report.exact = false;
    report.divergence_seq = corrupt->seq;
    report.detail = corrupt->detail;
  }
  return report;
}

}  // namespace hrc
