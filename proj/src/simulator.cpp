#include "hrc/simulator.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <regex>

namespace hrc {

void HumanScript::validate() const {
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  bool ok = prob(reject_prob) && prob(memory_accuracy) && prob(error_rate) && speed_factor > 0.0 &&
            patience >= 0.0 && t_switch >= 0.0 && tail_row >= 1;
  for (double b : assign_to_robot_bias) ok = ok && prob(b);
  if (!ok) throw ConfigError("human script parameters out of range");
}

std::string HumanScript::name() const {
  switch (style) {
    case Style::Leader: return "leader";
    case Style::CollaborativeLeader: return "collaborative_leader";
    case Style::CollaborativeFollower: return "collaborative_follower";
    case Style::Follower: return "follower";
    case Style::Switcher: return "switcher(" + std::to_string(static_cast<int>(t_switch)) + ")";
    case Style::ErrorProne: {
      char buf[32];
      std::snprintf(buf, sizeof buf, "error_prone(%g)", error_rate);
      return buf;
    }
    case Style::ConfusedTail: return "confused_tail(" + std::to_string(tail_row) + ")";
  }
  return "?";
}

HumanScript make_script(const std::string& text) {
  static const std::regex pattern(R"(^\s*([a-z_]+)\s*(?:\(\s*([-+0-9.eE]+)\s*\))?\s*$)");
  std::smatch m;
  if (!std::regex_match(text, m, pattern)) throw ConfigError("bad human script '" + text + "'");
  const std::string style = m[1];
  const bool has_arg = m[2].matched;
  double arg = 0.0;
  if (has_arg) {
    try {
      arg = std::stod(m[2]);
    } catch (const std::exception&) {
      throw ConfigError("bad argument in human script '" + text + "'");
    }
  }
  HumanScript s;
  if (style == "leader") {
    s.style = Style::Leader;
  } else if (style == "collaborative_leader") {
    s.style = Style::CollaborativeLeader;
    s.reject_prob = 0.5;
    s.assign_to_robot_bias[index(Color::Pink)] = 0.5;
    s.assign_to_robot_bias[index(Color::Blue)] = 0.5;
  } else if (style == "collaborative_follower") {
    s.style = Style::CollaborativeFollower;
    s.reject_prob = 0.15;
    s.assign_to_robot_bias[index(Color::Pink)] = 0.3;
    s.assign_to_robot_bias[index(Color::Blue)] = 0.3;
  } else if (style == "follower") {
    s.style = Style::Follower;
    s.reject_prob = 0.0;
  } else if (style == "switcher") {
    s.style = Style::Switcher;
    if (has_arg) s.t_switch = arg;
  } else if (style == "error_prone") {
    s.style = Style::ErrorProne;
    s.error_rate = has_arg ? arg : 0.3;
    s.memory_accuracy = 0.5;
  } else if (style == "confused_tail") {
    s.style = Style::ConfusedTail;
    if (has_arg) s.tail_row = static_cast<int>(arg);
  } else {
    throw ConfigError("unknown human script '" + style + "'");
  }
  s.validate();
  return s;
}

Json to_json(const HumanScript& s) {
  Json bias = Json::object();
  for (Color c : kColors) bias[std::string(to_string(c))] = s.assign_to_robot_bias[index(c)];
  return {{"style", s.name()},
          {"reject_prob", s.reject_prob},
          {"assign_to_robot_bias", bias},
          {"memory_accuracy", s.memory_accuracy},
          {"speed_factor", s.speed_factor},
          {"error_rate", s.error_rate},
          {"t_switch", s.t_switch},
          {"tail_row", s.tail_row},
          {"patience", s.patience},
          {"rng_seed", s.rng_seed}};
}

HumanScript script_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("style") || !j["style"].is_string()) {
    throw ConfigError("human script needs a style");
  }
  HumanScript s = make_script(j["style"].get<std::string>());
  try {
    s.reject_prob = j.value("reject_prob", s.reject_prob);
    if (j.contains("assign_to_robot_bias")) {
      for (Color c : kColors) {
        s.assign_to_robot_bias[index(c)] =
            j["assign_to_robot_bias"].value(std::string(to_string(c)), s.assign_to_robot_bias[index(c)]);
      }
    }
    s.memory_accuracy = j.value("memory_accuracy", s.memory_accuracy);
    s.speed_factor = j.value("speed_factor", s.speed_factor);
    s.error_rate = j.value("error_rate", s.error_rate);
    s.t_switch = j.value("t_switch", s.t_switch);
    s.tail_row = j.value("tail_row", s.tail_row);
    s.patience = j.value("patience", s.patience);
    s.rng_seed = j.value("rng_seed", s.rng_seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad human script field: ") + e.what());
  }
  s.validate();
  return s;
}

namespace {

Color next_in_cycle(Color c) { return kColors[(index(c) + 1) % kColors.size()]; }

Color letter(char ch) {
  switch (ch) {
    case 'G': return Color::Green;
    case 'P': return Color::Pink;
    case 'O': return Color::Orange;
    case 'B': return Color::Blue;
  }
  throw ConfigError(std::string("bad colour letter ") + ch);
}

}  // namespace

ScenarioConfig study_scenario(char pattern) {
  struct Layout {
    const char* rows[4];
    std::vector<SubtaskId> partial;
  };
  static const Layout layouts[4] = {
      {{"GPOBG", "OBPGO", "BGOPB", "POGBP"}, {2, 4, 7, 9, 12, 14, 17, 19, 20}},
      {{"PGBOP", "GOGBB", "OPBGO", "BOPGP"}, {1, 3, 5, 7, 8, 10, 12, 13, 15, 17, 18, 20}},
      {{"OOGPB", "BGPOG", "PBOGB", "GPBOP"}, {3, 8, 10, 13, 16, 19}},
      {{"BPGOO", "GBOPP", "OGBGB", "POPBG"}, {1, 4, 6, 9, 11, 14, 16, 18, 20}},
  };
  if (pattern < 'A' || pattern > 'D') throw ConfigError(std::string("no study pattern ") + pattern);
  const Layout& l = layouts[pattern - 'A'];
  ScenarioConfig c = study_defaults();
  c.name = std::string("pattern_") + pattern;
  for (int w = 0; w < 4; ++w) {
    for (int s = 0; s < 5; ++s) c.pattern[w * 5 + s + 1] = letter(l.rows[w][s]);
  }
  for (SubtaskId id : l.partial) c.distractors[id] = next_in_cycle(c.pattern.at(id));
  c.validate();
  return c;
}

ScriptedHuman::ScriptedHuman(HumanScript script, const PlannerParams& params)
    : script_(std::move(script)), params_(params), rng_(script_.rng_seed) {
  script_.validate();
}

double ScriptedHuman::uniform() { return std::generate_canonical<double, 53>(rng_); }

bool ScriptedHuman::leads(double now) const {
  switch (script_.style) {
    case Style::Follower:
    case Style::CollaborativeFollower:
      return false;
    case Style::Switcher:
      return now < script_.t_switch;
    default:
      return true;
  }
}

Color ScriptedHuman::choose_color(const TaskGraph& graph, SubtaskId id) {
  const ScenarioConfig& c = graph.config();
  const Color truth = c.pattern.at(id);
  if (failed_.contains(id)) return truth;
  const auto distractor = c.distractors.find(id);
  const Color wrong = distractor != c.distractors.end() ? distractor->second : next_in_cycle(truth);
  bool mistaken = false;
  if (script_.style == Style::ConfusedTail) {
    mistaken = graph.subtask(id).spot == script_.tail_row;
  } else {
    if (distractor != c.distractors.end()) {
      if (!remembered_.contains(id) && !forgotten_.contains(id)) {
        (uniform() < script_.memory_accuracy ? remembered_ : forgotten_).insert(id);
      }
      if (forgotten_.contains(id)) mistaken = uniform() < 0.5;
    }
    if (!mistaken && script_.error_rate > 0.0) mistaken = uniform() < script_.error_rate;
  }
  if (mistaken && graph.inventory(Agent::Human, wrong) > 0) return wrong;
  return truth;
}

HumanChoice ScriptedHuman::act(const TaskGraph& graph, const AgentAction& action) {
  HumanChoice choice;
  choice.action = action;
  choice.duration = human_action_duration(graph, action, params_, script_.speed_factor);
  return choice;
}

std::optional<AgentAction> ScriptedHuman::self_action(const HumanView& view) {
  const TaskGraph& g = view.graph;
  std::vector<SubtaskId> ids;
  for (const auto& a : view.legal) {
    if (a.kind != ActionKind::H1) continue;
    if (!ids.empty() && ids.back() == a.subtask) continue;
    if (script_.style == Style::ConfusedTail && failed_.contains(a.subtask)) continue;
    ids.push_back(a.subtask);
  }
  const ScenarioConfig& c = g.config();
  std::stable_sort(ids.begin(), ids.end(), [&](SubtaskId a, SubtaskId b) {
    return c.distance[index(Agent::Human)][index(c.pattern.at(a))] <
           c.distance[index(Agent::Human)][index(c.pattern.at(b))];
  });
  for (SubtaskId id : ids) {
    const Color truth = c.pattern.at(id);
    Color color = choose_color(g, id);
    auto legal = [&](ActionKind k, Color col) {
      return std::find(view.legal.begin(), view.legal.end(), make_action(k, id, col)) != view.legal.end();
    };
    const bool to_robot = uniform() < script_.assign_to_robot_bias[index(truth)];
    const ActionKind kind = to_robot ? ActionKind::H2 : ActionKind::H1;
    if (!legal(kind, color)) color = truth;
    if (legal(kind, color)) return make_action(kind, id, color);
  }
  return std::nullopt;
}

HumanChoice ScriptedHuman::decide(const HumanView& view) {
  const bool leading = leads(view.now);
  std::vector<AgentAction> pending;
  for (const auto& a : view.legal) {
    if (a.kind == ActionKind::H4) pending.push_back(a);
  }
  auto answer = [&](const AgentAction& a) {
    bool reject = uniform() < script_.reject_prob;
    if (script_.style == Style::Switcher) reject = leading;
    if (script_.style == Style::ConfusedTail && failed_.contains(a.subtask)) reject = false;
    HumanChoice c = act(view.graph, reject ? make_action(ActionKind::H6, a.subtask) : a);
    last_activity_ = view.now + c.duration;
    return c;
  };
  auto own_work = [&]() -> std::optional<HumanChoice> {
    auto a = self_action(view);
    if (!a) return std::nullopt;
    HumanChoice c = act(view.graph, *a);
    last_activity_ = view.now + c.duration;
    inbox_.reset();
    return c;
  };

  if (leading) {
    // Between own placements a leader deals with the assignments that were
    // already waiting, then goes back to work; newer ones wait their turn.
    if (!inbox_) {
      inbox_.emplace();
      for (const auto& a : pending) inbox_->insert(a.subtask);
    }
    for (const auto& a : pending) {
      if (inbox_->erase(a.subtask)) return answer(a);
    }
    if (auto c = own_work()) return *c;
    if (!pending.empty()) return answer(pending.front());
    return {};
  }
  if (!pending.empty()) return answer(pending.front());
  if (script_.style != Style::CollaborativeFollower) return {};
  if (view.now < last_activity_ + script_.patience) {
    HumanChoice wait;
    wait.wake_at = last_activity_ + script_.patience;
    return wait;
  }
  if (auto c = own_work()) return *c;
  return {};
}

void ScriptedHuman::completed(const AgentAction& action, const TaskGraph& after) {
  const SubtaskState s = after.state(action.subtask);
  if (s == SubtaskState::Misplaced || s == SubtaskState::AssignedToRobotIncorrectly) failed_.insert(action.subtask);
}

void ScriptedHuman::rejected(const AgentAction&, RejectReason) {}

Json to_json(const RunSummary& s) {
  return {{"status", s.status},
          {"message", s.message},
          {"makespan", s.makespan},
          {"op", s.op},
          {"op_fallback", s.op_fallback},
          {"human_errors", s.human_errors},
          {"misplaced", s.misplaced},
          {"robot_assignments", s.robot_assignments},
          {"accepted", s.accepted},
          {"rejected", s.rejected},
          {"human_assigned", s.human_assigned},
          {"fixes", s.fixes},
          {"refusals", s.refusals},
          {"human_placements", s.human_placements},
          {"robot_placements", s.robot_placements},
          {"final_pf", s.final_pf},
          {"final_pe", s.final_pe},
          {"digest", s.digest}};
}

PlannerParams deterministic_params() {
  PlannerParams p;
  p.cost.time_limit = 0.0;
  p.cost.node_limit = 200000;
  p.schedule_limits.time_limit = 0.0;
  p.schedule_limits.node_limit = 20000;
  return p;
}

RunSummary summarize(const std::vector<EventRecord>& log) {
  RunSummary s;
  for (const auto& r : log) {
    const Json& p = r.payload;
    switch (r.kind) {
      case RecordKind::HumanAction: {
        if (p.value("phase", "") != "complete" || p.contains("rejected")) break;
        const std::string kind = p["action"]["kind"];
        if (p.value("error_class", Json()).is_string() && p["error_class"] == "M1") ++s.human_errors;
        if (kind == "H1" || kind == "H4") ++s.human_placements;
        if (kind == "H4") ++s.accepted;
        if (kind == "H6") ++s.rejected;
        if (kind == "H2") ++s.human_assigned;
        break;
      }
      case RecordKind::RobotAction: {
        if (p.value("phase", "") != "complete") break;
        const std::string kind = p["action"]["kind"];
        if (kind == "R1" || kind == "R4") ++s.robot_placements;
        if (kind == "R2") ++s.robot_assignments;
        if (kind == "R3") ++s.fixes;
        if (kind == "R6") ++s.refusals;
        break;
      }
      case RecordKind::StateChange:
        if (p["to"] == "Misplaced") ++s.misplaced;
        break;
      case RecordKind::BeliefF:
        s.final_pf = p["mean"];
        break;
      case RecordKind::BeliefE:
        s.final_pe = p["mean"];
        break;
      case RecordKind::RunMeta:
        if (p.contains("digest")) s.digest = p["digest"];
        break;
      default:
        break;
    }
    s.makespan = std::max(s.makespan, r.sim_time);
  }
  const PreferenceScore op = overall_preference(log);
  s.op = op.value;
  s.op_fallback = op.fallback;
  return s;
}

PreferenceScore overall_preference(const std::vector<std::pair<double, double>>& samples, double t0, int degree) {
  if (samples.empty()) return {0.0, true};
  double t_end = 0.0;
  for (const auto& [t, v] : samples) t_end = std::max(t_end, t);
  const int n = static_cast<int>(samples.size());
  if (n < degree + 1 || !(t_end > 0.0)) {
    if (!(t_end > 0.0)) return {samples.back().second * (1.0 - t0), true};
    // Piecewise-linear integral of the raw points over [t0, 1].
    std::vector<std::pair<double, double>> pts;
    for (const auto& [t, v] : samples) pts.emplace_back(t / t_end, v);
    std::stable_sort(pts.begin(), pts.end(), [](auto& a, auto& b) { return a.first < b.first; });
    auto at = [&](double x) {
      if (x <= pts.front().first) return pts.front().second;
      for (std::size_t i = 1; i < pts.size(); ++i) {
        if (x <= pts[i].first) {
          const double span = pts[i].first - pts[i - 1].first;
          if (span <= 0.0) return pts[i].second;
          const double w = (x - pts[i - 1].first) / span;
          return (1 - w) * pts[i - 1].second + w * pts[i].second;
        }
      }
      return pts.back().second;
    };
    std::vector<double> xs{t0};
    for (const auto& p : pts) {
      if (p.first > t0 && p.first < 1.0) xs.push_back(p.first);
    }
    xs.push_back(1.0);
    double area = 0.0;
    for (std::size_t i = 1; i < xs.size(); ++i) area += 0.5 * (xs[i] - xs[i - 1]) * (at(xs[i]) + at(xs[i - 1]));
    return {area, true};
  }
  Eigen::MatrixXd a(n, degree + 1);
  Eigen::VectorXd b(n);
  for (int i = 0; i < n; ++i) {
    const double t = samples[static_cast<std::size_t>(i)].first / t_end;
    double p = 1.0;
    for (int k = 0; k <= degree; ++k, p *= t) a(i, k) = p;
    b(i) = samples[static_cast<std::size_t>(i)].second;
  }
  const Eigen::VectorXd coef = a.colPivHouseholderQr().solve(b);
  double area = 0.0;
  for (int k = 0; k <= degree; ++k) {
    area += coef(k) * (1.0 - std::pow(t0, k + 1)) / (k + 1);
  }
  return {area, false};
}

PreferenceScore overall_preference(const std::vector<EventRecord>& log, double t0, int degree) {
  std::vector<std::pair<double, double>> samples;
  double t_end = 0.0;
  for (const auto& r : log) {
    t_end = std::max(t_end, r.sim_time);
    if (r.kind == RecordKind::BeliefF) samples.emplace_back(r.sim_time, r.payload["mean"].get<double>());
  }
  // The series is normalized by the run's end, not its last belief change.
  if (!samples.empty() && samples.back().first < t_end) samples.emplace_back(t_end, samples.back().second);
  return overall_preference(samples, t0, degree);
}

RunSummary finish_run(EventLog& log, const Episode& ep, const std::string& status, const std::string& message) {
  const std::string digest = digest_hex(ep.state().graph.digest());
  RunSummary summary = summarize(log.records());
  summary.status = status;
  summary.message = message;
  summary.makespan = ep.now();
  summary.digest = digest;
  log.append(ep.now(), RecordKind::RunMeta,
             {{"phase", "end"}, {"status", status}, {"message", message}, {"digest", digest},
              {"summary", to_json(summary)}});
  return summary;
}

SimResult run_sim(const ScenarioConfig& config, const HumanScript& script, const PlannerParams& params,
                  std::uint64_t seed, std::ostream* sink) {
  params.validate();
  HumanScript s = script;
  s.rng_seed = seed;
  s.validate();
  SimResult out;
  out.log.attach(sink);
  out.log.append(0.0, RecordKind::RunMeta,
                 {{"phase", "start"},
                  {"mode", "sim"},
                  {"scenario", to_json(config)},
                  {"params", to_json(params)},
                  {"script", to_json(s)},
                  {"seed", seed}});
  Episode ep(build_study_graph(config), params, &out.log);
  ScriptedHuman human(s, params);
  std::string status;
  std::string message;
  try {
    status = run_to_completion(ep, human).status;
  } catch (const PlannerFault& e) {
    status = "fault";
    message = e.what();
  }
  out.summary = finish_run(out.log, ep, status, message);
  return out;
}

}  // namespace hrc
