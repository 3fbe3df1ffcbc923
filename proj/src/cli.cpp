#include "hrc/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <regex>
#include <sstream>

#include "hrc/replay.hpp"
#include "hrc/scenario_io.hpp"
#include "hrc/simulator.hpp"
#include "hrc/ws_server.hpp"

namespace hrc {

std::vector<unsigned long long> parse_seed_sweep(const std::string& text) {
  static const std::regex range(R"(seeds=(\d+)\.\.(\d+))");
  static const std::regex list(R"(seeds=(\d+(,\d+)*))");
  std::smatch m;
  std::vector<unsigned long long> out;
  if (std::regex_match(text, m, range)) {
    const auto lo = std::stoull(m[1]), hi = std::stoull(m[2]);
    if (hi < lo) throw ConfigError("empty seed range '" + text + "'");
    for (auto s = lo; s <= hi; ++s) out.push_back(s);
  } else if (std::regex_match(text, m, list)) {
    std::stringstream ss(m[1]);
    for (std::string item; std::getline(ss, item, ',');) out.push_back(std::stoull(item));
  } else {
    throw ConfigError("sweep must look like seeds=1..20 or seeds=1,2,3");
  }
  return out;
}

std::vector<std::string> split_scripts(const std::string& list) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  for (char c : list) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == ',' && depth == 0) {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

namespace {

struct Inputs {
  ScenarioConfig scenario;
  PlannerParams params;
};

Inputs load_inputs(const std::string& scenario_path, const std::string& params_path, PlannerParams base) {
  Inputs in;
  in.scenario = scenario_path.empty() ? study_scenario('A') : load_scenario(scenario_path);
  in.params = params_path.empty() ? base : load_params(params_path, base);
  return in;
}

std::string file_stem(const std::string& script, unsigned long long seed) {
  std::string s;
  for (char c : script) s += std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' ? c : '_';
  while (!s.empty() && s.back() == '_') s.pop_back();
  return s + "-seed" + std::to_string(seed) + ".jsonl";
}

void print_summary_line(std::ostream& out, const std::string& script, unsigned long long seed, const RunSummary& s) {
  out << std::left << std::setw(26) << script << std::right << std::setw(6) << seed << "  " << std::setw(9)
      << s.status << std::fixed << std::setprecision(1) << std::setw(9) << s.makespan << std::setprecision(3)
      << std::setw(8) << s.op << std::setw(8) << s.final_pf << std::setw(8) << s.final_pe << std::setw(5)
      << s.human_errors << std::setw(5) << s.robot_assignments << std::setw(5) << s.rejected << std::setw(5)
      << s.fixes << '\n';
}

void print_header(std::ostream& out) {
  out << std::left << std::setw(26) << "human" << std::right << std::setw(6) << "seed" << "  " << std::setw(9)
      << "status" << std::setw(9) << "makespan" << std::setw(8) << "op" << std::setw(8) << "E[a_f]" << std::setw(8)
      << "E[a_e]" << std::setw(5) << "err" << std::setw(5) << "R2" << std::setw(5) << "H6" << std::setw(5) << "R3"
      << '\n';
}

int cmd_sim(const std::string& scenario_path, const std::string& params_path, const std::string& humans,
            unsigned long long seed, const std::string& sweep, const std::string& out_path, std::ostream& out) {
  const Inputs in = load_inputs(scenario_path, params_path, deterministic_params());
  const auto scripts = split_scripts(humans);
  if (scripts.empty()) throw ConfigError("no human script given");
  std::vector<HumanScript> parsed;
  for (const auto& s : scripts) parsed.push_back(make_script(s));
  const std::vector<unsigned long long> seeds = sweep.empty() ? std::vector{seed} : parse_seed_sweep(sweep);

  if (sweep.empty()) {
    if (scripts.size() != 1) throw ConfigError("a single run takes one human script; use --sweep for more");
    std::ofstream file;
    if (!out_path.empty()) {
      file.open(out_path);
      if (!file) throw ConfigError("cannot write " + out_path);
    }
    SimResult r = run_sim(in.scenario, parsed[0], in.params, seed, out_path.empty() ? nullptr : &file);
    out << to_json(r.summary).dump(2) << '\n';
    return r.summary.status == "complete" ? 0 : 1;
  }

  if (!out_path.empty()) std::filesystem::create_directories(out_path);
  print_header(out);
  struct Agg {
    int runs = 0, complete = 0;
    double makespan = 0, op = 0, pf = 0, pe = 0, errors = 0, r2 = 0;
  };
  std::map<std::string, Agg> agg;
  int total = 0;
  for (std::size_t k = 0; k < parsed.size(); ++k) {
    for (auto s : seeds) {
      std::ofstream file;
      if (!out_path.empty()) file.open(std::filesystem::path(out_path) / file_stem(scripts[k], s));
      SimResult r = run_sim(in.scenario, parsed[k], in.params, s, out_path.empty() ? nullptr : &file);
      print_summary_line(out, scripts[k], s, r.summary);
      Agg& a = agg[scripts[k]];
      ++a.runs;
      ++total;
      a.complete += r.summary.status == "complete";
      a.makespan += r.summary.makespan;
      a.op += r.summary.op;
      a.pf += r.summary.final_pf;
      a.pe += r.summary.final_pe;
      a.errors += r.summary.human_errors;
      a.r2 += r.summary.robot_assignments;
    }
  }
  out << "\naggregate over " << seeds.size() << " seeds, " << total << " runs\n";
  out << std::left << std::setw(26) << "human" << std::right << std::setw(6) << "runs" << std::setw(9) << "complete"
      << std::setw(10) << "makespan" << std::setw(8) << "op" << std::setw(8) << "E[a_f]" << std::setw(8) << "E[a_e]"
      << std::setw(7) << "err" << std::setw(7) << "R2" << '\n';
  for (const auto& name : scripts) {
    const Agg& a = agg[name];
    const double n = a.runs;
    out << std::left << std::setw(26) << name << std::right << std::setw(6) << a.runs << std::setw(9) << a.complete
        << std::fixed << std::setprecision(1) << std::setw(10) << a.makespan / n << std::setprecision(3)
        << std::setw(8) << a.op / n << std::setw(8) << a.pf / n << std::setw(8) << a.pe / n << std::setprecision(2)
        << std::setw(7) << a.errors / n << std::setw(7) << a.r2 / n << '\n';
  }
  return 0;
}

int cmd_replay(const std::vector<std::string>& logs, std::ostream& out) {
  int bad = 0;
  for (const auto& path : logs) {
    std::ifstream in(path);
    if (!in) throw FileMissing("cannot open " + path);
    const ReplayReport r = replay_stream(in);
    out << path << ": " << to_string(r) << '\n';
    bad += !r.exact;
  }
  if (logs.size() > 1) out << (logs.size() - bad) << "/" << logs.size() << " exact\n";
  return bad == 0 ? 0 : 1;
}

int cmd_gantt(const std::string& log_path, std::int64_t seq, const std::string& out_path, std::ostream& out) {
  std::ifstream in(log_path);
  if (!in) throw FileMissing("cannot open " + log_path);
  std::optional<LogReadError> error;
  const auto records = read_jsonl(in, &error);
  if (error) throw ConfigError(log_path + " line " + std::to_string(error->line) + ": " + error->message);
  const EventRecord* pick = nullptr;
  for (const auto& r : records) {
    if (r.kind != RecordKind::Schedule || !r.payload.contains("schedule")) continue;
    if (seq > 0 && r.seq > seq) break;
    pick = &r;
  }
  if (!pick) throw ConfigError("no schedule record in " + log_path);
  const Schedule s = schedule_from_json(pick->payload.at("schedule"));
  if (out_path.empty()) {
    write_gantt_csv(out, s);
  } else {
    std::ofstream file(out_path);
    if (!file) throw ConfigError("cannot write " + out_path);
    write_gantt_csv(file, s);
  }
  return 0;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Human-robot block placement planner"};
  app.require_subcommand(1);

  std::string scenario, params, human = "follower", sweep, out_path, log_dir = ".";
  unsigned long long seed = 1;
  unsigned short port = 8080;
  double rt = 0.2;

  auto* sim = app.add_subcommand("sim", "Run scripted-human simulations");
  sim->add_option("--scenario", scenario, "Scenario JSON file (default: built-in pattern A)");
  sim->add_option("--params", params, "Cost, estimator and planner overrides (JSON)");
  sim->add_option("--human", human, "Script name, or a comma list with --sweep");
  sim->add_option("--seed", seed, "Run seed");
  sim->add_option("--sweep", sweep, "seeds=1..20");
  sim->add_option("--out", out_path, "Log file; with --sweep, a directory of logs");

  std::vector<std::string> logs;
  auto* replay = app.add_subcommand("replay", "Verify event logs");
  replay->add_option("logs", logs, "JSONL logs")->required();

  auto* serve = app.add_subcommand("serve", "Live sessions over WebSocket");
  serve->add_option("--port", port, "TCP port");
  serve->add_option("--scenario", scenario, "Scenario JSON file");
  serve->add_option("--params", params, "Parameter overrides (JSON)");
  serve->add_option("--seed", seed, "Session seed");
  serve->add_option("--realtime-factor", rt, "Wall seconds per simulated second");
  serve->add_option("--log-dir", log_dir, "Where session logs go");

  std::string gantt_log;
  std::int64_t gantt_seq = 0;
  auto* gantt = app.add_subcommand("gantt", "Export a logged schedule as CSV");
  gantt->add_option("log", gantt_log, "JSONL log")->required();
  gantt->add_option("--seq", gantt_seq, "Last schedule at or before this seq (default: the final one)");
  gantt->add_option("--out", out_path, "CSV file (default: stdout)");

  auto* defaults = app.add_subcommand("params", "Print the default simulation parameters");

  std::string pattern = "A";
  auto* scen = app.add_subcommand("scenario", "Print a built-in study scenario as JSON");
  scen->add_option("--pattern", pattern, "A, B, C or D")->check(CLI::IsMember({"A", "B", "C", "D"}));

  std::vector<std::string> argv_store{"hrc"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (sim->parsed()) return cmd_sim(scenario, params, human, seed, sweep, out_path, out);
    if (replay->parsed()) return cmd_replay(logs, out);
    if (gantt->parsed()) return cmd_gantt(gantt_log, gantt_seq, out_path, out);
    if (scen->parsed()) {
      out << to_json(study_scenario(pattern[0])).dump(2) << '\n';
      return 0;
    }
    if (defaults->parsed()) {
      out << to_json(deterministic_params()).dump(2) << '\n';
      return 0;
    }
    if (serve->parsed()) {
      ServerConfig sc;
      const Inputs in = load_inputs(scenario, params, deterministic_params());
      sc.port = port;
      sc.session = SessionConfig{in.scenario, in.params, seed, rt};
      sc.log_dir = log_dir;
      if (!(rt > 0.0)) throw ConfigError("--realtime-factor must be positive");
      serve_sessions(sc, out);
      return 0;
    }
  } catch (const FileMissing& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}

}  // namespace hrc
