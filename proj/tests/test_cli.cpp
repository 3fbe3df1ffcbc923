#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "doctest.h"
#include "hrc/cli.hpp"
#include "hrc/scenario_io.hpp"
#include "hrc/simulator.hpp"
#include "hrc/ws_server.hpp"

using namespace hrc;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli_main(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  fs::path d = fs::temp_directory_path() / "hrc_test_cli" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

int count_lines(const std::string& s, const std::string& needle) {
  int n = 0;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) n += l.rfind(needle, 0) == 0;
  return n;
}

}  // namespace

TEST_CASE("seed sweeps and script lists") {
  CHECK(parse_seed_sweep("seeds=1..20").size() == 20);
  CHECK(parse_seed_sweep("seeds=4,9") == std::vector<unsigned long long>{4, 9});
  CHECK_THROWS_AS(parse_seed_sweep("seeds=5..1"), ConfigError);
  CHECK_THROWS_AS(parse_seed_sweep("1..20"), ConfigError);
  CHECK(split_scripts("leader, error_prone(0.3),switcher(90)") ==
        std::vector<std::string>{"leader", "error_prone(0.3)", "switcher(90)"});
}

TEST_CASE("missing scenario file: exit 2 and nothing written") {
  const fs::path d = scratch("missing");
  const Run r = cli({"sim", "--scenario", (d / "nope.json").string(), "--human", "follower", "--out",
                     (d / "run.jsonl").string()});
  CHECK(r.code == 2);
  CHECK(r.out.empty());
  CHECK_FALSE(fs::exists(d / "run.jsonl"));
}

TEST_CASE("malformed inputs exit non-zero with a message") {
  const fs::path d = scratch("bad");
  std::ofstream(d / "s.json") << "{\"pattern\": 3}";
  Run r = cli({"sim", "--scenario", (d / "s.json").string()});
  CHECK(r.code == 3);
  CHECK(r.err.find("error") != std::string::npos);
  CHECK(cli({"sim", "--human", "boss"}).code == 3);
  CHECK(cli({"sim", "--seed", "x"}).code != 0);
  CHECK(cli({}).code != 0);
}

TEST_CASE("single run: log, summary, replay and gantt") {
  const fs::path d = scratch("single");
  write_json_file(d / "study.json", to_json(study_scenario('A')));
  const fs::path log = d / "run.jsonl";
  const Run r = cli({"sim", "--scenario", (d / "study.json").string(), "--human", "follower", "--seed", "1", "--out",
                     log.string()});
  CHECK(r.code == 0);
  const Json summary = Json::parse(r.out);
  CHECK(summary["status"] == "complete");
  CHECK(summary.contains("op"));
  CHECK(summary.contains("robot_assignments"));
  CHECK(summary.contains("human_errors"));
  Run rep = cli({"replay", log.string()});
  CHECK(rep.code == 0);
  CHECK(rep.out.find(": exact") != std::string::npos);
  Run g = cli({"gantt", log.string()});
  CHECK(g.code == 0);
  CHECK(g.out.rfind("agent,id,start,finish\n", 0) == 0);
  CHECK(cli({"gantt", (d / "none.jsonl").string()}).code == 2);

  // A hand-edited log no longer replays.
  std::ifstream in(log);
  std::stringstream text;
  text << in.rdbuf();
  std::string s = text.str();
  s[s.find("\"p_f\":") + 7] ^= 1;
  std::ofstream(d / "edited.jsonl") << s;
  rep = cli({"replay", (d / "edited.jsonl").string()});
  CHECK(rep.code == 1);
  CHECK(rep.out.find("divergence at seq") != std::string::npos);
}

TEST_CASE("sweep: 20 seeds by two scripts is 40 runs plus the aggregate") {
  const fs::path d = scratch("sweep");
  const Run r = cli({"sim", "--sweep", "seeds=1..20", "--human", "leader,follower", "--out", (d / "logs").string()});
  CHECK(r.code == 0);
  CHECK(count_lines(r.out, "leader ") == 20 + 1);
  CHECK(count_lines(r.out, "follower ") == 20 + 1);
  CHECK(r.out.find("aggregate over 20 seeds, 40 runs") != std::string::npos);
  int files = 0;
  std::vector<std::string> logs{"replay"};
  for (const auto& e : fs::directory_iterator(d / "logs")) {
    ++files;
    logs.push_back(e.path().string());
  }
  CHECK(files == 40);
  const Run rep = cli(logs);
  CHECK(rep.code == 0);
  CHECK(rep.out.find("40/40 exact") != std::string::npos);
}

TEST_CASE("built-in scenario and parameter dumps load back") {
  const fs::path d = scratch("dump");
  const Run s = cli({"scenario", "--pattern", "B"});
  REQUIRE(s.code == 0);
  std::ofstream(d / "b.json") << s.out;
  const Run p = cli({"params"});
  REQUIRE(p.code == 0);
  std::ofstream(d / "p.json") << p.out;
  const Run r = cli({"sim", "--scenario", (d / "b.json").string(), "--params", (d / "p.json").string()});
  CHECK(r.code == 0);
  CHECK(cli({"scenario", "--pattern", "Z"}).code != 0);
}

TEST_CASE("websocket round trip") {
  namespace beast = boost::beast;
  namespace asio = boost::asio;
  using tcp = asio::ip::tcp;
  const fs::path d = scratch("ws");
  ServerConfig sc;
  sc.port = 38517;
  sc.session = {study_scenario('A'), deterministic_params(), 3, 0.2};
  sc.log_dir = d;
  std::atomic<bool> stop{false};
  std::ostringstream info;
  std::thread server([&] { serve_sessions(sc, info, [&] { return stop.load(); }); });

  asio::io_context io;
  beast::websocket::stream<tcp::socket> ws(io);
  tcp::resolver resolver(io);
  bool connected = false;
  for (int attempt = 0; attempt < 100 && !connected; ++attempt) {
    try {
      asio::connect(ws.next_layer(), resolver.resolve("127.0.0.1", std::to_string(sc.port)));
      connected = true;
    } catch (const std::exception&) {
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
  }
  REQUIRE(connected);
  ws.handshake("127.0.0.1", "/");
  auto send = [&](const Json& j) { ws.write(asio::buffer(j.dump())); };
  auto recv_until = [&](const std::string& type) {
    for (int i = 0; i < 50; ++i) {
      beast::flat_buffer buf;
      ws.read(buf);
      Json m = Json::parse(beast::buffers_to_string(buf.data()));
      if (m["type"] == type) return m;
    }
    return Json();
  };
  send(make_message("join", Json::object()));
  Json join = recv_until("join");
  CHECK(join["body"]["ok"] == true);
  CHECK(!recv_until("legal_actions").is_null());
  send(make_message("human_action", {{"action", {{"kind", "H1"}, {"subtask", 2}, {"color", "pink"}}}}));
  Json rej = recv_until("action_rejected");
  CHECK(rej["body"]["reason"] == "precedence");
  const Color c = study_scenario('A').pattern.at(1);
  send(make_message("human_action", {{"action", to_json(make_action(ActionKind::H1, 1, c))}}));
  Json snap = recv_until("snapshot");
  CHECK(!snap["body"]["human"].is_null());
  ws.close(beast::websocket::close_code::normal);
  stop = true;
  server.join();
  CHECK(fs::exists(d / "session-1.jsonl"));
  const Run rep = cli({"replay", (d / "session-1.jsonl").string()});
  CHECK(rep.code == 0);
}
