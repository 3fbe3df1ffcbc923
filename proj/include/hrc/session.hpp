#pragma once

// One live game between a connected human client and the planner. The
// engine is the same Episode that simulations use; sim time runs from the
// wall clock, scaled by the real-time factor, and stops while no client is
// attached.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "hrc/planner.hpp"

namespace hrc {

struct SessionConfig {
  ScenarioConfig scenario;
  PlannerParams params;
  std::uint64_t seed = 1;
  /// Wall seconds per simulated second.
  double realtime_factor = 0.2;
};

/// run_meta start payload of a session log.
Json session_start_payload(const ScenarioConfig& scenario, const PlannerParams& params, std::uint64_t seed,
                           double realtime_factor);

/// {"type": ..., "body": ...}
Json make_message(const std::string& type, Json body);

class LiveSession {
 public:
  using Clock = std::function<double()>;  // wall seconds, monotonic

  LiveSession(SessionConfig config, Clock clock, std::ostream* log_sink = nullptr);

  /// Attaches a client. A session that has been joined before only takes
  /// its rejoin token back.
  std::vector<Json> join(const std::optional<std::string>& token, bool debug = false);
  /// One client message (join or human_action).
  std::vector<Json> handle(const Json& message);
  /// Advances to the current wall time.
  std::vector<Json> tick();
  void disconnect();
  /// Writes the closing record if the run has not already ended.
  void close(const std::string& status = "closed");

  bool connected() const { return connected_; }
  bool ended() const { return ended_; }
  double sim_now() const;
  const std::string& token() const { return token_; }
  const Episode& episode() const { return episode_; }
  const EventLog& log() const { return log_; }

  Json snapshot() const;
  Json legal_actions() const;

 private:
  std::vector<Json> advance();
  std::vector<Json> human_action(const Json& body);
  void drain(std::vector<Json>& out, bool force_state = false);

  SessionConfig config_;
  Clock clock_;
  EventLog log_;
  Episode episode_;
  std::mt19937_64 rng_;
  std::string token_;
  bool connected_ = false;
  bool debug_ = false;
  bool ended_ = false;
  double wall_accum_ = 0.0;  // unpaused wall time before the current attachment
  double attached_at_ = 0.0;
  std::size_t seen_ = 0;     // log records already turned into messages
  bool last_light_ = false;
};

}  // namespace hrc
