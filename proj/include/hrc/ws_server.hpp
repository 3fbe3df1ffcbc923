#pragma once

// WebSocket front end for live sessions. Every message is one JSON text
// frame of the form {"type", "body"}.

#include <filesystem>
#include <functional>
#include <iosfwd>

#include "hrc/session.hpp"

namespace hrc {

struct ServerConfig {
  unsigned short port = 8080;
  SessionConfig session;
  std::filesystem::path log_dir = ".";
  double tick_seconds = 0.05;
};

/// Serves until `stop` returns true (checked every tick) or forever when it
/// is empty. Each session log lands in log_dir/session-N.jsonl. Returns the
/// number of sessions started.
int serve_sessions(const ServerConfig& config, std::ostream& info, std::function<bool()> stop = {});

}  // namespace hrc
