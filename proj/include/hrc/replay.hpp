#pragma once

// Log verification: a run is rebuilt from its recorded inputs and compared
// record by record, and every recorded state change is re-applied through
// the task model and the belief update.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hrc/event_log.hpp"

namespace hrc {

struct ReplayReport {
  bool exact = false;
  std::optional<std::int64_t> divergence_seq;
  std::string detail;
  std::string mode;  // "sim" or "session"
  std::size_t records = 0;
  bool complete = false;  // the log carries its closing run_meta record
};

/// "exact", or "divergence at seq N: ...".
std::string to_string(const ReplayReport& report);

/// `lines`, when given, holds the original text of each record; the rebuilt
/// run is then compared against it byte for byte.
ReplayReport replay_records(const std::vector<EventRecord>& records,
                            const std::vector<std::string>* lines = nullptr);

/// Reads JSONL; a line that does not parse is reported at the seq it
/// should have had.
ReplayReport replay_stream(std::istream& in);

}  // namespace hrc
