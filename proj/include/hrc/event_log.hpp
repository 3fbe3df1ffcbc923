#pragma once

// Append-only JSON-lines record of everything a run observed and decided.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hrc/serialization.hpp"

namespace hrc {

enum class RecordKind {
  HumanAction,
  RobotAction,
  BeliefF,
  BeliefE,
  Allocation,
  Schedule,
  StateChange,
  RunMeta,
};

std::string_view to_string(RecordKind kind);
std::optional<RecordKind> parse_record_kind(std::string_view s);

struct EventRecord {
  std::int64_t seq = 0;
  double sim_time = 0.0;
  RecordKind kind = RecordKind::RunMeta;
  Json payload;
};

Json to_json(const EventRecord& record);
/// Throws ConfigError naming the problem.
EventRecord record_from_json(const Json& j);

class EventLog {
 public:
  EventLog() = default;

  /// Every appended record is also written to `sink` and flushed.
  void attach(std::ostream* sink) { sink_ = sink; }

  const EventRecord& append(double sim_time, RecordKind kind, Json payload);
  const std::vector<EventRecord>& records() const { return records_; }
  bool empty() const { return records_.empty(); }

  void write_jsonl(std::ostream& out) const;

 private:
  std::vector<EventRecord> records_;
  std::ostream* sink_ = nullptr;
};

struct LogReadError {
  std::size_t line = 0;
  std::string message;
};

/// Parses one record per non-empty line. Stops at the first bad line and
/// reports it through `error`.
std::vector<EventRecord> read_jsonl(std::istream& in, std::optional<LogReadError>* error = nullptr);

std::string to_jsonl_line(const EventRecord& record);

}  // namespace hrc
