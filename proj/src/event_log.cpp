#include "hrc/event_log.hpp"

#include <array>
#include <istream>
#include <ostream>

namespace hrc {

namespace {

constexpr std::array<std::string_view, 8> kRecordNames{
    "human_action", "robot_action", "belief_f", "belief_e",
    "allocation",   "schedule",     "state_change", "run_meta",
};

}  // namespace

std::string_view to_string(RecordKind kind) { return kRecordNames[static_cast<std::size_t>(kind)]; }

std::optional<RecordKind> parse_record_kind(std::string_view s) {
  for (std::size_t i = 0; i < kRecordNames.size(); ++i) {
    if (kRecordNames[i] == s) return static_cast<RecordKind>(i);
  }
  return std::nullopt;
}

Json to_json(const EventRecord& r) {
  return {{"seq", r.seq}, {"sim_time", r.sim_time}, {"kind", to_string(r.kind)}, {"payload", r.payload}};
}

EventRecord record_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("record is not an object");
  for (const char* key : {"seq", "sim_time", "kind", "payload"}) {
    if (!j.contains(key)) throw ConfigError(std::string("record lacks '") + key + "'");
  }
  if (!j["seq"].is_number_integer() || !j["sim_time"].is_number() || !j["kind"].is_string()) {
    throw ConfigError("record field has the wrong type");
  }
  auto kind = parse_record_kind(j["kind"].get<std::string>());
  if (!kind) throw ConfigError("unknown record kind '" + j["kind"].get<std::string>() + "'");
  return {j["seq"].get<std::int64_t>(), j["sim_time"].get<double>(), *kind, j["payload"]};
}

std::string to_jsonl_line(const EventRecord& record) { return to_json(record).dump(); }

const EventRecord& EventLog::append(double sim_time, RecordKind kind, Json payload) {
  const std::int64_t seq = records_.empty() ? 1 : records_.back().seq + 1;
  records_.push_back({seq, sim_time, kind, std::move(payload)});
  if (sink_) {
    *sink_ << to_jsonl_line(records_.back()) << '\n';
    sink_->flush();
  }
  return records_.back();
}

void EventLog::write_jsonl(std::ostream& out) const {
  for (const auto& r : records_) out << to_jsonl_line(r) << '\n';
}

std::vector<EventRecord> read_jsonl(std::istream& in, std::optional<LogReadError>* error) {
  std::vector<EventRecord> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(record_from_json(Json::parse(line)));
    } catch (const std::exception& e) {
      if (error) *error = LogReadError{number, e.what()};
      return out;
    }
  }
  return out;
}

}  // namespace hrc
