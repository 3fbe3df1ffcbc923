#include "hrc/scenario_io.hpp"

#include <fstream>

#include "hrc/simulator.hpp"

namespace hrc {

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileMissing("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

ScenarioConfig scenario_from_file_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("scenario must be a JSON object");
  if (!j.contains("study_pattern")) {
    ScenarioConfig c = scenario_from_json(j);
    c.validate();
    return c;
  }
  const Json& p = j["study_pattern"];
  if (!p.is_string() || p.get<std::string>().size() != 1) {
    throw ConfigError("study_pattern must be one of A, B, C, D");
  }
  const char letter = p.get<std::string>()[0];
  if (letter < 'A' || letter > 'D') throw ConfigError("study_pattern must be one of A, B, C, D");
  Json merged = to_json(study_scenario(letter));
  for (const auto& [key, value] : j.items()) {
    if (key != "study_pattern") merged[key] = value;
  }
  ScenarioConfig c = scenario_from_json(merged);
  c.validate();
  return c;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  return scenario_from_file_json(read_json_file(path));
}

PlannerParams load_params(const std::filesystem::path& path, PlannerParams base) {
  update_from_json(base, read_json_file(path));
  base.validate();
  return base;
}

}  // namespace hrc
