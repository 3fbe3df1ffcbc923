#pragma once

#include "hrc/task_model.hpp"

namespace fixture {

// Study layout with a fixed, hand-picked pattern (one row per workspace).
inline hrc::ScenarioConfig config() {
  using hrc::Color;
  hrc::ScenarioConfig c = hrc::study_defaults();
  const Color rows[4][5] = {
      {Color::Green, Color::Pink, Color::Orange, Color::Blue, Color::Green},
      {Color::Orange, Color::Orange, Color::Blue, Color::Pink, Color::Green},
      {Color::Blue, Color::Green, Color::Pink, Color::Orange, Color::Pink},
      {Color::Pink, Color::Blue, Color::Green, Color::Green, Color::Orange},
  };
  for (int w = 0; w < 4; ++w) {
    for (int s = 0; s < 5; ++s) c.pattern[w * 5 + s + 1] = rows[w][s];
  }
  return c;
}

inline hrc::Color wrong_color(hrc::Color c) {
  return c == hrc::Color::Green ? hrc::Color::Blue : hrc::Color::Green;
}

inline hrc::TaskGraph place(hrc::TaskGraph g, hrc::SubtaskId id) {
  return hrc::apply_action(g, hrc::make_action(hrc::ActionKind::H1, id, g.subtask(id).required_color));
}

inline hrc::TaskGraph misplace(hrc::TaskGraph g, hrc::SubtaskId id) {
  return hrc::apply_action(g, hrc::make_action(hrc::ActionKind::H1, id,
                                               wrong_color(g.subtask(id).required_color)));
}

}  // namespace fixture
