#pragma once

#include "idtrack/diary.hpp"

#include <functional>
#include <vector>

namespace idtrack::testing {

inline Trajectory path(int identity, int f0, int f1, int step, const std::function<Vec2(int)>& at) {
  Trajectory t;
  t.identity = identity;
  for (int f = f0; f <= f1; f += step) {
    const Vec2 p = at(f);
    t.samples.push_back({f, Vec3(p.x(), p.y(), 0.0), 1.0});
  }
  return t;
}

// kitchen [0,1000]x[0,1000] next to living [1000,2000]x[0,1000], sofa in the living room.
inline SceneMap two_room_map() {
  SceneMap map;
  map.rooms.push_back({"kitchen", {{0, 0}, {1000, 0}, {1000, 1000}, {0, 1000}}});
  map.rooms.push_back({"living", {{1000, 0}, {2000, 0}, {2000, 1000}, {1000, 1000}}});
  map.seats.push_back({"sofa", Vec2(1500, 500), 50.0});
  return map;
}

// Four people at 25 fps, sampled every 5 frames:
//   0 and 1 stand 150 cm apart in the kitchen for frames 0-300, then 1 leaves view;
//   0 walks right at 40 cm/s from frame 300 and enters the living room at frame 740;
//   2 walks beside 0 (150 cm away) from frame 400 to 1000;
//   3 walks to the sofa, is out of view while seated (200-700), then walks away.
inline std::vector<Trajectory> every_kind_trajectories() {
  auto x0 = [](int f) { return f <= 300 ? 300.0 : 300.0 + 1.6 * (f - 300); };
  std::vector<Trajectory> t;
  t.push_back(path(0, 0, 1000, 5, [&](int f) { return Vec2(x0(f), 300); }));
  t.push_back(path(1, 0, 300, 5, [](int) { return Vec2(300, 450); }));
  t.push_back(path(2, 400, 1000, 5, [&](int f) { return Vec2(x0(f), 450); }));
  t.push_back(path(3, 0, 200, 5, [](int f) { return Vec2(1800 - 1.5 * f, 200 + 1.5 * f); }));
  t.push_back(path(3, 700, 900, 5, [](int f) { return Vec2(1510 + 1.95 * (f - 700), 500); }));
  return t;
}

inline std::vector<DiaryEvent> every_kind_expected() {
  std::vector<DiaryEvent> e;
  e.push_back({EventKind::static_interaction, 0, 1, 0, 300, "kitchen", "", ""});
  e.push_back({EventKind::sit_down, 3, std::nullopt, 200, 200, "living", "sofa", ""});
  e.push_back({EventKind::dynamic_interaction, 0, 2, 400, 1000, "kitchen", "", ""});
  e.push_back({EventKind::stand_up, 3, std::nullopt, 700, 700, "living", "sofa", ""});
  e.push_back({EventKind::room_change, 0, std::nullopt, 740, 740, "living", "", ""});
  e.push_back({EventKind::room_change, 2, std::nullopt, 740, 740, "living", "", ""});
  return e;
}

}  // namespace idtrack::testing
