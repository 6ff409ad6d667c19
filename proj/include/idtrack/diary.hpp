#pragma once

#include "idtrack/metrics.hpp"
#include "idtrack/model.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace idtrack {

using Vec2 = Eigen::Vector2d;

struct Room {
  std::string name;
  std::vector<Vec2> polygon;  // cm, simple polygon
};

struct Seat {
  std::string name;
  Vec2 center = Vec2::Zero();
  double radius_cm = 50.0;
};

struct SceneMap {
  std::vector<Room> rooms;
  std::vector<Seat> seats;

  void validate() const;
  /// Containing room; boundary points count as inside and the
  /// lexicographically first room wins. Outside every room: "corridor".
  [[nodiscard]] std::string room_at(const Vec2& p) const;
  /// Nearest seat within its radius (ties by name).
  [[nodiscard]] const Seat* seat_at(const Vec2& p) const;
};

inline constexpr const char* kCorridor = "corridor";

enum class EventKind { room_change, sit_down, stand_up, static_interaction, dynamic_interaction };

[[nodiscard]] const char* to_string(EventKind kind);
[[nodiscard]] EventKind event_kind_from_string(const std::string& s);
[[nodiscard]] bool is_interaction(EventKind kind);

struct DiaryEvent {
  EventKind kind = EventKind::room_change;
  int subject = 0;
  std::optional<int> partner;  // interactions only; always the larger identity
  int frame_start = 0;
  int frame_end = 0;
  std::string room;
  std::string seat;  // sit/stand only
  std::string description;

  friend bool operator==(const DiaryEvent&, const DiaryEvent&) = default;
};

/// Chronological order: (frame_start, frame_end, kind, subject, partner).
void sort_events(std::vector<DiaryEvent>& events);

[[nodiscard]] std::vector<DiaryEvent> detect_room_changes(const Trajectory& traj, const SceneMap& map);

[[nodiscard]] std::vector<DiaryEvent> detect_sit_stand(std::span<const Trajectory> trajectories, const SceneMap& map);

struct InteractionParams {
  double max_distance_cm = 213.36;  // 7 ft
  double min_duration_sec = 8.0;
  double walking_speed_cmps = 20.0;
  int max_gap_frames = 18;  // larger gaps between shared samples end an interval
};

[[nodiscard]] std::vector<DiaryEvent> detect_interactions(std::span<const Trajectory> trajectories, double fps,
                                                          const InteractionParams& params = {});

/// Room changes for every trajectory, sit/stand, and interactions, sorted.
[[nodiscard]] std::vector<DiaryEvent> detect_all_events(std::span<const Trajectory> trajectories,
                                                        const SceneMap& map, double fps,
                                                        const InteractionParams& params = {});

enum class Posture { upright, sitting };

/// A half-open frame span [frame_start, frame_end) of one identity in one room and posture.
struct TimelineSpan {
  int identity = 0;
  int frame_start = 0;
  int frame_end = 0;
  std::string room;
  Posture posture = Posture::upright;
};

/// Upright spans from trajectory samples (each sample interval goes to the
/// earlier sample's room) plus sitting spans from sit_down to the matching
/// stand_up, the identity's next segment, or the end of the sequence.
[[nodiscard]] std::vector<TimelineSpan> build_timeline(std::span<const Trajectory> trajectories,
                                                       std::span<const DiaryEvent> events, const SceneMap& map);

struct RoomTime {
  double upright_sec = 0.0;
  double sitting_sec = 0.0;
};

struct IdentityStats {
  std::map<std::string, RoomTime> rooms;
  double interaction_sec = 0.0;
};

[[nodiscard]] std::map<int, IdentityStats> diary_statistics(std::span<const TimelineSpan> timeline,
                                                            std::span<const DiaryEvent> events, double fps);

struct DiaryDocument {
  std::string text;
  std::string json;
};

[[nodiscard]] DiaryDocument render_diary(std::span<const DiaryEvent> events, std::span<const Trajectory> trajectories,
                                         const SceneMap& map, double fps,
                                         const std::map<int, std::string>& names = {});

struct DiaryEvalReport {
  PrecisionRecall snippets;
  PrecisionRecall room_state;
  PrecisionRecall interaction_time;
  long snippet_tp = 0, snippet_fp = 0, snippet_fn = 0;
  long state_tp = 0, state_fp = 0, state_fn = 0;
  long interaction_tp = 0, interaction_fp = 0, interaction_fn = 0;
};

struct DiaryEvalParams {
  double fps = 25.0;
  double max_time_offset_sec = 5.0;   // point events match when strictly closer
  double min_overlap_fraction = 0.5;  // interactions match when strictly more overlaps
};

[[nodiscard]] DiaryEvalReport evaluate_diary(std::span<const DiaryEvent> pred_events,
                                             std::span<const DiaryEvent> gt_events,
                                             std::span<const TimelineSpan> pred_timeline,
                                             std::span<const TimelineSpan> gt_timeline,
                                             const DiaryEvalParams& params = {});

[[nodiscard]] std::string diary_report_json(const DiaryEvalReport& r);

// ---- file IO ----

[[nodiscard]] SceneMap load_scene_map(const std::filesystem::path& path);
void write_scene_map(const SceneMap& map, const std::filesystem::path& path);
void write_events(std::span<const DiaryEvent> events, const std::filesystem::path& path);
[[nodiscard]] std::vector<DiaryEvent> load_events(const std::filesystem::path& path);
void write_timeline(std::span<const TimelineSpan> timeline, const std::filesystem::path& path);
[[nodiscard]] std::vector<TimelineSpan> load_timeline(const std::filesystem::path& path);
/// {"0": "Alice", ...}
[[nodiscard]] std::map<int, std::string> load_names(const std::filesystem::path& path);

}  // namespace idtrack
