#include "idtrack/diary.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

namespace idtrack {

using nlohmann::json;

// ---- geometry --------------------------------------------------------------

namespace {

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

bool on_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
  constexpr double kEps = 1e-9;
  if (std::abs(cross(b - a, p - a)) > kEps * std::max(1.0, (b - a).norm())) return false;
  return p.x() >= std::min(a.x(), b.x()) - kEps && p.x() <= std::max(a.x(), b.x()) + kEps &&
         p.y() >= std::min(a.y(), b.y()) - kEps && p.y() <= std::max(a.y(), b.y()) + kEps;
}

bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
  const double d1 = cross(q2 - q1, p1 - q1);
  const double d2 = cross(q2 - q1, p2 - q1);
  const double d3 = cross(p2 - p1, q1 - p1);
  const double d4 = cross(p2 - p1, q2 - p1);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) return true;
  return on_segment(p1, q1, q2) || on_segment(p2, q1, q2) || on_segment(q1, p1, p2) || on_segment(q2, p1, p2);
}

bool contains(const std::vector<Vec2>& poly, const Vec2& p) {
  const std::size_t m = poly.size();
  for (std::size_t i = 0; i < m; ++i)
    if (on_segment(p, poly[i], poly[(i + 1) % m])) return true;
  bool inside = false;
  for (std::size_t i = 0, j = m - 1; i < m; j = i++) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[j];
    if ((a.y() > p.y()) != (b.y() > p.y()) && p.x() < (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x())
      inside = !inside;
  }
  return inside;
}

Vec2 ground(const Vec3& p) { return p.head<2>(); }

std::string clock_time(int frame, double fps) {
  const long total = static_cast<long>(std::floor(static_cast<double>(frame) / fps));
  char buf[32];
  std::snprintf(buf, sizeof buf, "%02ld:%02ld:%02ld", total / 3600, (total / 60) % 60, total % 60);
  return buf;
}

std::string person(int id) { return "person " + std::to_string(id); }

std::string sentence(const DiaryEvent& e, const std::map<int, std::string>& names, double fps) {
  auto name = [&](int id) {
    auto it = names.find(id);
    return it != names.end() ? it->second : person(id);
  };
  std::ostringstream os;
  os << "At " << clock_time(e.frame_start, fps) << ", " << name(e.subject);
  switch (e.kind) {
    case EventKind::room_change:
      os << " entered " << e.room << '.';
      break;
    case EventKind::sit_down:
      os << " sat down" << (e.seat.empty() ? "" : " at " + e.seat) << " in " << e.room << '.';
      break;
    case EventKind::stand_up:
      os << " stood up" << (e.seat.empty() ? "" : " from " + e.seat) << " in " << e.room << '.';
      break;
    case EventKind::static_interaction:
    case EventKind::dynamic_interaction: {
      const double secs = static_cast<double>(e.frame_end - e.frame_start) / fps;
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.0f", secs);
      os << (e.kind == EventKind::static_interaction ? " interacted with " : " walked together with ")
         << name(e.partner.value_or(-1)) << " in " << e.room << " for " << buf << " seconds.";
      break;
    }
  }
  return os.str();
}

}  // namespace

void SceneMap::validate() const {
  std::set<std::string> names;
  for (const auto& r : rooms) {
    if (r.name.empty() || r.name == kCorridor) throw DataError("room name must be non-empty and not \"corridor\"");
    if (!names.insert(r.name).second) throw DataError("duplicate room " + r.name);
    const std::size_t m = r.polygon.size();
    if (m < 3) throw DataError("room " + r.name + " needs at least 3 vertices");
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i + 1; j < m; ++j) {
        const bool adjacent = j == i + 1 || (i == 0 && j == m - 1);
        if (adjacent) continue;
        if (segments_intersect(r.polygon[i], r.polygon[(i + 1) % m], r.polygon[j], r.polygon[(j + 1) % m]))
          throw DataError("room " + r.name + " polygon is self-intersecting");
      }
  }
  for (const auto& s : seats)
    if (!(s.radius_cm > 0.0)) throw DataError("seat " + s.name + " needs a positive radius");
}

std::string SceneMap::room_at(const Vec2& p) const {
  const Room* best = nullptr;
  for (const auto& r : rooms)
    if (contains(r.polygon, p) && (best == nullptr || r.name < best->name)) best = &r;
  return best ? best->name : kCorridor;
}

const Seat* SceneMap::seat_at(const Vec2& p) const {
  const Seat* best = nullptr;
  double best_d = 0.0;
  for (const auto& s : seats) {
    const double d = (s.center - p).norm();
    if (d > s.radius_cm) continue;
    if (best == nullptr || d < best_d || (d == best_d && s.name < best->name)) {
      best = &s;
      best_d = d;
    }
  }
  return best;
}

const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::room_change: return "room_change";
    case EventKind::sit_down: return "sit_down";
    case EventKind::stand_up: return "stand_up";
    case EventKind::static_interaction: return "static_interaction";
    case EventKind::dynamic_interaction: return "dynamic_interaction";
  }
  return "unknown";
}

EventKind event_kind_from_string(const std::string& s) {
  for (EventKind k : {EventKind::room_change, EventKind::sit_down, EventKind::stand_up,
                      EventKind::static_interaction, EventKind::dynamic_interaction})
    if (s == to_string(k)) return k;
  throw DataError("unknown event kind \"" + s + "\"");
}

bool is_interaction(EventKind kind) {
  return kind == EventKind::static_interaction || kind == EventKind::dynamic_interaction;
}

void sort_events(std::vector<DiaryEvent>& events) {
  std::stable_sort(events.begin(), events.end(), [](const DiaryEvent& a, const DiaryEvent& b) {
    return std::tuple(a.frame_start, a.frame_end, a.kind, a.subject, a.partner.value_or(-1)) <
           std::tuple(b.frame_start, b.frame_end, b.kind, b.subject, b.partner.value_or(-1));
  });
}

// ---- detection -------------------------------------------------------------

std::vector<DiaryEvent> detect_room_changes(const Trajectory& traj, const SceneMap& map) {
  std::vector<DiaryEvent> out;
  std::string prev;
  for (std::size_t k = 0; k < traj.samples.size(); ++k) {
    const auto& s = traj.samples[k];
    std::string room = map.room_at(ground(s.position));
    if (k > 0 && room != prev) {
      DiaryEvent e;
      e.kind = EventKind::room_change;
      e.subject = traj.identity;
      e.frame_start = e.frame_end = s.frame;
      e.room = room;
      e.description = person(traj.identity) + " entered " + room + " from " + prev;
      out.push_back(std::move(e));
    }
    prev = std::move(room);
  }
  return out;
}

std::vector<DiaryEvent> detect_sit_stand(std::span<const Trajectory> trajectories, const SceneMap& map) {
  std::vector<DiaryEvent> out;
  for (const auto& t : trajectories) {
    if (t.samples.empty()) continue;
    auto emit = [&](EventKind kind, const TrajectorySample& s) {
      const Seat* seat = map.seat_at(ground(s.position));
      if (seat == nullptr) return;
      DiaryEvent e;
      e.kind = kind;
      e.subject = t.identity;
      e.frame_start = e.frame_end = s.frame;
      e.room = map.room_at(seat->center);
      e.seat = seat->name;
      e.description = person(t.identity) + (kind == EventKind::sit_down ? " sat down at " : " stood up from ") +
                      seat->name;
      out.push_back(std::move(e));
    };
    emit(EventKind::stand_up, t.samples.front());
    emit(EventKind::sit_down, t.samples.back());
  }
  sort_events(out);
  return out;
}

std::vector<DiaryEvent> detect_interactions(std::span<const Trajectory> trajectories, double fps,
                                            const InteractionParams& params) {
  std::map<int, std::map<int, Vec3>> tracks;
  for (const auto& t : trajectories)
    for (const auto& s : t.samples) tracks[t.identity].emplace(s.frame, s.position);

  auto mean_speed = [&](const std::map<int, Vec3>& track, int f0, int f1) {
    double path = 0.0;
    const Vec3* prev = nullptr;
    for (auto it = track.lower_bound(f0); it != track.end() && it->first <= f1; ++it) {
      if (prev) path += (it->second - *prev).norm();
      prev = &it->second;
    }
    const double secs = static_cast<double>(f1 - f0) / fps;
    return secs > 0.0 ? path / secs : 0.0;
  };

  std::vector<DiaryEvent> out;
  for (auto a = tracks.begin(); a != tracks.end(); ++a) {
    for (auto b = std::next(a); b != tracks.end(); ++b) {
      const auto& ta = a->second;
      const auto& tb = b->second;
      std::vector<int> close;
      for (const auto& [f, pa] : ta) {
        auto it = tb.find(f);
        if (it != tb.end() && (pa - it->second).norm() < params.max_distance_cm) close.push_back(f);
      }
      auto flush = [&](int f0, int f1) {
        if (static_cast<double>(f1 - f0) / fps < params.min_duration_sec) return;
        const bool moving = mean_speed(ta, f0, f1) > params.walking_speed_cmps &&
                            mean_speed(tb, f0, f1) > params.walking_speed_cmps;
        DiaryEvent e;
        e.kind = moving ? EventKind::dynamic_interaction : EventKind::static_interaction;
        e.subject = a->first;
        e.partner = b->first;
        e.frame_start = f0;
        e.frame_end = f1;
        e.description = person(a->first) + (moving ? " walked with " : " interacted with ") + person(b->first);
        out.push_back(std::move(e));
      };
      for (std::size_t k = 0; k < close.size();) {
        std::size_t end = k;
        while (end + 1 < close.size() && close[end + 1] - close[end] <= params.max_gap_frames) ++end;
        flush(close[k], close[end]);
        k = end + 1;
      }
    }
  }
  sort_events(out);
  return out;
}

std::vector<DiaryEvent> detect_all_events(std::span<const Trajectory> trajectories, const SceneMap& map, double fps,
                                          const InteractionParams& params) {
  std::vector<DiaryEvent> events;
  for (const auto& t : trajectories) {
    auto rc = detect_room_changes(t, map);
    events.insert(events.end(), rc.begin(), rc.end());
  }
  auto ss = detect_sit_stand(trajectories, map);
  events.insert(events.end(), ss.begin(), ss.end());
  auto in = detect_interactions(trajectories, fps, params);
  // interactions are located in the subject's room at the start of the interval
  std::map<int, std::map<int, Vec3>> tracks;
  for (const auto& t : trajectories)
    for (const auto& s : t.samples) tracks[t.identity].emplace(s.frame, s.position);
  for (auto& e : in) e.room = map.room_at(ground(tracks[e.subject].at(e.frame_start)));
  events.insert(events.end(), in.begin(), in.end());
  sort_events(events);
  return events;
}

// ---- timeline and statistics ----------------------------------------------

std::vector<TimelineSpan> build_timeline(std::span<const Trajectory> trajectories,
                                         std::span<const DiaryEvent> events, const SceneMap& map) {
  std::vector<TimelineSpan> out;
  int sequence_end = 0;
  std::map<int, std::vector<int>> segment_starts;
  for (const auto& t : trajectories) {
    if (t.samples.empty()) continue;
    sequence_end = std::max(sequence_end, t.last_frame());
    segment_starts[t.identity].push_back(t.first_frame());
    for (std::size_t k = 0; k + 1 < t.samples.size(); ++k) {
      std::string room = map.room_at(ground(t.samples[k].position));
      const int f0 = t.samples[k].frame;
      const int f1 = t.samples[k + 1].frame;
      if (!out.empty() && out.back().identity == t.identity && out.back().frame_end == f0 &&
          out.back().room == room && out.back().posture == Posture::upright) {
        out.back().frame_end = f1;
      } else {
        out.push_back({t.identity, f0, f1, std::move(room), Posture::upright});
      }
    }
  }
  for (auto& [id, starts] : segment_starts) std::sort(starts.begin(), starts.end());

  for (std::size_t k = 0; k < events.size(); ++k) {
    const auto& e = events[k];
    if (e.kind != EventKind::sit_down) continue;
    int end = sequence_end;
    for (const auto& other : events)
      if (other.kind == EventKind::stand_up && other.subject == e.subject && other.seat == e.seat &&
          other.frame_start >= e.frame_start)
        end = std::min(end, other.frame_start);
    const auto& starts = segment_starts[e.subject];
    auto next = std::upper_bound(starts.begin(), starts.end(), e.frame_start);
    if (next != starts.end()) end = std::min(end, *next);
    if (end > e.frame_start) out.push_back({e.subject, e.frame_start, end, e.room, Posture::sitting});
  }
  std::stable_sort(out.begin(), out.end(), [](const TimelineSpan& a, const TimelineSpan& b) {
    return std::tie(a.identity, a.frame_start) < std::tie(b.identity, b.frame_start);
  });
  return out;
}

std::map<int, IdentityStats> diary_statistics(std::span<const TimelineSpan> timeline,
                                              std::span<const DiaryEvent> events, double fps) {
  std::map<int, IdentityStats> stats;
  for (const auto& s : timeline) {
    auto& rt = stats[s.identity].rooms[s.room];
    const double secs = static_cast<double>(s.frame_end - s.frame_start) / fps;
    (s.posture == Posture::sitting ? rt.sitting_sec : rt.upright_sec) += secs;
  }
  for (const auto& e : events) {
    if (!is_interaction(e.kind)) continue;
    const double secs = static_cast<double>(e.frame_end - e.frame_start) / fps;
    stats[e.subject].interaction_sec += secs;
    if (e.partner) stats[*e.partner].interaction_sec += secs;
  }
  return stats;
}

DiaryDocument render_diary(std::span<const DiaryEvent> events, std::span<const Trajectory> trajectories,
                           const SceneMap& map, double fps, const std::map<int, std::string>& names) {
  std::vector<DiaryEvent> sorted(events.begin(), events.end());
  sort_events(sorted);
  const auto timeline = build_timeline(trajectories, sorted, map);
  const auto stats = diary_statistics(timeline, sorted, fps);
  auto name = [&](int id) {
    auto it = names.find(id);
    return it != names.end() ? it->second : person(id);
  };

  std::ostringstream text;
  json doc;
  doc["snippets"] = json::array();
  text << "Visual diary\n\nSnippets\n";
  for (const auto& e : sorted) {
    const std::string s = sentence(e, names, fps);
    text << "  " << s << '\n';
    json j{{"kind", to_string(e.kind)}, {"subject", e.subject}, {"f0", e.frame_start}, {"f1", e.frame_end},
           {"room", e.room}, {"text", s}, {"snapshot", {{"frame", e.frame_start}}}};
    j["partner"] = e.partner ? json(*e.partner) : json(nullptr);
    doc["snippets"].push_back(std::move(j));
  }
  if (sorted.empty()) text << "  (no activities detected)\n";

  text << "\nStatistics\n";
  doc["statistics"] = json::object();
  char buf[64];
  for (const auto& [id, st] : stats) {
    text << "  " << name(id) << '\n';
    json per = json::object();
    for (const auto& [room, rt] : st.rooms) {
      std::snprintf(buf, sizeof buf, "upright %.1f s, sitting %.1f s", rt.upright_sec, rt.sitting_sec);
      text << "    " << room << ": " << buf << '\n';
      per["rooms"][room] = {{"upright_sec", rt.upright_sec}, {"sitting_sec", rt.sitting_sec}};
    }
    std::snprintf(buf, sizeof buf, "%.1f s", st.interaction_sec);
    text << "    total interaction time: " << buf << '\n';
    per["interaction_sec"] = st.interaction_sec;
    per["name"] = name(id);
    doc["statistics"][std::to_string(id)] = std::move(per);
  }
  return {text.str(), doc.dump(2)};
}

// ---- evaluation ------------------------------------------------------------

namespace {

long overlap(int a0, int a1, int b0, int b1) { return std::max(0, std::min(a1, b1) - std::max(a0, b0)); }

std::pair<int, int> pair_key(const DiaryEvent& e) {
  const int p = e.partner.value_or(-1);
  return {std::min(e.subject, p), std::max(e.subject, p)};
}

// Interaction spans of one identity with one partner, as half-open frame ranges.
struct PartnerSpan {
  int identity, partner, f0, f1;
};

std::vector<PartnerSpan> partner_spans(std::span<const DiaryEvent> events) {
  std::vector<PartnerSpan> out;
  for (const auto& e : events) {
    if (!is_interaction(e.kind) || !e.partner) continue;
    out.push_back({e.subject, *e.partner, e.frame_start, e.frame_end + 1});
    out.push_back({*e.partner, e.subject, e.frame_start, e.frame_end + 1});
  }
  return out;
}

// Total frames covered by the union of spans per key.
template <typename Key>
long union_length(std::map<Key, std::vector<std::pair<int, int>>>& spans) {
  long total = 0;
  for (auto& [key, v] : spans) {
    std::sort(v.begin(), v.end());
    int cur0 = 0, cur1 = 0;
    bool open = false;
    for (const auto& [a, b] : v) {
      if (open && a <= cur1) {
        cur1 = std::max(cur1, b);
      } else {
        if (open) total += cur1 - cur0;
        cur0 = a;
        cur1 = b;
        open = true;
      }
    }
    if (open) total += cur1 - cur0;
  }
  return total;
}

}  // namespace

DiaryEvalReport evaluate_diary(std::span<const DiaryEvent> pred_events, std::span<const DiaryEvent> gt_events,
                               std::span<const TimelineSpan> pred_timeline, std::span<const TimelineSpan> gt_timeline,
                               const DiaryEvalParams& params) {
  DiaryEvalReport r;

  // point events: same kind, subject and room, |dt| < tolerance, one-to-one by closeness
  {
    const double max_frames = params.max_time_offset_sec * params.fps;
    std::vector<std::tuple<int, std::size_t, std::size_t>> pairs;
    long pred_points = 0, gt_points = 0;
    for (std::size_t p = 0; p < pred_events.size(); ++p) {
      if (is_interaction(pred_events[p].kind)) continue;
      ++pred_points;
      for (std::size_t g = 0; g < gt_events.size(); ++g) {
        const auto& a = pred_events[p];
        const auto& b = gt_events[g];
        if (a.kind != b.kind || a.subject != b.subject || a.room != b.room) continue;
        const int dt = std::abs(a.frame_start - b.frame_start);
        if (static_cast<double>(dt) < max_frames) pairs.emplace_back(dt, p, g);
      }
    }
    for (const auto& e : gt_events)
      if (!is_interaction(e.kind)) ++gt_points;
    std::sort(pairs.begin(), pairs.end());
    std::vector<bool> p_used(pred_events.size()), g_used(gt_events.size());
    long tp = 0;
    for (const auto& [dt, p, g] : pairs) {
      if (p_used[p] || g_used[g]) continue;
      p_used[p] = g_used[g] = true;
      ++tp;
    }
    r.snippet_tp += tp;
    r.snippet_fp += pred_points - tp;
    r.snippet_fn += gt_points - tp;
  }

  // interaction snippets: > half of the predicted span inside an unconsumed gt
  // interaction of the same pair; each gt interaction validates one prediction
  {
    std::vector<std::size_t> order;
    for (std::size_t p = 0; p < pred_events.size(); ++p)
      if (is_interaction(pred_events[p].kind)) order.push_back(p);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return pred_events[a].frame_start < pred_events[b].frame_start;
    });
    std::vector<bool> consumed(gt_events.size());
    long gt_count = 0;
    for (const auto& e : gt_events)
      if (is_interaction(e.kind)) ++gt_count;
    long tp = 0;
    for (std::size_t p : order) {
      const auto& a = pred_events[p];
      const double span = static_cast<double>(a.frame_end - a.frame_start + 1);
      bool matched = false;
      for (std::size_t g = 0; g < gt_events.size() && !matched; ++g) {
        const auto& b = gt_events[g];
        if (!is_interaction(b.kind) || pair_key(a) != pair_key(b)) continue;
        const double ov = static_cast<double>(overlap(a.frame_start, a.frame_end + 1, b.frame_start, b.frame_end + 1));
        if (ov / span <= params.min_overlap_fraction) continue;
        if (consumed[g]) continue;
        consumed[g] = true;
        matched = true;
      }
      if (matched) ++tp;
    }
    r.snippet_tp += tp;
    r.snippet_fp += static_cast<long>(order.size()) - tp;
    r.snippet_fn += gt_count - tp;
  }
  r.snippets = micro_prf(r.snippet_tp, r.snippet_fp, r.snippet_fn);

  // room/state timing, frame-wise
  {
    long tp = 0, pred_total = 0, gt_total = 0;
    for (const auto& s : pred_timeline) pred_total += s.frame_end - s.frame_start;
    for (const auto& s : gt_timeline) gt_total += s.frame_end - s.frame_start;
    for (const auto& p : pred_timeline)
      for (const auto& g : gt_timeline)
        if (p.identity == g.identity && p.room == g.room && p.posture == g.posture)
          tp += overlap(p.frame_start, p.frame_end, g.frame_start, g.frame_end);
    r.state_tp = tp;
    r.state_fp = pred_total - tp;
    r.state_fn = gt_total - tp;
    r.room_state = micro_prf(r.state_tp, r.state_fp, r.state_fn);
  }

  // interaction timing, frame-wise per (identity, partner)
  {
    using Key = std::pair<int, int>;
    std::map<Key, std::vector<std::pair<int, int>>> pred_map, gt_map, both;
    const auto ps = partner_spans(pred_events);
    const auto gs = partner_spans(gt_events);
    for (const auto& s : ps) pred_map[{s.identity, s.partner}].emplace_back(s.f0, s.f1);
    for (const auto& s : gs) gt_map[{s.identity, s.partner}].emplace_back(s.f0, s.f1);
    for (const auto& p : ps)
      for (const auto& g : gs)
        if (p.identity == g.identity && p.partner == g.partner) {
          const int a = std::max(p.f0, g.f0), b = std::min(p.f1, g.f1);
          if (b > a) both[{p.identity, p.partner}].emplace_back(a, b);
        }
    const long tp = union_length(both);
    r.interaction_tp = tp;
    r.interaction_fp = union_length(pred_map) - tp;
    r.interaction_fn = union_length(gt_map) - tp;
    r.interaction_time = micro_prf(r.interaction_tp, r.interaction_fp, r.interaction_fn);
  }
  return r;
}

std::string diary_report_json(const DiaryEvalReport& r) {
  auto prf = [](const PrecisionRecall& p, long tp, long fp, long fn) {
    return json{{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}, {"tp", tp}, {"fp", fp}, {"fn", fn}};
  };
  json j{{"snippets", prf(r.snippets, r.snippet_tp, r.snippet_fp, r.snippet_fn)},
         {"room_state", prf(r.room_state, r.state_tp, r.state_fp, r.state_fn)},
         {"interaction_time", prf(r.interaction_time, r.interaction_tp, r.interaction_fp, r.interaction_fn)}};
  return j.dump();
}

// ---- IO --------------------------------------------------------------------

namespace {

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

template <typename Fn>
void read_lines(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      fn(json::parse(line));
    } catch (const json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(no) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(no) + ": " + e.what());
    }
  }
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

}  // namespace

SceneMap load_scene_map(const std::filesystem::path& path) {
  const json j = read_json_file(path);
  SceneMap map;
  try {
    for (const auto& r : j.value("rooms", json::array())) {
      Room room;
      room.name = r.at("name").get<std::string>();
      for (const auto& v : r.at("polygon")) room.polygon.emplace_back(v.at(0).get<double>(), v.at(1).get<double>());
      map.rooms.push_back(std::move(room));
    }
    for (const auto& s : j.value("seats", json::array())) {
      Seat seat;
      seat.name = s.at("name").get<std::string>();
      seat.center = Vec2(s.at("x").get<double>(), s.at("y").get<double>());
      seat.radius_cm = s.at("radius").get<double>();
      map.seats.push_back(std::move(seat));
    }
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  map.validate();
  return map;
}

void write_scene_map(const SceneMap& map, const std::filesystem::path& path) {
  json j{{"rooms", json::array()}, {"seats", json::array()}};
  for (const auto& r : map.rooms) {
    json poly = json::array();
    for (const auto& v : r.polygon) poly.push_back({v.x(), v.y()});
    j["rooms"].push_back({{"name", r.name}, {"polygon", poly}});
  }
  for (const auto& s : map.seats)
    j["seats"].push_back({{"name", s.name}, {"x", s.center.x()}, {"y", s.center.y()}, {"radius", s.radius_cm}});
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

void write_events(std::span<const DiaryEvent> events, const std::filesystem::path& path) {
  auto out = open_out(path);
  for (const auto& e : events) {
    json j{{"kind", to_string(e.kind)}, {"subject", e.subject}, {"f0", e.frame_start}, {"f1", e.frame_end},
           {"room", e.room}};
    j["partner"] = e.partner ? json(*e.partner) : json(nullptr);
    if (!e.seat.empty()) j["seat"] = e.seat;
    out << j.dump() << '\n';
  }
}

std::vector<DiaryEvent> load_events(const std::filesystem::path& path) {
  std::vector<DiaryEvent> out;
  read_lines(path, [&](const json& j) {
    DiaryEvent e;
    e.kind = event_kind_from_string(j.at("kind").get<std::string>());
    e.subject = j.at("subject").get<int>();
    if (j.contains("partner") && !j.at("partner").is_null()) e.partner = j.at("partner").get<int>();
    e.frame_start = j.at("f0").get<int>();
    e.frame_end = j.at("f1").get<int>();
    e.room = j.value("room", std::string{});
    e.seat = j.value("seat", std::string{});
    if (e.frame_start > e.frame_end) throw DataError("event f0 > f1");
    if (e.partner.has_value() != is_interaction(e.kind)) throw DataError("partner present iff interaction");
    out.push_back(std::move(e));
  });
  return out;
}

void write_timeline(std::span<const TimelineSpan> timeline, const std::filesystem::path& path) {
  auto out = open_out(path);
  for (const auto& s : timeline)
    out << json{{"id", s.identity},
                {"f0", s.frame_start},
                {"f1", s.frame_end},
                {"room", s.room},
                {"state", s.posture == Posture::sitting ? "sitting" : "upright"}}
               .dump()
        << '\n';
}

std::vector<TimelineSpan> load_timeline(const std::filesystem::path& path) {
  std::vector<TimelineSpan> out;
  read_lines(path, [&](const json& j) {
    TimelineSpan s;
    s.identity = j.at("id").get<int>();
    s.frame_start = j.at("f0").get<int>();
    s.frame_end = j.at("f1").get<int>();
    s.room = j.at("room").get<std::string>();
    const auto state = j.at("state").get<std::string>();
    if (state != "sitting" && state != "upright") throw DataError("state must be sitting or upright");
    s.posture = state == "sitting" ? Posture::sitting : Posture::upright;
    if (s.frame_end < s.frame_start) throw DataError("timeline span f1 < f0");
    out.push_back(std::move(s));
  });
  return out;
}

std::map<int, std::string> load_names(const std::filesystem::path& path) {
  const json j = read_json_file(path);
  std::map<int, std::string> names;
  if (!j.is_object()) throw DataError(path.string() + ": names must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    try {
      names[std::stoi(key)] = value.get<std::string>();
    } catch (const std::exception&) {
      throw DataError(path.string() + ": bad name entry \"" + key + "\"");
    }
  }
  return names;
}

}  // namespace idtrack
