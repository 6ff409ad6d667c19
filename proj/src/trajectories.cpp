#include "idtrack/trajectories.hpp"

#include "idtrack/affinity.hpp"

#include <algorithm>
#include <map>

namespace idtrack {

std::vector<AssignmentDecision> discretize(const Eigen::MatrixXd& F, double theta, const ObservationSet& set) {
  std::vector<AssignmentDecision> out(static_cast<std::size_t>(F.rows()));
  for (Eigen::Index i = 0; i < F.rows(); ++i) {
    auto& d = out[static_cast<std::size_t>(i)];
    d.obs_id = static_cast<int>(i);
    const auto& label = set[static_cast<int>(i)].face_label;
    if (label) {
      d.identity = *label;
      d.score = F(i, *label);
      continue;
    }
    if (F.cols() == 0) continue;
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < F.cols(); ++j)
      if (F(i, j) > F(i, best)) best = j;
    d.score = F(i, best);
    if (d.score > theta) d.identity = static_cast<int>(best);
  }
  return out;
}

std::vector<FramePoint> merge_per_frame(std::span<const AssignmentDecision> decisions, const ObservationSet& set) {
  struct Acc {
    Vec3 weighted = Vec3::Zero();
    double weight = 0.0;
  };
  std::map<std::pair<int, int>, Acc> acc;
  for (const auto& d : decisions) {
    if (!d.identity) continue;
    const Observation& o = set[d.obs_id];
    auto& a = acc[{*d.identity, o.frame}];
    a.weighted += d.score * o.position;
    a.weight += d.score;
  }
  std::vector<FramePoint> out;
  out.reserve(acc.size());
  for (const auto& [key, a] : acc) {
    if (!(a.weight > 0.0)) continue;
    out.push_back({key.first, key.second, a.weighted / a.weight, a.weight});
  }
  return out;
}

std::vector<Trajectory> filter_sporadic(std::span<const FramePoint> points, int gap_frames, int min_run_length) {
  std::vector<Trajectory> out;
  Trajectory run;
  auto flush = [&] {
    if (static_cast<int>(run.samples.size()) >= min_run_length) out.push_back(run);
    run.samples.clear();
  };
  for (std::size_t k = 0; k < points.size(); ++k) {
    const auto& p = points[k];
    const bool continues = !run.samples.empty() && run.identity == p.identity &&
                           p.frame - run.samples.back().frame <= gap_frames;
    if (!continues) {
      flush();
      run.identity = p.identity;
    }
    run.samples.push_back({p.frame, p.position, p.weight});
  }
  flush();
  return out;
}

Eigen::MatrixXd normalize_scores(const Eigen::MatrixXd& F, const ObservationSet& set) {
  Eigen::MatrixXd out = F;
  std::vector<double> column;
  for (Eigen::Index j = 0; j < F.cols(); ++j) {
    column.clear();
    for (Eigen::Index i = 0; i < F.rows(); ++i)
      if (!set[static_cast<int>(i)].face_label && F(i, j) > 0.0) column.push_back(F(i, j));
    if (column.empty()) continue;
    // upper median, so the result does not depend on averaging two entries
    auto mid = column.begin() + static_cast<std::ptrdiff_t>(column.size() / 2);
    std::nth_element(column.begin(), mid, column.end());
    out.col(j) /= *mid;
  }
  return out;
}

std::vector<Trajectory> form_trajectories(const Eigen::MatrixXd& F, const ObservationSet& set,
                                          const TrackerConfig& cfg) {
  const auto decisions = discretize(normalize_scores(F, set), cfg.assign_threshold_theta, set);
  const auto points = merge_per_frame(decisions, set);
  return filter_sporadic(points, cfg.gap_frames, cfg.min_run_length);
}

namespace {

// Pairs (a, b) of same-identity items within the window whose velocity exceeds V.
template <typename Item>
long count_violating_pairs(std::map<int, std::vector<Item>>& by_identity, int window, double fps,
                           const TrackerConfig& cfg) {
  long count = 0;
  for (auto& [id, items] : by_identity) {
    std::stable_sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.frame < b.frame; });
    for (std::size_t a = 0; a < items.size(); ++a) {
      for (std::size_t b = a + 1; b < items.size() && items[b].frame - items[a].frame <= window; ++b) {
        if (pair_velocity(items[a], items[b], cfg.delta_cm, cfg.epsilon_sec, fps) > cfg.V_cmps) ++count;
      }
    }
  }
  return count;
}

}  // namespace

long count_slc_violations(std::span<const AssignmentDecision> decisions, const ObservationSet& set,
                          const TrackerConfig& cfg) {
  std::map<int, std::vector<Observation>> by_identity;
  for (const auto& d : decisions)
    if (d.identity) by_identity[*d.identity].push_back(set[d.obs_id]);
  return count_violating_pairs(by_identity, cfg.slc_window_frames, set.fps, cfg);
}

long count_slc_violations(std::span<const Trajectory> trajectories, double fps, const TrackerConfig& cfg) {
  std::map<int, std::vector<Observation>> by_identity;
  for (const auto& t : trajectories) {
    for (const auto& s : t.samples) {
      Observation o;
      o.frame = s.frame;
      o.position = s.position;
      by_identity[t.identity].push_back(std::move(o));
    }
  }
  return count_violating_pairs(by_identity, cfg.slc_window_frames, fps, cfg);
}

}  // namespace idtrack
