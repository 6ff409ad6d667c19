#pragma once

#include "idtrack/model.hpp"

#include <Eigen/Core>

#include <optional>
#include <span>
#include <vector>

namespace idtrack {

struct AssignmentDecision {
  int obs_id = 0;
  std::optional<int> identity;
  double score = 0.0;  // the retained entry of F
};

/// Row-wise argmax (ties to the smallest column); a row is assigned iff its
/// maximum exceeds theta. Observations carrying a face label keep it.
[[nodiscard]] std::vector<AssignmentDecision> discretize(const Eigen::MatrixXd& F, double theta,
                                                         const ObservationSet& set);

struct FramePoint {
  int identity = 0;
  int frame = 0;
  Vec3 position = Vec3::Zero();
  double weight = 0.0;  // total score merged into this point
};

/// Score-weighted mean position per (identity, frame), sorted by (identity, frame).
[[nodiscard]] std::vector<FramePoint> merge_per_frame(std::span<const AssignmentDecision> decisions,
                                                      const ObservationSet& set);

/// Splits each identity's points into runs with gaps of at most gap_frames
/// and drops runs shorter than min_run_length.
[[nodiscard]] std::vector<Trajectory> filter_sporadic(std::span<const FramePoint> points, int gap_frames,
                                                      int min_run_length);

/// Divides each column by the median of its positive entries over rows without
/// a face label, so a typical member of every identity scores 1 regardless of
/// that identity's class-size target. Columns with no such entry are unchanged.
[[nodiscard]] Eigen::MatrixXd normalize_scores(const Eigen::MatrixXd& F, const ObservationSet& set);

/// normalize_scores -> discretize -> merge_per_frame -> filter_sporadic.
[[nodiscard]] std::vector<Trajectory> form_trajectories(const Eigen::MatrixXd& F, const ObservationSet& set,
                                                        const TrackerConfig& cfg);

/// Same-identity detection pairs within the conflict window whose pair
/// velocity exceeds V.
[[nodiscard]] long count_slc_violations(std::span<const AssignmentDecision> decisions, const ObservationSet& set,
                                        const TrackerConfig& cfg);

/// Same check on trajectory samples (positions in cm, frames at fps).
[[nodiscard]] long count_slc_violations(std::span<const Trajectory> trajectories, double fps,
                                        const TrackerConfig& cfg);

}  // namespace idtrack
