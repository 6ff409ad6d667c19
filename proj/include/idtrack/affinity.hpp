#pragma once

#include "idtrack/model.hpp"

#include <filesystem>
#include <span>
#include <vector>

namespace idtrack {

/// Speed (cm/s) needed to travel between two detections, discounting the
/// localization slack delta: max(|pi - pj| - delta, 0) / (|ti - tj| / fps + eps).
[[nodiscard]] double pair_velocity(const Observation& a, const Observation& b, double delta_cm, double epsilon_sec,
                                   double fps);

/// exp(-1/2 * sum_l (x_l - y_l)^2 / (x_l + y_l)); bins empty in both are skipped.
[[nodiscard]] double exp_chi2(std::span<const double> x, std::span<const double> y);

struct Neighbor {
  int obs = 0;
  double similarity = 0.0;
};
using NeighborLists = std::vector<std::vector<Neighbor>>;

/// Frame-bucketed view of an observation set: observation ids grouped by
/// frame, frames ascending.
class FrameIndex {
 public:
  explicit FrameIndex(const ObservationSet& set);

  /// Calls fn(obs_id) for every observation whose frame lies in [lo, hi].
  template <typename Fn>
  void for_each_in_frames(int lo, int hi, Fn&& fn) const {
    auto it = std::lower_bound(frames_.begin(), frames_.end(), lo);
    for (auto f = static_cast<std::size_t>(it - frames_.begin()); f < frames_.size() && frames_[f] <= hi; ++f)
      for (int k = offsets_[f]; k < offsets_[f + 1]; ++k) fn(ids_[static_cast<std::size_t>(k)]);
  }

 private:
  std::vector<int> frames_;   // distinct frames, ascending
  std::vector<int> offsets_;  // CSR offsets into ids_
  std::vector<int> ids_;
};

/// Converts a duration to whole frames, rounding to nearest.
[[nodiscard]] int seconds_to_frames(double seconds, double fps);

/// Up to k most similar qualifying observations per observation, sorted by
/// descending similarity then ascending id.
[[nodiscard]] NeighborLists appearance_knn(const ObservationSet& set, const TrackerConfig& cfg, int threads = 1);

/// L = D - W with W the (W + W^T)/2 symmetrization of the kNN similarities.
[[nodiscard]] SparseMatrix appearance_laplacian(const ObservationSet& set, const NeighborLists& neighbors);

/// K = I - D^-1/2 A D^-1/2 over near-coincident detections; isolated rows are all zero.
[[nodiscard]] SparseMatrix spatial_laplacian(const ObservationSet& set, const TrackerConfig& cfg, int threads = 1);

/// Normalized indicator of velocity-infeasible pairs within the conflict window.
[[nodiscard]] SparseMatrix spatial_locality_matrix(const ObservationSet& set, const TrackerConfig& cfg,
                                                   int threads = 1);

struct GraphStats {
  long appearance_edges = 0;  // directed kNN edges before symmetrization
  long laplacian_nnz = 0;
  long spatial_edges = 0;     // nonzero off-diagonal entries of A
  long conflict_edges = 0;    // nonzero entries of S
};

struct AffinityGraphs {
  SparseMatrix L;
  SparseMatrix K;
  SparseMatrix S;
  GraphStats stats;
};

/// Builds L, K and S. With cfg.use_slc == false, S is the zero matrix.
[[nodiscard]] AffinityGraphs build_graphs(const ObservationSet& set, const TrackerConfig& cfg, int threads = 1);

/// Writes "i j value" lines sorted by (i, j).
void write_coo(const SparseMatrix& m, const std::filesystem::path& path);

}  // namespace idtrack
