#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace idtrack {

using Vec3 = Eigen::Vector3d;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Raised for malformed input files and violated data contracts.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One person detection.
struct Observation {
  int obs_id = 0;
  Vec3 position = Vec3::Zero();  // cm, bottom center of the bounding box
  int frame = 0;
  std::vector<double> histogram;  // per-partition L1-normalized
  int camera_id = 0;
  std::optional<int> face_label;
};

struct ObservationSet {
  std::vector<Observation> observations;
  double fps = 25.0;
  int num_identities = 0;
  int histogram_dim = 0;

  [[nodiscard]] int size() const { return static_cast<int>(observations.size()); }
  [[nodiscard]] const Observation& operator[](int i) const { return observations[static_cast<std::size_t>(i)]; }

  /// Throws DataError if any invariant of the set is violated.
  void validate() const;
};

/// All tunables of the tracker. Seconds-valued fields are converted to
/// frames with the set's fps when the graphs are built.
struct TrackerConfig {
  // appearance manifold
  int k = 25;
  double T_appearance_sec = 8.0;
  double gamma = 0.85;
  double delta_cm = 125.0;
  double V_cmps = 200.0;
  double epsilon_sec = 1e-6;
  // spatial affinity
  double delta_tilde_cm = 20.0;
  int T_tilde_frames = 6;
  // spatial locality
  int slc_window_frames = 6;
  bool use_slc = true;
  // class sizes and penalty schedule
  double beta_per_1000 = 1.0;
  double tau_init = 1e-4;
  double tau_final = 1e11;
  double tau_step_s = 2.0;
  double sigma = 0.01;
  double inner_tol = 1e-5;
  int inner_max_iters = 500;
  double u_large = 1e6;
  // trajectory formation
  double assign_threshold_theta = 0.2;  // on column-normalized scores
  int min_run_length = 3;
  int gap_frames = 18;

  void validate() const;
};

struct TrajectorySample {
  int frame = 0;
  Vec3 position = Vec3::Zero();
  double weight = 0.0;
};

struct Trajectory {
  int identity = 0;
  std::vector<TrajectorySample> samples;

  [[nodiscard]] int first_frame() const { return samples.front().frame; }
  [[nodiscard]] int last_frame() const { return samples.back().frame; }
};

struct GroundTruthEntry {
  int frame = 0;
  int identity = 0;
  Vec3 position = Vec3::Zero();
};

struct GroundTruth {
  std::vector<GroundTruthEntry> entries;
  int annotation_stride_frames = 1;

  void validate() const;
};

/// Face labels as a sparse indicator matrix plus the list of labeled rows.
struct LabelMatrix {
  SparseMatrix Y;               // n x c, at most one unit entry per row
  std::vector<int> labeled_rows;  // ascending obs ids
};

[[nodiscard]] LabelMatrix build_label_matrix(const ObservationSet& set);

// ---- file IO (JSON Lines) ----

[[nodiscard]] ObservationSet load_detections(const std::filesystem::path& path);
void write_detections(const ObservationSet& set, const std::filesystem::path& path);

[[nodiscard]] GroundTruth load_ground_truth(const std::filesystem::path& path);
void write_ground_truth(const GroundTruth& gt, const std::filesystem::path& path);

struct TrajectoryFile {
  double fps = 25.0;
  std::vector<Trajectory> trajectories;
};

void write_trajectories(const std::vector<Trajectory>& trajectories, double fps,
                        const std::filesystem::path& path);
[[nodiscard]] TrajectoryFile load_trajectories(const std::filesystem::path& path);

/// Flat JSON object with TrackerConfig keys. Unknown keys are rejected.
[[nodiscard]] TrackerConfig load_config(const std::filesystem::path& path);
[[nodiscard]] std::string config_to_json(const TrackerConfig& cfg);
void apply_config_json(TrackerConfig& cfg, const std::string& json_text);

/// Infers the annotation stride as the smallest gap between annotated frames.
[[nodiscard]] int infer_annotation_stride(const std::vector<GroundTruthEntry>& entries);

}  // namespace idtrack
