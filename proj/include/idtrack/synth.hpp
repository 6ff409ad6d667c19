#pragma once

#include "idtrack/model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace idtrack {

struct OcclusionWindow {
  int first_frame = 0;
  int last_frame = 0;  // inclusive
  int agent = 0;
};

struct ScenarioConfig {
  int num_agents = 4;
  double arena_width_cm = 750.0;
  double arena_height_cm = 1100.0;
  int duration_frames = 1000;
  double fps = 25.0;
  int detection_stride = 4;  // detections only on frames divisible by this
  int gt_stride = 25;        // ground truth annotated on frames divisible by this
  double speed_min_cmps = 30.0;
  double speed_max_cmps = 150.0;
  double heading_noise_rad = 0.15;  // per-frame heading jitter (std dev)
  int partitions = 7;
  int bins_per_partition = 6;
  double appearance_noise_sigma = 0.12;  // log-normal per-bin noise
  double appearance_drift_rate = 0.01;   // prototype blend cycles per second
  double prototype_max_similarity = 0.5; // pairwise exp-chi2 ceiling between agents
  double detection_dropout_prob = 0.05;
  double false_positive_rate = 0.0;  // mean false positives per detection frame
  int cameras = 1;
  double duplication_jitter_cm = 8.0;
  double face_label_prob = 0.02;
  std::vector<OcclusionWindow> occlusion_windows;
  std::uint64_t seed = 1;

  void validate() const;
  [[nodiscard]] int histogram_dim() const { return partitions * bins_per_partition; }
};

struct Scenario {
  ObservationSet detections;
  GroundTruth ground_truth;
  std::vector<int> source_agent;  // per observation; -1 for false positives
};

/// Bounded-velocity random walks observed by noisy duplicated detectors.
[[nodiscard]] Scenario generate(const ScenarioConfig& cfg);

/// Two identically dressed agents on crossing straight lines, each labeled
/// at its first and last detection.
[[nodiscard]] Scenario crossing_fixture(std::uint64_t seed = 7);

/// Named presets: "crossing", "crowded", "longgap", "default".
[[nodiscard]] ScenarioConfig preset_config(const std::string& name, std::uint64_t seed);
[[nodiscard]] Scenario generate_preset(const std::string& name, std::uint64_t seed);

/// Reassigns round(fraction * labels) randomly chosen face labels to a
/// different identity. Returns the number corrupted.
int corrupt_labels(ObservationSet& set, double fraction, std::uint64_t seed);

}  // namespace idtrack
