#pragma once

#include "idtrack/affinity.hpp"
#include "idtrack/model.hpp"
#include "idtrack/solver.hpp"
#include "idtrack/trajectories.hpp"

#include <map>
#include <string>
#include <vector>

namespace idtrack {

struct TrackResult {
  GraphStats graph_stats;
  DenseMatrix F;
  SolveTrace trace;
  std::vector<AssignmentDecision> decisions;
  std::vector<Trajectory> trajectories;
  std::map<std::string, double> stage_seconds;  // affinity, solve, trajectories
};

/// Affinity graphs -> penalty solve -> trajectory formation.
[[nodiscard]] TrackResult run_tracker(const ObservationSet& set, const TrackerConfig& cfg, int threads = 1);

}  // namespace idtrack
