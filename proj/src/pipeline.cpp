#include "idtrack/pipeline.hpp"

#include <chrono>

namespace idtrack {

namespace {

class StageTimer {
 public:
  StageTimer(std::map<std::string, double>& sink, std::string name)
      : sink_(sink), name_(std::move(name)), start_(std::chrono::steady_clock::now()) {}
  ~StageTimer() {
    sink_[name_] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }
  StageTimer(const StageTimer&) = delete;
  StageTimer& operator=(const StageTimer&) = delete;

 private:
  std::map<std::string, double>& sink_;
  std::string name_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace

TrackResult run_tracker(const ObservationSet& set, const TrackerConfig& cfg, int threads) {
  cfg.validate();
  set.validate();
  TrackResult out;

  PenaltyProblem problem;
  {
    StageTimer t(out.stage_seconds, "affinity");
    const AffinityGraphs graphs = build_graphs(set, cfg, threads);
    out.graph_stats = graphs.stats;
    const LabelMatrix labels = build_label_matrix(set);
    problem = make_problem(graphs, labels, estimate_class_sizes(labels, std::max(1, set.size()), cfg.beta_per_1000));
  }
  {
    StageTimer t(out.stage_seconds, "solve");
    SolveResult solved = solve(problem, cfg);
    out.F = std::move(solved.F);
    out.trace = std::move(solved.trace);
  }
  {
    StageTimer t(out.stage_seconds, "trajectories");
    out.decisions = discretize(normalize_scores(out.F, set), cfg.assign_threshold_theta, set);
    const auto points = merge_per_frame(out.decisions, set);
    out.trajectories = filter_sporadic(points, cfg.gap_frames, cfg.min_run_length);
  }
  return out;
}

}  // namespace idtrack
