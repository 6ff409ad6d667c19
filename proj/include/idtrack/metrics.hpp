#pragma once

#include "idtrack/model.hpp"

#include <span>
#include <string>
#include <vector>

namespace idtrack {

struct EvalCounts {
  long tp = 0;
  long fp = 0;
  long fn = 0;
  long id_switches = 0;
  long i_tp = 0;
  long i_fp = 0;
  long i_fn = 0;
  long gt_total = 0;
};

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct EvalReport {
  double mota = 0.0;
  PrecisionRecall micro;
  EvalCounts counts;
};

/// CLEAR-MOT and identity-aware counts on the annotated frames. Predictions
/// are the trajectory samples nearest each annotated frame, within half the
/// annotation stride.
[[nodiscard]] EvalCounts match_and_count(std::span<const Trajectory> trajectories, const GroundTruth& gt,
                                         double radius_cm = 100.0);

/// 1 - (FP + FN + log10(ID-S)) / GT, with log10(0) taken as 0.
[[nodiscard]] double mota(const EvalCounts& counts);

/// Micro precision/recall/F1 from the identity-aware counts; empty
/// denominators give 0.
[[nodiscard]] PrecisionRecall micro_prf(long tp, long fp, long fn);
[[nodiscard]] PrecisionRecall micro_prf(const EvalCounts& counts);

[[nodiscard]] EvalReport evaluate(std::span<const Trajectory> trajectories, const GroundTruth& gt,
                                  double radius_cm = 100.0);

[[nodiscard]] std::string report_json(const EvalReport& r);
[[nodiscard]] std::string report_csv_header();
[[nodiscard]] std::string report_csv_row(const EvalReport& r);

}  // namespace idtrack
