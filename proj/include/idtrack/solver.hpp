#pragma once

#include "idtrack/affinity.hpp"
#include "idtrack/model.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <vector>

namespace idtrack {

using DenseMatrix = Eigen::MatrixXd;

/// Raised when the initialization linear solve does not converge.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The quadratic pieces of the penalized loss. M = L + K; S kept apart
/// because it is scaled by the penalty weight.
struct PenaltyProblem {
  SparseMatrix M;
  SparseMatrix S;
  Eigen::VectorXd J;              // class-size targets m_j
  DenseMatrix Y;                  // n x c face labels
  std::vector<int> clamped_rows;  // rows of Y carrying a label

  [[nodiscard]] int rows() const { return static_cast<int>(Y.rows()); }
  [[nodiscard]] int cols() const { return static_cast<int>(Y.cols()); }
};

[[nodiscard]] PenaltyProblem make_problem(const AffinityGraphs& graphs, const LabelMatrix& labels,
                                          const Eigen::VectorXd& J);

/// m_i = (faces of class i) + n * beta_per_1000 / 1000.
[[nodiscard]] Eigen::VectorXd estimate_class_sizes(const LabelMatrix& labels, int n, double beta_per_1000);

struct InitResult {
  DenseMatrix F;
  double relative_residual = 0.0;  // ||(M + U)F - UY||_F / ||UY||_F before clamping
  int iterations = 0;              // max CG iterations over columns
};

/// Minimizer of Tr(F^T M F) + Tr((F - Y)^T U (F - Y)), U = diag(u_large on
/// labeled rows, 1 elsewhere); labeled rows are then set to Y exactly.
/// The CG tolerance is relative to ||UY||, which the u_large rows dominate,
/// so it has to be far below the accuracy wanted on the free rows.
[[nodiscard]] InitResult initialize(const SparseMatrix& M, const DenseMatrix& Y, std::span<const int> clamped_rows,
                                    double u_large, double tolerance = 1e-14, int max_iterations = 0);

/// Tr(F^T (M + tau S) F) + tau ||F^T F - diag(J)||_F^2.
[[nodiscard]] double loss(const DenseMatrix& F, const PenaltyProblem& p, double tau);

/// 2 (M + tau S) F + 4 tau F (F^T F - diag(J)), with clamped rows zeroed.
[[nodiscard]] DenseMatrix gradient(const DenseMatrix& F, const PenaltyProblem& p, double tau);

/// Elementwise max(F, 0).
[[nodiscard]] DenseMatrix project_nonnegative(const DenseMatrix& F);

struct InnerOptions {
  double sigma = 0.01;
  double tol = 1e-5;
  int max_iters = 500;
  int max_backtracks = 20;
  double shrink = 0.1;
  double grow = 10.0;
};

struct InnerResult {
  int iterations = 0;
  double loss = 0.0;
  double step = 1.0;               // last accepted step, reused by the next call
  bool line_search_failed = false;
  std::vector<double> losses;      // loss after each accepted step, first entry is the start
};

/// Projected gradient descent at fixed tau with sufficient-decrease line search.
/// `step` seeds the first trial step size.
[[nodiscard]] InnerResult pgd_inner(DenseMatrix& F, const PenaltyProblem& p, double tau, const InnerOptions& opts,
                                    double step = 1.0);

struct OuterRecord {
  double tau = 0.0;
  double loss = 0.0;
  double violation = 0.0;  // ||F^T F - diag(J)||_F
  int iterations = 0;
  double step = 0.0;
  bool line_search_failed = false;
};

struct SolveTrace {
  InitResult init_info;  // F left empty
  std::vector<OuterRecord> outer;
};

struct SolveResult {
  DenseMatrix F;
  SolveTrace trace;
};

/// ||F^T F - diag(J)||_F.
[[nodiscard]] double orthogonality_violation(const DenseMatrix& F, const Eigen::VectorXd& J);

/// Initialization followed by the increasing penalty schedule.
[[nodiscard]] SolveResult solve(const PenaltyProblem& p, const TrackerConfig& cfg);

/// One JSON object per outer iteration.
void write_trace(const SolveTrace& trace, const std::filesystem::path& path);

}  // namespace idtrack
