#include "idtrack/solver.hpp"

#include <json.hpp>

#include <Eigen/IterativeLinearSolvers>

#include <cmath>
#include <fstream>
#include <limits>

namespace idtrack {

PenaltyProblem make_problem(const AffinityGraphs& graphs, const LabelMatrix& labels, const Eigen::VectorXd& J) {
  PenaltyProblem p;
  p.M = graphs.L + graphs.K;
  p.S = graphs.S;
  p.J = J;
  p.Y = DenseMatrix(labels.Y);
  p.clamped_rows = labels.labeled_rows;
  return p;
}

Eigen::VectorXd estimate_class_sizes(const LabelMatrix& labels, int n, double beta_per_1000) {
  if (n < 1) throw DataError("estimate_class_sizes: n must be at least 1");
  const double beta = static_cast<double>(n) * beta_per_1000 / 1000.0;
  Eigen::VectorXd m = Eigen::VectorXd::Constant(labels.Y.cols(), beta);
  for (int i = 0; i < labels.Y.outerSize(); ++i)
    for (SparseMatrix::InnerIterator it(labels.Y, i); it; ++it) m[it.col()] += it.value();
  return m;
}

InitResult initialize(const SparseMatrix& M, const DenseMatrix& Y, std::span<const int> clamped_rows,
                      double u_large, double tolerance, int max_iterations) {
  const Eigen::Index n = Y.rows();
  Eigen::VectorXd u = Eigen::VectorXd::Ones(n);
  for (int r : clamped_rows) u[r] = u_large;

  SparseMatrix A = M;
  {
    SparseMatrix U(n, n);
    U.reserve(Eigen::VectorXi::Constant(n, 1));
    for (Eigen::Index i = 0; i < n; ++i) U.insert(i, i) = u[i];
    A += U;
  }
  const DenseMatrix B = u.asDiagonal() * Y;

  InitResult out;
  out.F = DenseMatrix::Zero(n, Y.cols());
  const double b_norm = B.norm();
  if (b_norm > 0.0) {
    Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper> cg;
    cg.setTolerance(tolerance);
    if (max_iterations > 0) cg.setMaxIterations(max_iterations);
    cg.compute(A);
    for (Eigen::Index j = 0; j < Y.cols(); ++j) {
      if (B.col(j).squaredNorm() == 0.0) continue;
      out.F.col(j) = cg.solve(B.col(j));
      out.iterations = std::max(out.iterations, static_cast<int>(cg.iterations()));
    }
    out.relative_residual = (A * out.F - B).norm() / b_norm;
    if (!(out.relative_residual <= 1e-8))
      throw SolverError("initialization did not converge: relative residual " +
                        std::to_string(out.relative_residual) + " after " + std::to_string(out.iterations) +
                        " iterations");
  }
  for (int r : clamped_rows) out.F.row(r) = Y.row(r);
  return out;
}

namespace {

struct Evaluation {
  double f = 0.0;
  DenseMatrix QF;   // (M + tau S) F
  DenseMatrix Gap;  // F^T F - diag(J)
};

Evaluation evaluate(const DenseMatrix& F, const PenaltyProblem& p, double tau) {
  Evaluation e;
  e.QF = p.M * F;
  if (p.S.nonZeros() > 0) e.QF.noalias() += tau * (p.S * F);
  e.Gap = F.transpose() * F;
  e.Gap.diagonal() -= p.J;
  e.f = F.cwiseProduct(e.QF).sum() + tau * e.Gap.squaredNorm();
  return e;
}

DenseMatrix gradient_from(const DenseMatrix& F, const Evaluation& e, const PenaltyProblem& p, double tau) {
  DenseMatrix g = 2.0 * e.QF;
  g.noalias() += (4.0 * tau) * (F * e.Gap);
  for (int r : p.clamped_rows) g.row(r).setZero();
  return g;
}

}  // namespace

double loss(const DenseMatrix& F, const PenaltyProblem& p, double tau) { return evaluate(F, p, tau).f; }

DenseMatrix gradient(const DenseMatrix& F, const PenaltyProblem& p, double tau) {
  return gradient_from(F, evaluate(F, p, tau), p, tau);
}

DenseMatrix project_nonnegative(const DenseMatrix& F) { return F.cwiseMax(0.0); }

double orthogonality_violation(const DenseMatrix& F, const Eigen::VectorXd& J) {
  DenseMatrix gap = F.transpose() * F;
  gap.diagonal() -= J;
  return gap.norm();
}

InnerResult pgd_inner(DenseMatrix& F, const PenaltyProblem& p, double tau, const InnerOptions& opts, double step) {
  InnerResult res;
  res.step = step;
  Evaluation cur = evaluate(F, p, tau);
  res.losses.push_back(cur.f);
  res.loss = cur.f;

  for (int it = 0; it < opts.max_iters; ++it) {
    const DenseMatrix g = gradient_from(F, cur, p, tau);
    if (g.squaredNorm() == 0.0) break;

    double alpha = res.step;
    DenseMatrix trial;
    Evaluation trial_eval;
    // sufficient decrease: f(F+) - f(F) <= sigma <g, F+ - F>
    auto attempt = [&](double a, DenseMatrix& out, Evaluation& ev) {
      out = (F - a * g).cwiseMax(0.0);
      const double directional = g.cwiseProduct(out - F).sum();
      ev = evaluate(out, p, tau);
      return ev.f - cur.f <= opts.sigma * directional;
    };

    bool accepted = attempt(alpha, trial, trial_eval);
    if (accepted) {
      // grow while the larger step still gives sufficient decrease
      for (int b = 0; b < opts.max_backtracks; ++b) {
        DenseMatrix bigger;
        Evaluation bigger_eval;
        const double a = alpha * opts.grow;
        if (!attempt(a, bigger, bigger_eval) || bigger == trial) break;
        alpha = a;
        trial = std::move(bigger);
        trial_eval = std::move(bigger_eval);
      }
    } else {
      for (int b = 0; b < opts.max_backtracks && !accepted; ++b) {
        alpha *= opts.shrink;
        accepted = attempt(alpha, trial, trial_eval);
      }
      if (!accepted) {
        res.line_search_failed = true;
        break;
      }
    }

    if (trial == F) break;  // projected step vanished: stationary
    const double previous = cur.f;
    F = std::move(trial);
    cur = std::move(trial_eval);
    res.step = alpha;
    res.iterations = it + 1;
    res.losses.push_back(cur.f);
    res.loss = cur.f;
    const double scale = std::max(std::abs(previous), std::numeric_limits<double>::min());
    if ((previous - cur.f) / scale < opts.tol) break;
  }
  return res;
}

SolveResult solve(const PenaltyProblem& p, const TrackerConfig& cfg) {
  SolveResult out;
  InitResult init = initialize(p.M, p.Y, p.clamped_rows, cfg.u_large);
  out.F = std::move(init.F);
  out.trace.init_info.relative_residual = init.relative_residual;
  out.trace.init_info.iterations = init.iterations;

  InnerOptions opts;
  opts.sigma = cfg.sigma;
  opts.tol = cfg.inner_tol;
  opts.max_iters = cfg.inner_max_iters;

  double tau = cfg.tau_init;
  double step = 1.0;
  do {
    tau *= cfg.tau_step_s;
    const InnerResult r = pgd_inner(out.F, p, tau, opts, step);
    step = r.step;
    out.trace.outer.push_back(
        {tau, r.loss, orthogonality_violation(out.F, p.J), r.iterations, r.step, r.line_search_failed});
  } while (tau < cfg.tau_final);
  return out;
}

void write_trace(const SolveTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& r : trace.outer) {
    nlohmann::json j{{"tau", r.tau}, {"loss", r.loss}, {"viol", r.violation}, {"iters", r.iterations},
                     {"alpha", r.step}};
    if (r.line_search_failed) j["line_search_failed"] = true;
    out << j.dump() << '\n';
  }
}

}  // namespace idtrack
