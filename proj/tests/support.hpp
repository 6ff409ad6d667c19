#pragma once

#include "idtrack/affinity.hpp"
#include "idtrack/model.hpp"
#include "idtrack/solver.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace idtrack::testing {

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("idtrack_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::vector<double> normalize_partitions(std::vector<double> h, int partitions) {
  const std::size_t bins = h.size() / static_cast<std::size_t>(partitions);
  for (int p = 0; p < partitions; ++p) {
    double s = 0.0;
    for (std::size_t b = 0; b < bins; ++b) s += h[p * bins + b];
    for (std::size_t b = 0; b < bins; ++b) h[p * bins + b] /= s;
  }
  return h;
}

// A peaked random histogram; cubing uniform draws keeps independent draws
// dissimilar under exp-chi2.
inline std::vector<double> random_histogram(std::mt19937_64& rng, int dim, int partitions = 1) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> h(static_cast<std::size_t>(dim));
  for (auto& x : h) x = 1e-3 + std::pow(u(rng), 3.0);
  return normalize_partitions(h, partitions);
}

// Random observations scattered over a small arena and a short time span,
// with appearance drawn from a handful of prototypes.
inline ObservationSet random_set(std::mt19937_64& rng, int n, int identities, int frames, double arena_cm,
                                 double label_prob = 0.2) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int dim = 8;
  std::vector<std::vector<double>> protos;
  for (int a = 0; a < std::max(1, identities); ++a) protos.push_back(random_histogram(rng, dim));
  ObservationSet set;
  set.fps = 25.0;
  set.num_identities = identities;
  set.histogram_dim = dim;
  std::vector<Observation> obs;
  for (int i = 0; i < n; ++i) {
    Observation o;
    o.frame = static_cast<int>(u(rng) * frames);
    o.position = Vec3(u(rng) * arena_cm, u(rng) * arena_cm, 0.0);
    const int a = static_cast<int>(u(rng) * static_cast<double>(protos.size())) % static_cast<int>(protos.size());
    std::vector<double> h = protos[static_cast<std::size_t>(a)];
    for (auto& x : h) x *= std::exp(0.1 * (u(rng) - 0.5));
    o.histogram = normalize_partitions(h, 1);
    o.camera_id = static_cast<int>(u(rng) * 3);
    if (identities > 0 && u(rng) < label_prob) o.face_label = a % identities;
    obs.push_back(std::move(o));
  }
  std::stable_sort(obs.begin(), obs.end(), [](const Observation& a, const Observation& b) { return a.frame < b.frame; });
  for (int i = 0; i < n; ++i) obs[static_cast<std::size_t>(i)].obs_id = i;
  set.observations = std::move(obs);
  return set;
}

inline Eigen::MatrixXd dense(const SparseMatrix& m) { return Eigen::MatrixXd(m); }

// Random symmetric PSD sparse Laplacian of a random weighted graph.
inline SparseMatrix random_laplacian(std::mt19937_64& rng, int n, double density) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (u(rng) < density) W(i, j) = W(j, i) = u(rng);
  Eigen::MatrixXd L = Eigen::MatrixXd(W.rowwise().sum().asDiagonal()) - W;
  return L.sparseView();
}

// Random symmetric nonnegative sparse matrix with zero diagonal.
inline SparseMatrix random_repulsion(std::mt19937_64& rng, int n, double density) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (u(rng) < density) S(i, j) = S(j, i) = u(rng);
  return S.sparseView();
}

// Random penalty problem with a few clamped rows.
inline PenaltyProblem random_problem(std::mt19937_64& rng, int n, int c, int clamped) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PenaltyProblem p;
  p.M = random_laplacian(rng, n, 0.3);
  p.M += random_laplacian(rng, n, 0.1);
  p.S = random_repulsion(rng, n, 0.1);
  p.J = Eigen::VectorXd(c);
  for (int j = 0; j < c; ++j) p.J(j) = 0.5 + 3.0 * u(rng);
  p.Y = Eigen::MatrixXd::Zero(n, c);
  for (int i = 0; i < clamped; ++i) {
    p.Y(i, i % c) = 1.0;
    p.clamped_rows.push_back(i);
  }
  return p;
}

inline Eigen::MatrixXd random_nonnegative(std::mt19937_64& rng, int n, int c, const PenaltyProblem& p) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd F(n, c);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < c; ++j) F(i, j) = u(rng);
  for (int r : p.clamped_rows) F.row(r) = p.Y.row(r);
  return F;
}

}  // namespace idtrack::testing
