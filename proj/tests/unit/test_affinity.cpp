#include "idtrack/affinity.hpp"

#include "support.hpp"

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace idtrack {
namespace {

Observation make_obs(int id, int frame, Vec3 pos, std::vector<double> hist) {
  Observation o;
  o.obs_id = id;
  o.frame = frame;
  o.position = pos;
  o.histogram = std::move(hist);
  return o;
}

ObservationSet make_set(std::vector<Observation> obs) {
  ObservationSet set;
  set.fps = 25.0;
  set.num_identities = 1;
  set.histogram_dim = static_cast<int>(obs.front().histogram.size());
  set.observations = std::move(obs);
  return set;
}

TEST(PairVelocity, IdenticalPositionsGiveZero) {
  const auto a = make_obs(0, 0, Vec3(10, 20, 0), {1.0});
  const auto b = make_obs(1, 75, Vec3(10, 20, 0), {1.0});
  EXPECT_EQ(pair_velocity(a, b, 125.0, 1e-6, 25.0), 0.0);
}

TEST(PairVelocity, HandEvaluation) {
  const auto a = make_obs(0, 0, Vec3(0, 0, 0), {1.0});
  const auto b = make_obs(1, 75, Vec3(300, 400, 0), {1.0});
  // (500 - 125) / (3 s + eps)
  EXPECT_NEAR(pair_velocity(a, b, 125.0, 1e-6, 25.0), 125.0, 1e-4);
  EXPECT_EQ(pair_velocity(a, b, 125.0, 1e-6, 25.0), pair_velocity(b, a, 125.0, 1e-6, 25.0));
}

TEST(PairVelocity, WithinSlackAtSameFrameIsZero) {
  const auto a = make_obs(0, 3, Vec3(0, 0, 0), {1.0});
  const auto b = make_obs(1, 3, Vec3(100, 0, 0), {1.0});
  EXPECT_EQ(pair_velocity(a, b, 125.0, 1e-6, 25.0), 0.0);
}

TEST(PairVelocity, SymmetricOnRandomPairs) {
  std::mt19937_64 rng(11);
  const auto set = testing::random_set(rng, 40, 3, 100, 2000.0);
  for (int i = 0; i < set.size(); ++i)
    for (int j = 0; j < set.size(); ++j) {
      const double v = pair_velocity(set[i], set[j], 125.0, 1e-6, 25.0);
      EXPECT_GE(v, 0.0);
      EXPECT_EQ(v, pair_velocity(set[j], set[i], 125.0, 1e-6, 25.0));
    }
}

TEST(ExpChi2, Examples) {
  const std::vector<double> x{0.25, 0.25, 0.5};
  EXPECT_EQ(exp_chi2(x, x), 1.0);
  const std::vector<double> a{0.5, 0.5, 0.0, 0.0}, b{0.0, 0.0, 0.3, 0.7};
  EXPECT_NEAR(exp_chi2(a, b), std::exp(-1.0), 1e-15);
  const std::vector<double> p{0.5, 0.5, 0.0}, q{0.5, 0.0, 0.5};
  EXPECT_NEAR(exp_chi2(p, q), std::exp(-0.5), 1e-15);
  EXPECT_EQ(exp_chi2(p, q), exp_chi2(q, p));
  EXPECT_THROW((void)exp_chi2(p, a), DataError);
}

TEST(ExpChi2, OneOnlyOnJointSupportEquality) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 50; ++t) {
    const auto x = testing::random_histogram(rng, 6);
    const auto y = testing::random_histogram(rng, 6);
    const double s = exp_chi2(x, y);
    EXPECT_GT(s, 0.0);
    EXPECT_LT(s, 1.0);
  }
}

TEST(Knn, SingleObservationHasNoNeighbors) {
  const auto set = make_set({make_obs(0, 0, Vec3::Zero(), {1.0})});
  const auto q = appearance_knn(set, TrackerConfig{});
  ASSERT_EQ(q.size(), 1u);
  EXPECT_TRUE(q[0].empty());
}

TEST(Knn, IdenticalCoLocatedAreMutualNeighbors) {
  const auto set = make_set({make_obs(0, 0, Vec3::Zero(), {0.5, 0.5}), make_obs(1, 1, Vec3::Zero(), {0.5, 0.5})});
  const auto q = appearance_knn(set, TrackerConfig{});
  ASSERT_EQ(q[0].size(), 1u);
  ASSERT_EQ(q[1].size(), 1u);
  EXPECT_EQ(q[0][0].obs, 1);
  EXPECT_EQ(q[1][0].obs, 0);
  EXPECT_EQ(q[0][0].similarity, 1.0);
}

TEST(Knn, KeepsTheTopKOfThirtyCandidates) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto base = testing::random_histogram(rng, 8);
  std::vector<Observation> obs;
  for (int i = 0; i < 31; ++i) {
    auto h = base;
    for (auto& x : h) x *= 1.0 + 0.2 * u(rng);
    obs.push_back(make_obs(i, i % 3, Vec3(u(rng) * 50.0, 0, 0), testing::normalize_partitions(h, 1)));
  }
  const auto set = make_set(obs);
  TrackerConfig cfg;
  cfg.gamma = 0.5;
  const auto q = appearance_knn(set, cfg);
  // oracle: full sort of every candidate of observation 0
  std::vector<Neighbor> all;
  for (int j = 1; j < 31; ++j) {
    const double s = exp_chi2(set[0].histogram, set[j].histogram);
    ASSERT_GT(s, cfg.gamma);
    all.push_back({j, s});
  }
  std::sort(all.begin(), all.end(), [](const Neighbor& a, const Neighbor& b) {
    return a.similarity != b.similarity ? a.similarity > b.similarity : a.obs < b.obs;
  });
  ASSERT_EQ(q[0].size(), 25u);
  for (std::size_t r = 0; r < 25; ++r) {
    EXPECT_EQ(q[0][r].obs, all[r].obs);
    EXPECT_EQ(q[0][r].similarity, all[r].similarity);
  }
}

// Naive O(n^2) constructions, written directly from the definitions.
struct NaiveGraphs {
  NeighborLists knn;
  Eigen::MatrixXd L, K, S;
};

NaiveGraphs naive_graphs(const ObservationSet& set, const TrackerConfig& cfg) {
  const int n = set.size();
  NaiveGraphs g;
  g.knn.resize(static_cast<std::size_t>(n));
  const int window = static_cast<int>(std::lround(cfg.T_appearance_sec * set.fps));
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd St = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    std::vector<Neighbor> cand;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const int df = std::abs(set[i].frame - set[j].frame);
      const double v = pair_velocity(set[i], set[j], cfg.delta_cm, cfg.epsilon_sec, set.fps);
      const double s = exp_chi2(set[i].histogram, set[j].histogram);
      if (v <= cfg.V_cmps && df <= window && s > cfg.gamma) cand.push_back({j, s});
      if ((set[i].position - set[j].position).norm() < cfg.delta_tilde_cm && df < cfg.T_tilde_frames) A(i, j) = 1.0;
      if (v > cfg.V_cmps && df <= cfg.slc_window_frames) St(i, j) = 1.0;
    }
    std::sort(cand.begin(), cand.end(), [](const Neighbor& a, const Neighbor& b) {
      return a.similarity != b.similarity ? a.similarity > b.similarity : a.obs < b.obs;
    });
    if (static_cast<int>(cand.size()) > cfg.k) cand.resize(static_cast<std::size_t>(cfg.k));
    for (const auto& nb : cand) W(i, nb.obs) = nb.similarity;
    g.knn[static_cast<std::size_t>(i)] = cand;
  }
  const Eigen::MatrixXd Ws = 0.5 * (W + W.transpose());
  g.L = Eigen::MatrixXd(Ws.rowwise().sum().asDiagonal()) - Ws;
  auto normalize = [n](const Eigen::MatrixXd& M) {
    Eigen::VectorXd d = M.rowwise().sum();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (M(i, j) != 0.0) out(i, j) = M(i, j) / std::sqrt(d(i) * d(j));
    return std::make_pair(out, d);
  };
  const auto [An, da] = normalize(A);
  g.K = -An;
  for (int i = 0; i < n; ++i)
    if (da(i) > 0) g.K(i, i) = 1.0;
  g.S = normalize(St).first;
  return g;
}

TrackerConfig small_scene_config() {
  TrackerConfig cfg;
  cfg.k = 5;
  cfg.gamma = 0.6;
  cfg.T_appearance_sec = 1.0;
  cfg.delta_tilde_cm = 150.0;
  return cfg;
}

TEST(Graphs, MatchNaiveConstructionExactly) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    std::mt19937_64 rng(seed);
    const auto set = testing::random_set(rng, 50, 3, 60, 800.0);
    const TrackerConfig cfg = small_scene_config();
    const NaiveGraphs naive = naive_graphs(set, cfg);
    const auto knn = appearance_knn(set, cfg);
    for (int i = 0; i < set.size(); ++i) {
      const auto& a = knn[static_cast<std::size_t>(i)];
      const auto& b = naive.knn[static_cast<std::size_t>(i)];
      ASSERT_EQ(a.size(), b.size()) << "row " << i;
      for (std::size_t r = 0; r < a.size(); ++r) {
        EXPECT_EQ(a[r].obs, b[r].obs);
        EXPECT_EQ(a[r].similarity, b[r].similarity);
      }
    }
    const AffinityGraphs g = build_graphs(set, cfg);
    const Eigen::MatrixXd L = testing::dense(g.L), K = testing::dense(g.K), S = testing::dense(g.S);
    EXPECT_LE((L - naive.L).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LE((K - naive.K).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LE((S - naive.S).cwiseAbs().maxCoeff(), 1e-14);
    // same sparsity pattern, not just close values
    EXPECT_EQ((L.array() != 0).count(), (naive.L.array() != 0).count());
    EXPECT_EQ((K.array() != 0).count(), (naive.K.array() != 0).count());
    EXPECT_EQ((S.array() != 0).count(), (naive.S.array() != 0).count());
    long directed = 0;
    for (const auto& q : knn) directed += static_cast<long>(q.size());
    EXPECT_EQ(g.stats.appearance_edges, directed);
    EXPECT_LE(directed, static_cast<long>(set.size()) * cfg.k);
    EXPECT_EQ(g.stats.conflict_edges, g.S.nonZeros());
    // the scene must exercise every rule
    EXPECT_GT(g.L.nonZeros(), 0);
    EXPECT_GT(g.K.nonZeros(), 0);
    EXPECT_GT(g.S.nonZeros(), 0);
    EXPECT_TRUE(std::any_of(knn.begin(), knn.end(), [&](const auto& q) { return static_cast<int>(q.size()) == cfg.k; }));
  }
}

TEST(Graphs, StructuralInvariants) {
  for (std::uint64_t seed = 10; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    const auto set = testing::random_set(rng, 20, 2, 30, 500.0);
    const AffinityGraphs g = build_graphs(set, small_scene_config());
    const Eigen::MatrixXd L = testing::dense(g.L), K = testing::dense(g.K), S = testing::dense(g.S);
    EXPECT_EQ(L, L.transpose());
    EXPECT_EQ(K, K.transpose());
    EXPECT_EQ(S, S.transpose());
    EXPECT_LE(L.rowwise().sum().cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LE(L.colwise().sum().cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_GE(S.minCoeff(), 0.0);
    for (int i = 0; i < 20; ++i) {
      EXPECT_EQ(S(i, i), 0.0);
      EXPECT_LE(K(i, i), 1.0);
      EXPECT_TRUE(K(i, i) == 0.0 || K(i, i) == 1.0);
    }
    // dense eigen oracle
    const Eigen::VectorXd el = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(L).eigenvalues();
    const Eigen::VectorXd ek = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(K).eigenvalues();
    EXPECT_GE(el.minCoeff(), -1e-12);
    EXPECT_GE(ek.minCoeff(), -1e-12);
    EXPECT_LE(ek.maxCoeff(), 2.0 + 1e-12);
    std::normal_distribution<double> nd;
    for (int t = 0; t < 100; ++t) {
      Eigen::VectorXd v(20);
      for (int i = 0; i < 20; ++i) v(i) = nd(rng);
      EXPECT_GE(v.dot(L * v), -1e-12);
      EXPECT_GE(v.dot(K * v), -1e-12);
    }
  }
}

TEST(Laplacian, EmptyNeighborsGiveZero) {
  const auto set = make_set({make_obs(0, 0, Vec3::Zero(), {1.0}), make_obs(1, 0, Vec3::Zero(), {1.0})});
  const NeighborLists none(2);
  EXPECT_EQ(appearance_laplacian(set, none).nonZeros(), 0);
}

TEST(Laplacian, SingleMutualEdge) {
  const auto set = make_set({make_obs(0, 0, Vec3::Zero(), {1.0}), make_obs(1, 0, Vec3::Zero(), {1.0})});
  const double w = 0.9;
  const NeighborLists q{{{1, w}}, {{0, w}}};
  const Eigen::MatrixXd L = testing::dense(appearance_laplacian(set, q));
  Eigen::Matrix2d expected;
  expected << w, -w, -w, w;
  EXPECT_LE((L - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Laplacian, OneSidedEdgeIsHalved) {
  const auto set = make_set({make_obs(0, 0, Vec3::Zero(), {1.0}), make_obs(1, 0, Vec3::Zero(), {1.0})});
  const NeighborLists q{{{1, 0.8}}, {}};
  const Eigen::MatrixXd L = testing::dense(appearance_laplacian(set, q));
  Eigen::Matrix2d expected;
  expected << 0.4, -0.4, -0.4, 0.4;
  EXPECT_LE((L - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(SpatialLaplacian, FarApartIsZero) {
  std::vector<Observation> obs;
  for (int i = 0; i < 5; ++i) obs.push_back(make_obs(i, 0, Vec3(i * 100.0, 0, 0), {1.0}));
  EXPECT_EQ(spatial_laplacian(make_set(obs), TrackerConfig{}).nonZeros(), 0);
}

TEST(SpatialLaplacian, TwoCoLocatedDetections) {
  const auto set = make_set({make_obs(0, 4, Vec3::Zero(), {1.0}), make_obs(1, 4, Vec3(5, 0, 0), {1.0})});
  const Eigen::MatrixXd K = testing::dense(spatial_laplacian(set, TrackerConfig{}));
  Eigen::Matrix2d expected;
  expected << 1, -1, -1, 1;
  EXPECT_EQ(K, expected);
}

TEST(SpatialLaplacian, WindowIsStrict) {
  TrackerConfig cfg;
  const auto set = make_set({make_obs(0, 0, Vec3::Zero(), {1.0}), make_obs(1, cfg.T_tilde_frames, Vec3::Zero(), {1.0})});
  EXPECT_EQ(spatial_laplacian(set, cfg).nonZeros(), 0);
}

TEST(Locality, FeasiblePairsGiveZero) {
  std::vector<Observation> obs;
  for (int i = 0; i < 6; ++i) obs.push_back(make_obs(i, i, Vec3(i * 2.0, 0, 0), {1.0}));
  EXPECT_EQ(spatial_locality_matrix(make_set(obs), TrackerConfig{}).nonZeros(), 0);
}

TEST(Locality, TenMetresSameFrame) {
  const auto set = make_set({make_obs(0, 0, Vec3::Zero(), {1.0}), make_obs(1, 0, Vec3(1000, 0, 0), {1.0})});
  const Eigen::MatrixXd S = testing::dense(spatial_locality_matrix(set, TrackerConfig{}));
  Eigen::Matrix2d expected;
  expected << 0, 1, 1, 0;
  EXPECT_EQ(S, expected);
  Eigen::MatrixXd F(2, 2);
  F << 1, 0, 0, 1;
  EXPECT_EQ((F.transpose() * S * F).trace(), 0.0);
}

TEST(Locality, WindowIsInclusive) {
  TrackerConfig cfg;
  const int w = cfg.slc_window_frames;
  const auto set = make_set({make_obs(0, 0, Vec3::Zero(), {1.0}), make_obs(1, w, Vec3(3000, 0, 0), {1.0}),
                             make_obs(2, w + 1, Vec3(-3000, 0, 0), {1.0})});
  const Eigen::MatrixXd S = testing::dense(spatial_locality_matrix(set, cfg));
  EXPECT_GT(S(0, 1), 0.0);
  EXPECT_EQ(S(0, 2), 0.0);
  EXPECT_GT(S(1, 2), 0.0);
}

TEST(Locality, FeasibleHardAssignmentsHaveZeroPenalty) {
  std::mt19937_64 rng(21);
  const auto set = testing::random_set(rng, 30, 3, 10, 3000.0);
  const TrackerConfig cfg;
  const Eigen::MatrixXd S = testing::dense(spatial_locality_matrix(set, cfg));
  // greedy coloring of the conflict graph gives a feasible 0/1 assignment
  std::vector<int> color(30, -1);
  int colors = 0;
  for (int i = 0; i < 30; ++i) {
    std::vector<bool> used(31, false);
    for (int j = 0; j < i; ++j)
      if (S(i, j) > 0) used[static_cast<std::size_t>(color[static_cast<std::size_t>(j)])] = true;
    int c = 0;
    while (used[static_cast<std::size_t>(c)]) ++c;
    color[static_cast<std::size_t>(i)] = c;
    colors = std::max(colors, c + 1);
  }
  Eigen::MatrixXd F = Eigen::MatrixXd::Zero(30, colors);
  for (int i = 0; i < 30; ++i) F(i, color[static_cast<std::size_t>(i)]) = 1.0;
  EXPECT_GT(S.sum(), 0.0);
  EXPECT_EQ((F.transpose() * S * F).trace(), 0.0);
}

TEST(Graphs, ThreadCountDoesNotChangeOutput) {
  std::mt19937_64 rng(8);
  const auto set = testing::random_set(rng, 400, 4, 200, 1500.0);
  const TrackerConfig cfg = small_scene_config();
  const AffinityGraphs a = build_graphs(set, cfg, 1);
  const AffinityGraphs b = build_graphs(set, cfg, 7);
  EXPECT_TRUE(a.L.isApprox(b.L, 0.0));
  EXPECT_EQ(testing::dense(a.L), testing::dense(b.L));
  EXPECT_EQ(testing::dense(a.K), testing::dense(b.K));
  EXPECT_EQ(testing::dense(a.S), testing::dense(b.S));
}

TEST(Graphs, NoSlcGivesZeroS) {
  std::mt19937_64 rng(9);
  const auto set = testing::random_set(rng, 30, 2, 10, 3000.0);
  TrackerConfig cfg;
  cfg.use_slc = false;
  const AffinityGraphs g = build_graphs(set, cfg);
  EXPECT_EQ(g.S.rows(), 30);
  EXPECT_EQ(g.S.nonZeros(), 0);
}

TEST(Coo, SortedTriples) {
  const auto set = make_set({make_obs(0, 0, Vec3::Zero(), {1.0}), make_obs(1, 0, Vec3(1000, 0, 0), {1.0}),
                             make_obs(2, 0, Vec3(2000, 0, 0), {1.0})});
  const auto S = spatial_locality_matrix(set, TrackerConfig{});
  const auto dir = testing::temp_dir("coo");
  write_coo(S, dir / "s.coo");
  std::ifstream in(dir / "s.coo");
  int i = 0, j = 0;
  double v = 0.0;
  std::vector<std::pair<int, int>> idx;
  while (in >> i >> j >> v) {
    idx.emplace_back(i, j);
    EXPECT_EQ(v, S.coeff(i, j));
  }
  EXPECT_EQ(static_cast<long>(idx.size()), S.nonZeros());
  EXPECT_TRUE(std::is_sorted(idx.begin(), idx.end()));
}

TEST(FrameWindow, SecondsToFramesRounds) {
  EXPECT_EQ(seconds_to_frames(8.0, 25.0), 200);
  EXPECT_EQ(seconds_to_frames(0.1, 25.0), 3);
  EXPECT_EQ(seconds_to_frames(0.02, 25.0), 1);
}

}  // namespace
}  // namespace idtrack
