#include "idtrack/affinity.hpp"

#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>

namespace idtrack {

double pair_velocity(const Observation& a, const Observation& b, double delta_cm, double epsilon_sec, double fps) {
  const double dist = (a.position - b.position).norm();
  const double dt = std::abs(static_cast<double>(a.frame) - static_cast<double>(b.frame)) / fps;
  return std::max(dist - delta_cm, 0.0) / (dt + epsilon_sec);
}

double exp_chi2(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DataError("exp_chi2: histogram length mismatch");
  double acc = 0.0;
  for (std::size_t l = 0; l < x.size(); ++l) {
    const double s = x[l] + y[l];
    if (s <= 0.0) continue;
    const double d = x[l] - y[l];
    acc += d * d / s;
  }
  return std::exp(-0.5 * acc);
}

int seconds_to_frames(double seconds, double fps) { return static_cast<int>(std::lround(seconds * fps)); }

FrameIndex::FrameIndex(const ObservationSet& set) {
  std::vector<int> order(static_cast<std::size_t>(set.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return set[a].frame < set[b].frame; });
  ids_ = order;
  offsets_.push_back(0);
  for (std::size_t k = 0; k < order.size(); ++k) {
    const int f = set[order[k]].frame;
    if (frames_.empty() || frames_.back() != f) {
      if (!frames_.empty()) offsets_.push_back(static_cast<int>(k));
      frames_.push_back(f);
    }
  }
  if (!frames_.empty()) offsets_.push_back(static_cast<int>(order.size()));
}

namespace {

bool more_similar(const Neighbor& a, const Neighbor& b) {
  if (a.similarity != b.similarity) return a.similarity > b.similarity;
  return a.obs < b.obs;
}

// Symmetric sparse matrix from per-row (col, value) lists; rows sorted by column.
SparseMatrix from_rows(int n, const std::vector<std::vector<std::pair<int, double>>>& rows) {
  SparseMatrix m(n, n);
  std::vector<int> counts(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) counts[static_cast<std::size_t>(i)] = static_cast<int>(rows[static_cast<std::size_t>(i)].size());
  m.reserve(counts);
  for (int i = 0; i < n; ++i)
    for (const auto& [j, v] : rows[static_cast<std::size_t>(i)]) m.insert(i, j) = v;
  m.makeCompressed();
  return m;
}

}  // namespace

NeighborLists appearance_knn(const ObservationSet& set, const TrackerConfig& cfg, int threads) {
  const int n = set.size();
  NeighborLists out(static_cast<std::size_t>(n));
  if (n == 0) return out;
  const FrameIndex index(set);
  const int window = seconds_to_frames(cfg.T_appearance_sec, set.fps);
  const auto k = static_cast<std::size_t>(cfg.k);
  detail::parallel_for(n, threads, [&](int i) {
    const Observation& oi = set[i];
    std::vector<Neighbor> cand;
    index.for_each_in_frames(oi.frame - window, oi.frame + window, [&](int j) {
      if (j == i) return;
      const Observation& oj = set[j];
      if (pair_velocity(oi, oj, cfg.delta_cm, cfg.epsilon_sec, set.fps) > cfg.V_cmps) return;
      const double sim = exp_chi2(oi.histogram, oj.histogram);
      if (sim > cfg.gamma) cand.push_back({j, sim});
    });
    if (cand.size() > k) {
      std::nth_element(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end(), more_similar);
      cand.resize(k);
    }
    std::sort(cand.begin(), cand.end(), more_similar);
    out[static_cast<std::size_t>(i)] = std::move(cand);
  });
  return out;
}

SparseMatrix appearance_laplacian(const ObservationSet& set, const NeighborLists& neighbors) {
  const int n = set.size();
  // collect each directed edge in both orientations at half weight
  std::vector<std::vector<std::pair<int, double>>> half(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (const auto& nb : neighbors[static_cast<std::size_t>(i)]) {
      half[static_cast<std::size_t>(i)].emplace_back(nb.obs, 0.5 * nb.similarity);
      half[static_cast<std::size_t>(nb.obs)].emplace_back(i, 0.5 * nb.similarity);
    }
  }
  std::vector<std::vector<std::pair<int, double>>> rows(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    auto& h = half[static_cast<std::size_t>(i)];
    std::stable_sort(h.begin(), h.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    auto& row = rows[static_cast<std::size_t>(i)];
    double degree = 0.0;
    for (std::size_t a = 0; a < h.size();) {
      const int j = h[a].first;
      // a mutual edge contributes both halves; add in a fixed order so
      // W_ij and W_ji round identically
      double w = 0.0;
      double lo = h[a].second, hi = h[a].second;
      std::size_t b = a + 1;
      if (b < h.size() && h[b].first == j) {
        lo = std::min(h[a].second, h[b].second);
        hi = std::max(h[a].second, h[b].second);
        w = lo + hi;
        ++b;
      } else {
        w = lo;
      }
      row.emplace_back(j, -w);
      degree += w;
      a = b;
    }
    if (!row.empty()) {
      auto pos = std::lower_bound(row.begin(), row.end(), i, [](const auto& e, int c) { return e.first < c; });
      row.insert(pos, {i, degree});
    }
  }
  return from_rows(n, rows);
}

SparseMatrix spatial_laplacian(const ObservationSet& set, const TrackerConfig& cfg, int threads) {
  const int n = set.size();
  const FrameIndex index(set);
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  const int window = cfg.T_tilde_frames - 1;  // |ti - tj| < T_tilde
  detail::parallel_for(n, threads, [&](int i) {
    const Observation& oi = set[i];
    auto& a = adj[static_cast<std::size_t>(i)];
    index.for_each_in_frames(oi.frame - window, oi.frame + window, [&](int j) {
      if (j != i && (oi.position - set[j].position).norm() < cfg.delta_tilde_cm) a.push_back(j);
    });
    std::sort(a.begin(), a.end());
  });
  std::vector<std::vector<std::pair<int, double>>> rows(static_cast<std::size_t>(n));
  detail::parallel_for(n, threads, [&](int i) {
    const auto& a = adj[static_cast<std::size_t>(i)];
    if (a.empty()) return;
    auto& row = rows[static_cast<std::size_t>(i)];
    const double di = static_cast<double>(a.size());
    bool diag_done = false;
    for (int j : a) {
      if (!diag_done && j > i) {
        row.emplace_back(i, 1.0);
        diag_done = true;
      }
      const double dj = static_cast<double>(adj[static_cast<std::size_t>(j)].size());
      row.emplace_back(j, -1.0 / std::sqrt(di * dj));
    }
    if (!diag_done) row.emplace_back(i, 1.0);
  });
  return from_rows(n, rows);
}

SparseMatrix spatial_locality_matrix(const ObservationSet& set, const TrackerConfig& cfg, int threads) {
  const int n = set.size();
  const FrameIndex index(set);
  std::vector<std::vector<int>> conflicts(static_cast<std::size_t>(n));
  detail::parallel_for(n, threads, [&](int i) {
    const Observation& oi = set[i];
    auto& c = conflicts[static_cast<std::size_t>(i)];
    index.for_each_in_frames(oi.frame - cfg.slc_window_frames, oi.frame + cfg.slc_window_frames, [&](int j) {
      if (j != i && pair_velocity(oi, set[j], cfg.delta_cm, cfg.epsilon_sec, set.fps) > cfg.V_cmps) c.push_back(j);
    });
    std::sort(c.begin(), c.end());
  });
  std::vector<std::vector<std::pair<int, double>>> rows(static_cast<std::size_t>(n));
  detail::parallel_for(n, threads, [&](int i) {
    const auto& c = conflicts[static_cast<std::size_t>(i)];
    const double di = static_cast<double>(c.size());
    auto& row = rows[static_cast<std::size_t>(i)];
    row.reserve(c.size());
    for (int j : c) {
      const double dj = static_cast<double>(conflicts[static_cast<std::size_t>(j)].size());
      row.emplace_back(j, 1.0 / std::sqrt(di * dj));
    }
  });
  return from_rows(n, rows);
}

AffinityGraphs build_graphs(const ObservationSet& set, const TrackerConfig& cfg, int threads) {
  AffinityGraphs g;
  const NeighborLists knn = appearance_knn(set, cfg, threads);
  for (const auto& q : knn) g.stats.appearance_edges += static_cast<long>(q.size());
  g.L = appearance_laplacian(set, knn);
  g.K = spatial_laplacian(set, cfg, threads);
  if (cfg.use_slc) {
    g.S = spatial_locality_matrix(set, cfg, threads);
  } else {
    g.S.resize(set.size(), set.size());
  }
  g.stats.laplacian_nnz = g.L.nonZeros();
  g.stats.spatial_edges = std::max<long>(0, g.K.nonZeros() - static_cast<long>((g.K.diagonal().array() != 0.0).count()));
  g.stats.conflict_edges = g.S.nonZeros();
  return g;
}

void write_coo(const SparseMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << std::setprecision(17);
  for (int i = 0; i < m.outerSize(); ++i)
    for (SparseMatrix::InnerIterator it(m, i); it; ++it) out << i << ' ' << it.col() << ' ' << it.value() << '\n';
}

}  // namespace idtrack
