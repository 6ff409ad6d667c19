#include "idtrack/metrics.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

namespace idtrack {

namespace {

struct Point {
  int identity;
  Vec3 position;
};

// identity -> (frame -> position) over all segments
using SampleIndex = std::map<int, std::map<int, Vec3>>;

SampleIndex index_samples(std::span<const Trajectory> trajectories) {
  SampleIndex idx;
  for (const auto& t : trajectories)
    for (const auto& s : t.samples) idx[t.identity].emplace(s.frame, s.position);
  return idx;
}

// Nearest sample to `frame` within half the stride; earlier sample wins ties.
const Vec3* sample_near(const std::map<int, Vec3>& samples, int frame, int stride) {
  const double half = 0.5 * static_cast<double>(stride);
  const Vec3* best = nullptr;
  int best_gap = 0;
  auto it = samples.lower_bound(frame);
  if (it != samples.end() && static_cast<double>(it->first - frame) <= half) {
    best = &it->second;
    best_gap = it->first - frame;
  }
  if (it != samples.begin()) {
    auto prev = std::prev(it);
    const int gap = frame - prev->first;
    if (static_cast<double>(gap) <= half && (best == nullptr || gap <= best_gap)) best = &prev->second;
  }
  return best;
}

}  // namespace

EvalCounts match_and_count(std::span<const Trajectory> trajectories, const GroundTruth& gt, double radius_cm) {
  EvalCounts c;
  const SampleIndex samples = index_samples(trajectories);
  std::map<int, std::vector<Point>> gt_by_frame;
  for (const auto& e : gt.entries) gt_by_frame[e.frame].push_back({e.identity, e.position});

  std::map<int, int> last_match;  // gt identity -> predicted identity
  for (auto& [frame, truth] : gt_by_frame) {
    std::sort(truth.begin(), truth.end(), [](const Point& a, const Point& b) { return a.identity < b.identity; });
    std::vector<Point> pred;
    for (const auto& [id, by_frame] : samples)
      if (const Vec3* p = sample_near(by_frame, frame, gt.annotation_stride_frames)) pred.push_back({id, *p});

    // CLEAR-MOT: greedy over pairs ordered by (distance, gt id, pred id)
    std::vector<std::tuple<double, int, int, std::size_t, std::size_t>> pairs;
    for (std::size_t g = 0; g < truth.size(); ++g)
      for (std::size_t p = 0; p < pred.size(); ++p) {
        const double d = (truth[g].position - pred[p].position).norm();
        if (d < radius_cm) pairs.emplace_back(d, truth[g].identity, pred[p].identity, g, p);
      }
    std::sort(pairs.begin(), pairs.end());
    std::vector<bool> g_used(truth.size()), p_used(pred.size());
    long matched = 0;
    for (const auto& [d, gid, pid, g, p] : pairs) {
      if (g_used[g] || p_used[p]) continue;
      g_used[g] = p_used[p] = true;
      ++matched;
      auto [it, fresh] = last_match.emplace(gid, pid);
      if (!fresh && it->second != pid) {
        ++c.id_switches;
        it->second = pid;
      }
    }
    c.tp += matched;
    c.fp += static_cast<long>(pred.size()) - matched;
    c.fn += static_cast<long>(truth.size()) - matched;
    c.gt_total += static_cast<long>(truth.size());

    // identity-aware: the prediction carrying the gt identity must be within the radius
    long identity_hits = 0;
    for (const auto& t : truth) {
      for (const auto& p : pred)
        if (p.identity == t.identity && (p.position - t.position).norm() < radius_cm) ++identity_hits;
    }
    c.i_tp += identity_hits;
    c.i_fp += static_cast<long>(pred.size()) - identity_hits;
    c.i_fn += static_cast<long>(truth.size()) - identity_hits;
  }
  return c;
}

double mota(const EvalCounts& counts) {
  if (counts.gt_total <= 0) throw DataError("MOTA undefined without ground truth");
  const double switches = counts.id_switches > 0 ? std::log10(static_cast<double>(counts.id_switches)) : 0.0;
  return 1.0 - (static_cast<double>(counts.fp + counts.fn) + switches) / static_cast<double>(counts.gt_total);
}

PrecisionRecall micro_prf(long tp, long fp, long fn) {
  PrecisionRecall r;
  r.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  r.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  r.f1 = r.precision + r.recall > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

PrecisionRecall micro_prf(const EvalCounts& counts) { return micro_prf(counts.i_tp, counts.i_fp, counts.i_fn); }

EvalReport evaluate(std::span<const Trajectory> trajectories, const GroundTruth& gt, double radius_cm) {
  EvalReport r;
  r.counts = match_and_count(trajectories, gt, radius_cm);
  r.mota = mota(r.counts);
  r.micro = micro_prf(r.counts);
  return r;
}

std::string report_json(const EvalReport& r) {
  const auto& c = r.counts;
  nlohmann::json j{{"mota", r.mota},
                   {"micro_precision", r.micro.precision},
                   {"micro_recall", r.micro.recall},
                   {"micro_f1", r.micro.f1},
                   {"tp", c.tp},
                   {"fp", c.fp},
                   {"fn", c.fn},
                   {"id_switches", c.id_switches},
                   {"i_tp", c.i_tp},
                   {"i_fp", c.i_fp},
                   {"i_fn", c.i_fn},
                   {"gt_total", c.gt_total}};
  return j.dump();
}

std::string report_csv_header() {
  return "mota,micro_precision,micro_recall,micro_f1,tp,fp,fn,id_switches,i_tp,i_fp,i_fn,gt_total";
}

std::string report_csv_row(const EvalReport& r) {
  const auto& c = r.counts;
  std::ostringstream os;
  os.precision(6);
  os << r.mota << ',' << r.micro.precision << ',' << r.micro.recall << ',' << r.micro.f1 << ',' << c.tp << ','
     << c.fp << ',' << c.fn << ',' << c.id_switches << ',' << c.i_tp << ',' << c.i_fp << ',' << c.i_fn << ','
     << c.gt_total;
  return os.str();
}

}  // namespace idtrack
