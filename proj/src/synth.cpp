#include "idtrack/synth.hpp"

#include "idtrack/affinity.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace idtrack {

void ScenarioConfig::validate() const {
  auto prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw DataError(std::string(name) + " must lie in [0, 1]");
  };
  if (num_agents < 0) throw DataError("num_agents must be nonnegative");
  if (num_agents == 0 && face_label_prob > 0.0) throw DataError("face labels requested without agents");
  if (!(arena_width_cm > 0.0 && arena_height_cm > 0.0)) throw DataError("arena must have positive size");
  if (duration_frames <= 0) throw DataError("duration_frames must be positive");
  if (!(fps > 0.0)) throw DataError("fps must be positive");
  if (detection_stride <= 0 || gt_stride <= 0) throw DataError("strides must be positive");
  if (!(speed_min_cmps >= 0.0 && speed_max_cmps >= speed_min_cmps)) throw DataError("bad speed range");
  if (partitions <= 0 || bins_per_partition <= 0) throw DataError("histogram shape must be positive");
  if (appearance_noise_sigma < 0.0 || appearance_drift_rate < 0.0) throw DataError("noise must be nonnegative");
  if (!(prototype_max_similarity > 0.0 && prototype_max_similarity <= 1.0))
    throw DataError("prototype_max_similarity must lie in (0, 1]");
  prob(detection_dropout_prob, "detection_dropout_prob");
  prob(face_label_prob, "face_label_prob");
  if (false_positive_rate < 0.0) throw DataError("false_positive_rate must be nonnegative");
  if (cameras <= 0) throw DataError("cameras must be positive");
  if (duplication_jitter_cm < 0.0) throw DataError("duplication_jitter_cm must be nonnegative");
  for (const auto& w : occlusion_windows)
    if (w.agent < 0 || w.agent >= num_agents || w.last_frame < w.first_frame)
      throw DataError("bad occlusion window");
}

namespace {

using Rng = std::mt19937_64;
using Histogram = std::vector<double>;

void normalize_partitions(Histogram& h, int partitions, int bins) {
  for (int p = 0; p < partitions; ++p) {
    double sum = 0.0;
    for (int b = 0; b < bins; ++b) sum += h[static_cast<std::size_t>(p * bins + b)];
    for (int b = 0; b < bins; ++b) {
      auto& v = h[static_cast<std::size_t>(p * bins + b)];
      v = sum > 0.0 ? v / sum : 1.0 / bins;
    }
  }
}

Histogram random_histogram(Rng& rng, int partitions, int bins) {
  std::exponential_distribution<double> expo(1.0);
  Histogram h(static_cast<std::size_t>(partitions * bins));
  for (auto& v : h) v = expo(rng);
  normalize_partitions(h, partitions, bins);
  return h;
}

Histogram blend(const Histogram& a, const Histogram& b, double w, int partitions, int bins) {
  Histogram h(a.size());
  for (std::size_t l = 0; l < a.size(); ++l) h[l] = (1.0 - w) * a[l] + w * b[l];
  normalize_partitions(h, partitions, bins);
  return h;
}

// Drifting appearance: each agent oscillates between two endpoint prototypes.
struct Appearance {
  Histogram from;
  Histogram to;
};

double drift_weight(double rate, int frame, double fps) {
  return 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * rate * static_cast<double>(frame) / fps));
}

std::vector<Appearance> draw_appearances(const ScenarioConfig& cfg, Rng& rng) {
  const int P = cfg.partitions;
  const int B = cfg.bins_per_partition;
  std::vector<Appearance> out;
  constexpr int kMaxTries = 10000;
  for (int a = 0; a < cfg.num_agents; ++a) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxTries && !placed; ++attempt) {
      Appearance cand{random_histogram(rng, P, B), random_histogram(rng, P, B)};
      placed = true;
      for (const auto& other : out) {
        for (double w1 : {0.0, 0.25, 0.5, 0.75, 1.0}) {
          for (double w2 : {0.0, 0.25, 0.5, 0.75, 1.0}) {
            if (exp_chi2(blend(cand.from, cand.to, w1, P, B), blend(other.from, other.to, w2, P, B)) >=
                cfg.prototype_max_similarity) {
              placed = false;
              break;
            }
          }
          if (!placed) break;
        }
        if (!placed) break;
      }
      if (placed) out.push_back(std::move(cand));
    }
    if (!placed) throw DataError("could not draw distinct prototypes; lower the agent count or similarity ceiling");
  }
  return out;
}

Histogram noisy(const Histogram& proto, double sigma, Rng& rng, int partitions, int bins) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Histogram h(proto.size());
  for (std::size_t l = 0; l < proto.size(); ++l) h[l] = proto[l] * std::exp(sigma * gauss(rng));
  normalize_partitions(h, partitions, bins);
  return h;
}

bool occluded(const ScenarioConfig& cfg, int agent, int frame) {
  for (const auto& w : cfg.occlusion_windows)
    if (w.agent == agent && frame >= w.first_frame && frame <= w.last_frame) return true;
  return false;
}

// paths[a][frame] is the true position of agent a.
Scenario observe(const ScenarioConfig& cfg, const std::vector<std::vector<Vec3>>& paths,
                 const std::vector<Appearance>& looks, Rng& rng) {
  const int P = cfg.partitions;
  const int B = cfg.bins_per_partition;
  Scenario sc;
  auto& set = sc.detections;
  set.fps = cfg.fps;
  set.num_identities = cfg.num_agents;
  set.histogram_dim = cfg.histogram_dim();
  sc.ground_truth.annotation_stride_frames = cfg.gt_stride;

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::poisson_distribution<int> fp_count(cfg.false_positive_rate > 0.0 ? cfg.false_positive_rate : 1.0);
  std::uniform_int_distribution<int> any_camera(0, cfg.cameras - 1);

  for (int frame = 0; frame < cfg.duration_frames; ++frame) {
    if (frame % cfg.gt_stride == 0)
      for (int a = 0; a < cfg.num_agents; ++a)
        sc.ground_truth.entries.push_back({frame, a, paths[static_cast<std::size_t>(a)][static_cast<std::size_t>(frame)]});
    if (frame % cfg.detection_stride != 0) continue;

    for (int a = 0; a < cfg.num_agents; ++a) {
      const bool hidden = occluded(cfg, a, frame);
      const auto& look = looks[static_cast<std::size_t>(a)];
      const Histogram proto = blend(look.from, look.to, drift_weight(cfg.appearance_drift_rate, frame, cfg.fps), P, B);
      for (int cam = 0; cam < cfg.cameras; ++cam) {
        // draws happen regardless of visibility so the stream layout is fixed
        const double r = cfg.duplication_jitter_cm * std::sqrt(unit(rng));
        const double phi = 2.0 * std::numbers::pi * unit(rng);
        const bool dropped = unit(rng) < cfg.detection_dropout_prob;
        const bool face = unit(rng) < cfg.face_label_prob;
        Histogram hist = noisy(proto, cfg.appearance_noise_sigma, rng, P, B);
        if (hidden || dropped) continue;
        Observation o;
        o.obs_id = set.size();
        o.frame = frame;
        o.camera_id = cam;
        o.position = paths[static_cast<std::size_t>(a)][static_cast<std::size_t>(frame)] +
                     Vec3(r * std::cos(phi), r * std::sin(phi), 0.0);
        o.histogram = std::move(hist);
        if (face) o.face_label = a;
        set.observations.push_back(std::move(o));
        sc.source_agent.push_back(a);
      }
    }
    if (cfg.false_positive_rate > 0.0) {
      const int count = fp_count(rng);
      for (int k = 0; k < count; ++k) {
        Observation o;
        o.obs_id = set.size();
        o.frame = frame;
        o.camera_id = any_camera(rng);
        o.position = Vec3(cfg.arena_width_cm * unit(rng), cfg.arena_height_cm * unit(rng), 0.0);
        o.histogram = random_histogram(rng, P, B);
        set.observations.push_back(std::move(o));
        sc.source_agent.push_back(-1);
      }
    }
  }
  return sc;
}

std::vector<std::vector<Vec3>> random_walks(const ScenarioConfig& cfg, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double dt = 1.0 / cfg.fps;
  std::vector<std::vector<Vec3>> paths(static_cast<std::size_t>(cfg.num_agents));
  for (auto& path : paths) {
    double x = cfg.arena_width_cm * unit(rng);
    double y = cfg.arena_height_cm * unit(rng);
    double heading = 2.0 * std::numbers::pi * unit(rng);
    double speed = cfg.speed_min_cmps + (cfg.speed_max_cmps - cfg.speed_min_cmps) * unit(rng);
    path.reserve(static_cast<std::size_t>(cfg.duration_frames));
    for (int f = 0; f < cfg.duration_frames; ++f) {
      path.emplace_back(x, y, 0.0);
      heading += cfg.heading_noise_rad * gauss(rng);
      speed = std::clamp(speed + 0.05 * (cfg.speed_max_cmps - cfg.speed_min_cmps) * gauss(rng), cfg.speed_min_cmps,
                         cfg.speed_max_cmps);
      x += speed * dt * std::cos(heading);
      y += speed * dt * std::sin(heading);
      // reflect at the walls; reflection never lengthens the step
      if (x < 0.0) { x = -x; heading = std::numbers::pi - heading; }
      if (x > cfg.arena_width_cm) { x = 2.0 * cfg.arena_width_cm - x; heading = std::numbers::pi - heading; }
      if (y < 0.0) { y = -y; heading = -heading; }
      if (y > cfg.arena_height_cm) { y = 2.0 * cfg.arena_height_cm - y; heading = -heading; }
    }
  }
  return paths;
}

}  // namespace

Scenario generate(const ScenarioConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const auto looks = draw_appearances(cfg, rng);
  const auto paths = random_walks(cfg, rng);
  return observe(cfg, paths, looks, rng);
}

Scenario crossing_fixture(std::uint64_t seed) {
  ScenarioConfig cfg = preset_config("crossing", seed);
  Rng rng(cfg.seed);
  // identical dress for both agents
  const Histogram proto = random_histogram(rng, cfg.partitions, cfg.bins_per_partition);
  const std::vector<Appearance> looks(2, Appearance{proto, proto});

  // diagonals of a square arena crossing at its center at the midpoint frame
  const double side = cfg.arena_width_cm;
  const int last = cfg.duration_frames - 1;
  std::vector<std::vector<Vec3>> paths(2);
  for (int f = 0; f < cfg.duration_frames; ++f) {
    const double s = static_cast<double>(f) / static_cast<double>(last);
    paths[0].emplace_back(s * side, s * side, 0.0);
    paths[1].emplace_back(side - s * side, s * side, 0.0);
  }
  Scenario sc = observe(cfg, paths, looks, rng);

  // exactly two labels per agent: first and last detection
  for (int a = 0; a < 2; ++a) {
    int first = -1, final_obs = -1;
    for (int i = 0; i < sc.detections.size(); ++i) {
      if (sc.source_agent[static_cast<std::size_t>(i)] != a) continue;
      if (first < 0) first = i;
      final_obs = i;
    }
    if (first >= 0) {
      sc.detections.observations[static_cast<std::size_t>(first)].face_label = a;
      sc.detections.observations[static_cast<std::size_t>(final_obs)].face_label = a;
    }
  }
  return sc;
}

ScenarioConfig preset_config(const std::string& name, std::uint64_t seed) {
  ScenarioConfig cfg;
  cfg.seed = seed;
  if (name == "default") return cfg;
  if (name == "crossing") {
    cfg.num_agents = 2;
    cfg.arena_width_cm = 2400.0;
    cfg.arena_height_cm = 2400.0;
    cfg.duration_frames = 600;
    cfg.detection_stride = 1;
    cfg.gt_stride = 25;
    cfg.cameras = 1;
    cfg.detection_dropout_prob = 0.0;
    cfg.face_label_prob = 0.0;
    cfg.appearance_drift_rate = 0.0;
    return cfg;
  }
  if (name == "crowded") {
    cfg.num_agents = 8;
    cfg.duration_frames = 3000;
    cfg.cameras = 3;
    cfg.detection_stride = 4;
    cfg.face_label_prob = 0.02;
    cfg.detection_dropout_prob = 0.05;
    // 13% of all detections are false positives
    const double true_per_frame = cfg.num_agents * cfg.cameras * (1.0 - cfg.detection_dropout_prob);
    cfg.false_positive_rate = true_per_frame * 0.13 / 0.87;
    return cfg;
  }
  if (name == "longgap") {
    cfg.num_agents = 4;
    cfg.duration_frames = 2000;
    cfg.cameras = 2;
    cfg.face_label_prob = 0.03;
    cfg.occlusion_windows = {{200, 500, 0}, {700, 1000, 1}, {1200, 1500, 2}, {400, 800, 3}};
    return cfg;
  }
  throw DataError("unknown preset \"" + name + "\"");
}

Scenario generate_preset(const std::string& name, std::uint64_t seed) {
  if (name == "crossing") return crossing_fixture(seed);
  return generate(preset_config(name, seed));
}

int corrupt_labels(ObservationSet& set, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw DataError("corruption fraction must lie in [0, 1]");
  std::vector<int> labeled;
  for (const auto& o : set.observations)
    if (o.face_label) labeled.push_back(o.obs_id);
  if (set.num_identities < 2 || labeled.empty()) return 0;
  Rng rng(seed);
  std::shuffle(labeled.begin(), labeled.end(), rng);
  const auto count = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(labeled.size())));
  std::uniform_int_distribution<int> other(1, set.num_identities - 1);
  for (std::size_t k = 0; k < count; ++k) {
    auto& label = *set.observations[static_cast<std::size_t>(labeled[k])].face_label;
    label = (label + other(rng)) % set.num_identities;
  }
  return static_cast<int>(count);
}

}  // namespace idtrack
