#include "idtrack/model.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace idtrack {

using nlohmann::json;

namespace {

std::string line_error(const std::filesystem::path& path, std::size_t line_no, const std::string& what) {
  std::ostringstream os;
  os << path.string() << ":" << line_no << ": " << what;
  return os.str();
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

Vec3 parse_pos(const json& j) {
  if (!j.is_array() || j.size() != 3) throw DataError("\"pos\" must be an array of 3 numbers");
  Vec3 p;
  for (int a = 0; a < 3; ++a) {
    if (!j[static_cast<std::size_t>(a)].is_number()) throw DataError("\"pos\" entries must be numbers");
    p[a] = j[static_cast<std::size_t>(a)].get<double>();
    if (!std::isfinite(p[a])) throw DataError("\"pos\" entries must be finite");
  }
  return p;
}

json pos_json(const Vec3& p) { return json::array({p.x(), p.y(), p.z()}); }

template <typename T>
T required(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw DataError(std::string("missing key \"") + key + "\"");
  if constexpr (std::is_integral_v<T>) {
    if (!it->is_number_integer()) throw DataError(std::string("\"") + key + "\" must be an integer");
  } else {
    if (!it->is_number()) throw DataError(std::string("\"") + key + "\" must be a number");
  }
  return it->template get<T>();
}

// Calls fn(line_no, object) for every non-blank line.
template <typename Fn>
void for_each_record(const std::filesystem::path& path, Fn&& fn) {
  auto in = open_input(path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      json obj = json::parse(line);
      if (!obj.is_object()) throw DataError("record is not a JSON object");
      fn(line_no, obj);
    } catch (const json::exception& e) {
      throw DataError(line_error(path, line_no, e.what()));
    } catch (const DataError& e) {
      throw DataError(line_error(path, line_no, e.what()));
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------

void ObservationSet::validate() const {
  if (!(fps > 0.0) || !std::isfinite(fps)) throw DataError("fps must be positive");
  if (num_identities < 0) throw DataError("c must be nonnegative");
  if (histogram_dim <= 0) throw DataError("d must be positive");
  std::optional<long> partitions;
  for (std::size_t i = 0; i < observations.size(); ++i) {
    const auto& o = observations[i];
    const std::string where = "observation " + std::to_string(i) + ": ";
    if (o.obs_id != static_cast<int>(i)) throw DataError(where + "obs_id must equal its index");
    if (o.frame < 0) throw DataError(where + "negative frame");
    if (!o.position.allFinite()) throw DataError(where + "non-finite position");
    if (static_cast<int>(o.histogram.size()) != histogram_dim)
      throw DataError(where + "histogram length " + std::to_string(o.histogram.size()) + " != d=" +
                      std::to_string(histogram_dim));
    double sum = 0.0;
    for (double v : o.histogram) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw DataError(where + "negative or non-finite histogram entry");
      sum += v;
    }
    const long parts = std::lround(sum);
    if (parts < 1 || std::abs(sum - static_cast<double>(parts)) > 1e-6)
      throw DataError(where + "histogram must sum to its number of partitions");
    if (partitions && *partitions != parts) throw DataError(where + "inconsistent histogram partition count");
    partitions = parts;
    if (o.face_label && (*o.face_label < 0 || *o.face_label >= num_identities))
      throw DataError(where + "face label " + std::to_string(*o.face_label) + " out of range [0, c)");
  }
}

void TrackerConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw DataError(std::string(name) + " must be positive");
  };
  if (k <= 0) throw DataError("k must be positive");
  positive(T_appearance_sec, "T_appearance_sec");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw DataError("gamma must lie in (0, 1]");
  positive(delta_cm, "delta_cm");
  positive(V_cmps, "V_cmps");
  positive(epsilon_sec, "epsilon_sec");
  positive(delta_tilde_cm, "delta_tilde_cm");
  if (T_tilde_frames <= 0) throw DataError("T_tilde_frames must be positive");
  if (slc_window_frames <= 0) throw DataError("slc_window_frames must be positive");
  positive(beta_per_1000, "beta_per_1000");
  positive(tau_init, "tau_init");
  positive(tau_final, "tau_final");
  if (!(tau_step_s > 1.0)) throw DataError("tau_step_s must exceed 1");
  positive(sigma, "sigma");
  positive(inner_tol, "inner_tol");
  if (inner_max_iters <= 0) throw DataError("inner_max_iters must be positive");
  positive(u_large, "u_large");
  if (!(assign_threshold_theta > 0.0 && assign_threshold_theta < 1.0))
    throw DataError("assign_threshold_theta must lie in (0, 1)");
  if (min_run_length <= 0) throw DataError("min_run_length must be positive");
  if (gap_frames <= 0) throw DataError("gap_frames must be positive");
}

void GroundTruth::validate() const {
  std::set<std::pair<int, int>> seen;
  for (const auto& e : entries) {
    if (e.frame < 0 || e.identity < 0) throw DataError("ground truth frame and id must be nonnegative");
    if (!seen.emplace(e.frame, e.identity).second)
      throw DataError("duplicate ground truth entry for frame " + std::to_string(e.frame) + ", id " +
                      std::to_string(e.identity));
  }
  if (annotation_stride_frames <= 0) throw DataError("annotation stride must be positive");
}

LabelMatrix build_label_matrix(const ObservationSet& set) {
  LabelMatrix out;
  out.Y.resize(set.size(), set.num_identities);
  std::vector<Eigen::Triplet<double>> trips;
  for (const auto& o : set.observations) {
    if (!o.face_label) continue;
    trips.emplace_back(o.obs_id, *o.face_label, 1.0);
    out.labeled_rows.push_back(o.obs_id);
  }
  out.Y.setFromTriplets(trips.begin(), trips.end());
  return out;
}

// ---- detections ------------------------------------------------------------

ObservationSet load_detections(const std::filesystem::path& path) {
  ObservationSet set;
  bool have_header = false;
  for_each_record(path, [&](std::size_t line_no, const json& obj) {
    if (!have_header) {
      set.fps = required<double>(obj, "fps");
      set.num_identities = required<int>(obj, "c");
      set.histogram_dim = required<int>(obj, "d");
      if (!(set.fps > 0.0)) throw DataError("fps must be positive");
      if (set.num_identities < 0) throw DataError("c must be nonnegative");
      if (set.histogram_dim <= 0) throw DataError("d must be positive");
      have_header = true;
      return;
    }
    Observation o;
    o.obs_id = set.size();
    o.frame = required<int>(obj, "frame");
    o.camera_id = required<int>(obj, "cam");
    if (!obj.contains("pos")) throw DataError("missing key \"pos\"");
    o.position = parse_pos(obj.at("pos"));
    if (!obj.contains("hist") || !obj.at("hist").is_array()) throw DataError("\"hist\" must be an array");
    const auto& hist = obj.at("hist");
    if (static_cast<int>(hist.size()) != set.histogram_dim)
      throw DataError("histogram length " + std::to_string(hist.size()) + " != d=" +
                      std::to_string(set.histogram_dim));
    o.histogram.reserve(hist.size());
    for (const auto& v : hist) {
      if (!v.is_number()) throw DataError("histogram entries must be numbers");
      const double x = v.get<double>();
      if (!(x >= 0.0)) throw DataError("negative histogram entry");
      o.histogram.push_back(x);
    }
    if (o.frame < 0) throw DataError("negative frame");
    if (obj.contains("face") && !obj.at("face").is_null()) {
      if (!obj.at("face").is_number_integer()) throw DataError("\"face\" must be an integer or null");
      const int label = obj.at("face").get<int>();
      if (label < 0 || label >= set.num_identities)
        throw DataError("face label " + std::to_string(label) + " out of range [0, c)");
      o.face_label = label;
    }
    (void)line_no;
    set.observations.push_back(std::move(o));
  });
  if (!have_header) throw DataError(path.string() + ": missing header line");
  try {
    set.validate();
  } catch (const DataError& e) {
    // observation i sits on line i + 2 when there are no blank lines
    throw DataError(path.string() + ": " + e.what());
  }
  return set;
}

void write_detections(const ObservationSet& set, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << json{{"fps", set.fps}, {"c", set.num_identities}, {"d", set.histogram_dim}}.dump() << '\n';
  for (const auto& o : set.observations) {
    json rec;
    rec["frame"] = o.frame;
    rec["cam"] = o.camera_id;
    rec["pos"] = pos_json(o.position);
    rec["hist"] = o.histogram;
    rec["face"] = o.face_label ? json(*o.face_label) : json(nullptr);
    out << rec.dump() << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

// ---- ground truth ----------------------------------------------------------

int infer_annotation_stride(const std::vector<GroundTruthEntry>& entries) {
  std::set<int> frames;
  for (const auto& e : entries) frames.insert(e.frame);
  int stride = 0;
  int prev = -1;
  for (int f : frames) {
    if (prev >= 0) stride = stride == 0 ? f - prev : std::min(stride, f - prev);
    prev = f;
  }
  return stride > 0 ? stride : 1;
}

GroundTruth load_ground_truth(const std::filesystem::path& path) {
  GroundTruth gt;
  for_each_record(path, [&](std::size_t, const json& obj) {
    GroundTruthEntry e;
    e.frame = required<int>(obj, "frame");
    e.identity = required<int>(obj, "id");
    if (!obj.contains("pos")) throw DataError("missing key \"pos\"");
    e.position = parse_pos(obj.at("pos"));
    gt.entries.push_back(e);
  });
  gt.annotation_stride_frames = infer_annotation_stride(gt.entries);
  gt.validate();
  return gt;
}

void write_ground_truth(const GroundTruth& gt, const std::filesystem::path& path) {
  auto out = open_output(path);
  for (const auto& e : gt.entries)
    out << json{{"frame", e.frame}, {"id", e.identity}, {"pos", pos_json(e.position)}}.dump() << '\n';
  if (!out) throw DataError("write failed: " + path.string());
}

// ---- trajectories ----------------------------------------------------------

void write_trajectories(const std::vector<Trajectory>& trajectories, double fps,
                        const std::filesystem::path& path) {
  auto out = open_output(path);
  out << json{{"type", "trajectories"}, {"fps", fps}, {"segments", trajectories.size()}}.dump() << '\n';
  for (std::size_t seg = 0; seg < trajectories.size(); ++seg) {
    const auto& t = trajectories[seg];
    for (const auto& s : t.samples) {
      out << json{{"id", t.identity}, {"seg", seg}, {"frame", s.frame}, {"pos", pos_json(s.position)}, {"w", s.weight}}
                 .dump()
          << '\n';
    }
  }
  if (!out) throw DataError("write failed: " + path.string());
}

TrajectoryFile load_trajectories(const std::filesystem::path& path) {
  TrajectoryFile file;
  bool have_header = false;
  std::size_t declared = 0;
  // segment key -> index into file.trajectories
  std::map<long, std::size_t> by_seg;
  for_each_record(path, [&](std::size_t, const json& obj) {
    if (!have_header) {
      if (obj.value("type", std::string{}) != "trajectories") throw DataError("missing trajectories header");
      file.fps = required<double>(obj, "fps");
      declared = required<std::size_t>(obj, "segments");
      have_header = true;
      return;
    }
    const int id = required<int>(obj, "id");
    if (id < 0) throw DataError("negative identity");
    // files without "seg" keep one segment per identity
    const long seg = obj.contains("seg") ? required<long>(obj, "seg") : -1L - id;
    TrajectorySample s;
    s.frame = required<int>(obj, "frame");
    if (!obj.contains("pos")) throw DataError("missing key \"pos\"");
    s.position = parse_pos(obj.at("pos"));
    s.weight = required<double>(obj, "w");
    auto [it, inserted] = by_seg.emplace(seg, file.trajectories.size());
    if (inserted) file.trajectories.push_back(Trajectory{id, {}});
    auto& traj = file.trajectories[it->second];
    if (traj.identity != id) throw DataError("segment mixes identities");
    if (!traj.samples.empty() && traj.samples.back().frame >= s.frame)
      throw DataError("trajectory frames must be strictly increasing");
    traj.samples.push_back(s);
  });
  if (!have_header) throw DataError(path.string() + ": missing header line");
  if (declared != file.trajectories.size())
    throw DataError(path.string() + ": header declares " + std::to_string(declared) + " segments, found " +
                    std::to_string(file.trajectories.size()));
  return file;
}

// ---- config ----------------------------------------------------------------

namespace {

template <typename Fn>
void visit_config(TrackerConfig& c, Fn&& fn) {
  fn("k", c.k);
  fn("T_appearance_sec", c.T_appearance_sec);
  fn("gamma", c.gamma);
  fn("delta_cm", c.delta_cm);
  fn("V_cmps", c.V_cmps);
  fn("epsilon_sec", c.epsilon_sec);
  fn("delta_tilde_cm", c.delta_tilde_cm);
  fn("T_tilde_frames", c.T_tilde_frames);
  fn("slc_window_frames", c.slc_window_frames);
  fn("use_slc", c.use_slc);
  fn("beta_per_1000", c.beta_per_1000);
  fn("tau_init", c.tau_init);
  fn("tau_final", c.tau_final);
  fn("tau_step_s", c.tau_step_s);
  fn("sigma", c.sigma);
  fn("inner_tol", c.inner_tol);
  fn("inner_max_iters", c.inner_max_iters);
  fn("u_large", c.u_large);
  fn("assign_threshold_theta", c.assign_threshold_theta);
  fn("min_run_length", c.min_run_length);
  fn("gap_frames", c.gap_frames);
}

}  // namespace

void apply_config_json(TrackerConfig& cfg, const std::string& json_text) {
  json obj;
  try {
    obj = json::parse(json_text);
  } catch (const json::exception& e) {
    throw DataError(std::string("config: ") + e.what());
  }
  if (!obj.is_object()) throw DataError("config must be a JSON object");
  std::set<std::string> known;
  visit_config(cfg, [&](const char* key, auto& field) {
    known.insert(key);
    auto it = obj.find(key);
    if (it == obj.end()) return;
    using T = std::decay_t<decltype(field)>;
    if constexpr (std::is_same_v<T, bool>) {
      if (!it->is_boolean()) throw DataError(std::string("config key ") + key + " must be a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!it->is_number_integer()) throw DataError(std::string("config key ") + key + " must be an integer");
    } else {
      if (!it->is_number()) throw DataError(std::string("config key ") + key + " must be a number");
    }
    field = it->template get<T>();
  });
  for (const auto& [key, _] : obj.items())
    if (!known.count(key)) throw DataError("unknown config key \"" + key + "\"");
  cfg.validate();
}

TrackerConfig load_config(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::stringstream buf;
  buf << in.rdbuf();
  TrackerConfig cfg;
  apply_config_json(cfg, buf.str());
  return cfg;
}

std::string config_to_json(const TrackerConfig& cfg) {
  json obj = json::object();
  TrackerConfig copy = cfg;
  visit_config(copy, [&](const char* key, auto& field) { obj[key] = field; });
  return obj.dump();
}

}  // namespace idtrack
