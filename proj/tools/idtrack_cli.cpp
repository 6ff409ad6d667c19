#include "manifest.hpp"

#include "idtrack/affinity.hpp"
#include "idtrack/diary.hpp"
#include "idtrack/metrics.hpp"
#include "idtrack/pipeline.hpp"
#include "idtrack/solver.hpp"
#include "idtrack/synth.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

// Thrown for missing/unreadable inputs and unwritable outputs.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown from a compute stage; the message carries the stage name.
struct StageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::string out_dir = ".";
};

void require_file(const std::string& path) {
  if (!fs::is_regular_file(path)) throw UsageError("no such file: " + path);
}

fs::path prepare_out_dir(const Globals& g) {
  std::error_code ec;
  fs::create_directories(g.out_dir, ec);
  if (ec || !fs::is_directory(g.out_dir)) throw UsageError("cannot create output directory: " + g.out_dir);
  return fs::path(g.out_dir);
}

// Runs a loader; malformed input is a usage/IO error.
template <typename Fn>
auto load(Fn&& fn) {
  try {
    return fn();
  } catch (const idtrack::DataError& e) {
    throw UsageError(e.what());
  }
}

template <typename Fn>
auto stage(const char* name, Fn&& fn) {
  try {
    return fn();
  } catch (const UsageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(std::string(name) + " stage failed: " + e.what());
  }
}

void record_globals(idtrack::cli::RunManifest& m, const Globals& g) {
  m.flag("config", g.config_path);
  m.flag("threads", g.threads);
  m.flag("out_dir", g.out_dir);
  if (g.seed) m.seed(*g.seed);
}

// ---- track -----------------------------------------------------------------

struct TrackArgs {
  std::string detections;
  bool no_slc = false;
  bool dump_graphs = false;
  std::vector<std::string> overrides;  // key=value with a JSON value
};

int cmd_track(const Globals& g, const TrackArgs& a) {
  require_file(a.detections);
  if (!g.config_path.empty()) require_file(g.config_path);
  idtrack::TrackerConfig cfg = load([&] { return g.config_path.empty() ? idtrack::TrackerConfig{} : idtrack::load_config(g.config_path); });
  for (const auto& kv : a.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got " + kv);
    json one;
    try {
      one[kv.substr(0, eq)] = json::parse(kv.substr(eq + 1));
    } catch (const json::exception&) {
      one[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    load([&] {
      idtrack::apply_config_json(cfg, one.dump());
      return 0;
    });
  }
  if (a.no_slc) cfg.use_slc = false;
  load([&] {
    cfg.validate();
    return 0;
  });

  const auto set = load([&] { return idtrack::load_detections(a.detections); });
  const fs::path out = prepare_out_dir(g);

  idtrack::TrackResult result = stage("track", [&] { return idtrack::run_tracker(set, cfg, g.threads); });
  if (a.dump_graphs) {
    stage("affinity", [&] {
      const auto graphs = idtrack::build_graphs(set, cfg, g.threads);
      idtrack::write_coo(graphs.L, out / "L.coo");
      idtrack::write_coo(graphs.K, out / "K.coo");
      idtrack::write_coo(graphs.S, out / "S.coo");
      return 0;
    });
  }

  const fs::path traj_path = out / "trajectories.jsonl";
  const fs::path trace_path = out / "trace.jsonl";
  idtrack::write_trajectories(result.trajectories, set.fps, traj_path);
  idtrack::write_trace(result.trace, trace_path);

  idtrack::cli::RunManifest m("track");
  record_globals(m, g);
  m.flag("detections", a.detections);
  m.flag("no_slc", a.no_slc);
  m.flag("dump_graphs", a.dump_graphs);
  m.flag("set", a.overrides);
  m.config(json::parse(idtrack::config_to_json(cfg)));
  m.input(a.detections);
  if (!g.config_path.empty()) m.input(g.config_path);
  m.output(traj_path);
  m.output(trace_path);
  m.timings(result.stage_seconds);
  m.extra("graph", {{"appearance_edges", result.graph_stats.appearance_edges},
                    {"laplacian_nnz", result.graph_stats.laplacian_nnz},
                    {"spatial_edges", result.graph_stats.spatial_edges},
                    {"conflict_edges", result.graph_stats.conflict_edges}});
  m.extra("trajectories", result.trajectories.size());
  m.write(out / "manifest.json");

  std::cerr << "track: " << set.size() << " detections, " << result.trajectories.size() << " trajectory segments, "
            << result.trace.outer.size() << " penalty steps\n";
  return 0;
}

// ---- eval ------------------------------------------------------------------

struct EvalArgs {
  std::string trajectories;
  std::string ground_truth;
  bool csv = false;
  double radius_cm = 100.0;
};

int cmd_eval(const Globals& g, const EvalArgs& a) {
  require_file(a.trajectories);
  require_file(a.ground_truth);
  const auto trajs = load([&] { return idtrack::load_trajectories(a.trajectories); });
  const auto gt = load([&] { return idtrack::load_ground_truth(a.ground_truth); });
  const auto report = stage("eval", [&] { return idtrack::evaluate(trajs.trajectories, gt, a.radius_cm); });
  if (a.csv) {
    std::cout << idtrack::report_csv_header() << '\n' << idtrack::report_csv_row(report) << '\n';
  } else {
    std::cout << idtrack::report_json(report) << '\n';
  }
  if (g.out_dir != ".") {
    const fs::path out = prepare_out_dir(g);
    const fs::path report_path = out / "eval.json";
    std::ofstream(report_path) << idtrack::report_json(report) << '\n';
    idtrack::cli::RunManifest m("eval");
    record_globals(m, g);
    m.flag("csv", a.csv);
    m.flag("radius_cm", a.radius_cm);
    m.input(a.trajectories);
    m.input(a.ground_truth);
    m.output(report_path);
    m.write(out / "manifest.json");
  }
  return 0;
}

// ---- synth -----------------------------------------------------------------

struct SynthArgs {
  std::string preset = "default";
};

int cmd_synth(const Globals& g, const SynthArgs& a) {
  const std::uint64_t seed = g.seed.value_or(7);
  const auto t0 = std::chrono::steady_clock::now();
  const idtrack::Scenario sc = stage("synth", [&] { return idtrack::generate_preset(a.preset, seed); });
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const fs::path out = prepare_out_dir(g);
  const fs::path det = out / "detections.jsonl";
  const fs::path gt = out / "gt.jsonl";
  const fs::path names = out / "names.json";
  idtrack::write_detections(sc.detections, det);
  idtrack::write_ground_truth(sc.ground_truth, gt);
  json nm = json::object();
  for (int i = 0; i < sc.detections.num_identities; ++i) nm[std::to_string(i)] = "person " + std::to_string(i);
  std::ofstream(names) << nm.dump(2) << '\n';

  idtrack::cli::RunManifest m("synth");
  record_globals(m, g);
  m.seed(seed);
  m.flag("preset", a.preset);
  m.output(det);
  m.output(gt);
  m.output(names);
  m.timings({{"synth", secs}});
  m.write(out / "manifest.json");
  std::cerr << "synth: " << sc.detections.size() << " detections, " << sc.ground_truth.entries.size()
            << " ground-truth entries\n";
  return 0;
}

// ---- diary -----------------------------------------------------------------

struct DiaryArgs {
  std::string trajectories;
  std::string map;
  std::string names;
};

int cmd_diary(const Globals& g, const DiaryArgs& a) {
  require_file(a.trajectories);
  require_file(a.map);
  if (!a.names.empty()) require_file(a.names);
  const auto trajs = load([&] { return idtrack::load_trajectories(a.trajectories); });
  const auto map = load([&] { return idtrack::load_scene_map(a.map); });
  const auto names = a.names.empty() ? std::map<int, std::string>{} : load([&] { return idtrack::load_names(a.names); });

  const auto events = stage("diary", [&] { return idtrack::detect_all_events(trajs.trajectories, map, trajs.fps); });
  const auto timeline = stage("diary", [&] { return idtrack::build_timeline(trajs.trajectories, events, map); });
  const auto doc = stage("diary", [&] { return idtrack::render_diary(events, trajs.trajectories, map, trajs.fps, names); });

  const fs::path out = prepare_out_dir(g);
  const fs::path events_path = out / "events.jsonl";
  const fs::path timeline_path = out / "timeline.jsonl";
  const fs::path text_path = out / "diary.txt";
  const fs::path json_path = out / "diary.json";
  idtrack::write_events(events, events_path);
  idtrack::write_timeline(timeline, timeline_path);
  std::ofstream(text_path) << doc.text;
  std::ofstream(json_path) << doc.json << '\n';

  idtrack::cli::RunManifest m("diary");
  record_globals(m, g);
  m.flag("names", a.names);
  m.input(a.trajectories);
  m.input(a.map);
  if (!a.names.empty()) m.input(a.names);
  for (const auto& p : {events_path, timeline_path, text_path, json_path}) m.output(p);
  m.write(out / "manifest.json");
  std::cout << doc.text;
  return 0;
}

// ---- diary-eval ------------------------------------------------------------

struct DiaryEvalArgs {
  std::string pred_events;
  std::string gt_events;
  std::string pred_timeline;
  std::string gt_timeline;
  double fps = 25.0;
};

int cmd_diary_eval(const Globals& g, const DiaryEvalArgs& a) {
  require_file(a.pred_events);
  require_file(a.gt_events);
  if (!a.pred_timeline.empty()) require_file(a.pred_timeline);
  if (!a.gt_timeline.empty()) require_file(a.gt_timeline);
  const auto pred = load([&] { return idtrack::load_events(a.pred_events); });
  const auto gt = load([&] { return idtrack::load_events(a.gt_events); });
  std::vector<idtrack::TimelineSpan> pt, gtt;
  if (!a.pred_timeline.empty()) pt = load([&] { return idtrack::load_timeline(a.pred_timeline); });
  if (!a.gt_timeline.empty()) gtt = load([&] { return idtrack::load_timeline(a.gt_timeline); });
  idtrack::DiaryEvalParams params;
  params.fps = a.fps;
  const auto report = stage("diary-eval", [&] { return idtrack::evaluate_diary(pred, gt, pt, gtt, params); });
  const std::string text = idtrack::diary_report_json(report);
  std::cout << text << '\n';
  if (g.out_dir != ".") {
    const fs::path out = prepare_out_dir(g);
    const fs::path report_path = out / "diary_eval.json";
    std::ofstream(report_path) << text << '\n';
    idtrack::cli::RunManifest m("diary-eval");
    record_globals(m, g);
    m.flag("fps", a.fps);
    m.input(a.pred_events);
    m.input(a.gt_events);
    if (!a.pred_timeline.empty()) m.input(a.pred_timeline);
    if (!a.gt_timeline.empty()) m.input(a.gt_timeline);
    m.output(report_path);
    m.write(out / "manifest.json");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Identity-aware multi-target tracking"};
  app.require_subcommand(1);
  app.set_version_flag("--version", idtrack::cli::kToolVersion);

  Globals g;
  app.add_option("--config", g.config_path, "Tracker config JSON (flat keys)");
  app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::Range(1, 1024));
  app.add_option("--out-dir", g.out_dir, "Output directory");

  TrackArgs track;
  auto* t = app.add_subcommand("track", "Associate detections into identity trajectories");
  t->fallthrough();
  t->add_option("detections", track.detections, "Detections JSONL")->required();
  t->add_flag("--no-slc", track.no_slc, "Drop the spatial-locality term");
  t->add_flag("--dump-graphs", track.dump_graphs, "Write L, K and S as COO text");
  t->add_option("--set", track.overrides, "Override a config key, e.g. --set k=10");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Score trajectories against ground truth");
  e->fallthrough();
  e->add_option("trajectories", ev.trajectories)->required();
  e->add_option("ground_truth", ev.ground_truth)->required();
  e->add_flag("--csv", ev.csv, "Emit a CSV header and row instead of JSON");
  e->add_option("--radius", ev.radius_cm, "Match radius in cm");

  SynthArgs sy;
  auto* s = app.add_subcommand("synth", "Generate a synthetic scenario");
  s->fallthrough();
  s->add_option("--preset", sy.preset)->check(CLI::IsMember({"crossing", "crowded", "longgap", "default"}));

  DiaryArgs di;
  auto* d = app.add_subcommand("diary", "Detect activities and render a diary");
  d->fallthrough();
  d->add_option("trajectories", di.trajectories)->required();
  d->add_option("map", di.map, "Scene map JSON")->required();
  d->add_option("--names", di.names, "Identity names JSON");

  DiaryEvalArgs de;
  auto* x = app.add_subcommand("diary-eval", "Score diary events against ground truth events");
  x->fallthrough();
  x->add_option("pred_events", de.pred_events)->required();
  x->add_option("gt_events", de.gt_events)->required();
  x->add_option("--pred-timeline", de.pred_timeline);
  x->add_option("--gt-timeline", de.gt_timeline);
  x->add_option("--fps", de.fps);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (t->parsed()) return cmd_track(g, track);
    if (e->parsed()) return cmd_eval(g, ev);
    if (s->parsed()) return cmd_synth(g, sy);
    if (d->parsed()) return cmd_diary(g, di);
    if (x->parsed()) return cmd_diary_eval(g, de);
  } catch (const UsageError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitUsage;
  } catch (const StageError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
