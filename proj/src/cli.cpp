#include "raycomp/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "raycomp/completion.hpp"
#include "raycomp/data.hpp"
#include "raycomp/metrics.hpp"
#include "raycomp/trainer.hpp"

namespace raycomp {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GlobalFlags {
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::string config;
};

Point3 parse_cam(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(part, &used));
      if (used != part.size()) throw UsageError("");
    } catch (const std::exception&) {
      throw UsageError("--cam expects x,y,z; got '" + text + "'");
    }
  }
  if (v.size() != 3 || !std::isfinite(v[0]) || !std::isfinite(v[1]) || !std::isfinite(v[2])) {
    throw UsageError("--cam expects x,y,z; got '" + text + "'");
  }
  return {v[0], v[1], v[2]};
}

void require_file(const fs::path& p, const char* what) {
  if (!fs::is_regular_file(p)) throw Error(ErrorKind::Io, std::string(what) + " not found: " + p.string());
}

fs::path manifest_in(const fs::path& p) { return fs::is_directory(p) ? p / "manifest.json" : p; }

// Runs fn(i) for i in [0, n) on up to `threads` workers; rethrows the first failure by index.
template <class Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn fn) {
  std::vector<std::exception_ptr> errors(n);
  auto guarded = [&](std::size_t i) {
    try {
      fn(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) guarded(i);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t i = t; i < n; i += threads) guarded(i);
      });
    }
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// ---------------------------------------------------------------- gen-data

struct GenFlags {
  std::size_t count = 200;
  std::string out;
  std::size_t divisor = 8;
  bool ascii = false;
};

void cmd_gen_data(const GenFlags& f, const GlobalFlags& g, std::ostream& out) {
  if (f.count == 0) throw UsageError("--count must be positive");
  GenerateOptions opt;
  opt.count = f.count;
  opt.seed = g.seed;
  opt.threads = g.threads;
  try {
    opt.sizes = TierSizes::scaled(f.divisor);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  opt.format = f.ascii ? CloudFormat::PlyAscii : CloudFormat::PlyBinary;
  const Manifest m = generate_dataset(opt, f.out);
  std::size_t train = 0;
  for (const auto& e : m.samples) train += e.split == "train";
  out << "wrote " << m.samples.size() << " samples (" << train << " train, " << m.samples.size() - train
      << " test) to " << f.out << "\n";
}

// ------------------------------------------------------------------- train

struct TrainFlags {
  std::string data;
  std::string out;
  std::string stage = "all";
  std::size_t steps = 2000;
  std::size_t batch = 8;
  double lr = 1e-3;
  std::string ablate;
  std::uint32_t points_per_ray = 4;
  double alpha = 1.5;
  double cam_noise = 0.0;
  std::size_t checkpoint_every = 0;
  std::string init;
  std::string resume;
};

RefinementPlan plan_for(const TierSizes& sizes, double alpha) {
  if (sizes.gt2 == 0 || sizes.gt3 % sizes.gt2 != 0) {
    throw UsageError("dataset tiers need gt3 to be a multiple of gt2");
  }
  RefinementPlan plan;
  plan.fps_count = sizes.gt2;
  plan.split_factors = {1, static_cast<std::uint32_t>(sizes.gt3 / sizes.gt2)};
  plan.constraint.alpha = alpha;
  plan.constraint.layer_count = 2;
  return plan;
}

void cmd_train(const TrainFlags& f, const GlobalFlags& g, std::ostream& out) {
  std::vector<TrainStage> stages;
  if (f.stage == "all") stages = {TrainStage::OffsetPretrain, TrainStage::RefinePretrain, TrainStage::Joint};
  else if (f.stage == "1" || f.stage == "2" || f.stage == "3") stages = {parse_stage(f.stage)};
  else throw UsageError("--stage must be 1, 2, 3 or all");
  if (f.steps < 1) throw UsageError("--steps must be >= 1");
  if (f.batch < 1) throw UsageError("--batch must be >= 1");
  if (!(f.lr > 0.0)) throw UsageError("--lr must be positive");
  if (!(f.cam_noise >= 0.0)) throw UsageError("--cam-noise must be >= 0");
  if (f.points_per_ray < 1) throw UsageError("--points-per-ray must be >= 1");
  if (!(f.alpha > 1.0)) throw UsageError("--alpha must exceed 1");
  if (!f.ablate.empty() && f.ablate != "no-adjustment" && f.ablate != "no-constraint") {
    throw UsageError("--ablate must be no-adjustment or no-constraint");
  }
  if (!f.init.empty() && !f.resume.empty()) throw UsageError("--init and --resume are exclusive");

  const fs::path manifest = manifest_in(f.data);
  require_file(manifest, "dataset manifest");
  if (!f.init.empty()) require_file(f.init, "checkpoint");
  if (!f.resume.empty()) require_file(f.resume, "checkpoint");

  const Manifest m = load_manifest(manifest);
  ModelConfig config;
  config.points_per_ray = f.points_per_ray;
  config.use_adjustment = f.ablate != "no-adjustment";
  config.use_constraint = f.ablate != "no-constraint";
  if (config.points_per_ray * m.sizes.partial < m.sizes.gt2) {
    throw UsageError("--points-per-ray too small for the dataset tiers");
  }
  std::optional<CompletionModel> model;
  ModelState state;
  std::size_t first_stage = 0;
  if (!f.resume.empty()) {
    auto [mod, st] = from_checkpoint(load_checkpoint(f.resume));
    model.emplace(std::move(mod));
    state = std::move(st);
    const auto it = std::find(stages.begin(), stages.end(), state.stage);
    if (it == stages.end()) throw UsageError("checkpoint stage is not part of --stage " + f.stage);
    first_stage = static_cast<std::size_t>(it - stages.begin());
  } else if (!f.init.empty()) {
    auto [mod, st] = from_checkpoint(load_checkpoint(f.init));
    model.emplace(std::move(mod));
    state = std::move(st);
    state.step = 0;
    // Forces a fresh optimizer in run_stage even if the stage matches.
    state.stage = stages.front() == TrainStage::Joint ? TrainStage::OffsetPretrain : TrainStage::Joint;
  } else {
    model.emplace(config, plan_for(m.sizes, f.alpha));
    state = ModelState::fresh(*model, g.seed);
    state.stage = stages.front() == TrainStage::Joint ? TrainStage::OffsetPretrain : TrainStage::Joint;
  }

  const auto samples = prepare_samples(load_samples(manifest, "train"));
  if (samples.empty()) throw Error(ErrorKind::DatasetEmpty, "no training samples in " + manifest.string());

  std::error_code ec;
  fs::create_directories(f.out, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create " + f.out + ": " + ec.message());
  const fs::path log_path = fs::path(f.out) / "train_log.jsonl";
  std::ofstream log(log_path, f.resume.empty() ? std::ios::trunc : std::ios::app);
  if (!log) throw Error(ErrorKind::Io, "cannot open " + log_path.string());

  for (std::size_t s = first_stage; s < stages.size(); ++s) {
    TrainConfig tc;
    tc.stage = stages[s];
    tc.lr = f.lr;
    tc.steps = f.steps;
    tc.batch = f.batch;
    tc.seed = g.seed;
    tc.threads = g.threads;
    tc.cam_noise = f.cam_noise;
    tc.checkpoint_every = f.checkpoint_every;
    tc.checkpoint_dir = f.out;
    double first = 0.0, last = 0.0;
    bool have_first = false;
    run_stage(*model, tc, samples, state, [&](const LogEntry& e) {
      log << to_json_line(e) << "\n";
      if (!have_first) first = e.loss;
      have_first = true;
      last = e.loss;
    });
    log.flush();
    if (!log) throw Error(ErrorKind::Io, "write failed for " + log_path.string());
    out << to_string(tc.stage) << ": " << tc.steps << " steps, loss " << first << " -> " << last << ", checkpoint "
        << checkpoint_path(f.out, tc.stage, tc.steps).string() << "\n";
  }
}

// ---------------------------------------------------------------- complete

struct CompleteFlags {
  std::string ckpt;
  std::string input;
  std::string cam;
  std::string out;
  std::string manifest;
  std::string split = "test";
  std::string out_dir;
  bool emit_trace = false;
  double cam_noise = 0.0;
};

void write_outputs(const CompletionTrace& t, const fs::path& stem, bool emit_trace) {
  if (emit_trace) {
    const std::string base = stem.string();
    write_cloud(t.p_first, base + "_ofirst.ply");
    write_cloud(t.p_initial, base + "_oinit.ply");
    write_cloud(t.p_mid, base + "_mid.ply");
    write_cloud(t.p_final, base + "_final.ply");
  } else {
    write_cloud(t.p_final, stem.string() + ".ply");
  }
}

void cmd_complete(const CompleteFlags& f, const GlobalFlags& g, std::ostream& out) {
  const bool batch = !f.manifest.empty();
  if (batch == !f.input.empty()) throw UsageError("give exactly one of --input or --manifest");
  if (!batch && (f.cam.empty() || f.out.empty())) throw UsageError("--input needs --cam and --out");
  if (batch && f.out_dir.empty()) throw UsageError("--manifest needs --out-dir");
  if (!(f.cam_noise >= 0.0)) throw UsageError("--cam-noise must be >= 0");
  const Point3 cam = batch ? Point3{} : parse_cam(f.cam);
  require_file(f.ckpt, "checkpoint");
  const fs::path manifest = batch ? manifest_in(f.manifest) : fs::path();
  if (batch) require_file(manifest, "dataset manifest");
  else require_file(f.input, "input scan");

  const auto [model, state] = from_checkpoint(load_checkpoint(f.ckpt));
  if (!batch) {
    const PointCloud scan = read_cloud(f.input);
    const Point3 c = perturbed_camera(cam, f.cam_noise, g.seed, 0);
    const auto trace = complete(model, scan, c, state.predictor, state.refiner);
    fs::path stem = f.out;
    if (stem.extension() == ".ply") stem.replace_extension();
    if (stem.has_parent_path()) fs::create_directories(stem.parent_path());
    write_outputs(trace, stem, f.emit_trace);
    out << "completed " << scan.size() << " -> " << trace.p_final.size() << " points\n";
    return;
  }

  const Manifest m = load_manifest(manifest);
  std::vector<const ManifestEntry*> entries;
  for (const auto& e : m.samples) {
    if (f.split.empty() || e.split == f.split) entries.push_back(&e);
  }
  fs::create_directories(f.out_dir);
  const fs::path dir = manifest.parent_path();
  parallel_for(entries.size(), g.threads, [&](std::size_t i) {
    const ManifestEntry& e = *entries[i];
    const PointCloud scan = read_cloud(dir / e.partial);
    const Point3 c = perturbed_camera(e.cam, f.cam_noise, g.seed, e.shape_seed);
    const auto trace = complete(model, scan, c, state.predictor, state.refiner);
    write_outputs(trace, fs::path(f.out_dir) / e.sample_id, f.emit_trace);
  });
  out << "completed " << entries.size() << " samples into " << f.out_dir << "\n";
}

// -------------------------------------------------------------------- eval

struct EvalFlags {
  std::string manifest;
  std::string results;
  std::string suffix;
  std::string split = "test";
  std::string out;
  bool baseline = false;
  double radius = kDefaultScdRadius;
  double tau = kDefaultFscoreTau;
  double temp = kDefaultDcdTemp;
};

json report_json(const MetricsReport& r) {
  json j;
  j["sample_id"] = r.sample_id;
  j["category"] = r.category;
  j["cd"] = r.cd;
  j["fscore"] = r.fscore;
  j["dcd"] = r.dcd;
  j["scd1"] = r.scd1;
  j["scd2"] = r.scd2;
  j["scd1_empty"] = r.scd1_empty;
  j["scd2_empty"] = r.scd2_empty;
  j["result_count"] = r.result_count;
  j["gt_count"] = r.gt_count;
  j["gt1_count"] = r.gt1_count;
  j["gt2_count"] = r.gt2_count;
  return j;
}

struct Aggregate {
  std::size_t count = 0;
  double cd = 0, fscore = 0, dcd = 0, scd1 = 0, scd2 = 0;
  std::size_t scd1_n = 0, scd2_n = 0;

  void add(const MetricsReport& r) {
    ++count;
    cd += r.cd;
    fscore += r.fscore;
    dcd += r.dcd;
    if (!r.scd1_empty) scd1 += r.scd1, ++scd1_n;
    if (!r.scd2_empty) scd2 += r.scd2, ++scd2_n;
  }

  // CD and SCD are reported times 1e4.
  json to_json() const {
    const double n = static_cast<double>(std::max<std::size_t>(count, 1));
    json j;
    j["count"] = count;
    j["cd_x1e4"] = cd / n * 1e4;
    j["fscore"] = fscore / n;
    j["dcd"] = dcd / n;
    // Means over samples whose split side is non-empty; null when there are none.
    j["scd1_x1e4"] = scd1_n ? json(scd1 / static_cast<double>(scd1_n) * 1e4) : json(nullptr);
    j["scd2_x1e4"] = scd2_n ? json(scd2 / static_cast<double>(scd2_n) * 1e4) : json(nullptr);
    j["scd1_count"] = scd1_n;
    j["scd2_count"] = scd2_n;
    return j;
  }
};

void cmd_eval(const EvalFlags& f, const GlobalFlags& g, std::ostream& out) {
  if (!(f.radius > 0.0)) throw UsageError("--radius must be positive");
  if (!(f.tau > 0.0)) throw UsageError("--tau must be positive");
  if (!(f.temp > 0.0)) throw UsageError("--temp must be positive");
  if (f.baseline == !f.results.empty()) throw UsageError("give exactly one of --results or --baseline");
  const fs::path manifest = manifest_in(f.manifest);
  require_file(manifest, "dataset manifest");
  const Manifest m = load_manifest(manifest);
  const fs::path dir = manifest.parent_path();

  std::vector<const ManifestEntry*> entries;
  for (const auto& e : m.samples) {
    if (f.split.empty() || e.split == f.split) entries.push_back(&e);
  }
  // Resolve every input before computing anything.
  for (const auto* e : entries) {
    require_file(dir / e->partial, "partial scan");
    require_file(dir / e->gt3, "ground truth");
    if (!f.baseline) require_file(fs::path(f.results) / (e->sample_id + f.suffix + ".ply"), "result");
  }

  MetricsOptions opt;
  opt.radius = f.radius;
  opt.tau = f.tau;
  opt.temp = f.temp;
  std::vector<MetricsReport> reports(entries.size());
  parallel_for(entries.size(), g.threads, [&](std::size_t i) {
    const ManifestEntry& e = *entries[i];
    const PointCloud partial = read_cloud(dir / e.partial);
    const PointCloud gt = read_cloud(dir / e.gt3);
    const PointCloud result = f.baseline ? baseline_upsample(partial, gt.size())
                                         : read_cloud(fs::path(f.results) / (e.sample_id + f.suffix + ".ply"));
    reports[i] = evaluate(result, gt, partial, opt);
    reports[i].sample_id = e.sample_id;
    reports[i].category = e.category;
  });

  std::map<std::string, Aggregate> by_category;
  Aggregate overall;
  json per_sample = json::array();
  for (const auto& r : reports) {
    by_category[r.category].add(r);
    overall.add(r);
    per_sample.push_back(report_json(r));
  }
  json summary;
  summary["source"] = f.baseline ? std::string("baseline") : f.results;
  summary["radius"] = f.radius;
  summary["tau"] = f.tau;
  summary["temp"] = f.temp;
  json cats = json::object();
  for (const auto& [name, agg] : by_category) cats[name] = agg.to_json();
  summary["categories"] = std::move(cats);
  summary["overall"] = overall.to_json();

  if (!f.out.empty()) {
    fs::create_directories(f.out);
    for (const auto& j : per_sample) {
      std::ofstream o(fs::path(f.out) / (j["sample_id"].get<std::string>() + ".json"));
      o << j.dump(2) << "\n";
      if (!o) throw Error(ErrorKind::Io, "cannot write report for " + j["sample_id"].get<std::string>());
    }
    std::ofstream o(fs::path(f.out) / "summary.json");
    o << summary.dump(2) << "\n";
    if (!o) throw Error(ErrorKind::Io, "cannot write summary.json");
  }

  char line[160];
  auto cell = [](const json& v) {
    char buf[32];
    if (v.is_null()) return std::string("n/a");
    std::snprintf(buf, sizeof buf, "%.3f", v.get<double>());
    return std::string(buf);
  };
  std::snprintf(line, sizeof line, "%-10s %5s %9s %8s %8s %9s %9s\n", "category", "n", "CDx1e4", "F", "DCD",
                "SCD1x1e4", "SCD2x1e4");
  out << line;
  auto row = [&](const std::string& name, const json& a) {
    std::snprintf(line, sizeof line, "%-10s %5zu %9.3f %8.3f %8.3f %9s %9s\n", name.c_str(),
                  a["count"].get<std::size_t>(), a["cd_x1e4"].get<double>(), a["fscore"].get<double>(),
                  a["dcd"].get<double>(), cell(a["scd1_x1e4"]).c_str(), cell(a["scd2_x1e4"]).c_str());
    out << line;
  };
  for (const auto& [name, a] : summary["categories"].items()) row(name, a);
  row("overall", summary["overall"]);
}

// ------------------------------------------------------------ config file

std::string json_scalar(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : ",") + json_scalar(x);
    return s;
  }
  if (v.is_number_float()) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v.get<double>());
    return buf;
  }
  return v.dump();
}

// Config keys become flags placed before the command-line flags, so explicit
// flags win under the take-last policy.
std::vector<std::string> config_args(const fs::path& path, const CLI::App& app, const CLI::App* sub) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  std::vector<std::string> args;
  for (const auto& [key, value] : j.items()) {
    if (key == "config") continue;
    const std::string flag = "--" + key;
    const CLI::Option* opt = sub ? sub->get_option_no_throw(flag) : nullptr;
    if (!opt) opt = app.get_option_no_throw(flag);
    if (!opt) {
      bool elsewhere = false;
      for (const auto* other : app.get_subcommands([](const CLI::App*) { return true; })) {
        elsewhere = elsewhere || other->get_option_no_throw(flag) != nullptr;
      }
      if (!elsewhere) throw UsageError("config: unknown key '" + key + "'");
      continue;
    }
    if (opt->get_type_size() == 0) {
      if (!value.is_boolean()) throw UsageError("config: '" + key + "' must be true or false");
      if (value.get<bool>()) args.push_back(flag);
      continue;
    }
    args.push_back(flag);
    args.push_back(json_scalar(value));
  }
  return args;
}

int map_error(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument:
    case ErrorKind::DegenerateRay:
    case ErrorKind::CameraInside:
    case ErrorKind::NegativeOffset:
      return kExitUsage;
    default:
      return kExitRuntime;
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Ray-constrained point cloud completion"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags g;
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads (1 is deterministic)")->capture_default_str();
  app.add_option("--config", g.config, "JSON file whose keys are flag names");

  GenFlags gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic dataset");
  gen_cmd->add_option("--count", gen.count, "Number of samples")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();
  gen_cmd->add_option("--scale-divisor", gen.divisor, "Tier sizes are the full sizes divided by this")
      ->capture_default_str();
  gen_cmd->add_flag("--ascii", gen.ascii, "Write ASCII PLY");

  TrainFlags tr;
  auto* train_cmd = app.add_subcommand("train", "Train the completion networks");
  train_cmd->add_option("--data", tr.data, "Dataset directory or manifest")->required();
  train_cmd->add_option("--out", tr.out, "Checkpoint and log directory")->required();
  train_cmd->add_option("--stage", tr.stage, "1, 2, 3 or all")->capture_default_str();
  train_cmd->add_option("--steps", tr.steps, "Steps per stage")->capture_default_str();
  train_cmd->add_option("--batch", tr.batch, "Samples per step")->capture_default_str();
  train_cmd->add_option("--lr", tr.lr, "Base learning rate")->capture_default_str();
  train_cmd->add_option("--ablate", tr.ablate, "no-adjustment or no-constraint");
  train_cmd->add_option("--points-per-ray", tr.points_per_ray, "Duplicates per scan point")->capture_default_str();
  train_cmd->add_option("--alpha", tr.alpha, "Constraint decay per refinement layer")->capture_default_str();
  train_cmd->add_option("--cam-noise", tr.cam_noise, "Camera perturbation std-dev")->capture_default_str();
  train_cmd->add_option("--checkpoint-every", tr.checkpoint_every, "Extra checkpoint period (0 for none)");
  train_cmd->add_option("--init", tr.init, "Start from this checkpoint's parameters");
  train_cmd->add_option("--resume", tr.resume, "Continue an interrupted run from this checkpoint");

  CompleteFlags cf;
  auto* complete_cmd = app.add_subcommand("complete", "Complete partial scans");
  complete_cmd->add_option("--ckpt", cf.ckpt, "Checkpoint")->required();
  complete_cmd->add_option("--input", cf.input, "Single scan (.ply or .xyz)");
  complete_cmd->add_option("--cam", cf.cam, "Camera position x,y,z");
  complete_cmd->add_option("--out", cf.out, "Output path for a single scan");
  complete_cmd->add_option("--manifest", cf.manifest, "Dataset directory or manifest for batch mode");
  complete_cmd->add_option("--split", cf.split, "Split to complete in batch mode")->capture_default_str();
  complete_cmd->add_option("--out-dir", cf.out_dir, "Output directory in batch mode");
  complete_cmd->add_flag("--emit-trace", cf.emit_trace, "Write _ofirst, _oinit, _mid and _final clouds");
  complete_cmd->add_option("--cam-noise", cf.cam_noise, "Camera perturbation std-dev")->capture_default_str();

  EvalFlags ev;
  auto* eval_cmd = app.add_subcommand("eval", "Score completions against ground truth");
  eval_cmd->add_option("--manifest", ev.manifest, "Dataset directory or manifest")->required();
  eval_cmd->add_option("--results", ev.results, "Directory of completed clouds");
  eval_cmd->add_option("--suffix", ev.suffix, "Result file suffix before .ply");
  eval_cmd->add_option("--split", ev.split, "Split to evaluate")->capture_default_str();
  eval_cmd->add_option("--out", ev.out, "Directory for per-sample reports and summary.json");
  eval_cmd->add_flag("--baseline", ev.baseline, "Score the duplicated partial scan instead of results");
  eval_cmd->add_option("--radius", ev.radius, "SCD split radius")->capture_default_str();
  eval_cmd->add_option("--tau", ev.tau, "F-score threshold")->capture_default_str();
  eval_cmd->add_option("--temp", ev.temp, "DCD temperature")->capture_default_str();

  try {
    std::vector<std::string> argv = args;
    // A config file is expanded into flags right after the subcommand name.
    const auto cfg = std::find(argv.begin(), argv.end(), "--config");
    if (cfg != argv.end() && cfg + 1 != argv.end()) {
      const fs::path cfg_path = *(cfg + 1);
      CLI::App* sub = nullptr;
      auto pos = argv.end();
      for (auto it = argv.begin(); it != argv.end() && !sub; ++it) {
        for (auto* s : {gen_cmd, train_cmd, complete_cmd, eval_cmd}) {
          if (*it == s->get_name()) sub = s, pos = it + 1;
        }
      }
      const auto extra = config_args(cfg_path, app, sub);
      if (pos == argv.end() && !sub) pos = argv.begin();
      argv.insert(pos, extra.begin(), extra.end());
    }
    std::vector<std::string> reversed(argv.rbegin(), argv.rend());
    try {
      app.parse(reversed);
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e, out, err);
      return code == 0 ? kExitOk : kExitUsage;
    }
    if (!(g.threads >= 1)) throw UsageError("--threads must be >= 1");
    if (*gen_cmd) cmd_gen_data(gen, g, out);
    else if (*train_cmd) cmd_train(tr, g, out);
    else if (*complete_cmd) cmd_complete(cf, g, out);
    else if (*eval_cmd) cmd_eval(ev, g, out);
    return kExitOk;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return map_error(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace raycomp
