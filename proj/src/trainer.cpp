#include "raycomp/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <thread>

#include "json.hpp"
#include "rng.hpp"

namespace raycomp {

ChamferGrad chamfer_with_grad(const PointCloud& a, const PointCloud& b, const SpatialIndex& b_index) {
  if (a.empty() || b.empty()) throw Error(ErrorKind::EmptyCloud, "chamfer loss on an empty cloud");
  const SpatialIndex a_index(a);
  const double inv_a = 1.0 / static_cast<double>(a.size());
  const double inv_b = 1.0 / static_cast<double>(b.size());
  ChamferGrad out;
  out.d_a = Matrix::Zero(static_cast<Eigen::Index>(a.size()), 3);
  double ab = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Neighbor nb = b_index.nearest(a[i]);
    ab += nb.sq_dist;
    const Vec3 diff = a[i] - b[nb.id];
    for (int d = 0; d < 3; ++d) out.d_a(static_cast<Eigen::Index>(i), d) += 2.0 * inv_a * diff[d];
  }
  double ba = 0.0;
  for (std::size_t j = 0; j < b.size(); ++j) {
    const Neighbor na = a_index.nearest(b[j]);
    ba += na.sq_dist;
    const Vec3 diff = a[na.id] - b[j];
    for (int d = 0; d < 3; ++d) out.d_a(static_cast<Eigen::Index>(na.id), d) += 2.0 * inv_b * diff[d];
  }
  out.value = ab / static_cast<double>(a.size()) + ba / static_cast<double>(b.size());
  return out;
}

ChamferGrad chamfer_with_grad(const PointCloud& a, const PointCloud& b) {
  if (b.empty()) throw Error(ErrorKind::EmptyCloud, "chamfer loss on an empty cloud");
  const SpatialIndex b_index(b);
  return chamfer_with_grad(a, b, b_index);
}

double loss_stage1(const CompletionTrace& trace, const PointCloud& gt1) {
  return chamfer(trace.p_first, gt1) + chamfer(trace.p_initial, gt1);
}

double loss_stage2(const CompletionTrace& trace, const PointCloud& gt2, const PointCloud& gt3) {
  return chamfer(trace.p_mid, gt2) + chamfer(trace.p_final, gt3);
}

std::string_view to_string(TrainStage stage) {
  switch (stage) {
    case TrainStage::OffsetPretrain: return "offset_pretrain";
    case TrainStage::RefinePretrain: return "refine_pretrain";
    case TrainStage::Joint: return "joint";
  }
  return "unknown";
}

TrainStage parse_stage(std::string_view name) {
  if (name == "offset_pretrain" || name == "1") return TrainStage::OffsetPretrain;
  if (name == "refine_pretrain" || name == "2") return TrainStage::RefinePretrain;
  if (name == "joint" || name == "3") return TrainStage::Joint;
  throw Error(ErrorKind::InvalidArgument, "unknown stage '" + std::string(name) + "'");
}

void validate(const TrainConfig& config) {
  if (config.steps < 1) throw Error(ErrorKind::InvalidArgument, "steps must be >= 1");
  if (config.batch < 1) throw Error(ErrorKind::InvalidArgument, "batch must be >= 1");
  if (!(config.lr > 0.0) || !std::isfinite(config.lr)) throw Error(ErrorKind::InvalidArgument, "lr must be positive");
  if (!(config.cam_noise >= 0.0)) throw Error(ErrorKind::InvalidArgument, "cam_noise must be >= 0");
  if (!(config.clip_norm > 0.0)) throw Error(ErrorKind::InvalidArgument, "clip_norm must be positive");
}

double cosine_lr(double base, std::size_t step, std::size_t steps) {
  if (steps == 0) return base;
  const double t = static_cast<double>(step) / static_cast<double>(steps);
  return base * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

std::vector<TrainSample> prepare_samples(std::vector<Sample> samples) {
  std::vector<TrainSample> out;
  out.reserve(samples.size());
  for (auto& s : samples) {
    TrainSample t;
    t.sample_id = std::move(s.sample_id);
    t.partial = std::move(s.partial);
    t.cam = s.cam;
    t.gt1 = std::move(s.gt1);
    t.gt2 = std::move(s.gt2);
    t.gt3 = std::move(s.gt3);
    t.gt1_index = std::make_shared<SpatialIndex>(t.gt1);
    t.gt2_index = std::make_shared<SpatialIndex>(t.gt2);
    t.gt3_index = std::make_shared<SpatialIndex>(t.gt3);
    out.push_back(std::move(t));
  }
  return out;
}

ModelState ModelState::fresh(const CompletionModel& model, std::uint64_t seed) {
  ModelState s;
  s.predictor = model.offset_network().initialize(splitmix64(seed ^ 0x70726564ULL));
  s.refiner = model.refinement_network().initialize(splitmix64(seed ^ 0x72656669ULL));
  s.predictor_adam = AdamState::zeros(s.predictor.size());
  s.refiner_adam = AdamState::zeros(s.refiner.size());
  return s;
}

Checkpoint to_checkpoint(const CompletionModel& model, const ModelState& state) {
  nlohmann::ordered_json meta;
  meta["model"] = nlohmann::ordered_json::parse(model.meta_json());
  meta["stage"] = std::string(to_string(state.stage));
  Checkpoint c;
  c.step = state.step;
  c.meta = meta.dump();
  c.nets.push_back({"predictor", state.predictor, state.predictor_adam});
  c.nets.push_back({"refiner", state.refiner, state.refiner_adam});
  return c;
}

std::pair<CompletionModel, ModelState> from_checkpoint(const Checkpoint& ckpt) {
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(ckpt.meta);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("checkpoint metadata: ") + e.what());
  }
  if (!meta.contains("model") || !meta.contains("stage")) {
    throw Error(ErrorKind::ParseError, "checkpoint metadata lacks model or stage");
  }
  CompletionModel model = CompletionModel::from_meta_json(meta["model"].dump());
  ModelState s;
  s.stage = parse_stage(meta["stage"].get<std::string>());
  s.step = ckpt.step;
  const auto& p = ckpt.net("predictor");
  const auto& r = ckpt.net("refiner");
  if (p.params.layout != model.offset_network().layout() || r.params.layout != model.refinement_network().layout()) {
    throw Error(ErrorKind::ShapeMismatch, "checkpoint layout does not match its model metadata");
  }
  s.predictor = p.params;
  s.refiner = r.params;
  s.predictor_adam = p.adam ? *p.adam : AdamState::zeros(s.predictor.size());
  s.refiner_adam = r.adam ? *r.adam : AdamState::zeros(s.refiner.size());
  return {std::move(model), std::move(s)};
}

std::string to_json_line(const LogEntry& e) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "{\"step\":%zu,\"stage\":\"%s\",\"loss\":%.17g,\"lr\":%.17g}", e.step,
                std::string(to_string(e.stage)).c_str(), e.loss, e.lr);
  return buf;
}

Point3 perturbed_camera(const Point3& cam, double sigma, std::uint64_t seed, std::uint64_t salt) {
  if (sigma == 0.0) return cam;
  Rng rng(splitmix64(seed ^ splitmix64(salt)));
  Point3 out = cam;
  for (std::size_t d = 0; d < 3; ++d) {
    // Box-Muller keeps the draw independent of the standard library's distributions.
    const double u1 = 1.0 - rng.uniform();
    const double u2 = rng.uniform();
    out[d] += sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }
  return out;
}

SampleGradient sample_gradient(const CompletionModel& model, const ModelState& state, TrainStage stage,
                               const TrainSample& sample, const Point3& cam) {
  const bool train_predictor = stage != TrainStage::RefinePretrain;
  const bool train_refiner = stage != TrainStage::OffsetPretrain;
  const bool with_refinement = stage != TrainStage::OffsetPretrain;
  const PipelinePass pass =
      run_pipeline(model, sample.partial, cam, state.predictor.values, state.refiner.values, with_refinement);

  SampleGradient out;
  StageGradients d;
  if (stage == TrainStage::OffsetPretrain) {
    auto first = chamfer_with_grad(pass.p_first, sample.gt1, *sample.gt1_index);
    auto initial = chamfer_with_grad(pass.p_initial, sample.gt1, *sample.gt1_index);
    out.loss = first.value + initial.value;
    d.p_first = std::move(first.d_a);
    d.p_initial = std::move(initial.d_a);
  } else {
    const auto& layers = pass.refine.layers;
    auto mid = chamfer_with_grad(layers.front().children, sample.gt2, *sample.gt2_index);
    auto fin = chamfer_with_grad(layers.back().children, sample.gt3, *sample.gt3_index);
    out.loss = mid.value + fin.value;
    d.p_mid = std::move(mid.d_a);
    d.p_final = std::move(fin.d_a);
  }
  if (train_predictor) out.predictor.assign(state.predictor.size(), 0.0);
  if (train_refiner) out.refiner.assign(state.refiner.size(), 0.0);
  pipeline_backward(model, pass, d, state.predictor.values, state.refiner.values, out.predictor, out.refiner);
  return out;
}

namespace {

std::uint64_t stage_salt(TrainStage stage) { return static_cast<std::uint64_t>(stage) + 1; }

std::size_t batch_index(std::uint64_t seed, TrainStage stage, std::size_t step, std::size_t k, std::size_t n) {
  std::uint64_t h = splitmix64(seed ^ splitmix64(stage_salt(stage)));
  h = splitmix64(h ^ splitmix64(step));
  h = splitmix64(h ^ k);
  return static_cast<std::size_t>(h % n);
}

}  // namespace

std::filesystem::path checkpoint_path(const std::filesystem::path& dir, TrainStage stage, std::size_t step) {
  return dir / (std::string(to_string(stage)) + "_" + std::to_string(step) + ".ckpt");
}

void run_stage(const CompletionModel& model, const TrainConfig& config, std::span<const TrainSample> dataset,
               ModelState& state, const LogSink& log) {
  if (dataset.empty()) throw Error(ErrorKind::DatasetEmpty, "no training samples");
  if (config.steps == 0) return;
  validate(config);
  if (state.stage != config.stage) {
    state.stage = config.stage;
    state.step = 0;
    state.predictor_adam = AdamState::zeros(state.predictor.size());
    state.refiner_adam = AdamState::zeros(state.refiner.size());
  }
  const bool train_predictor = config.stage != TrainStage::RefinePretrain;
  const bool train_refiner = config.stage != TrainStage::OffsetPretrain;
  const std::size_t threads = std::max<std::size_t>(1, std::min(config.threads, config.batch));

  std::vector<SampleGradient> grads(config.batch);
  std::vector<std::exception_ptr> errors(config.batch);
  while (state.step < config.steps) {
    const std::size_t step = state.step;
    std::vector<std::size_t> picks(config.batch);
    for (std::size_t k = 0; k < config.batch; ++k) picks[k] = batch_index(config.seed, config.stage, step, k, dataset.size());

    auto work = [&](std::size_t k) {
      try {
        const TrainSample& s = dataset[picks[k]];
        const Point3 cam =
            perturbed_camera(s.cam, config.cam_noise, config.seed, (std::uint64_t{step} << 20) ^ (k << 4) ^ stage_salt(config.stage));
        grads[k] = sample_gradient(model, state, config.stage, s, cam);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    };
    if (threads == 1) {
      for (std::size_t k = 0; k < config.batch; ++k) work(k);
    } else {
      std::vector<std::thread> pool;
      for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
          for (std::size_t k = t; k < config.batch; k += threads) work(k);
        });
      }
      for (auto& th : pool) th.join();
    }
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }

    // Fixed-order reduction keeps threaded runs identical to serial ones.
    const double inv = 1.0 / static_cast<double>(config.batch);
    double loss = 0.0;
    Gradient gp(train_predictor ? state.predictor.size() : 0);
    Gradient gr(train_refiner ? state.refiner.size() : 0);
    for (const auto& g : grads) {
      loss += g.loss;
      for (std::size_t i = 0; i < gp.values.size(); ++i) gp.values[i] += g.predictor[i];
      for (std::size_t i = 0; i < gr.values.size(); ++i) gr.values[i] += g.refiner[i];
    }
    loss *= inv;
    for (auto& v : gp.values) v *= inv;
    for (auto& v : gr.values) v *= inv;

    // One clip over the trainable parameters of both networks.
    Gradient joint(gp.size() + gr.size());
    std::copy(gp.values.begin(), gp.values.end(), joint.values.begin());
    std::copy(gr.values.begin(), gr.values.end(), joint.values.begin() + static_cast<std::ptrdiff_t>(gp.size()));
    clip_global_norm(joint, config.clip_norm);
    std::copy(joint.values.begin(), joint.values.begin() + static_cast<std::ptrdiff_t>(gp.size()), gp.values.begin());
    std::copy(joint.values.begin() + static_cast<std::ptrdiff_t>(gp.size()), joint.values.end(), gr.values.begin());

    const double lr = cosine_lr(config.lr, step, config.steps);
    if (train_predictor) state.predictor = adam_step(state.predictor, gp, lr, state.predictor_adam);
    if (train_refiner) state.refiner = adam_step(state.refiner, gr, lr, state.refiner_adam);
    state.step = step + 1;

    if (log) log({state.step, config.stage, loss, lr});
    if (!config.checkpoint_dir.empty()) {
      const bool last = state.step == config.steps;
      const bool periodic = config.checkpoint_every > 0 && state.step % config.checkpoint_every == 0;
      if (last || periodic) save_checkpoint(to_checkpoint(model, state), checkpoint_path(config.checkpoint_dir, config.stage, state.step));
    }
  }
}

}  // namespace raycomp
