#pragma once

// Central finite-difference check of the composed networks under the training
// losses. Parameters whose perturbation changes any discrete decision (relu
// masks, max-pool winners, FPS picks, nearest-neighbor assignments) are
// skipped because the loss is not differentiable across those switches.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "raycomp/completion.hpp"
#include "raycomp/trainer.hpp"

namespace gradcheck {

using namespace raycomp;

struct Result {
  std::size_t checked = 0;
  std::size_t skipped = 0;
  double max_rel = 0.0;
};

struct Case {
  PointCloud scan;
  Point3 cam;
  TrainSample sample;
  ModelState state;
};

inline std::uint64_t nn_signature(const PointCloud& a, const PointCloud& b, std::uint64_t h) {
  const SpatialIndex ia(a), ib(b);
  for (const auto& p : a) h = h * 1099511628211ULL ^ ib.nearest(p).id;
  for (const auto& q : b) h = h * 1099511628211ULL ^ ia.nearest(q).id;
  return h;
}

inline Case make_case(const CompletionModel& model, std::uint64_t seed, std::size_t rays) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Case c;
  // Scan points on a noisy cap facing the camera.
  const double th = std::acos(u(rng)), ph = 3.14159265358979 * u(rng);
  c.cam = {1.5 * std::sin(th) * std::cos(ph), 1.5 * std::sin(th) * std::sin(ph), 1.5 * std::cos(th)};
  c.scan = oracle::random_cloud(rng, rays, 0.3);
  c.sample.partial = c.scan;
  c.sample.cam = c.cam;
  c.sample.gt1 = oracle::random_cloud(rng, 48, 0.45);
  c.sample.gt2 = oracle::random_cloud(rng, 24, 0.45);
  c.sample.gt3 = oracle::random_cloud(rng, 64, 0.45);
  c.sample.gt1_index = std::make_shared<SpatialIndex>(c.sample.gt1);
  c.sample.gt2_index = std::make_shared<SpatialIndex>(c.sample.gt2);
  c.sample.gt3_index = std::make_shared<SpatialIndex>(c.sample.gt3);
  c.state = ModelState::fresh(model, seed);
  // Move off the zero-initialized heads so every layer is active.
  std::uniform_real_distribution<double> noise(-0.08, 0.08);
  for (auto& v : c.state.predictor.values) v += noise(rng);
  for (auto& v : c.state.refiner.values) v += noise(rng);
  return c;
}

inline std::pair<double, std::uint64_t> loss_and_signature(const CompletionModel& model, const Case& c,
                                                           const std::vector<double>& pred,
                                                           const std::vector<double>& ref, TrainStage stage) {
  const bool refine = stage != TrainStage::OffsetPretrain;
  const PipelinePass pass = run_pipeline(model, c.scan, c.cam, pred, ref, refine);
  std::uint64_t sig = discrete_signature(pass);
  if (!refine) {
    sig = nn_signature(pass.p_first, c.sample.gt1, sig);
    sig = nn_signature(pass.p_initial, c.sample.gt1, sig);
    return {chamfer(pass.p_first, c.sample.gt1) + chamfer(pass.p_initial, c.sample.gt1), sig};
  }
  const auto& mid = pass.refine.layers.front().children;
  const auto& fin = pass.refine.layers.back().children;
  sig = nn_signature(mid, c.sample.gt2, sig);
  sig = nn_signature(fin, c.sample.gt3, sig);
  return {chamfer(mid, c.sample.gt2) + chamfer(fin, c.sample.gt3), sig};
}

// Checks up to `slice` parameters spread over all layers of the trainable nets.
inline Result check(const CompletionModel& model, const Case& c, TrainStage stage, std::size_t slice,
                    double h = 1e-5) {
  const SampleGradient g = sample_gradient(model, c.state, stage, c.sample, c.cam);
  const auto base = loss_and_signature(model, c, c.state.predictor.values, c.state.refiner.values, stage);

  struct Target {
    bool predictor;
    std::size_t index;
  };
  std::vector<Target> targets;
  auto spread = [&](const NetParams& p, bool is_pred, std::size_t budget) {
    std::size_t offset = 0;
    const std::size_t per_layer = std::max<std::size_t>(1, budget / p.layout.size());
    for (const auto& l : p.layout) {
      const std::size_t n = l.param_count();
      const std::size_t step = std::max<std::size_t>(1, n / per_layer);
      for (std::size_t i = 0, k = 0; i < n && k < per_layer; i += step, ++k) targets.push_back({is_pred, offset + i});
      offset += n;
    }
  };
  const bool pred = !g.predictor.empty(), ref = !g.refiner.empty();
  if (pred && ref) {
    spread(c.state.predictor, true, slice / 2);
    spread(c.state.refiner, false, slice / 2);
  } else {
    spread(pred ? c.state.predictor : c.state.refiner, pred, slice);
  }

  Result r;
  for (const auto& t : targets) {
    auto pp = c.state.predictor.values, pm = pp;
    auto rp = c.state.refiner.values, rm = rp;
    auto& plus = t.predictor ? pp : rp;
    auto& minus = t.predictor ? pm : rm;
    plus[t.index] += h;
    minus[t.index] -= h;
    const auto lp = loss_and_signature(model, c, pp, rp, stage);
    const auto lm = loss_and_signature(model, c, pm, rm, stage);
    if (lp.second != base.second || lm.second != base.second) {
      ++r.skipped;
      continue;
    }
    const double fd = (lp.first - lm.first) / (2 * h);
    const double an = t.predictor ? g.predictor[t.index] : g.refiner[t.index];
    const double rel = std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-6});
    r.max_rel = std::max(r.max_rel, rel);
    ++r.checked;
  }
  return r;
}

}  // namespace gradcheck
