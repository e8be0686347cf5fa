#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "raycomp/completion.hpp"
#include "raycomp/data.hpp"
#include "raycomp/metrics.hpp"
#include "raycomp/net.hpp"
#include "raycomp/spatial.hpp"

namespace raycomp {

// Mean-mode Chamfer between a and b with the gradient w.r.t. a's points.
struct ChamferGrad {
  double value = 0.0;
  Matrix d_a;  // |a| x 3
};

ChamferGrad chamfer_with_grad(const PointCloud& a, const PointCloud& b, const SpatialIndex& b_index);
ChamferGrad chamfer_with_grad(const PointCloud& a, const PointCloud& b);

double loss_stage1(const CompletionTrace& trace, const PointCloud& gt1);
double loss_stage2(const CompletionTrace& trace, const PointCloud& gt2, const PointCloud& gt3);

enum class TrainStage { OffsetPretrain, RefinePretrain, Joint };

std::string_view to_string(TrainStage stage);
TrainStage parse_stage(std::string_view name);

struct TrainConfig {
  TrainStage stage = TrainStage::OffsetPretrain;
  double lr = 1e-3;
  std::size_t steps = 2000;
  std::size_t batch = 8;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  double cam_noise = 0.0;  // std-dev of the camera perturbation, 0 disables
  double clip_norm = 1.0;
  std::size_t checkpoint_every = 0;  // 0 writes only the last step
  std::filesystem::path checkpoint_dir;  // empty disables checkpoints
};

void validate(const TrainConfig& config);

// Cosine-decayed rate for 0-based step `step` of `steps`.
double cosine_lr(double base, std::size_t step, std::size_t steps);

// Training sample with cached ground-truth search structures.
struct TrainSample {
  std::string sample_id;
  PointCloud partial;
  Point3 cam;
  PointCloud gt1;
  PointCloud gt2;
  PointCloud gt3;
  std::shared_ptr<const SpatialIndex> gt1_index;
  std::shared_ptr<const SpatialIndex> gt2_index;
  std::shared_ptr<const SpatialIndex> gt3_index;
};

std::vector<TrainSample> prepare_samples(std::vector<Sample> samples);

// Parameters and optimizer state of both networks.
struct ModelState {
  NetParams predictor;
  NetParams refiner;
  AdamState predictor_adam;
  AdamState refiner_adam;
  TrainStage stage = TrainStage::OffsetPretrain;
  std::size_t step = 0;  // completed steps of `stage`

  static ModelState fresh(const CompletionModel& model, std::uint64_t seed);
};

Checkpoint to_checkpoint(const CompletionModel& model, const ModelState& state);
std::pair<CompletionModel, ModelState> from_checkpoint(const Checkpoint& ckpt);

struct LogEntry {
  std::size_t step = 0;
  TrainStage stage = TrainStage::OffsetPretrain;
  double loss = 0.0;
  double lr = 0.0;
};

std::string to_json_line(const LogEntry& e);

using LogSink = std::function<void(const LogEntry&)>;

// Camera used for a sample at a given step; identical to `cam` when noise is 0.
Point3 perturbed_camera(const Point3& cam, double sigma, std::uint64_t seed, std::uint64_t salt);

// Loss and parameter gradients for one sample under the stage's loss and freezing rules.
struct SampleGradient {
  double loss = 0.0;
  std::vector<double> predictor;
  std::vector<double> refiner;
};

SampleGradient sample_gradient(const CompletionModel& model, const ModelState& state, TrainStage stage,
                               const TrainSample& sample, const Point3& cam);

// Advances `state` until config.steps steps of config.stage are done. A state
// holding a different stage is reset to step 0 with fresh optimizer moments.
// A zero-step config leaves the state untouched.
void run_stage(const CompletionModel& model, const TrainConfig& config, std::span<const TrainSample> dataset,
               ModelState& state, const LogSink& log = {});

std::filesystem::path checkpoint_path(const std::filesystem::path& dir, TrainStage stage, std::size_t step);

}  // namespace raycomp
