#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "raycomp/geometry.hpp"
#include "raycomp/net.hpp"

namespace raycomp {

// Architecture and ablation switches shared by both networks.
struct ModelConfig {
  std::uint32_t points_per_ray = 4;
  std::uint32_t ray_hidden = 64;
  std::uint32_t ray_feature = 128;
  std::uint32_t head_hidden = 64;
  std::uint32_t scan_hidden = 32;
  std::uint32_t scan_feature = 64;
  std::uint32_t refine_enc_hidden = 32;
  std::uint32_t refine_enc_feature = 64;
  std::uint32_t refine_hidden = 64;
  bool use_adjustment = true;
  bool use_constraint = true;
  // Per-dimension bound used for every child when the constraint is disabled.
  double unconstrained_bound = 0.5;
};

struct RefinementPlan {
  std::size_t fps_count = 256;
  std::vector<std::uint32_t> split_factors = {1, 8};
  OffsetConstraint constraint;
  std::size_t fps_seed = 0;
};

void validate(const RefinementPlan& plan);

struct OffsetField {
  OffsetMatrix initial;     // O'
  OffsetMatrix adjustment;  // signed correction
  OffsetMatrix final;       // relu(initial + adjustment)
};

// Forward state of the offset networks, kept for the backward pass.
struct OffsetPass {
  Matrix ray_input;
  SetEncoding ray_encoding;
  Matrix head_input;  // per-ray feature shared by both heads
  MlpTape head_tape;
  SetEncoding scan_encoding;
  Matrix adjust_input;
  MlpTape adjust_tape;
  OffsetField field;
};

// Ray-offset prediction followed by the signed adjustment head.
class OffsetNetwork {
 public:
  explicit OffsetNetwork(const ModelConfig& config);

  NetParams initialize(std::uint64_t seed) const;
  const std::vector<LayerSpec>& layout() const noexcept { return layout_; }
  std::size_t param_count() const noexcept { return layout_param_count(layout_); }
  const ModelConfig& config() const noexcept { return config_; }

  // Fills pass.field.initial.
  OffsetPass predict(const RayBundle& rays, std::span<const double> params) const;

  // Fills adjustment and final from the first-step cloud.
  void adjust(OffsetPass& pass, const PointCloud& p_first, std::span<const double> params) const;

  // d_p_first and d_p_initial are per-point gradients (N*L x 3) of the loss.
  // d_final_extra is an additional gradient on the final offsets (may be empty).
  void backward(const OffsetPass& pass, const RayBundle& rays, const Matrix& d_p_first,
                const Matrix& d_p_initial, const OffsetMatrix* d_final_extra, std::span<const double> params,
                std::span<double> grad) const;

 private:
  ModelConfig config_;
  std::vector<LayerSpec> layout_;
  SetEncoder ray_encoder_;
  Mlp head_;
  SetEncoder scan_encoder_;
  Mlp adjust_head_;
};

struct RefineLayerPass {
  PointCloud parents;
  std::vector<double> parent_offsets;
  std::vector<double> bounds;
  Matrix input;
  MlpTape tape;
  Matrix raw;  // tanh output, parents x (3 * split)
  PointCloud children;
};

struct RefinePass {
  SetEncoding encoding;
  std::vector<std::size_t> fps_ids;
  std::vector<RefineLayerPass> layers;
};

// Offset-constrained split-and-move refinement.
class RefinementNetwork {
 public:
  RefinementNetwork(const ModelConfig& config, const RefinementPlan& plan);

  NetParams initialize(std::uint64_t seed) const;
  const std::vector<LayerSpec>& layout() const noexcept { return layout_; }
  std::size_t param_count() const noexcept { return layout_param_count(layout_); }
  const RefinementPlan& plan() const noexcept { return plan_; }

  double bound(double offset_total, int layer) const;

  // point_offsets[m] is the total ray offset of p_o[m].
  RefinePass forward(const PointCloud& p_o, std::span<const double> point_offsets,
                     std::span<const double> params) const;

  // Gradients w.r.t. each layer's children (loss terms) are given per layer;
  // returns gradients w.r.t. p_o positions and point offsets.
  void backward(const RefinePass& pass, const PointCloud& p_o, std::span<const Matrix> d_children,
                std::span<const double> params, std::span<double> grad, Matrix& d_p_o,
                std::vector<double>& d_point_offsets) const;

 private:
  ModelConfig config_;
  RefinementPlan plan_;
  std::vector<LayerSpec> layout_;
  SetEncoder encoder_;
  std::vector<Mlp> layers_;
};

struct CompletionTrace {
  PointCloud p_first;
  PointCloud p_initial;
  PointCloud p_mid;
  PointCloud p_final;
  OffsetField offsets;
};

// Both networks with their configuration; parameters live outside.
class CompletionModel {
 public:
  CompletionModel(ModelConfig config, RefinementPlan plan);

  const ModelConfig& config() const noexcept { return config_; }
  const RefinementPlan& plan() const noexcept { return plan_; }
  const OffsetNetwork& offset_network() const noexcept { return offsets_; }
  const RefinementNetwork& refinement_network() const noexcept { return refine_; }

  std::string meta_json() const;
  static CompletionModel from_meta_json(const std::string& json);

 private:
  ModelConfig config_;
  RefinementPlan plan_;
  OffsetNetwork offsets_;
  RefinementNetwork refine_;
};

// Stage-level entry points.
OffsetField predict_offsets(const OffsetNetwork& net, const RayBundle& rays, const NetParams& params);
OffsetField adjust_offsets(const OffsetNetwork& net, const OffsetField& field, const PointCloud& p_first,
                           const RayBundle& rays, const NetParams& params);
std::pair<PointCloud, PointCloud> refine(const RefinementNetwork& net, const PointCloud& p_o,
                                         const OffsetField& field, const NetParams& params);

CompletionTrace complete(const CompletionModel& model, const PointCloud& scan, const Point3& cam,
                         const NetParams& predictor, const NetParams& refiner);

// Partial scan brought to `count` points by cyclic duplication followed by FPS.
PointCloud baseline_upsample(const PointCloud& partial, std::size_t count);

// Full forward state of both networks for one sample.
struct PipelinePass {
  std::optional<RayBundle> rays;
  OffsetPass offsets;
  PointCloud p_first;
  PointCloud p_initial;
  std::vector<double> point_offsets;  // final offset of every p_initial point
  RefinePass refine;
  bool refined = false;

  CompletionTrace trace() const;
};

PipelinePass run_pipeline(const CompletionModel& model, const PointCloud& scan, const Point3& cam,
                          std::span<const double> predictor, std::span<const double> refiner,
                          bool with_refinement = true);

// Loss gradients per stage cloud; empty matrices mean "no loss term".
struct StageGradients {
  Matrix p_first;
  Matrix p_initial;
  Matrix p_mid;
  Matrix p_final;
};

// An empty gradient span skips that module (frozen).
void pipeline_backward(const CompletionModel& model, const PipelinePass& pass, const StageGradients& d,
                       std::span<const double> predictor, std::span<const double> refiner,
                       std::span<double> predictor_grad, std::span<double> refiner_grad);

// Hash of every discrete decision taken in the forward pass (relu masks,
// max-pool winners, FPS picks). Equal hashes mean the same smooth piece.
std::uint64_t discrete_signature(const PipelinePass& pass);

Matrix to_matrix(const PointCloud& cloud);

}  // namespace raycomp
