#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "raycomp/error.hpp"

namespace raycomp {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::RowVectorXd;

enum class Activation : std::uint8_t { None = 0, Relu = 1, Tanh = 2 };

// Weights are stored out x in, row-major, followed by the bias.
struct LayerSpec {
  Activation activation = Activation::None;
  std::uint32_t in = 0;
  std::uint32_t out = 0;

  std::size_t param_count() const noexcept { return std::size_t{in} * out + out; }
  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

// Flat parameter vector. Values are kept exactly representable as float32
// so that checkpoints round-trip bit for bit.
struct NetParams {
  std::vector<double> values;
  std::vector<LayerSpec> layout;
  std::uint64_t rng_seed = 0;

  std::size_t size() const noexcept { return values.size(); }
};

struct Gradient {
  std::vector<double> values;

  explicit Gradient(std::size_t n = 0) : values(n, 0.0) {}
  std::size_t size() const noexcept { return values.size(); }
};

std::size_t layout_param_count(std::span<const LayerSpec> layout);

double round_to_float(double v);

// relu'(0) is taken as 1 so that zero-initialized relu heads still train.
Matrix activate(Activation act, const Matrix& pre);

// Single affine layer on one vector.
Eigen::VectorXd dense_forward(std::span<const double> layer_params, const LayerSpec& spec,
                              const Eigen::VectorXd& input);

struct MlpTape {
  std::vector<Matrix> inputs;
  std::vector<Matrix> pre;
  std::vector<Matrix> post;
};

// A contiguous run of dense layers within a parameter vector. Rows of the
// input matrix are independent elements sharing the weights.
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::vector<LayerSpec> layers, std::size_t offset);

  Matrix forward(std::span<const double> params, const Matrix& input, MlpTape* tape = nullptr) const;

  // Accumulates parameter gradients into grad (full parameter vector) and
  // returns the gradient with respect to the input.
  Matrix backward(std::span<const double> params, const MlpTape& tape, const Matrix& d_out,
                  std::span<double> grad) const;

  const std::vector<LayerSpec>& layers() const noexcept { return layers_; }
  std::size_t offset() const noexcept { return offset_; }
  std::size_t param_count() const noexcept { return layout_param_count(layers_); }
  std::size_t in_width() const { return layers_.front().in; }
  std::size_t out_width() const { return layers_.back().out; }

 private:
  std::vector<LayerSpec> layers_;
  std::vector<std::size_t> layer_offsets_;
  std::size_t offset_ = 0;
};

struct SetEncoding {
  RowVector global;
  Matrix per_element;
  std::vector<Eigen::Index> argmax;  // row index that won each column
  MlpTape tape;
};

// Shared MLP per element followed by a coordinate-wise max over elements.
class SetEncoder {
 public:
  SetEncoder() = default;
  explicit SetEncoder(Mlp mlp) : mlp_(std::move(mlp)) {}

  SetEncoding encode(std::span<const double> params, const Matrix& elements) const;

  // d_global flows back through the argmax rows; d_per_element may be empty.
  Matrix backward(std::span<const double> params, const SetEncoding& enc, const RowVector& d_global,
                  const Matrix* d_per_element, std::span<double> grad) const;

  const Mlp& mlp() const noexcept { return mlp_; }

 private:
  Mlp mlp_;
};

// Appends layers to a layout and hands back Mlp views into it.
class LayoutBuilder {
 public:
  Mlp add(std::initializer_list<std::uint32_t> widths, Activation hidden, Activation last);

  const std::vector<LayerSpec>& layout() const noexcept { return layout_; }
  std::size_t param_count() const noexcept { return offset_; }

 private:
  std::vector<LayerSpec> layout_;
  std::size_t offset_ = 0;
};

// Xavier-uniform weights, zero biases. Layers listed in zero_layers get all-zero weights.
NetParams initialize_params(std::vector<LayerSpec> layout, std::uint64_t seed,
                            std::span<const std::size_t> zero_layers = {});

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;

  static AdamState zeros(std::size_t n) { return {std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), 0}; }
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

// One Adam update. Parameters and moments are rounded to float32 after the update.
NetParams adam_step(const NetParams& params, const Gradient& grad, double lr, AdamState& state);

// Rescales grad in place so its L2 norm is at most max_norm; returns the pre-clip norm.
double clip_global_norm(Gradient& grad, double max_norm);

struct CheckpointNet {
  std::string name;
  NetParams params;
  std::optional<AdamState> adam;
};

struct Checkpoint {
  std::uint32_t format_version = 1;
  std::uint64_t step = 0;
  std::string meta;  // JSON text describing model configuration
  std::vector<CheckpointNet> nets;

  const CheckpointNet& net(const std::string& name) const;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

}  // namespace raycomp
