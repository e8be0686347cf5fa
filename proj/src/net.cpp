#include "raycomp/net.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <random>

namespace raycomp {

namespace {

using ConstMatrixMap = Eigen::Map<const Matrix>;
using MatrixMap = Eigen::Map<Matrix>;

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

std::size_t layout_param_count(std::span<const LayerSpec> layout) {
  std::size_t n = 0;
  for (const auto& l : layout) n += l.param_count();
  return n;
}

double round_to_float(double v) { return static_cast<double>(static_cast<float>(v)); }

Matrix activate(Activation act, const Matrix& pre) {
  switch (act) {
    case Activation::Relu: return pre.cwiseMax(0.0);
    case Activation::Tanh: return pre.array().tanh().matrix();
    case Activation::None: break;
  }
  return pre;
}

Eigen::VectorXd dense_forward(std::span<const double> layer_params, const LayerSpec& spec,
                              const Eigen::VectorXd& input) {
  if (layer_params.size() != spec.param_count()) {
    throw Error(ErrorKind::ShapeMismatch, "dense_forward: parameter slice does not match layer");
  }
  if (static_cast<std::size_t>(input.size()) != spec.in) {
    throw Error(ErrorKind::ShapeMismatch, "dense_forward: input width does not match layer");
  }
  const ConstMatrixMap w(layer_params.data(), spec.out, spec.in);
  const Eigen::Map<const Eigen::VectorXd> b(layer_params.data() + std::size_t{spec.in} * spec.out, spec.out);
  Matrix pre = (w * input + b).transpose();
  return activate(spec.activation, pre).transpose();
}

Mlp::Mlp(std::vector<LayerSpec> layers, std::size_t offset) : layers_(std::move(layers)), offset_(offset) {
  if (layers_.empty()) throw Error(ErrorKind::InvalidArgument, "Mlp needs at least one layer");
  std::size_t off = offset_;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (i > 0 && layers_[i].in != layers_[i - 1].out) {
      throw Error(ErrorKind::ShapeMismatch, "Mlp layer widths do not chain");
    }
    layer_offsets_.push_back(off);
    off += layers_[i].param_count();
  }
}

Matrix Mlp::forward(std::span<const double> params, const Matrix& input, MlpTape* tape) const {
  if (static_cast<std::size_t>(input.cols()) != in_width()) {
    throw Error(ErrorKind::ShapeMismatch, "Mlp input has " + std::to_string(input.cols()) +
                                              " columns, expected " + std::to_string(in_width()));
  }
  if (offset_ + param_count() > params.size()) {
    throw Error(ErrorKind::ShapeMismatch, "Mlp parameter range exceeds parameter vector");
  }
  if (tape) {
    tape->inputs.clear();
    tape->pre.clear();
    tape->post.clear();
  }
  Matrix x = input;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& spec = layers_[i];
    const ConstMatrixMap w(params.data() + layer_offsets_[i], spec.out, spec.in);
    const Eigen::Map<const RowVector> b(params.data() + layer_offsets_[i] + std::size_t{spec.in} * spec.out,
                                        spec.out);
    Matrix pre = x * w.transpose();
    pre.rowwise() += b;
    Matrix post = activate(spec.activation, pre);
    if (tape) {
      tape->inputs.push_back(std::move(x));
      tape->pre.push_back(std::move(pre));
    }
    x = std::move(post);
    if (tape) tape->post.push_back(x);
  }
  return x;
}

Matrix Mlp::backward(std::span<const double> params, const MlpTape& tape, const Matrix& d_out,
                     std::span<double> grad) const {
  Matrix d = d_out;
  for (std::size_t ii = layers_.size(); ii-- > 0;) {
    const auto& spec = layers_[ii];
    switch (spec.activation) {
      case Activation::Relu:
        d = d.cwiseProduct((tape.pre[ii].array() >= 0.0).cast<double>().matrix());
        break;
      case Activation::Tanh:
        d = d.cwiseProduct((1.0 - tape.post[ii].array().square()).matrix());
        break;
      case Activation::None:
        break;
    }
    const std::size_t woff = layer_offsets_[ii];
    MatrixMap dw(grad.data() + woff, spec.out, spec.in);
    Eigen::Map<RowVector> db(grad.data() + woff + std::size_t{spec.in} * spec.out, spec.out);
    dw.noalias() += d.transpose() * tape.inputs[ii];
    db += d.colwise().sum();
    const ConstMatrixMap w(params.data() + woff, spec.out, spec.in);
    Matrix dx = d * w;
    d = std::move(dx);
  }
  return d;
}

SetEncoding SetEncoder::encode(std::span<const double> params, const Matrix& elements) const {
  if (elements.rows() == 0) throw Error(ErrorKind::EmptyInput, "set_encode on empty input");
  SetEncoding enc;
  enc.per_element = mlp_.forward(params, elements, &enc.tape);
  const auto cols = enc.per_element.cols();
  enc.global.resize(cols);
  enc.argmax.assign(static_cast<std::size_t>(cols), 0);
  for (Eigen::Index c = 0; c < cols; ++c) {
    Eigen::Index best = 0;
    double v = enc.per_element(0, c);
    for (Eigen::Index r = 1; r < enc.per_element.rows(); ++r) {
      if (enc.per_element(r, c) > v) {
        v = enc.per_element(r, c);
        best = r;
      }
    }
    enc.global(c) = v;
    enc.argmax[static_cast<std::size_t>(c)] = best;
  }
  return enc;
}

Matrix SetEncoder::backward(std::span<const double> params, const SetEncoding& enc, const RowVector& d_global,
                            const Matrix* d_per_element, std::span<double> grad) const {
  Matrix d = d_per_element ? *d_per_element : Matrix::Zero(enc.per_element.rows(), enc.per_element.cols());
  for (Eigen::Index c = 0; c < d_global.size(); ++c) d(enc.argmax[static_cast<std::size_t>(c)], c) += d_global(c);
  return mlp_.backward(params, enc.tape, d, grad);
}

Mlp LayoutBuilder::add(std::initializer_list<std::uint32_t> widths, Activation hidden, Activation last) {
  if (widths.size() < 2) throw Error(ErrorKind::InvalidArgument, "an MLP needs input and output widths");
  std::vector<LayerSpec> layers;
  const std::vector<std::uint32_t> w(widths);
  for (std::size_t i = 0; i + 1 < w.size(); ++i) {
    layers.push_back({i + 2 == w.size() ? last : hidden, w[i], w[i + 1]});
  }
  Mlp mlp(layers, offset_);
  for (const auto& l : layers) {
    layout_.push_back(l);
    offset_ += l.param_count();
  }
  return mlp;
}

NetParams initialize_params(std::vector<LayerSpec> layout, std::uint64_t seed,
                            std::span<const std::size_t> zero_layers) {
  NetParams p;
  p.layout = std::move(layout);
  p.rng_seed = seed;
  p.values.assign(layout_param_count(p.layout), 0.0);
  std::mt19937_64 rng(seed);
  std::size_t off = 0;
  for (std::size_t li = 0; li < p.layout.size(); ++li) {
    const auto& l = p.layout[li];
    const bool zero = std::find(zero_layers.begin(), zero_layers.end(), li) != zero_layers.end();
    const double a = std::sqrt(6.0 / static_cast<double>(l.in + l.out));
    for (std::size_t k = 0; k < std::size_t{l.in} * l.out; ++k) {
      const double u = uniform01(rng);  // drawn even for zeroed layers to keep streams aligned
      p.values[off + k] = zero ? 0.0 : round_to_float((2.0 * u - 1.0) * a);
    }
    off += l.param_count();
  }
  return p;
}

NetParams adam_step(const NetParams& params, const Gradient& grad, double lr, AdamState& state) {
  if (grad.size() != params.size()) throw Error(ErrorKind::ShapeMismatch, "gradient length differs from parameters");
  if (!(lr > 0.0)) throw Error(ErrorKind::InvalidArgument, "learning rate must be positive");
  if (state.m.size() != params.size()) state = AdamState::zeros(params.size());
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(kAdamBeta1, t);
  const double c2 = 1.0 - std::pow(kAdamBeta2, t);
  NetParams out = params;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad.values[i];
    const double m = kAdamBeta1 * state.m[i] + (1.0 - kAdamBeta1) * g;
    const double v = kAdamBeta2 * state.v[i] + (1.0 - kAdamBeta2) * g * g;
    const double update = lr * (m / c1) / (std::sqrt(v / c2) + kAdamEpsilon);
    out.values[i] = round_to_float(params.values[i] - update);
    state.m[i] = round_to_float(m);
    state.v[i] = round_to_float(v);
  }
  return out;
}

double clip_global_norm(Gradient& grad, double max_norm) {
  double sq = 0.0;
  for (double g : grad.values) sq += g * g;
  const double n = std::sqrt(sq);
  if (n > max_norm && n > 0.0) {
    const double s = max_norm / n;
    for (double& g : grad.values) g *= s;
  }
  return n;
}

const CheckpointNet& Checkpoint::net(const std::string& name) const {
  for (const auto& n : nets) {
    if (n.name == name) return n;
  }
  throw Error(ErrorKind::ParseError, "checkpoint has no network named '" + name + "'");
}

// ---- checkpoint byte format (all integers and floats little-endian) ----

namespace {

constexpr char kMagic[4] = {'R', 'C', 'C', 'K'};

class Writer {
 public:
  void u8(std::uint8_t v) { bytes.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(double v) { u32(std::bit_cast<std::uint32_t>(static_cast<float>(v))); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes.insert(bytes.end(), s.begin(), s.end());
  }

  std::vector<std::uint8_t> bytes;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : bytes_(b) {}

  std::uint8_t u8() {
    need(1);
    return bytes_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{bytes_[pos_++]} << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{bytes_[pos_++]} << (8 * i);
    return v;
  }
  double f32() { return static_cast<double>(std::bit_cast<float>(u32())); }
  std::string str() {
    const auto n = u32();
    need(n);
    std::string s(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
                  bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) {
      throw Error(ErrorKind::ParseError, "checkpoint truncated at byte " + std::to_string(pos_));
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  for (char c : kMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u32(ckpt.format_version);
  w.u64(ckpt.step);
  w.str(ckpt.meta);
  w.u32(static_cast<std::uint32_t>(ckpt.nets.size()));
  for (const auto& net : ckpt.nets) {
    w.str(net.name);
    w.u64(net.params.rng_seed);
    w.u32(static_cast<std::uint32_t>(net.params.layout.size()));
    for (const auto& l : net.params.layout) {
      w.u8(static_cast<std::uint8_t>(l.activation));
      w.u32(l.in);
      w.u32(l.out);
    }
    w.u64(net.params.values.size());
    for (double v : net.params.values) w.f32(v);
    w.u8(net.adam ? 1 : 0);
    if (net.adam) {
      w.u64(net.adam->step);
      for (double v : net.adam->m) w.f32(v);
      for (double v : net.adam->v) w.f32(v);
    }
  }
  return std::move(w.bytes);
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  for (char c : kMagic) {
    if (r.u8() != static_cast<std::uint8_t>(c)) throw Error(ErrorKind::ParseError, "bad checkpoint magic");
  }
  Checkpoint ckpt;
  ckpt.format_version = r.u32();
  if (ckpt.format_version != 1) {
    throw Error(ErrorKind::UnsupportedFormat, "checkpoint format version " + std::to_string(ckpt.format_version));
  }
  ckpt.step = r.u64();
  ckpt.meta = r.str();
  const auto count = r.u32();
  for (std::uint32_t n = 0; n < count; ++n) {
    CheckpointNet net;
    net.name = r.str();
    net.params.rng_seed = r.u64();
    const auto layers = r.u32();
    for (std::uint32_t i = 0; i < layers; ++i) {
      LayerSpec l;
      const auto act = r.u8();
      if (act > 2) throw Error(ErrorKind::ParseError, "unknown activation code at byte " + std::to_string(r.pos() - 1));
      l.activation = static_cast<Activation>(act);
      l.in = r.u32();
      l.out = r.u32();
      net.params.layout.push_back(l);
    }
    const auto values = r.u64();
    if (values != layout_param_count(net.params.layout)) {
      throw Error(ErrorKind::ParseError, "value count does not match layout for '" + net.name + "'");
    }
    net.params.values.resize(values);
    for (auto& v : net.params.values) v = r.f32();
    if (r.u8() != 0) {
      AdamState s;
      s.step = r.u64();
      s.m.resize(values);
      s.v.resize(values);
      for (auto& v : s.m) v = r.f32();
      for (auto& v : s.v) v = r.f32();
      net.adam = std::move(s);
    }
    ckpt.nets.push_back(std::move(net));
  }
  if (!r.done()) throw Error(ErrorKind::ParseError, "trailing bytes after checkpoint at byte " + std::to_string(r.pos()));
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace raycomp
