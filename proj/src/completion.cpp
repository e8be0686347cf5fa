#include "raycomp/completion.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "raycomp/spatial.hpp"

namespace raycomp {

namespace {

// Broadcast a row vector under every row of `rows`, side by side with it.
Matrix concat_broadcast(const Matrix& rows, const RowVector& tail) {
  Matrix out(rows.rows(), rows.cols() + tail.size());
  out.leftCols(rows.cols()) = rows;
  out.rightCols(tail.size()) = tail.replicate(rows.rows(), 1);
  return out;
}

Matrix concat_cols(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), a.cols() + b.cols());
  out.leftCols(a.cols()) = a;
  out.rightCols(b.cols()) = b;
  return out;
}

OffsetMatrix to_offsets(const Matrix& m) {
  OffsetMatrix out(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out(r, c) = m(r, c);
  }
  return out;
}

// Gradient of per-point positions projected onto each point's ray: the
// derivative with respect to the scalar offset that placed the point.
Matrix project_on_rays(const Matrix& d_points, const RayBundle& rays, std::size_t per_ray) {
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(rays.size()), static_cast<Eigen::Index>(per_ray));
  if (d_points.size() == 0) return out;
  for (std::size_t i = 0; i < rays.size(); ++i) {
    const Vec3& r = rays.directions()[i];
    for (std::size_t l = 0; l < per_ray; ++l) {
      const auto row = static_cast<Eigen::Index>(i * per_ray + l);
      out(i, l) = d_points(row, 0) * r.x + d_points(row, 1) * r.y + d_points(row, 2) * r.z;
    }
  }
  return out;
}

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

std::uint64_t hash_tape(std::uint64_t h, const MlpTape& tape) {
  for (const auto& pre : tape.pre) {
    std::uint64_t word = 0;
    int bit = 0;
    for (Eigen::Index i = 0; i < pre.size(); ++i) {
      if (pre.data()[i] >= 0.0) word |= (1ULL << bit);
      if (++bit == 64) {
        h = mix(h, word);
        word = 0;
        bit = 0;
      }
    }
    h = mix(h, word);
  }
  return h;
}

std::uint64_t hash_encoding(std::uint64_t h, const SetEncoding& enc) {
  h = hash_tape(h, enc.tape);
  for (auto a : enc.argmax) h = mix(h, static_cast<std::uint64_t>(a));
  return h;
}

}  // namespace

Matrix to_matrix(const PointCloud& cloud) {
  Matrix m(static_cast<Eigen::Index>(cloud.size()), 3);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    m(i, 0) = cloud[i].x;
    m(i, 1) = cloud[i].y;
    m(i, 2) = cloud[i].z;
  }
  return m;
}

void validate(const RefinementPlan& plan) {
  if (plan.fps_count == 0) throw Error(ErrorKind::InvalidArgument, "fps_count must be positive");
  if (plan.split_factors.size() != static_cast<std::size_t>(plan.constraint.layer_count)) {
    throw Error(ErrorKind::InvalidArgument, "one split factor per refinement layer required");
  }
  for (auto s : plan.split_factors) {
    if (s == 0) throw Error(ErrorKind::InvalidArgument, "split factors must be positive");
  }
  if (!(plan.constraint.alpha > 1.0)) throw Error(ErrorKind::InvalidArgument, "alpha must exceed 1");
  if (!(plan.constraint.base > 0.0)) throw Error(ErrorKind::InvalidArgument, "constraint base must be positive");
}

// ---------------------------------------------------------------- offsets

OffsetNetwork::OffsetNetwork(const ModelConfig& config) : config_(config) {
  if (config.points_per_ray == 0) throw Error(ErrorKind::InvalidArgument, "points_per_ray must be positive");
  LayoutBuilder b;
  const auto head_in = 2 * config.ray_feature + 6;
  ray_encoder_ = SetEncoder(b.add({6, config.ray_hidden, config.ray_feature}, Activation::Relu, Activation::Relu));
  head_ = b.add({head_in, config.head_hidden, config.points_per_ray}, Activation::Relu, Activation::Relu);
  scan_encoder_ =
      SetEncoder(b.add({3, config.scan_hidden, config.scan_feature}, Activation::Relu, Activation::Relu));
  adjust_head_ = b.add({head_in + config.scan_feature, config.head_hidden, config.points_per_ray},
                       Activation::Relu, Activation::None);
  layout_ = b.layout();
}

NetParams OffsetNetwork::initialize(std::uint64_t seed) const {
  // Output layers of both heads start at zero: no displacement, no adjustment.
  const std::size_t zero[] = {3, 7};
  return initialize_params(layout_, seed, zero);
}

OffsetPass OffsetNetwork::predict(const RayBundle& rays, std::span<const double> params) const {
  if (rays.size() == 0) throw Error(ErrorKind::EmptyInput, "no rays");
  if (params.size() != param_count()) throw Error(ErrorKind::ShapeMismatch, "predictor parameter count mismatch");
  OffsetPass pass;
  const auto n = static_cast<Eigen::Index>(rays.size());
  pass.ray_input.resize(n, 6);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& p = rays.origins()[static_cast<std::size_t>(i)];
    const auto& r = rays.directions()[static_cast<std::size_t>(i)];
    pass.ray_input.row(i) << p.x, p.y, p.z, r.x, r.y, r.z;
  }
  pass.ray_encoding = ray_encoder_.encode(params, pass.ray_input);
  pass.head_input = concat_cols(concat_broadcast(pass.ray_encoding.per_element, pass.ray_encoding.global),
                                pass.ray_input);
  const Matrix initial = head_.forward(params, pass.head_input, &pass.head_tape);
  pass.field.initial = to_offsets(initial);
  pass.field.adjustment = OffsetMatrix(rays.size(), config_.points_per_ray, 0.0);
  pass.field.final = pass.field.initial;
  return pass;
}

void OffsetNetwork::adjust(OffsetPass& pass, const PointCloud& p_first, std::span<const double> params) const {
  const std::size_t n = pass.field.initial.rows();
  const std::size_t per_ray = config_.points_per_ray;
  if (p_first.size() != n * per_ray) throw Error(ErrorKind::ShapeMismatch, "first-step cloud size mismatch");
  if (!config_.use_adjustment) {
    pass.field.adjustment = OffsetMatrix(n, per_ray, 0.0);
    pass.field.final = pass.field.initial;
    return;
  }
  pass.scan_encoding = scan_encoder_.encode(params, to_matrix(p_first));
  pass.adjust_input = concat_broadcast(pass.head_input, pass.scan_encoding.global);
  const Matrix delta = adjust_head_.forward(params, pass.adjust_input, &pass.adjust_tape);
  pass.field.adjustment = to_offsets(delta);
  pass.field.final = OffsetMatrix(n, per_ray);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t l = 0; l < per_ray; ++l) {
      pass.field.final(i, l) = std::max(0.0, pass.field.initial(i, l) + pass.field.adjustment(i, l));
    }
  }
}

void OffsetNetwork::backward(const OffsetPass& pass, const RayBundle& rays, const Matrix& d_p_first,
                             const Matrix& d_p_initial, const OffsetMatrix* d_final_extra,
                             std::span<const double> params, std::span<double> grad) const {
  const std::size_t per_ray = config_.points_per_ray;
  const auto n = static_cast<Eigen::Index>(rays.size());
  const auto feat = static_cast<Eigen::Index>(config_.ray_feature);

  Matrix d_final = project_on_rays(d_p_initial, rays, per_ray);
  if (d_final_extra) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (std::size_t l = 0; l < per_ray; ++l) d_final(i, l) += (*d_final_extra)(i, l);
    }
  }

  Matrix d_head_input = Matrix::Zero(pass.head_input.rows(), pass.head_input.cols());
  Matrix d_initial;
  Matrix d_first = d_p_first.size() ? d_p_first : Matrix::Zero(n * per_ray, 3);
  if (config_.use_adjustment) {
    Matrix d_sum = d_final;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (std::size_t l = 0; l < per_ray; ++l) {
        if (pass.field.initial(i, l) + pass.field.adjustment(i, l) < 0.0) d_sum(i, l) = 0.0;
      }
    }
    d_initial = d_sum;
    const Matrix d_adjust_input = adjust_head_.backward(params, pass.adjust_tape, d_sum, grad);
    d_head_input += d_adjust_input.leftCols(pass.head_input.cols());
    const RowVector d_scan_global = d_adjust_input.rightCols(config_.scan_feature).colwise().sum();
    d_first += scan_encoder_.backward(params, pass.scan_encoding, d_scan_global, nullptr, grad);
  } else {
    // Without the adjustment head the initial cloud is the first-step cloud.
    d_initial = d_final;
  }
  d_initial += project_on_rays(d_first, rays, per_ray);

  d_head_input += head_.backward(params, pass.head_tape, d_initial, grad);
  const Matrix d_per_ray = d_head_input.leftCols(feat);
  const RowVector d_global = d_head_input.middleCols(feat, feat).colwise().sum();
  ray_encoder_.backward(params, pass.ray_encoding, d_global, &d_per_ray, grad);
}

// ------------------------------------------------------------- refinement

RefinementNetwork::RefinementNetwork(const ModelConfig& config, const RefinementPlan& plan)
    : config_(config), plan_(plan) {
  validate(plan_);
  LayoutBuilder b;
  encoder_ = SetEncoder(
      b.add({3, config.refine_enc_hidden, config.refine_enc_feature}, Activation::Relu, Activation::Relu));
  for (auto split : plan_.split_factors) {
    layers_.push_back(
        b.add({4 + config.refine_enc_feature, config.refine_hidden, 3 * split}, Activation::Relu, Activation::Tanh));
  }
  layout_ = b.layout();
}

NetParams RefinementNetwork::initialize(std::uint64_t seed) const {
  std::vector<std::size_t> zero;
  for (std::size_t u = 0; u < layers_.size(); ++u) zero.push_back(2 + 2 * u + 1);
  return initialize_params(layout_, seed, zero);
}

double RefinementNetwork::bound(double offset_total, int layer) const {
  if (!config_.use_constraint) return config_.unconstrained_bound;
  return constraint_value(plan_.constraint, offset_total, layer);
}

RefinePass RefinementNetwork::forward(const PointCloud& p_o, std::span<const double> point_offsets,
                                      std::span<const double> params) const {
  if (params.size() != param_count()) throw Error(ErrorKind::ShapeMismatch, "refiner parameter count mismatch");
  if (point_offsets.size() != p_o.size()) throw Error(ErrorKind::ShapeMismatch, "one offset per point required");
  if (p_o.size() < plan_.fps_count) {
    throw Error(ErrorKind::InsufficientPoints, std::to_string(p_o.size()) + " points, plan needs " +
                                                   std::to_string(plan_.fps_count));
  }
  RefinePass pass;
  pass.encoding = encoder_.encode(params, to_matrix(p_o));
  pass.fps_ids = farthest_point_sample(p_o, plan_.fps_count, plan_.fps_seed);

  PointCloud parents = p_o.subset(pass.fps_ids);
  std::vector<double> offsets;
  offsets.reserve(pass.fps_ids.size());
  for (auto id : pass.fps_ids) offsets.push_back(point_offsets[id]);

  const auto feat = static_cast<Eigen::Index>(config_.refine_enc_feature);
  for (std::size_t u = 0; u < layers_.size(); ++u) {
    const std::size_t split = plan_.split_factors[u];
    RefineLayerPass lp;
    const auto np = static_cast<Eigen::Index>(parents.size());
    lp.input.resize(np, 4 + feat);
    lp.bounds.resize(parents.size());
    for (Eigen::Index j = 0; j < np; ++j) {
      const auto& p = parents[static_cast<std::size_t>(j)];
      lp.input(j, 0) = p.x;
      lp.input(j, 1) = p.y;
      lp.input(j, 2) = p.z;
      lp.input(j, 3) = offsets[static_cast<std::size_t>(j)];
      lp.input.block(j, 4, 1, feat) = pass.encoding.global;
      lp.bounds[static_cast<std::size_t>(j)] = bound(offsets[static_cast<std::size_t>(j)], static_cast<int>(u + 1));
    }
    lp.raw = layers_[u].forward(params, lp.input, &lp.tape);

    std::vector<Vec3> moves;
    moves.reserve(parents.size() * split);
    std::vector<double> child_offsets;
    child_offsets.reserve(parents.size() * split);
    for (Eigen::Index j = 0; j < np; ++j) {
      for (std::size_t k = 0; k < split; ++k) {
        const auto c = static_cast<Eigen::Index>(3 * k);
        moves.push_back({lp.raw(j, c), lp.raw(j, c + 1), lp.raw(j, c + 2)});
        child_offsets.push_back(offsets[static_cast<std::size_t>(j)]);
      }
    }
    lp.children = apply_local_displacements(parents, moves, lp.bounds);
    lp.parents = std::move(parents);
    lp.parent_offsets = std::move(offsets);
    parents = lp.children;
    offsets = std::move(child_offsets);
    pass.layers.push_back(std::move(lp));
  }
  return pass;
}

void RefinementNetwork::backward(const RefinePass& pass, const PointCloud& p_o, std::span<const Matrix> d_children,
                                 std::span<const double> params, std::span<double> grad, Matrix& d_p_o,
                                 std::vector<double>& d_point_offsets) const {
  const auto feat = static_cast<Eigen::Index>(config_.refine_enc_feature);
  d_p_o = Matrix::Zero(static_cast<Eigen::Index>(p_o.size()), 3);
  d_point_offsets.assign(p_o.size(), 0.0);
  RowVector d_global = RowVector::Zero(feat);

  Matrix carried_pos;                 // gradient w.r.t. this layer's children from the next layer
  std::vector<double> carried_offset;  // same, for inherited offsets
  for (std::size_t u = layers_.size(); u-- > 0;) {
    const RefineLayerPass& lp = pass.layers[u];
    const std::size_t split = plan_.split_factors[u];
    const auto np = static_cast<Eigen::Index>(lp.parents.size());
    Matrix d_child = Matrix::Zero(static_cast<Eigen::Index>(lp.children.size()), 3);
    if (u < d_children.size() && d_children[u].size()) d_child += d_children[u];
    if (carried_pos.size()) d_child += carried_pos;

    Matrix d_raw(np, static_cast<Eigen::Index>(3 * split));
    Matrix d_pos = Matrix::Zero(np, 3);
    std::vector<double> d_off(static_cast<std::size_t>(np), 0.0);
    for (Eigen::Index j = 0; j < np; ++j) {
      const double b = lp.bounds[static_cast<std::size_t>(j)];
      double d_bound = 0.0;
      for (std::size_t k = 0; k < split; ++k) {
        const auto c = static_cast<Eigen::Index>(j * static_cast<Eigen::Index>(split) + static_cast<Eigen::Index>(k));
        for (Eigen::Index d = 0; d < 3; ++d) {
          const auto col = static_cast<Eigen::Index>(3 * k) + d;
          d_pos(j, d) += d_child(c, d);
          d_bound += d_child(c, d) * lp.raw(j, col);
          d_raw(j, col) = b * d_child(c, d);
        }
        if (!carried_offset.empty()) d_off[static_cast<std::size_t>(j)] += carried_offset[static_cast<std::size_t>(c)];
      }
      if (config_.use_constraint) {
        d_off[static_cast<std::size_t>(j)] +=
            d_bound / (2.0 * std::pow(plan_.constraint.alpha, static_cast<double>(u)));
      }
    }
    const Matrix d_input = layers_[u].backward(params, lp.tape, d_raw, grad);
    d_pos += d_input.leftCols(3);
    for (Eigen::Index j = 0; j < np; ++j) d_off[static_cast<std::size_t>(j)] += d_input(j, 3);
    d_global += d_input.rightCols(feat).colwise().sum();
    carried_pos = std::move(d_pos);
    carried_offset = std::move(d_off);
  }

  for (std::size_t j = 0; j < pass.fps_ids.size(); ++j) {
    const auto id = pass.fps_ids[j];
    d_p_o.row(static_cast<Eigen::Index>(id)) += carried_pos.row(static_cast<Eigen::Index>(j));
    d_point_offsets[id] += carried_offset[j];
  }
  d_p_o += encoder_.backward(params, pass.encoding, d_global, nullptr, grad);
}

// ------------------------------------------------------------------ model

CompletionModel::CompletionModel(ModelConfig config, RefinementPlan plan)
    : config_(config), plan_(std::move(plan)), offsets_(config_), refine_(config_, plan_) {}

std::string CompletionModel::meta_json() const {
  nlohmann::json j;
  j["points_per_ray"] = config_.points_per_ray;
  j["ray_hidden"] = config_.ray_hidden;
  j["ray_feature"] = config_.ray_feature;
  j["head_hidden"] = config_.head_hidden;
  j["scan_hidden"] = config_.scan_hidden;
  j["scan_feature"] = config_.scan_feature;
  j["refine_enc_hidden"] = config_.refine_enc_hidden;
  j["refine_enc_feature"] = config_.refine_enc_feature;
  j["refine_hidden"] = config_.refine_hidden;
  j["use_adjustment"] = config_.use_adjustment;
  j["use_constraint"] = config_.use_constraint;
  j["unconstrained_bound"] = config_.unconstrained_bound;
  j["fps_count"] = plan_.fps_count;
  j["split_factors"] = plan_.split_factors;
  j["alpha"] = plan_.constraint.alpha;
  j["base"] = plan_.constraint.base;
  j["fps_seed"] = plan_.fps_seed;
  return j.dump();
}

CompletionModel CompletionModel::from_meta_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("model metadata: ") + e.what());
  }
  try {
    ModelConfig c;
    c.points_per_ray = j.at("points_per_ray");
    c.ray_hidden = j.at("ray_hidden");
    c.ray_feature = j.at("ray_feature");
    c.head_hidden = j.at("head_hidden");
    c.scan_hidden = j.at("scan_hidden");
    c.scan_feature = j.at("scan_feature");
    c.refine_enc_hidden = j.at("refine_enc_hidden");
    c.refine_enc_feature = j.at("refine_enc_feature");
    c.refine_hidden = j.at("refine_hidden");
    c.use_adjustment = j.at("use_adjustment");
    c.use_constraint = j.at("use_constraint");
    c.unconstrained_bound = j.at("unconstrained_bound");
    RefinementPlan p;
    p.fps_count = j.at("fps_count");
    p.split_factors = j.at("split_factors").get<std::vector<std::uint32_t>>();
    p.constraint.alpha = j.at("alpha");
    p.constraint.base = j.at("base");
    p.constraint.layer_count = static_cast<int>(p.split_factors.size());
    p.fps_seed = j.at("fps_seed");
    return CompletionModel(c, p);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("model metadata: ") + e.what());
  }
}

// ------------------------------------------------------------- pipeline

OffsetField predict_offsets(const OffsetNetwork& net, const RayBundle& rays, const NetParams& params) {
  return net.predict(rays, params.values).field;
}

OffsetField adjust_offsets(const OffsetNetwork& net, const OffsetField& field, const PointCloud& p_first,
                           const RayBundle& rays, const NetParams& params) {
  if (field.initial.rows() != rays.size()) throw Error(ErrorKind::ShapeMismatch, "offset rows differ from rays");
  OffsetPass pass = net.predict(rays, params.values);
  pass.field.initial = field.initial;
  net.adjust(pass, p_first, params.values);
  return pass.field;
}

std::pair<PointCloud, PointCloud> refine(const RefinementNetwork& net, const PointCloud& p_o,
                                         const OffsetField& field, const NetParams& params) {
  const auto flat = field.final.flat();
  const std::vector<double> offsets(flat.begin(), flat.end());
  RefinePass pass = net.forward(p_o, offsets, params.values);
  return {pass.layers.front().children, pass.layers.back().children};
}

PipelinePass run_pipeline(const CompletionModel& model, const PointCloud& scan, const Point3& cam,
                          std::span<const double> predictor, std::span<const double> refiner,
                          bool with_refinement) {
  if (scan.empty()) throw Error(ErrorKind::EmptyCloud, "empty scan");
  PipelinePass pass;
  pass.rays = build_rays(cam, scan);
  const auto& net = model.offset_network();
  pass.offsets = net.predict(*pass.rays, predictor);
  pass.p_first = displace_along_rays(*pass.rays, pass.offsets.field.initial);
  net.adjust(pass.offsets, pass.p_first, predictor);
  pass.p_initial = model.config().use_adjustment ? displace_along_rays(*pass.rays, pass.offsets.field.final)
                                                 : pass.p_first;
  const auto flat = pass.offsets.field.final.flat();
  pass.point_offsets.assign(flat.begin(), flat.end());
  if (with_refinement) {
    pass.refine = model.refinement_network().forward(pass.p_initial, pass.point_offsets, refiner);
    pass.refined = true;
  }
  return pass;
}

CompletionTrace PipelinePass::trace() const {
  CompletionTrace t;
  t.p_first = p_first;
  t.p_initial = p_initial;
  t.offsets = offsets.field;
  if (refined) {
    t.p_mid = refine.layers.front().children;
    t.p_final = refine.layers.back().children;
  }
  return t;
}

void pipeline_backward(const CompletionModel& model, const PipelinePass& pass, const StageGradients& d,
                       std::span<const double> predictor, std::span<const double> refiner,
                       std::span<double> predictor_grad, std::span<double> refiner_grad) {
  const std::size_t per_ray = model.config().points_per_ray;
  Matrix d_initial = d.p_initial.size() ? d.p_initial : Matrix::Zero(static_cast<Eigen::Index>(pass.p_initial.size()), 3);
  OffsetMatrix d_offsets(pass.rays->size(), per_ray, 0.0);
  const bool need_refine_back = pass.refined && (d.p_mid.size() || d.p_final.size());
  if (need_refine_back) {
    std::vector<Matrix> d_children(pass.refine.layers.size());
    if (d_children.size() == 1) {
      d_children.front() = d.p_mid.size() && d.p_final.size() ? Matrix(d.p_mid + d.p_final)
                                                              : (d.p_mid.size() ? d.p_mid : d.p_final);
    } else {
      d_children.front() = d.p_mid;
      d_children.back() = d.p_final;
    }

    std::vector<double> scratch;
    std::span<double> rgrad = refiner_grad;
    if (rgrad.empty()) {
      scratch.assign(refiner.size(), 0.0);
      rgrad = scratch;
    }
    Matrix d_p_o;
    std::vector<double> d_point_offsets;
    model.refinement_network().backward(pass.refine, pass.p_initial, d_children, refiner, rgrad, d_p_o,
                                        d_point_offsets);
    d_initial += d_p_o;
    for (std::size_t m = 0; m < d_point_offsets.size(); ++m) d_offsets.flat()[m] += d_point_offsets[m];
  }
  if (predictor_grad.empty()) return;
  if (!model.config().use_adjustment) {
    // p_initial is p_first; route its gradient through the first-step cloud.
    Matrix d_first = d.p_first.size() ? Matrix(d.p_first + d_initial) : d_initial;
    model.offset_network().backward(pass.offsets, *pass.rays, d_first, Matrix(), &d_offsets, predictor,
                                    predictor_grad);
    return;
  }
  model.offset_network().backward(pass.offsets, *pass.rays, d.p_first, d_initial, &d_offsets, predictor,
                                  predictor_grad);
}

std::uint64_t discrete_signature(const PipelinePass& pass) {
  std::uint64_t h = 0;
  h = hash_encoding(h, pass.offsets.ray_encoding);
  h = hash_tape(h, pass.offsets.head_tape);
  h = hash_encoding(h, pass.offsets.scan_encoding);
  h = hash_tape(h, pass.offsets.adjust_tape);
  const auto& f = pass.offsets.field;
  for (std::size_t i = 0; i < f.final.flat().size(); ++i) {
    h = mix(h, f.initial.flat()[i] + f.adjustment.flat()[i] >= 0.0 ? 1 : 0);
  }
  if (pass.refined) {
    h = hash_encoding(h, pass.refine.encoding);
    for (auto id : pass.refine.fps_ids) h = mix(h, id);
    for (const auto& lp : pass.refine.layers) h = hash_tape(h, lp.tape);
  }
  return h;
}

CompletionTrace complete(const CompletionModel& model, const PointCloud& scan, const Point3& cam,
                         const NetParams& predictor, const NetParams& refiner) {
  return run_pipeline(model, scan, cam, predictor.values, refiner.values, true).trace();
}

PointCloud baseline_upsample(const PointCloud& partial, std::size_t count) {
  if (partial.empty()) throw Error(ErrorKind::EmptyCloud, "baseline of empty partial");
  if (count <= partial.size()) {
    const auto ids = farthest_point_sample(partial, count, 0);
    return partial.subset(ids);
  }
  std::vector<Point3> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(partial[i % partial.size()]);
  return PointCloud(std::move(out));
}

}  // namespace raycomp
