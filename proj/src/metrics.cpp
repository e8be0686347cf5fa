#include "raycomp/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace raycomp {

namespace {

void require_non_empty(const PointCloud& c, const char* what) {
  if (c.empty()) throw Error(ErrorKind::EmptyCloud, what);
}

}  // namespace

double chamfer_directed_sum(const PointCloud& a, const SpatialIndex& b) {
  double sum = 0.0;
  for (const auto& p : a) sum += b.nearest(p).sq_dist;
  return sum;
}

double chamfer(const PointCloud& a, const PointCloud& b, ChamferMode mode) {
  require_non_empty(a, "chamfer: first cloud is empty");
  require_non_empty(b, "chamfer: second cloud is empty");
  const SpatialIndex ia(a);
  const SpatialIndex ib(b);
  double ab = chamfer_directed_sum(a, ib);
  double ba = chamfer_directed_sum(b, ia);
  if (mode == ChamferMode::Mean) {
    ab /= static_cast<double>(a.size());
    ba /= static_cast<double>(b.size());
  }
  return ab + ba;
}

double fscore(const PointCloud& result, const PointCloud& gt, double tau) {
  require_non_empty(result, "fscore: result is empty");
  require_non_empty(gt, "fscore: gt is empty");
  if (!(tau > 0.0)) throw Error(ErrorKind::InvalidArgument, "fscore: tau must be positive");
  const SpatialIndex ir(result);
  const SpatialIndex ig(gt);
  const double tau2 = tau * tau;
  std::size_t hit_p = 0;
  for (const auto& p : result) hit_p += ig.nearest(p).sq_dist <= tau2 ? 1 : 0;
  std::size_t hit_r = 0;
  for (const auto& q : gt) hit_r += ir.nearest(q).sq_dist <= tau2 ? 1 : 0;
  const double precision = static_cast<double>(hit_p) / static_cast<double>(result.size());
  const double recall = static_cast<double>(hit_r) / static_cast<double>(gt.size());
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

namespace {

// Mean of 1 - exp(-temp * d^2) / n_hat over `from`, where n_hat counts how
// many points of `from` picked the same nearest neighbor in `to`.
double dcd_directed(const PointCloud& from, const SpatialIndex& to, double temp) {
  std::vector<Neighbor> nn;
  nn.reserve(from.size());
  std::vector<std::size_t> hits(to.source().size(), 0);
  for (const auto& p : from) {
    nn.push_back(to.nearest(p));
    ++hits[nn.back().id];
  }
  double sum = 0.0;
  for (const auto& n : nn) {
    sum += 1.0 - std::exp(-temp * n.sq_dist) / static_cast<double>(hits[n.id]);
  }
  return sum / static_cast<double>(from.size());
}

}  // namespace

double dcd(const PointCloud& a, const PointCloud& b, double temp) {
  require_non_empty(a, "dcd: first cloud is empty");
  require_non_empty(b, "dcd: second cloud is empty");
  if (!(temp > 0.0)) throw Error(ErrorKind::InvalidArgument, "dcd: temp must be positive");
  const SpatialIndex ia(a);
  const SpatialIndex ib(b);
  return 0.5 * (dcd_directed(a, ib, temp) + dcd_directed(b, ia, temp));
}

ScdSplit scd_split(const PointCloud& result, const PointCloud& gt, const PointCloud& partial,
                   double radius) {
  require_non_empty(partial, "scd_split: partial is empty");
  require_non_empty(gt, "scd_split: gt is empty");
  if (!(radius > 0.0)) throw Error(ErrorKind::InvalidArgument, "scd_split: radius must be positive");

  ScdSplit split;
  split.radius = radius;
  const SpatialIndex ip(partial);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    (ip.any_within_radius(gt[i], radius) ? split.gt1_ids : split.gt2_ids).push_back(i);
  }
  split.gt1 = gt.subset(split.gt1_ids);
  split.gt2 = gt.subset(split.gt2_ids);

  if (split.gt2.empty()) {
    split.result1_ids.resize(result.size());
    for (std::size_t i = 0; i < result.size(); ++i) split.result1_ids[i] = i;
  } else {
    const SpatialIndex ig2(split.gt2);
    for (std::size_t i = 0; i < result.size(); ++i) {
      const bool observed = ip.nearest(result[i]).sq_dist <= ig2.nearest(result[i]).sq_dist;
      (observed ? split.result1_ids : split.result2_ids).push_back(i);
    }
  }
  split.result1 = result.subset(split.result1_ids);
  split.result2 = result.subset(split.result2_ids);
  return split;
}

ScdValue scd(const ScdSplit& split) {
  ScdValue v;
  v.side1_empty = split.result1.empty() || split.gt1.empty();
  v.side2_empty = split.result2.empty() || split.gt2.empty();
  if (!v.side1_empty) v.scd1 = chamfer(split.result1, split.gt1);
  if (!v.side2_empty) v.scd2 = chamfer(split.result2, split.gt2);
  return v;
}

MetricsReport evaluate(const PointCloud& result, const PointCloud& gt, const PointCloud& partial,
                       const MetricsOptions& options) {
  MetricsReport r;
  r.cd = chamfer(result, gt);
  r.fscore = fscore(result, gt, options.tau);
  r.dcd = dcd(result, gt, options.temp);
  const ScdSplit split = scd_split(result, gt, partial, options.radius);
  const ScdValue s = scd(split);
  r.scd1 = s.scd1;
  r.scd2 = s.scd2;
  r.scd1_empty = s.side1_empty;
  r.scd2_empty = s.side2_empty;
  r.result_count = result.size();
  r.gt_count = gt.size();
  r.gt1_count = split.gt1.size();
  r.gt2_count = split.gt2.size();
  return r;
}

}  // namespace raycomp
