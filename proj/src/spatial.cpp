#include "raycomp/spatial.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace raycomp {

namespace {

double box_sq_dist(const Bounds& b, const Point3& q) {
  double acc = 0.0;
  for (std::size_t d = 0; d < 3; ++d) {
    double e = 0.0;
    if (q[d] < b.lo[d]) e = b.lo[d] - q[d];
    else if (q[d] > b.hi[d]) e = q[d] - b.hi[d];
    acc += e * e;
  }
  return acc;
}

}  // namespace

SpatialIndex::SpatialIndex(PointCloud source, std::size_t leaf_size)
    : source_(std::move(source)), leaf_size_(std::max<std::size_t>(1, leaf_size)) {
  order_.resize(source_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  if (!source_.empty()) {
    nodes_.reserve(2 * source_.size() / leaf_size_ + 2);
    build(0, static_cast<std::uint32_t>(order_.size()));
  }
}

std::int32_t SpatialIndex::build(std::uint32_t begin, std::uint32_t end) {
  Node node;
  node.begin = begin;
  node.end = end;
  node.box = {source_[order_[begin]], source_[order_[begin]]};
  for (auto i = begin; i < end; ++i) {
    const Point3& p = source_[order_[i]];
    for (std::size_t d = 0; d < 3; ++d) {
      node.box.lo[d] = std::min(node.box.lo[d], p[d]);
      node.box.hi[d] = std::max(node.box.hi[d], p[d]);
    }
  }
  const auto self = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(node);
  if (end - begin <= leaf_size_) return self;

  std::size_t axis = 0;
  double widest = -1.0;
  for (std::size_t d = 0; d < 3; ++d) {
    const double w = node.box.hi[d] - node.box.lo[d];
    if (w > widest) {
      widest = w;
      axis = d;
    }
  }
  if (widest <= 0.0) return self;  // all points coincide

  const auto mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     const double pa = source_[a][axis];
                     const double pb = source_[b][axis];
                     return pa < pb || (pa == pb && a < b);
                   });
  const auto left = build(begin, mid);
  const auto right = build(mid, end);
  nodes_[self].left = left;
  nodes_[self].right = right;
  return self;
}

Neighbor SpatialIndex::nearest(const Point3& q) const {
  if (source_.empty()) throw Error(ErrorKind::EmptyCloud, "nearest on empty index");
  Neighbor best{std::numeric_limits<std::size_t>::max(), std::numeric_limits<double>::infinity()};
  nearest_rec(0, q, best);
  return best;
}

void SpatialIndex::nearest_rec(std::int32_t idx, const Point3& q, Neighbor& best) const {
  const Node& node = nodes_[idx];
  // Equal box distance must still be visited for lowest-id tie breaking.
  if (box_sq_dist(node.box, q) > best.sq_dist) return;
  if (node.left < 0) {
    for (auto i = node.begin; i < node.end; ++i) {
      const std::size_t id = order_[i];
      const double d = squared_distance(source_[id], q);
      if (d < best.sq_dist || (d == best.sq_dist && id < best.id)) best = {id, d};
    }
    return;
  }
  const double dl = box_sq_dist(nodes_[node.left].box, q);
  const double dr = box_sq_dist(nodes_[node.right].box, q);
  if (dl <= dr) {
    nearest_rec(node.left, q, best);
    nearest_rec(node.right, q, best);
  } else {
    nearest_rec(node.right, q, best);
    nearest_rec(node.left, q, best);
  }
}

std::vector<std::size_t> SpatialIndex::within_radius(const Point3& q, double radius) const {
  std::vector<std::size_t> out;
  if (source_.empty()) return out;
  radius_rec(0, q, radius * radius, out);
  std::sort(out.begin(), out.end());
  return out;
}

void SpatialIndex::radius_rec(std::int32_t idx, const Point3& q, double r2,
                              std::vector<std::size_t>& out) const {
  const Node& node = nodes_[idx];
  if (box_sq_dist(node.box, q) > r2) return;
  if (node.left < 0) {
    for (auto i = node.begin; i < node.end; ++i) {
      if (squared_distance(source_[order_[i]], q) <= r2) out.push_back(order_[i]);
    }
    return;
  }
  radius_rec(node.left, q, r2, out);
  radius_rec(node.right, q, r2, out);
}

bool SpatialIndex::any_within_radius(const Point3& q, double radius) const {
  if (source_.empty()) return false;
  return any_rec(0, q, radius * radius);
}

bool SpatialIndex::any_rec(std::int32_t idx, const Point3& q, double r2) const {
  const Node& node = nodes_[idx];
  if (box_sq_dist(node.box, q) > r2) return false;
  if (node.left < 0) {
    for (auto i = node.begin; i < node.end; ++i) {
      if (squared_distance(source_[order_[i]], q) <= r2) return true;
    }
    return false;
  }
  return any_rec(node.left, q, r2) || any_rec(node.right, q, r2);
}

std::vector<std::size_t> farthest_point_sample(const PointCloud& cloud, std::size_t k,
                                               std::size_t seed_id) {
  const std::size_t n = cloud.size();
  std::vector<std::size_t> picked;
  if (k >= n) {
    picked.resize(n);
    std::iota(picked.begin(), picked.end(), std::size_t{0});
    return picked;
  }
  if (seed_id >= n) throw Error(ErrorKind::InvalidArgument, "FPS seed id out of range");
  picked.reserve(k);
  std::vector<double> min_d(n, std::numeric_limits<double>::infinity());
  std::size_t current = seed_id;
  for (std::size_t step = 0; step < k; ++step) {
    picked.push_back(current);
    min_d[current] = -1.0;
    std::size_t next = 0;
    double next_d = -1.0;
    const Point3& c = cloud[current];
    for (std::size_t i = 0; i < n; ++i) {
      if (min_d[i] < 0.0) continue;
      const double d = squared_distance(cloud[i], c);
      if (d < min_d[i]) min_d[i] = d;
      if (min_d[i] > next_d) {
        next_d = min_d[i];
        next = i;
      }
    }
    current = next;
  }
  return picked;
}

}  // namespace raycomp
