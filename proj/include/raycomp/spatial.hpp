#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "raycomp/geometry.hpp"

namespace raycomp {

struct Neighbor {
  std::size_t id = 0;
  double sq_dist = 0.0;
};

// Static kd-tree over an immutable snapshot of a cloud. Results match a
// linear scan exactly, including lowest-id tie breaking.
class SpatialIndex {
 public:
  explicit SpatialIndex(PointCloud source, std::size_t leaf_size = 8);

  const PointCloud& source() const noexcept { return source_; }

  Neighbor nearest(const Point3& q) const;

  // Ids with distance <= radius, ascending.
  std::vector<std::size_t> within_radius(const Point3& q, double radius) const;

  // True when some point lies within radius; cheaper than within_radius.
  bool any_within_radius(const Point3& q, double radius) const;

 private:
  struct Node {
    Bounds box;
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);
  void nearest_rec(std::int32_t node, const Point3& q, Neighbor& best) const;
  void radius_rec(std::int32_t node, const Point3& q, double r2, std::vector<std::size_t>& out) const;
  bool any_rec(std::int32_t node, const Point3& q, double r2) const;

  PointCloud source_;
  std::size_t leaf_size_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

// Greedy max-min subset starting from seed_id; ties go to the lowest id.
// Returns all ids in order when k >= cloud size.
std::vector<std::size_t> farthest_point_sample(const PointCloud& cloud, std::size_t k,
                                               std::size_t seed_id = 0);

}  // namespace raycomp
