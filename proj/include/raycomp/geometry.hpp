#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "raycomp/error.hpp"

namespace raycomp {

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double& operator[](std::size_t i) { return i == 0 ? x : (i == 1 ? y : z); }
  double operator[](std::size_t i) const { return i == 0 ? x : (i == 1 ? y : z); }

  friend bool operator==(const Point3&, const Point3&) = default;
};

using Vec3 = Point3;

inline Point3 operator+(const Point3& a, const Point3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Point3 operator-(const Point3& a, const Point3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Point3 operator*(double s, const Point3& a) { return {s * a.x, s * a.y, s * a.z}; }
inline double dot(const Point3& a, const Point3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Point3 cross(const Point3& a, const Point3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Point3& a) { return std::sqrt(dot(a, a)); }

// Every distance comparison in the library goes through this so that
// accelerated and brute-force paths agree bit for bit.
inline double squared_distance(const Point3& a, const Point3& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  const double dz = a.z - b.z;
  return dx * dx + dy * dy + dz * dz;
}

inline bool is_finite(const Point3& p) {
  return std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.z);
}

struct Bounds {
  Point3 lo;
  Point3 hi;
};

class PointCloud {
 public:
  PointCloud() = default;
  explicit PointCloud(std::vector<Point3> points);

  std::size_t size() const noexcept { return points_.size(); }
  bool empty() const noexcept { return points_.empty(); }
  const Point3& operator[](std::size_t i) const { return points_[i]; }
  const std::vector<Point3>& points() const noexcept { return points_; }
  std::span<const Point3> view() const noexcept { return points_; }

  auto begin() const noexcept { return points_.begin(); }
  auto end() const noexcept { return points_.end(); }

  // Axis-aligned bounds; both corners are the origin for an empty cloud.
  Bounds bounds() const;

  PointCloud subset(std::span<const std::size_t> ids) const;

  friend bool operator==(const PointCloud&, const PointCloud&) = default;

 private:
  std::vector<Point3> points_;
};

// Camera position plus one un-normalized ray per observed point.
class RayBundle {
 public:
  RayBundle(Point3 cam, PointCloud origins, std::vector<Vec3> directions);

  const Point3& cam() const noexcept { return cam_; }
  const PointCloud& origins() const noexcept { return origins_; }
  const std::vector<Vec3>& directions() const noexcept { return directions_; }
  std::size_t size() const noexcept { return directions_.size(); }

 private:
  Point3 cam_;
  PointCloud origins_;
  std::vector<Vec3> directions_;
};

inline constexpr double kDegenerateRayLength = 1e-12;
inline constexpr double kDefaultAngularTolerance = 0.01;

struct ShadowVolume {
  RayBundle rays;
  double angular_tolerance = kDefaultAngularTolerance;
};

struct OffsetConstraint {
  double alpha = 1.5;
  double base = 0.03;
  int layer_count = 2;
};

// Row-major N x L matrix of scalar offsets, one row per ray.
class OffsetMatrix {
 public:
  OffsetMatrix() = default;
  OffsetMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
  std::span<double> flat() noexcept { return values_; }
  std::span<const double> flat() const noexcept { return values_; }

  friend bool operator==(const OffsetMatrix&, const OffsetMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

RayBundle build_rays(const Point3& cam, const PointCloud& scan);

// Output index i*L + l holds origin_i + offsets(i, l) * direction_i.
PointCloud displace_along_rays(const RayBundle& rays, const OffsetMatrix& offsets);

// Per-dimension movement bound for a point whose accumulated ray offset is
// offset_total, in refinement layer `layer` (1-based).
double constraint_value(const OffsetConstraint& constraint, double offset_total, int layer);

// raw_moves holds K moves per parent, parent-major; components are expected
// in [-1, 1] and get scaled per dimension by the parent's bound.
PointCloud apply_local_displacements(const PointCloud& parents, std::span<const Vec3> raw_moves,
                                     std::span<const double> bounds);

bool in_candidate_volume(const ShadowVolume& volume, const Point3& q);

double distance_to_line(const Point3& q, const Point3& line_point, const Vec3& line_dir);

}  // namespace raycomp
