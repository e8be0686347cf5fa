#include "raycomp/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace raycomp {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DegenerateRay: return "DegenerateRay";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::NegativeOffset: return "NegativeOffset";
    case ErrorKind::EmptyCloud: return "EmptyCloud";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::InsufficientPoints: return "InsufficientPoints";
    case ErrorKind::CameraInside: return "CameraInside";
    case ErrorKind::DegenerateScan: return "DegenerateScan";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorKind::DatasetEmpty: return "DatasetEmpty";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

PointCloud::PointCloud(std::vector<Point3> points) : points_(std::move(points)) {
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!is_finite(points_[i])) {
      throw Error(ErrorKind::InvalidArgument, "non-finite coordinate at point " + std::to_string(i));
    }
  }
}

Bounds PointCloud::bounds() const {
  if (points_.empty()) return {};
  Bounds b{points_.front(), points_.front()};
  for (const auto& p : points_) {
    for (std::size_t d = 0; d < 3; ++d) {
      b.lo[d] = std::min(b.lo[d], p[d]);
      b.hi[d] = std::max(b.hi[d], p[d]);
    }
  }
  return b;
}

PointCloud PointCloud::subset(std::span<const std::size_t> ids) const {
  std::vector<Point3> out;
  out.reserve(ids.size());
  for (auto id : ids) out.push_back(points_.at(id));
  PointCloud c;
  c.points_ = std::move(out);
  return c;
}

RayBundle::RayBundle(Point3 cam, PointCloud origins, std::vector<Vec3> directions)
    : cam_(cam), origins_(std::move(origins)), directions_(std::move(directions)) {
  if (directions_.size() != origins_.size()) {
    throw Error(ErrorKind::ShapeMismatch, "ray count differs from origin count");
  }
  for (std::size_t i = 0; i < directions_.size(); ++i) {
    if (norm(directions_[i]) < kDegenerateRayLength) {
      throw Error(ErrorKind::DegenerateRay, "zero-length ray " + std::to_string(i));
    }
  }
}

RayBundle build_rays(const Point3& cam, const PointCloud& scan) {
  std::vector<Vec3> dirs;
  dirs.reserve(scan.size());
  for (std::size_t i = 0; i < scan.size(); ++i) {
    const Vec3 r = scan[i] - cam;
    if (norm(r) < kDegenerateRayLength) {
      throw Error(ErrorKind::DegenerateRay, "scan point " + std::to_string(i) + " coincides with camera");
    }
    dirs.push_back(r);
  }
  return RayBundle(cam, scan, std::move(dirs));
}

PointCloud displace_along_rays(const RayBundle& rays, const OffsetMatrix& offsets) {
  if (offsets.rows() != rays.size()) {
    throw Error(ErrorKind::ShapeMismatch, "offset rows " + std::to_string(offsets.rows()) +
                                              " != ray count " + std::to_string(rays.size()));
  }
  for (double d : offsets.flat()) {
    if (!(d >= 0.0)) throw Error(ErrorKind::NegativeOffset, "offset " + std::to_string(d));
  }
  const std::size_t n = rays.size();
  const std::size_t per_ray = offsets.cols();
  std::vector<Point3> out;
  out.reserve(n * per_ray);
  for (std::size_t i = 0; i < n; ++i) {
    const Point3& p = rays.origins()[i];
    const Vec3& r = rays.directions()[i];
    for (std::size_t l = 0; l < per_ray; ++l) out.push_back(p + offsets(i, l) * r);
  }
  return PointCloud(std::move(out));
}

double constraint_value(const OffsetConstraint& constraint, double offset_total, int layer) {
  return (offset_total / 2.0 + constraint.base) / std::pow(constraint.alpha, layer - 1);
}

PointCloud apply_local_displacements(const PointCloud& parents, std::span<const Vec3> raw_moves,
                                     std::span<const double> bounds) {
  if (bounds.size() != parents.size()) {
    throw Error(ErrorKind::ShapeMismatch, "one bound per parent required");
  }
  if (parents.empty()) {
    if (!raw_moves.empty()) throw Error(ErrorKind::ShapeMismatch, "moves without parents");
    return {};
  }
  if (raw_moves.size() % parents.size() != 0) {
    throw Error(ErrorKind::ShapeMismatch, "move count is not a multiple of the parent count");
  }
  const std::size_t per_parent = raw_moves.size() / parents.size();
  std::vector<Point3> out;
  out.reserve(raw_moves.size());
  for (std::size_t j = 0; j < parents.size(); ++j) {
    for (std::size_t k = 0; k < per_parent; ++k) {
      Point3 child = parents[j] + bounds[j] * raw_moves[j * per_parent + k];
      // Rounding in parent + bound can overshoot the box by an ulp; pull back.
      for (std::size_t d = 0; d < 3; ++d) {
        while (std::abs(child[d] - parents[j][d]) > bounds[j]) {
          child[d] = std::nextafter(child[d], parents[j][d]);
        }
      }
      out.push_back(child);
    }
  }
  return PointCloud(std::move(out));
}

bool in_candidate_volume(const ShadowVolume& volume, const Point3& q) {
  const RayBundle& rays = volume.rays;
  const Vec3 v = q - rays.cam();
  const double v_len = norm(v);
  for (std::size_t i = 0; i < rays.size(); ++i) {
    const Vec3& r = rays.directions()[i];
    const double r_len = norm(r);
    // Relative slack absorbs rounding in p + 0*r style reconstructions.
    if (v_len < r_len * (1.0 - 1e-12)) continue;
    const double angle = std::atan2(norm(cross(v, r)), dot(v, r));
    if (angle <= volume.angular_tolerance) return true;
  }
  return false;
}

double distance_to_line(const Point3& q, const Point3& line_point, const Vec3& line_dir) {
  return norm(cross(q - line_point, line_dir)) / norm(line_dir);
}

}  // namespace raycomp
