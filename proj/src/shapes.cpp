#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "raycomp/data.hpp"
#include "rng.hpp"

namespace raycomp {

namespace {

constexpr double kPi = std::numbers::pi;

enum class PrimKind { Sphere, Box, Cylinder, Frustum };

// Axis-aligned primitives in model space. Cylinders and frustums run along z.
struct Primitive {
  PrimKind kind;
  Point3 center;
  double a = 0.0;  // sphere radius | box half x | bottom radius
  double b = 0.0;  // box half y | top radius
  double c = 0.0;  // box half z | half height
  bool caps = true;
};

double box_area(const Primitive& p) { return 8.0 * (p.a * p.b + p.b * p.c + p.a * p.c); }

double area(const Primitive& p) {
  switch (p.kind) {
    case PrimKind::Sphere: return 4.0 * kPi * p.a * p.a;
    case PrimKind::Box: return box_area(p);
    case PrimKind::Cylinder: {
      const double side = 2.0 * kPi * p.a * 2.0 * p.c;
      return side + (p.caps ? 2.0 * kPi * p.a * p.a : 0.0);
    }
    case PrimKind::Frustum: {
      const double slant = std::hypot(p.b - p.a, 2.0 * p.c);
      const double side = kPi * (p.a + p.b) * slant;
      return side + (p.caps ? kPi * (p.a * p.a + p.b * p.b) : 0.0);
    }
  }
  return 0.0;
}

Point3 disc_point(double radius, double z, Rng& rng) {
  const double r = radius * std::sqrt(rng.uniform());
  const double t = 2.0 * kPi * rng.uniform();
  return {r * std::cos(t), r * std::sin(t), z};
}

Point3 sample_primitive(const Primitive& p, Rng& rng) {
  Point3 q;
  switch (p.kind) {
    case PrimKind::Sphere: {
      const double z = 2.0 * rng.uniform() - 1.0;
      const double t = 2.0 * kPi * rng.uniform();
      const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
      q = {p.a * s * std::cos(t), p.a * s * std::sin(t), p.a * z};
      break;
    }
    case PrimKind::Box: {
      const double wx = p.b * p.c;
      const double wy = p.a * p.c;
      const double wz = p.a * p.b;
      const double pick = rng.uniform() * (wx + wy + wz);
      const double u = 2.0 * rng.uniform() - 1.0;
      const double v = 2.0 * rng.uniform() - 1.0;
      const double side = rng.uniform() < 0.5 ? -1.0 : 1.0;
      if (pick < wx) q = {side * p.a, u * p.b, v * p.c};
      else if (pick < wx + wy) q = {u * p.a, side * p.b, v * p.c};
      else q = {u * p.a, v * p.b, side * p.c};
      break;
    }
    case PrimKind::Cylinder: {
      const double side = 2.0 * kPi * p.a * 2.0 * p.c;
      const double cap = p.caps ? kPi * p.a * p.a : 0.0;
      const double pick = rng.uniform() * (side + 2.0 * cap);
      if (pick < side) {
        const double t = 2.0 * kPi * rng.uniform();
        q = {p.a * std::cos(t), p.a * std::sin(t), (2.0 * rng.uniform() - 1.0) * p.c};
      } else {
        q = disc_point(p.a, pick < side + cap ? -p.c : p.c, rng);
      }
      break;
    }
    case PrimKind::Frustum: {
      const double slant = std::hypot(p.b - p.a, 2.0 * p.c);
      const double side = kPi * (p.a + p.b) * slant;
      const double cap0 = p.caps ? kPi * p.a * p.a : 0.0;
      const double cap1 = p.caps ? kPi * p.b * p.b : 0.0;
      const double pick = rng.uniform() * (side + cap0 + cap1);
      if (pick < side) {
        // Height fraction with density proportional to the local radius.
        const double u = rng.uniform();
        double t = u;
        if (std::abs(p.b - p.a) > 1e-12) {
          t = (-p.a + std::sqrt(p.a * p.a + u * (p.b * p.b - p.a * p.a))) / (p.b - p.a);
        }
        const double r = p.a + (p.b - p.a) * t;
        const double ang = 2.0 * kPi * rng.uniform();
        q = {r * std::cos(ang), r * std::sin(ang), -p.c + 2.0 * p.c * t};
      } else if (pick < side + cap0) {
        q = disc_point(p.a, -p.c, rng);
      } else {
        q = disc_point(p.b, p.c, rng);
      }
      break;
    }
  }
  return q + p.center;
}

std::vector<Primitive> primitives(const ShapeSpec& spec) {
  const auto& d = spec.params;
  auto need = [&](std::size_t n) {
    if (d.size() != n) {
      throw Error(ErrorKind::InvalidArgument, std::string(to_string(spec.family)) + " needs " + std::to_string(n) +
                                                  " parameters, got " + std::to_string(d.size()));
    }
  };
  switch (spec.family) {
    case ShapeFamily::Sphere:
      need(1);
      return {{PrimKind::Sphere, {}, d[0]}};
    case ShapeFamily::Box:
      need(3);
      return {{PrimKind::Box, {}, d[0], d[1], d[2]}};
    case ShapeFamily::Cylinder:
      need(2);
      return {{PrimKind::Cylinder, {}, d[0], 0.0, d[1]}};
    case ShapeFamily::Lamp: {
      // base radius, base half thickness, pole radius, pole half length, shade bottom r, shade top r, shade half height
      need(7);
      const double base_z = -d[3] - d[1];
      const double shade_z = d[3] + d[6];
      return {{PrimKind::Cylinder, {0, 0, base_z}, d[0], 0.0, d[1], true},
              {PrimKind::Cylinder, {0, 0, 0}, d[2], 0.0, d[3], false},
              {PrimKind::Frustum, {0, 0, shade_z}, d[4], d[5], d[6], false}};
    }
    case ShapeFamily::Chair: {
      // seat half x/y/z, back half height, back half thickness, leg half height, leg half thickness
      need(7);
      const double sx = d[0], sy = d[1], sz = d[2];
      const double back_h = d[3], back_t = d[4], leg_h = d[5], leg_t = d[6];
      return {{PrimKind::Box, {0, 0, 0}, sx, sy, sz},
              {PrimKind::Box, {0, -sy + back_t, sz + back_h}, sx, back_t, back_h},
              {PrimKind::Box, {-sx + leg_t, 0, -sz - leg_h}, leg_t, sy, leg_h},
              {PrimKind::Box, {sx - leg_t, 0, -sz - leg_h}, leg_t, sy, leg_h}};
    }
  }
  return {};
}

Point3 rotate(const std::array<double, 4>& q, const Point3& v) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  const Point3 u{x, y, z};
  const Point3 t = 2.0 * cross(u, v);
  return v + w * t + cross(u, t);
}

Point3 apply_pose(const ShapeSpec& spec, const Point3& p) {
  return spec.scale * rotate(spec.rotation, p) + spec.translation;
}

void grow(Bounds& b, const Point3& lo, const Point3& hi) {
  for (std::size_t k = 0; k < 3; ++k) {
    b.lo[k] = std::min(b.lo[k], lo[k]);
    b.hi[k] = std::max(b.hi[k], hi[k]);
  }
}

// Exact bounds of a rim circle (center, axis, radius) after rotation.
void grow_rim(Bounds& b, const std::array<double, 4>& q, const Point3& center, double radius) {
  const Point3 c = rotate(q, center);
  const Point3 axis = rotate(q, {0, 0, 1});
  Point3 ext;
  for (std::size_t k = 0; k < 3; ++k) ext[k] = radius * std::sqrt(std::max(0.0, 1.0 - axis[k] * axis[k]));
  grow(b, c - ext, c + ext);
}

Bounds rotated_bounds(const std::vector<Primitive>& prims, const std::array<double, 4>& q) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  Bounds b{{inf, inf, inf}, {-inf, -inf, -inf}};
  for (const auto& p : prims) {
    switch (p.kind) {
      case PrimKind::Sphere: {
        const Point3 c = rotate(q, p.center);
        grow(b, c - Point3{p.a, p.a, p.a}, c + Point3{p.a, p.a, p.a});
        break;
      }
      case PrimKind::Box:
        for (int s = 0; s < 8; ++s) {
          const Point3 corner = p.center + Point3{(s & 1 ? 1 : -1) * p.a, (s & 2 ? 1 : -1) * p.b,
                                                  (s & 4 ? 1 : -1) * p.c};
          const Point3 r = rotate(q, corner);
          grow(b, r, r);
        }
        break;
      case PrimKind::Cylinder:
        grow_rim(b, q, p.center + Point3{0, 0, -p.c}, p.a);
        grow_rim(b, q, p.center + Point3{0, 0, p.c}, p.a);
        break;
      case PrimKind::Frustum:
        grow_rim(b, q, p.center + Point3{0, 0, -p.c}, p.a);
        grow_rim(b, q, p.center + Point3{0, 0, p.c}, p.b);
        break;
    }
  }
  return b;
}

}  // namespace

std::string_view to_string(ShapeFamily family) {
  switch (family) {
    case ShapeFamily::Sphere: return "sphere";
    case ShapeFamily::Box: return "box";
    case ShapeFamily::Cylinder: return "cylinder";
    case ShapeFamily::Lamp: return "lamp";
    case ShapeFamily::Chair: return "chair";
  }
  return "unknown";
}

ShapeFamily parse_family(std::string_view name) {
  for (auto f : kShapeFamilies) {
    if (to_string(f) == name) return f;
  }
  throw Error(ErrorKind::InvalidArgument, "unknown shape family '" + std::string(name) + "'");
}

ShapeSpec random_shape(ShapeFamily family, std::uint64_t seed) {
  Rng rng(seed);
  auto in = [&](double lo, double hi) { return lo + (hi - lo) * rng.uniform(); };
  ShapeSpec spec;
  spec.family = family;
  spec.rng_seed = seed;
  switch (family) {
    case ShapeFamily::Sphere: spec.params = {1.0}; break;
    case ShapeFamily::Box: spec.params = {in(0.3, 1.0), in(0.3, 1.0), in(0.3, 1.0)}; break;
    case ShapeFamily::Cylinder: spec.params = {in(0.3, 0.8), in(0.3, 1.0)}; break;
    case ShapeFamily::Lamp:
      spec.params = {in(0.3, 0.5), in(0.03, 0.06), in(0.03, 0.06), in(0.3, 0.6), in(0.3, 0.5), in(0.1, 0.25),
                     in(0.15, 0.3)};
      break;
    case ShapeFamily::Chair:
      spec.params = {in(0.35, 0.5), in(0.35, 0.5), in(0.03, 0.06), in(0.3, 0.5), in(0.03, 0.06), in(0.2, 0.4),
                     in(0.03, 0.06)};
      break;
  }
  // Uniform random rotation.
  const double u1 = rng.uniform(), u2 = rng.uniform(), u3 = rng.uniform();
  const double s1 = std::sqrt(1.0 - u1), s2 = std::sqrt(u1);
  spec.rotation = {s2 * std::cos(2.0 * kPi * u3), s1 * std::sin(2.0 * kPi * u2), s1 * std::cos(2.0 * kPi * u2),
                   s2 * std::sin(2.0 * kPi * u3)};

  const Bounds b = rotated_bounds(primitives(spec), spec.rotation);
  const double extent = std::max({b.hi.x - b.lo.x, b.hi.y - b.lo.y, b.hi.z - b.lo.z});
  spec.scale = 0.98 / extent;
  const Point3 center = 0.5 * (b.lo + b.hi);
  spec.translation = -spec.scale * center;
  return spec;
}

PointCloud sample_surface(const ShapeSpec& spec, std::size_t n, std::uint64_t stream) {
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "sample_surface needs n >= 1");
  const auto prims = primitives(spec);
  std::vector<double> cumulative;
  double total = 0.0;
  for (const auto& p : prims) {
    total += area(p);
    cumulative.push_back(total);
  }
  Rng rng(splitmix64(spec.rng_seed ^ splitmix64(stream + 0x5851f42d4c957f2dULL)));
  std::vector<Point3> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double pick = rng.uniform() * total;
    std::size_t k = 0;
    while (k + 1 < cumulative.size() && pick >= cumulative[k]) ++k;
    out.push_back(apply_pose(spec, sample_primitive(prims[k], rng)));
  }
  return PointCloud(std::move(out));
}

}  // namespace raycomp
