#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "raycomp/geometry.hpp"
#include "raycomp/spatial.hpp"

namespace raycomp {

enum class ChamferMode { Mean, Sum };

inline constexpr double kDefaultFscoreTau = 0.01;
inline constexpr double kDefaultDcdTemp = 1000.0;
inline constexpr double kDefaultScdRadius = 0.01;

// Squared-distance Chamfer. Mean mode divides each direction by its cloud
// size; Sum mode is the plain double sum.
double chamfer(const PointCloud& a, const PointCloud& b, ChamferMode mode = ChamferMode::Mean);

// One-directional term: sum over a of the squared distance to the nearest point of b's index.
double chamfer_directed_sum(const PointCloud& a, const SpatialIndex& b);

double fscore(const PointCloud& result, const PointCloud& gt, double tau = kDefaultFscoreTau);

double dcd(const PointCloud& a, const PointCloud& b, double temp = kDefaultDcdTemp);

struct ScdSplit {
  PointCloud gt1;
  PointCloud gt2;
  PointCloud result1;
  PointCloud result2;
  std::vector<std::size_t> gt1_ids;
  std::vector<std::size_t> gt2_ids;
  std::vector<std::size_t> result1_ids;
  std::vector<std::size_t> result2_ids;
  double radius = kDefaultScdRadius;
};

// GT points near the partial scan form gt1; result points whose nearest
// neighbor in partial U gt2 is a partial point form result1 (ties to partial).
ScdSplit scd_split(const PointCloud& result, const PointCloud& gt, const PointCloud& partial,
                   double radius = kDefaultScdRadius);

struct ScdValue {
  double scd1 = 0.0;
  double scd2 = 0.0;
  bool side1_empty = false;
  bool side2_empty = false;
};

ScdValue scd(const ScdSplit& split);

struct MetricsReport {
  std::string sample_id;
  std::string category;
  double cd = 0.0;
  double fscore = 0.0;
  double dcd = 0.0;
  double scd1 = 0.0;
  double scd2 = 0.0;
  bool scd1_empty = false;
  bool scd2_empty = false;
  std::size_t result_count = 0;
  std::size_t gt_count = 0;
  std::size_t gt1_count = 0;
  std::size_t gt2_count = 0;
};

struct MetricsOptions {
  double tau = kDefaultFscoreTau;
  double temp = kDefaultDcdTemp;
  double radius = kDefaultScdRadius;
};

MetricsReport evaluate(const PointCloud& result, const PointCloud& gt, const PointCloud& partial,
                       const MetricsOptions& options = {});

}  // namespace raycomp
