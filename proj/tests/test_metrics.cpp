#include "doctest.h"

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "raycomp/metrics.hpp"

using namespace raycomp;

TEST_CASE("chamfer examples") {
  std::mt19937_64 rng(1);
  const PointCloud a = oracle::random_cloud(rng, 50);
  CHECK(chamfer(a, a) == 0.0);
  CHECK(chamfer(PointCloud({{0, 0, 0}}), PointCloud({{1, 0, 0}})) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(chamfer(PointCloud({{0, 0, 0}}), PointCloud({{1, 0, 0}}), ChamferMode::Sum) == 2.0);
  CHECK_THROWS_AS(chamfer(PointCloud(), a), Error);
}

TEST_CASE("chamfer is symmetric and matches the double loop") {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 100; ++i) {
    const PointCloud a = oracle::random_cloud(rng, 1 + rng() % 64);
    const PointCloud b = oracle::random_cloud(rng, 1 + rng() % 64);
    CHECK(chamfer(a, b) == chamfer(b, a));
    CHECK(std::abs(chamfer(a, b) - oracle::chamfer(a, b)) <= 1e-12);
  }
}

TEST_CASE("chamfer is zero when each cloud is a subset of the other's point set") {
  const PointCloud a({{0, 0, 0}, {1, 0, 0}});
  const PointCloud b({{1, 0, 0}, {0, 0, 0}, {0, 0, 0}});
  CHECK(chamfer(a, b) == 0.0);
}

TEST_CASE("fscore examples") {
  std::mt19937_64 rng(3);
  const PointCloud a = oracle::random_cloud(rng, 30);
  CHECK(fscore(a, a, 0.01) == 1.0);
  CHECK(fscore(PointCloud({{0, 0, 0}}), PointCloud({{1, 0, 0}}), 0.01) == 0.0);
  CHECK(fscore(PointCloud({{0, 0, 0}, {1, 0, 0}}), PointCloud({{0, 0, 0}, {5, 0, 0}}), 0.01) == 0.5);
}

TEST_CASE("fscore matches the oracle and stays in range") {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 100; ++i) {
    const PointCloud a = oracle::random_cloud(rng, 1 + rng() % 100);
    const PointCloud b = oracle::random_cloud(rng, 1 + rng() % 100);
    const double tau = 0.05 + 0.2 * static_cast<double>(rng() % 10) / 10.0;
    const double f = fscore(a, b, tau);
    CHECK(std::abs(f - oracle::fscore(a, b, tau)) <= 1e-12);
    CHECK(f >= 0.0);
    CHECK(f <= 1.0);
  }
}

TEST_CASE("dcd examples") {
  std::mt19937_64 rng(5);
  const PointCloud a = oracle::random_cloud(rng, 40);
  CHECK(dcd(a, a) == 0.0);
  CHECK(dcd(PointCloud({{0, 0, 0}, {0, 0, 0}}), PointCloud({{0, 0, 0}})) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(dcd(PointCloud({{0, 0, 0}}), PointCloud({{1, 0, 0}}), 1000.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("dcd matches the oracle and stays in range") {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 100; ++i) {
    const PointCloud a = oracle::random_cloud(rng, 1 + rng() % 100, 0.05);
    const PointCloud b = oracle::random_cloud(rng, 1 + rng() % 100, 0.05);
    const double v = dcd(a, b, 1000.0);
    CHECK(std::abs(v - oracle::dcd(a, b, 1000.0)) <= 1e-12);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("scd_split examples") {
  const PointCloud partial({{0, 0, 0}});
  const PointCloud gt({{0, 0, 0.005}, {1, 0, 0}});
  const auto s = scd_split(PointCloud({{0, 0, 0.001}}), gt, partial, 0.01);
  CHECK(s.gt1_ids == std::vector<std::size_t>{0});
  CHECK(s.gt2_ids == std::vector<std::size_t>{1});
  CHECK(s.result1_ids == std::vector<std::size_t>{0});
  CHECK(s.result2_ids.empty());
}

TEST_CASE("scd_split ties go to the observed side") {
  const PointCloud partial({{0, 0, 0}});
  const PointCloud gt({{1, 0, 0}});
  const auto s = scd_split(PointCloud({{0.5, 0, 0}}), gt, partial, 0.01);
  CHECK(s.result1_ids.size() == 1);
}

TEST_CASE("scd_split is a partition matching the oracle") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 100; ++i) {
    const PointCloud partial = oracle::random_cloud(rng, 1 + rng() % 60);
    const PointCloud gt = oracle::random_cloud(rng, 1 + rng() % 200);
    const PointCloud result = oracle::random_cloud(rng, 1 + rng() % 200);
    const double r = 0.05 + 0.1 * static_cast<double>(rng() % 10) / 10.0;
    const auto s = scd_split(result, gt, partial, r);
    const auto o = oracle::scd_split(result, gt, partial, r);
    CHECK(s.gt1_ids == o.gt1);
    CHECK(s.gt2_ids == o.gt2);
    CHECK(s.result1_ids == o.result1);
    CHECK(s.result2_ids == o.result2);
    CHECK(s.gt1.size() + s.gt2.size() == gt.size());
    CHECK(s.result1.size() + s.result2.size() == result.size());
  }
}

TEST_CASE("scd values") {
  std::mt19937_64 rng(8);
  const PointCloud partial = oracle::random_cloud(rng, 50, 0.2);
  std::vector<Point3> pts(partial.points());
  for (const auto& p : oracle::random_cloud(rng, 200, 0.2)) pts.push_back({p.x + 2.0, p.y, p.z});
  const PointCloud gt(pts);
  auto v = scd(scd_split(gt, gt, partial));
  CHECK(v.scd1 == 0.0);
  CHECK(v.scd2 == 0.0);

  // Observed part exact, missing part shifted.
  const auto base = scd_split(gt, gt, partial, 0.01);
  CHECK(base.gt1.size() == 50);
  std::vector<Point3> moved(gt.points());
  for (auto id : base.gt2_ids) moved[id].z += 0.001;
  const auto s = scd_split(PointCloud(moved), gt, partial, 0.01);
  v = scd(s);
  CHECK(v.scd1 == 0.0);
  CHECK(v.scd2 > 0.0);
  CHECK(std::abs(v.scd2 - oracle::chamfer(s.result2, s.gt2)) <= 1e-12);
}

TEST_CASE("empty split side reports zero with a flag") {
  const PointCloud partial({{0, 0, 0}});
  const PointCloud gt({{0, 0, 0.001}});
  const auto v = scd(scd_split(PointCloud({{0, 0, 0}}), gt, partial));
  CHECK(v.side2_empty);
  CHECK(v.scd2 == 0.0);
  CHECK_FALSE(v.side1_empty);
}

TEST_CASE("shrinking the radius empties gt1") {
  std::mt19937_64 rng(9);
  const PointCloud partial = oracle::random_cloud(rng, 30);
  const PointCloud gt = oracle::random_cloud(rng, 100);
  CHECK(scd_split(gt, gt, partial, 1e-9).gt1.empty());
}

TEST_CASE("evaluate on ground truth against itself") {
  std::mt19937_64 rng(10);
  const PointCloud gt = oracle::random_cloud(rng, 200);
  const PointCloud partial = gt.subset(std::vector<std::size_t>{0, 1, 2, 3, 4, 5});
  const auto r = evaluate(gt, gt, partial);
  CHECK(r.cd == 0.0);
  CHECK(r.fscore == 1.0);
  CHECK(r.dcd == 0.0);
  CHECK(r.scd1 == 0.0);
  CHECK(r.scd2 == 0.0);
  CHECK(r.gt1_count + r.gt2_count == 200);
}
