#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "raycomp/geometry.hpp"

namespace raycomp {

enum class ShapeFamily { Sphere, Box, Cylinder, Lamp, Chair };

inline constexpr std::array<ShapeFamily, 5> kShapeFamilies = {ShapeFamily::Sphere, ShapeFamily::Box,
                                                               ShapeFamily::Cylinder, ShapeFamily::Lamp,
                                                               ShapeFamily::Chair};

std::string_view to_string(ShapeFamily family);
ShapeFamily parse_family(std::string_view name);

// Family dimensions in model units, a rotation (unit quaternion w,x,y,z),
// then uniform scale and translation applied in that order.
struct ShapeSpec {
  ShapeFamily family = ShapeFamily::Sphere;
  std::vector<double> params;
  std::array<double, 4> rotation = {1.0, 0.0, 0.0, 0.0};
  double scale = 1.0;
  Point3 translation;
  std::uint64_t rng_seed = 0;
};

// Random dimensions and pose for a family, normalized so the surface fits
// inside the centered unit cube.
ShapeSpec random_shape(ShapeFamily family, std::uint64_t seed);

// Area-uniform surface samples. `stream` selects an independent sample set
// for the same shape.
PointCloud sample_surface(const ShapeSpec& spec, std::size_t n, std::uint64_t stream = 0);

inline constexpr std::size_t kDefaultScanBins = 128;

// Angular z-buffer: keeps the point nearest to cam in every (azimuth,
// elevation) bin of the camera frame looking at the cloud's bounds center.
PointCloud simulate_scan(const PointCloud& full, const Point3& cam, std::size_t az_bins = kDefaultScanBins,
                         std::size_t el_bins = kDefaultScanBins);

// Same selection, returned as ascending ids into `full`.
std::vector<std::size_t> simulate_scan_ids(const PointCloud& full, const Point3& cam, std::size_t az_bins,
                                           std::size_t el_bins);

struct TierSizes {
  std::size_t partial = 256;
  std::size_t gt1 = 1024;
  std::size_t gt2 = 256;
  std::size_t gt3 = 2048;
  std::size_t dense = 262144;  // surface samples fed to the scan simulator
  std::size_t bins = kDefaultScanBins;
  double cam_distance = 1.5;

  // Full tiers (8192/2048/16384 with 2048-point scans) divided by `divisor`.
  static TierSizes scaled(std::size_t divisor);
};

struct SamplePair {
  PointCloud partial;
  Point3 cam;
  PointCloud gt1;
  PointCloud gt2;
  PointCloud gt3;
};

Point3 sample_camera(std::uint64_t cam_seed, double distance);

SamplePair make_pair(const ShapeSpec& spec, std::uint64_t cam_seed, const TierSizes& sizes = {});

// ---- files

enum class CloudFormat { PlyAscii, PlyBinary, Xyz };

void write_cloud(const PointCloud& cloud, const std::filesystem::path& path,
                 CloudFormat format = CloudFormat::PlyBinary);
PointCloud read_cloud(const std::filesystem::path& path);

std::string encode_ply(const PointCloud& cloud, bool binary);
PointCloud parse_ply(std::string_view bytes);
PointCloud parse_xyz(std::string_view text);

// ---- dataset manifest

struct ManifestEntry {
  std::string sample_id;
  std::string category;
  std::string split;  // "train" or "test"
  Point3 cam;
  std::uint64_t shape_seed = 0;
  std::uint64_t cam_seed = 0;
  std::string partial;
  std::string gt1;
  std::string gt2;
  std::string gt3;
};

struct Manifest {
  std::uint64_t seed = 0;
  TierSizes sizes;
  std::vector<ManifestEntry> samples;
};

std::string encode_manifest(const Manifest& m);
Manifest parse_manifest(std::string_view text);

Manifest load_manifest(const std::filesystem::path& path);

struct Sample {
  std::string sample_id;
  std::string category;
  PointCloud partial;
  Point3 cam;
  PointCloud gt1;
  PointCloud gt2;
  PointCloud gt3;
};

// Loads every sample of `split` (empty string for all); paths resolve
// relative to the manifest's directory.
std::vector<Sample> load_samples(const std::filesystem::path& manifest_path, std::string_view split);

struct GenerateOptions {
  std::size_t count = 200;
  std::uint64_t seed = 7;
  TierSizes sizes;
  CloudFormat format = CloudFormat::PlyBinary;
  std::size_t threads = 1;
};

// Writes {train,test}/{id}_{partial|gt1|gt2|gt3}.ply plus manifest.json.
Manifest generate_dataset(const GenerateOptions& options, const std::filesystem::path& out_dir);

// In-memory counterpart of generate_dataset for one index.
Sample generate_sample(std::uint64_t seed, std::size_t index, const TierSizes& sizes, ManifestEntry* entry = nullptr);

}  // namespace raycomp
