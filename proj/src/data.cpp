#include "raycomp/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <numbers>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "raycomp/spatial.hpp"
#include "rng.hpp"

namespace raycomp {

// ------------------------------------------------------------- scanning

std::vector<std::size_t> simulate_scan_ids(const PointCloud& full, const Point3& cam, std::size_t az_bins,
                                           std::size_t el_bins) {
  if (az_bins == 0 || el_bins == 0) throw Error(ErrorKind::InvalidArgument, "bin counts must be positive");
  if (full.empty()) return {};
  const Bounds b = full.bounds();
  const Point3 center = 0.5 * (b.lo + b.hi);
  double radius = 0.0;
  for (const auto& p : full) radius = std::max(radius, norm(p - center));
  const double cam_dist = norm(cam - center);
  if (!(cam_dist > radius)) {
    throw Error(ErrorKind::CameraInside, "camera lies inside the cloud's bounding sphere");
  }

  const Vec3 fwd = (1.0 / cam_dist) * (center - cam);
  const Vec3 up0 = std::abs(fwd.z) < 0.9 ? Vec3{0, 0, 1} : Vec3{1, 0, 0};
  Vec3 right = cross(fwd, up0);
  right = (1.0 / norm(right)) * right;
  const Vec3 up = cross(right, fwd);

  const std::size_t n = full.size();
  std::vector<double> az(n), el(n);
  double az_max = 0.0, el_max = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 v = full[i] - cam;
    const double f = dot(v, fwd);
    const double x = dot(v, right);
    const double y = dot(v, up);
    az[i] = std::atan2(x, f);
    el[i] = std::atan2(y, std::hypot(f, x));
    az_max = std::max(az_max, std::abs(az[i]));
    el_max = std::max(el_max, std::abs(el[i]));
  }
  az_max = az_max > 0.0 ? az_max * (1.0 + 1e-9) : 1.0;
  el_max = el_max > 0.0 ? el_max * (1.0 + 1e-9) : 1.0;

  auto bin_of = [&](double angle, double range, std::size_t bins) {
    const auto k = static_cast<std::size_t>((angle + range) / (2.0 * range) * static_cast<double>(bins));
    return std::min(k, bins - 1);
  };
  constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> winner(az_bins * el_bins, none);
  std::vector<double> depth(az_bins * el_bins, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t cell = bin_of(el[i], el_max, el_bins) * az_bins + bin_of(az[i], az_max, az_bins);
    const double d = squared_distance(full[i], cam);
    if (d < depth[cell]) {  // strict: lowest id wins ties
      depth[cell] = d;
      winner[cell] = i;
    }
  }
  // A sparsely sampled cell can miss the front surface and expose a point behind
  // it; reject winners that sit well behind a neighbouring cell's winner.
  const double margin = 0.2 * radius;
  std::vector<std::size_t> ids;
  for (std::size_t r = 0; r < el_bins; ++r) {
    for (std::size_t c = 0; c < az_bins; ++c) {
      const std::size_t cell = r * az_bins + c;
      if (winner[cell] == none) continue;
      const double own = std::sqrt(depth[cell]);
      bool occluded = false;
      for (std::size_t rr = r > 0 ? r - 1 : 0; rr <= std::min(r + 1, el_bins - 1) && !occluded; ++rr) {
        for (std::size_t cc = c > 0 ? c - 1 : 0; cc <= std::min(c + 1, az_bins - 1); ++cc) {
          const std::size_t other = rr * az_bins + cc;
          if (winner[other] != none && std::sqrt(depth[other]) + margin < own) {
            occluded = true;
            break;
          }
        }
      }
      if (!occluded) ids.push_back(winner[cell]);
    }
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

PointCloud simulate_scan(const PointCloud& full, const Point3& cam, std::size_t az_bins, std::size_t el_bins) {
  const auto ids = simulate_scan_ids(full, cam, az_bins, el_bins);
  return full.subset(ids);
}

TierSizes TierSizes::scaled(std::size_t divisor) {
  if (divisor == 0 || 2048 % divisor != 0) {
    throw Error(ErrorKind::InvalidArgument, "scale divisor must divide 2048");
  }
  TierSizes s;
  s.partial = 2048 / divisor;
  s.gt1 = 8192 / divisor;
  s.gt2 = 2048 / divisor;
  s.gt3 = 16384 / divisor;
  return s;
}

Point3 sample_camera(std::uint64_t cam_seed, double distance) {
  Rng rng(splitmix64(cam_seed));
  const double z = 2.0 * rng.uniform() - 1.0;
  const double t = 2.0 * std::numbers::pi * rng.uniform();
  const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
  return {distance * s * std::cos(t), distance * s * std::sin(t), distance * z};
}

SamplePair make_pair(const ShapeSpec& spec, std::uint64_t cam_seed, const TierSizes& sizes) {
  SamplePair pair;
  pair.cam = sample_camera(cam_seed, sizes.cam_distance);
  const PointCloud dense = sample_surface(spec, sizes.dense, 1);
  const PointCloud scan = simulate_scan(dense, pair.cam, sizes.bins, sizes.bins);
  if (scan.size() * 4 < sizes.partial) {
    throw Error(ErrorKind::DegenerateScan, std::to_string(scan.size()) + " points survived occlusion");
  }
  if (scan.size() >= sizes.partial) {
    pair.partial = scan.subset(farthest_point_sample(scan, sizes.partial, 0));
  } else {
    std::vector<Point3> padded;
    padded.reserve(sizes.partial);
    for (std::size_t i = 0; i < sizes.partial; ++i) padded.push_back(scan[i % scan.size()]);
    pair.partial = PointCloud(std::move(padded));
  }
  pair.gt1 = sample_surface(spec, sizes.gt1, 2);
  pair.gt2 = sample_surface(spec, sizes.gt2, 3);
  pair.gt3 = sample_surface(spec, sizes.gt3, 4);
  return pair;
}

// ------------------------------------------------------------- file I/O

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

std::string format_float(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(static_cast<float>(v)));
  return buf;
}

struct PlyProperty {
  std::string name;
  std::size_t size = 0;
  char kind = 'f';  // 'i' signed, 'u' unsigned, 'f' floating
};

PlyProperty ply_type(const std::string& type, const std::string& name, std::size_t line) {
  static const std::pair<const char*, PlyProperty> table[] = {
      {"char", {"", 1, 'i'}},   {"int8", {"", 1, 'i'}},     {"uchar", {"", 1, 'u'}},   {"uint8", {"", 1, 'u'}},
      {"short", {"", 2, 'i'}},  {"int16", {"", 2, 'i'}},    {"ushort", {"", 2, 'u'}},  {"uint16", {"", 2, 'u'}},
      {"int", {"", 4, 'i'}},    {"int32", {"", 4, 'i'}},    {"uint", {"", 4, 'u'}},    {"uint32", {"", 4, 'u'}},
      {"float", {"", 4, 'f'}},  {"float32", {"", 4, 'f'}},  {"double", {"", 8, 'f'}}, {"float64", {"", 8, 'f'}},
  };
  for (const auto& [n, p] : table) {
    if (type == n) {
      PlyProperty out = p;
      out.name = name;
      return out;
    }
  }
  throw Error(ErrorKind::ParseError, "line " + std::to_string(line) + ": unknown property type '" + type + "'");
}

double decode_le(const unsigned char* p, const PlyProperty& prop) {
  std::uint64_t raw = 0;
  for (std::size_t i = 0; i < prop.size; ++i) raw |= std::uint64_t{p[i]} << (8 * i);
  if (prop.kind == 'f') {
    if (prop.size == 4) {
      float f;
      const auto r32 = static_cast<std::uint32_t>(raw);
      std::memcpy(&f, &r32, 4);
      return f;
    }
    double d;
    std::memcpy(&d, &raw, 8);
    return d;
  }
  if (prop.kind == 'u') return static_cast<double>(raw);
  const std::uint64_t sign = std::uint64_t{1} << (8 * prop.size - 1);
  if (raw & sign) return static_cast<double>(static_cast<std::int64_t>(raw | ~((sign << 1) - 1)));
  return static_cast<double>(raw);
}

}  // namespace

std::string encode_ply(const PointCloud& cloud, bool binary) {
  std::ostringstream out;
  out << "ply\n"
      << (binary ? "format binary_little_endian 1.0\n" : "format ascii 1.0\n")
      << "element vertex " << cloud.size() << "\n"
      << "property float x\nproperty float y\nproperty float z\nend_header\n";
  std::string s = out.str();
  if (binary) {
    s.reserve(s.size() + cloud.size() * 12);
    for (const auto& p : cloud) {
      for (std::size_t d = 0; d < 3; ++d) {
        const float f = static_cast<float>(p[d]);
        std::uint32_t u;
        std::memcpy(&u, &f, 4);
        for (int k = 0; k < 4; ++k) s.push_back(static_cast<char>((u >> (8 * k)) & 0xff));
      }
    }
  } else {
    for (const auto& p : cloud) s += format_float(p.x) + " " + format_float(p.y) + " " + format_float(p.z) + "\n";
  }
  return s;
}

PointCloud parse_ply(std::string_view bytes) {
  if (bytes.empty()) throw Error(ErrorKind::ParseError, "line 1: empty file");
  std::size_t pos = 0;
  std::size_t line_no = 0;
  auto next_line = [&]() -> std::string {
    if (pos >= bytes.size()) {
      throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no + 1) + ": unexpected end of header");
    }
    const auto nl = bytes.find('\n', pos);
    const auto end = nl == std::string_view::npos ? bytes.size() : nl;
    std::string line(bytes.substr(pos, end - pos));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    pos = nl == std::string_view::npos ? bytes.size() : nl + 1;
    ++line_no;
    return line;
  };

  if (next_line() != "ply") throw Error(ErrorKind::ParseError, "line 1: missing 'ply' magic");
  enum class Fmt { Ascii, BinaryLE } fmt = Fmt::Ascii;
  bool have_format = false;
  bool in_vertex = false;
  bool seen_element = false;
  std::size_t vertex_count = 0;
  std::vector<PlyProperty> props;
  for (;;) {
    const std::string line = next_line();
    std::istringstream ls(line);
    std::string kw;
    ls >> kw;
    if (kw == "end_header") break;
    if (kw.empty() || kw == "comment" || kw == "obj_info") continue;
    if (kw == "format") {
      std::string f;
      ls >> f;
      if (f == "ascii") fmt = Fmt::Ascii;
      else if (f == "binary_little_endian") fmt = Fmt::BinaryLE;
      else throw Error(ErrorKind::UnsupportedFormat, "line " + std::to_string(line_no) + ": format '" + f + "'");
      have_format = true;
    } else if (kw == "element") {
      std::string name;
      long long count = -1;
      ls >> name >> count;
      if (count < 0) throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": bad element count");
      if (!seen_element && name != "vertex") {
        throw Error(ErrorKind::UnsupportedFormat, "line " + std::to_string(line_no) + ": vertex must be the first element");
      }
      in_vertex = name == "vertex";
      if (in_vertex) vertex_count = static_cast<std::size_t>(count);
      seen_element = true;
    } else if (kw == "property") {
      std::string type, name;
      ls >> type >> name;
      if (!in_vertex) continue;
      if (type == "list") {
        throw Error(ErrorKind::UnsupportedFormat, "line " + std::to_string(line_no) + ": list property on vertex");
      }
      props.push_back(ply_type(type, name, line_no));
    } else {
      throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": unexpected '" + kw + "'");
    }
  }
  if (!have_format) throw Error(ErrorKind::ParseError, "missing format line");
  int ix = -1, iy = -1, iz = -1;
  for (std::size_t k = 0; k < props.size(); ++k) {
    if (props[k].name == "x") ix = static_cast<int>(k);
    if (props[k].name == "y") iy = static_cast<int>(k);
    if (props[k].name == "z") iz = static_cast<int>(k);
  }
  if (ix < 0 || iy < 0 || iz < 0) throw Error(ErrorKind::ParseError, "vertex element lacks x/y/z properties");

  std::vector<Point3> pts;
  pts.reserve(vertex_count);
  if (fmt == Fmt::BinaryLE) {
    std::vector<std::size_t> offsets;
    std::size_t stride = 0;
    for (const auto& p : props) {
      offsets.push_back(stride);
      stride += p.size;
    }
    if (bytes.size() - pos < stride * vertex_count) {
      throw Error(ErrorKind::ParseError, "byte " + std::to_string(bytes.size()) + ": vertex data truncated (need " +
                                             std::to_string(pos + stride * vertex_count) + " bytes)");
    }
    const auto* base = reinterpret_cast<const unsigned char*>(bytes.data()) + pos;
    for (std::size_t v = 0; v < vertex_count; ++v) {
      const auto* row = base + v * stride;
      const Point3 p{decode_le(row + offsets[ix], props[ix]), decode_le(row + offsets[iy], props[iy]),
                     decode_le(row + offsets[iz], props[iz])};
      if (!is_finite(p)) {
        throw Error(ErrorKind::ParseError, "byte " + std::to_string(pos + v * stride) + ": non-finite coordinate");
      }
      pts.push_back(p);
    }
  } else {
    for (std::size_t v = 0; v < vertex_count; ++v) {
      const std::string line = next_line();
      std::istringstream ls(line);
      std::vector<double> vals(props.size());
      for (auto& x : vals) {
        if (!(ls >> x)) throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": too few values");
      }
      const Point3 p{vals[ix], vals[iy], vals[iz]};
      if (!is_finite(p)) throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": non-finite coordinate");
      pts.push_back(p);
    }
  }
  return PointCloud(std::move(pts));
}

PointCloud parse_xyz(std::string_view text) {
  std::vector<Point3> pts;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    const auto end = nl == std::string_view::npos ? text.size() : nl;
    const std::string line(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    Point3 p;
    if (!(ls >> p.x >> p.y >> p.z)) {
      throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": expected three numbers");
    }
    if (!is_finite(p)) throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": non-finite coordinate");
    pts.push_back(p);
  }
  if (pts.empty()) throw Error(ErrorKind::ParseError, "line 1: no points");
  return PointCloud(std::move(pts));
}

namespace {

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

}  // namespace

void write_cloud(const PointCloud& cloud, const std::filesystem::path& path, CloudFormat format) {
  const std::string ext = lower_extension(path);
  if (ext == ".xyz") format = CloudFormat::Xyz;
  else if (ext != ".ply") throw Error(ErrorKind::UnsupportedFormat, "extension '" + ext + "'");
  else if (format == CloudFormat::Xyz) format = CloudFormat::PlyBinary;

  if (format == CloudFormat::Xyz) {
    std::string s;
    for (const auto& p : cloud) s += format_float(p.x) + " " + format_float(p.y) + " " + format_float(p.z) + "\n";
    write_file(path, s);
  } else {
    write_file(path, encode_ply(cloud, format == CloudFormat::PlyBinary));
  }
}

PointCloud read_cloud(const std::filesystem::path& path) {
  const std::string ext = lower_extension(path);
  if (ext != ".ply" && ext != ".xyz") throw Error(ErrorKind::UnsupportedFormat, "extension '" + ext + "'");
  const std::string bytes = read_file(path);
  try {
    return ext == ".ply" ? parse_ply(bytes) : parse_xyz(bytes);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

// ------------------------------------------------------------- manifest

std::string encode_manifest(const Manifest& m) {
  nlohmann::ordered_json j;
  j["format_version"] = 1;
  j["seed"] = m.seed;
  j["sizes"] = {{"partial", m.sizes.partial}, {"gt1", m.sizes.gt1},   {"gt2", m.sizes.gt2},
                {"gt3", m.sizes.gt3},         {"dense", m.sizes.dense}, {"bins", m.sizes.bins},
                {"cam_distance", m.sizes.cam_distance}};
  auto samples = nlohmann::ordered_json::array();
  for (const auto& e : m.samples) {
    nlohmann::ordered_json s;
    s["sample_id"] = e.sample_id;
    s["category"] = e.category;
    s["split"] = e.split;
    s["cam"] = {e.cam.x, e.cam.y, e.cam.z};
    s["files"] = {{"partial", e.partial}, {"gt1", e.gt1}, {"gt2", e.gt2}, {"gt3", e.gt3}};
    s["seeds"] = {{"shape", e.shape_seed}, {"cam", e.cam_seed}};
    samples.push_back(std::move(s));
  }
  j["samples"] = std::move(samples);
  return j.dump(2) + "\n";
}

Manifest parse_manifest(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    Manifest m;
    m.seed = j.at("seed").get<std::uint64_t>();
    const auto& s = j.at("sizes");
    m.sizes.partial = s.at("partial");
    m.sizes.gt1 = s.at("gt1");
    m.sizes.gt2 = s.at("gt2");
    m.sizes.gt3 = s.at("gt3");
    m.sizes.dense = s.value("dense", m.sizes.dense);
    m.sizes.bins = s.value("bins", m.sizes.bins);
    m.sizes.cam_distance = s.value("cam_distance", m.sizes.cam_distance);
    for (const auto& e : j.at("samples")) {
      ManifestEntry me;
      me.sample_id = e.at("sample_id");
      me.category = e.at("category");
      me.split = e.at("split");
      const auto& c = e.at("cam");
      me.cam = {c.at(0), c.at(1), c.at(2)};
      const auto& f = e.at("files");
      me.partial = f.at("partial");
      me.gt1 = f.at("gt1");
      me.gt2 = f.at("gt2");
      me.gt3 = f.at("gt3");
      me.shape_seed = e.at("seeds").at("shape");
      me.cam_seed = e.at("seeds").at("cam");
      m.samples.push_back(std::move(me));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("manifest: ") + e.what());
  }
}

Manifest load_manifest(const std::filesystem::path& path) { return parse_manifest(read_file(path)); }

std::vector<Sample> load_samples(const std::filesystem::path& manifest_path, std::string_view split) {
  const Manifest m = load_manifest(manifest_path);
  const auto dir = manifest_path.parent_path();
  std::vector<Sample> out;
  for (const auto& e : m.samples) {
    if (!split.empty() && e.split != split) continue;
    Sample s;
    s.sample_id = e.sample_id;
    s.category = e.category;
    s.cam = e.cam;
    s.partial = read_cloud(dir / e.partial);
    s.gt1 = read_cloud(dir / e.gt1);
    s.gt2 = read_cloud(dir / e.gt2);
    s.gt3 = read_cloud(dir / e.gt3);
    out.push_back(std::move(s));
  }
  return out;
}

// ------------------------------------------------------------ generation

Sample generate_sample(std::uint64_t seed, std::size_t index, const TierSizes& sizes, ManifestEntry* entry) {
  const ShapeFamily family = kShapeFamilies[(index / 2) % kShapeFamilies.size()];
  // Low bit of the shape seed carries the split: even trains, odd tests.
  const std::uint64_t shape_seed = (splitmix64(seed * 0x100000001b3ULL + index) & ~std::uint64_t{1}) | (index & 1);
  const ShapeSpec spec = random_shape(family, shape_seed);
  std::uint64_t cam_seed = splitmix64(shape_seed + 1);
  for (int attempt = 0;; ++attempt) {
    try {
      SamplePair pair = make_pair(spec, cam_seed, sizes);
      char id[32];
      std::snprintf(id, sizeof id, "s%05zu", index);
      Sample s{id, std::string(to_string(family)), std::move(pair.partial), pair.cam,
               std::move(pair.gt1), std::move(pair.gt2), std::move(pair.gt3)};
      if (entry) {
        entry->sample_id = s.sample_id;
        entry->category = s.category;
        entry->split = (shape_seed & 1) ? "test" : "train";
        entry->cam = s.cam;
        entry->shape_seed = shape_seed;
        entry->cam_seed = cam_seed;
      }
      return s;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::DegenerateScan || attempt >= 16) throw;
      ++cam_seed;
    }
  }
}

Manifest generate_dataset(const GenerateOptions& options, const std::filesystem::path& out_dir) {
  if (options.count == 0) throw Error(ErrorKind::InvalidArgument, "count must be positive");
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir / "train", ec);
  fs::create_directories(out_dir / "test", ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create " + out_dir.string() + ": " + ec.message());

  Manifest m;
  m.seed = options.seed;
  m.sizes = options.sizes;
  m.samples.resize(options.count);
  std::vector<std::exception_ptr> errors(options.count);

  auto work = [&](std::size_t i) {
    try {
      ManifestEntry& e = m.samples[i];
      const Sample s = generate_sample(options.seed, i, options.sizes, &e);
      const std::string stem = e.split + "/" + e.sample_id + "_";
      e.partial = stem + "partial.ply";
      e.gt1 = stem + "gt1.ply";
      e.gt2 = stem + "gt2.ply";
      e.gt3 = stem + "gt3.ply";
      write_cloud(s.partial, out_dir / e.partial, options.format);
      write_cloud(s.gt1, out_dir / e.gt1, options.format);
      write_cloud(s.gt2, out_dir / e.gt2, options.format);
      write_cloud(s.gt3, out_dir / e.gt3, options.format);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(options.threads, options.count));
  if (threads == 1) {
    for (std::size_t i = 0; i < options.count; ++i) work(i);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t i = t; i < options.count; i += threads) work(i);
      });
    }
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  write_file(out_dir / "manifest.json", encode_manifest(m));
  return m;
}

}  // namespace raycomp
