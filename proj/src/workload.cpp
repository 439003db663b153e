#include "dlsim/workload.hpp"

#include "dlsim/error.hpp"
#include "dlsim/rng.hpp"
#include "text_io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>

namespace dlsim {

namespace {

constexpr double kSphereRadius = 10.0;
constexpr int kClusterCount = 8;
constexpr double kClusterSpread = 0.2;
// Tolerance for absorbing rounding outside the domain of acos and sqrt.
constexpr double kDomainSlack = 1e-12;

Vec3 random_unit(CounterRng& rng) {
  const double z = rng.next_signed();
  const double phi = 2.0 * std::numbers::pi * rng.next_unit();
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  return {r * std::cos(phi), r * std::sin(phi), z};
}

OrientedPoint on_sphere(const Vec3& direction) {
  const Vec3 n = direction.normalized();
  return {kSphereRadius * n, n};
}

struct PairGeometry {
  bool passes_angle = false;
  bool finite = true;
  double k = 0.0;
  double l = 0.0;
};

// Lines 5-11 of the spin-image loop for one (P, X) pair.
PairGeometry pair_geometry(const OrientedPoint& p, const OrientedPoint& x, const SpinImageParams& params) {
  PairGeometry g;
  double cosine = p.normal.dot(x.normal);
  if (cosine > 1.0 && cosine <= 1.0 + kDomainSlack) cosine = 1.0;
  if (cosine < -1.0 && cosine >= -1.0 - kDomainSlack) cosine = -1.0;
  const double angle = std::acos(cosine);
  if (!std::isfinite(angle)) {
    g.finite = false;
    return g;
  }
  if (!(angle <= params.support_angle)) return g;
  g.passes_angle = true;

  const Vec3 d = x.position - p.position;
  const double along = p.normal.dot(d);
  const double radial_sq = std::max(0.0, d.squaredNorm() - along * along);
  g.k = std::ceil((params.image_width / 2.0 - along) / params.bin_size);
  g.l = std::ceil(std::sqrt(radial_sq) / params.bin_size);
  g.finite = std::isfinite(g.k) && std::isfinite(g.l);
  return g;
}

void check_index(std::span<const OrientedPoint> cloud, std::size_t index) {
  if (index >= cloud.size())
    throw std::invalid_argument("spin-image index " + std::to_string(index) + " out of range for cloud of " +
                                std::to_string(cloud.size()) + " points");
}

}  // namespace

CloudShape parse_cloud_shape(std::string_view name) {
  if (name == "uniform_sphere") return CloudShape::uniform_sphere;
  if (name == "clustered") return CloudShape::clustered;
  throw std::invalid_argument("unknown cloud shape '" + std::string(name) + "'");
}

std::string_view to_string(CloudShape shape) {
  return shape == CloudShape::uniform_sphere ? "uniform_sphere" : "clustered";
}

void SpinImageParams::validate() const {
  if (image_width < 1) throw std::invalid_argument("image width must be >= 1");
  if (!(bin_size > 0.0) || !std::isfinite(bin_size)) throw std::invalid_argument("bin size must be > 0");
  if (!(support_angle >= 0.0 && support_angle <= std::numbers::pi))
    throw std::invalid_argument("support angle must be in [0, pi]");
}

std::uint64_t SpinImage::total() const noexcept {
  return std::accumulate(bins_.begin(), bins_.end(), std::uint64_t{0});
}

std::uint64_t IterationTrace::total_flop() const noexcept {
  return std::accumulate(iteration_flop.begin(), iteration_flop.end(), std::uint64_t{0});
}

PointCloud generate_point_cloud(std::size_t count, std::uint64_t seed, CloudShape shape) {
  if (count == 0) throw std::invalid_argument("point cloud size must be >= 1");
  PointCloud cloud;
  cloud.reserve(count);

  if (shape == CloudShape::uniform_sphere) {
    CounterRng rng(CounterRng::derive(seed, 1));
    for (std::size_t i = 0; i < count; ++i) cloud.push_back(on_sphere(random_unit(rng)));
    return cloud;
  }

  CounterRng layout(CounterRng::derive(seed, 2));
  std::array<Vec3, kClusterCount> centers;
  std::array<double, kClusterCount> weights;
  for (int c = 0; c < kClusterCount; ++c) {
    centers[c] = random_unit(layout);
    const double u = layout.next_unit();
    weights[c] = u * u + 0.05;
  }
  const double weight_sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::array<std::size_t, kClusterCount> sizes;
  std::size_t assigned = 0;
  for (int c = 0; c < kClusterCount; ++c) {
    sizes[c] = static_cast<std::size_t>(std::floor(weights[c] / weight_sum * static_cast<double>(count)));
    assigned += sizes[c];
  }
  sizes[kClusterCount - 1] += count - assigned;

  CounterRng jitter(CounterRng::derive(seed, 3));
  for (int c = 0; c < kClusterCount; ++c) {
    for (std::size_t i = 0; i < sizes[c]; ++i) {
      Vec3 d = centers[c];
      for (int axis = 0; axis < 3; ++axis) d[axis] += kClusterSpread * jitter.next_normal();
      if (d.squaredNorm() < 1e-24) d = centers[c];
      cloud.push_back(on_sphere(d));
    }
  }
  return cloud;
}

SpinImageResult compute_spin_image(std::span<const OrientedPoint> cloud, const SpinImageParams& params,
                                   std::size_t index, const FlopCostModel& cost) {
  check_index(cloud, index);
  params.validate();
  SpinImageResult result{SpinImage(params.image_width), 0};
  const OrientedPoint& p = cloud[index];
  const double width = params.image_width;
  for (const OrientedPoint& x : cloud) {
    result.flop += cost.cost_angle_test;
    const PairGeometry g = pair_geometry(p, x, params);
    if (!g.passes_angle || !g.finite) continue;
    result.flop += cost.cost_projection;
    if (g.k >= 0.0 && g.k < width && g.l >= 0.0 && g.l < width)
      ++result.image(static_cast<int>(g.k), static_cast<int>(g.l));
  }
  return result;
}

std::uint64_t spin_image_flop(std::span<const OrientedPoint> cloud, const SpinImageParams& params,
                              std::size_t index, const FlopCostModel& cost) {
  check_index(cloud, index);
  const OrientedPoint& p = cloud[index];
  std::uint64_t flop = 0;
  for (const OrientedPoint& x : cloud) {
    flop += cost.cost_angle_test;
    const PairGeometry g = pair_geometry(p, x, params);
    if (g.passes_angle && g.finite) flop += cost.cost_projection;
  }
  return flop;
}

IterationTrace build_trace(std::span<const OrientedPoint> cloud, const SpinImageParams& params,
                           const FlopCostModel& cost, std::uint64_t sched_overhead_flop,
                           std::uint64_t sched_message_bytes, unsigned threads) {
  if (cloud.empty()) throw std::invalid_argument("cannot build a trace from an empty cloud");
  params.validate();
  IterationTrace trace;
  trace.cost = cost;
  trace.sched_overhead_flop = sched_overhead_flop;
  trace.sched_message_bytes = sched_message_bytes;
  trace.iteration_flop.resize(cloud.size());

  auto fill = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) trace.iteration_flop[i] = spin_image_flop(cloud, params, i, cost);
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(cloud.size())));
  if (threads == 1) {
    fill(0, cloud.size());
    return trace;
  }
  std::vector<std::jthread> pool;
  const std::size_t per = (cloud.size() + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t begin = std::min(cloud.size(), t * per);
    const std::size_t end = std::min(cloud.size(), begin + per);
    pool.emplace_back(fill, begin, end);
  }
  pool.clear();
  return trace;
}

double estimate_core_speed(const IterationTrace& trace, double sequential_loop_seconds) {
  if (!(sequential_loop_seconds > 0.0) || !std::isfinite(sequential_loop_seconds))
    throw std::invalid_argument("sequential loop time must be > 0");
  return static_cast<double>(trace.total_flop()) / sequential_loop_seconds;
}

// ---------------------------------------------------------------------------
// Trace files

void write_trace(std::ostream& out, const IterationTrace& trace) {
  out << "#trace v1 N=" << trace.size() << " cost_test=" << trace.cost.cost_angle_test
      << " cost_proj=" << trace.cost.cost_projection << " sched_flop=" << trace.sched_overhead_flop
      << " msg_bytes=" << trace.sched_message_bytes << '\n';
  for (std::uint64_t f : trace.iteration_flop) out << f << '\n';
}

IterationTrace read_trace(std::istream& in, std::string_view source) {
  const std::string src(source);
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError(src, 0, "missing '#trace v1' header");
  ++line_no;

  const auto tokens = detail::split_ws(line);
  if (tokens.size() < 2 || tokens[0] != "#trace" || tokens[1] != "v1")
    throw ParseError(src, line_no, "missing '#trace v1' header");

  IterationTrace trace;
  std::uint64_t declared = 0;
  bool seen[5] = {};
  static constexpr std::string_view keys[5] = {"N", "cost_test", "cost_proj", "sched_flop", "msg_bytes"};
  for (std::size_t t = 2; t < tokens.size(); ++t) {
    std::string_view key, value;
    if (!detail::split_key_value(tokens[t], key, value))
      throw ParseError(src, line_no, "malformed header field '" + std::string(tokens[t]) + "'");
    const auto it = std::find(std::begin(keys), std::end(keys), key);
    if (it == std::end(keys)) throw ParseError(src, line_no, "unknown header key '" + std::string(key) + "'");
    const auto slot = static_cast<std::size_t>(it - std::begin(keys));
    if (seen[slot]) throw ParseError(src, line_no, "duplicate header key '" + std::string(key) + "'");
    std::uint64_t v = 0;
    if (!detail::parse_number(value, v))
      throw ParseError(src, line_no, "header key '" + std::string(key) + "' needs a non-negative integer");
    seen[slot] = true;
    switch (slot) {
      case 0: declared = v; break;
      case 1: trace.cost.cost_angle_test = v; break;
      case 2: trace.cost.cost_projection = v; break;
      case 3: trace.sched_overhead_flop = v; break;
      case 4: trace.sched_message_bytes = v; break;
    }
  }
  for (std::size_t k = 0; k < 5; ++k)
    if (!seen[k]) throw ParseError(src, line_no, "header is missing '" + std::string(keys[k]) + "='");
  if (declared == 0) throw ParseError(src, line_no, "trace must contain at least one iteration");

  trace.iteration_flop.reserve(declared);
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = detail::trim(line);
    if (text.empty()) {
      if (trace.iteration_flop.size() == declared) continue;  // trailing blank lines
      throw ParseError(src, line_no, "empty line");
    }
    if (trace.iteration_flop.size() == declared)
      throw ParseError(src, line_no, "more entries than the declared N=" + std::to_string(declared));
    if (text.front() == '-') throw ParseError(src, line_no, "negative FLOP count '" + std::string(text) + "'");
    std::uint64_t v = 0;
    if (!detail::parse_number(text, v)) throw ParseError(src, line_no, "malformed FLOP count '" + std::string(text) + "'");
    trace.iteration_flop.push_back(v);
  }
  if (trace.iteration_flop.size() != declared)
    throw ParseError(src, 0, "header declares N=" + std::to_string(declared) + " but file has " +
                                 std::to_string(trace.iteration_flop.size()) + " entries");
  return trace;
}

void store_trace(const IterationTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  write_trace(out, trace);
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

IterationTrace load_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open trace '" + path.string() + "'");
  return read_trace(in, path.string());
}

// ---------------------------------------------------------------------------
// Cloud files

void write_cloud(std::ostream& out, std::span<const OrientedPoint> cloud) {
  out << "#cloud v1 M=" << cloud.size() << '\n';
  char buf[64];
  for (const auto& p : cloud) {
    for (int i = 0; i < 3; ++i) {
      std::snprintf(buf, sizeof buf, i == 0 ? "%.17g" : " %.17g", p.position[i]);
      out << buf;
    }
    for (int i = 0; i < 3; ++i) {
      std::snprintf(buf, sizeof buf, " %.17g", p.normal[i]);
      out << buf;
    }
    out << '\n';
  }
}

PointCloud read_cloud(std::istream& in, std::string_view source) {
  const std::string src(source);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(src, 0, "missing '#cloud v1' header");
  const auto header = detail::split_ws(line);
  std::string_view key, value;
  std::size_t declared = 0;
  if (header.size() != 3 || header[0] != "#cloud" || header[1] != "v1" ||
      !detail::split_key_value(header[2], key, value) || key != "M" || !detail::parse_number(value, declared) ||
      declared == 0)
    throw ParseError(src, 1, "expected '#cloud v1 M=<positive int>'");

  PointCloud cloud;
  cloud.reserve(declared);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = detail::split_ws(line);
    if (fields.empty() && cloud.size() == declared) continue;
    if (cloud.size() == declared) throw ParseError(src, line_no, "more points than the declared M");
    if (fields.size() != 6) throw ParseError(src, line_no, "expected 6 reals 'px py pz nx ny nz'");
    double v[6];
    for (int i = 0; i < 6; ++i)
      if (!detail::parse_number(fields[i], v[i]) || !std::isfinite(v[i]))
        throw ParseError(src, line_no, "malformed real '" + std::string(fields[i]) + "'");
    OrientedPoint p{{v[0], v[1], v[2]}, {v[3], v[4], v[5]}};
    if (std::abs(p.normal.norm() - 1.0) > 1e-9) throw ParseError(src, line_no, "normal is not unit length");
    cloud.push_back(p);
  }
  if (cloud.size() != declared)
    throw ParseError(src, 0, "header declares M=" + std::to_string(declared) + " but file has " +
                                 std::to_string(cloud.size()) + " points");
  return cloud;
}

}  // namespace dlsim
