#pragma once

// Per-iteration workloads for the spin-image loop: synthetic oriented point
// clouds, the spin-image kernel with a fixed FLOP cost model, and the
// line-oriented trace file that drives the simulator.

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

namespace dlsim {

using Vec3 = Eigen::Vector3d;

struct OrientedPoint {
  Vec3 position;
  Vec3 normal;  // unit length
};

using PointCloud = std::vector<OrientedPoint>;

enum class CloudShape { uniform_sphere, clustered };

CloudShape parse_cloud_shape(std::string_view name);
std::string_view to_string(CloudShape shape);

struct SpinImageParams {
  int image_width = 200;            // W, pixels
  double bin_size = 1.0;            // B, model units
  double support_angle = 3.14159;   // S, radians in [0, pi]

  void validate() const;
};

/// W x W histogram, row-major, indexed (k, l).
class SpinImage {
public:
  explicit SpinImage(int width) : width_(width), bins_(static_cast<std::size_t>(width) * width, 0) {}

  int width() const noexcept { return width_; }
  std::uint32_t operator()(int k, int l) const { return bins_[index(k, l)]; }
  std::uint32_t& operator()(int k, int l) { return bins_[index(k, l)]; }
  std::uint64_t total() const noexcept;

private:
  std::size_t index(int k, int l) const { return static_cast<std::size_t>(k) * width_ + l; }

  int width_;
  std::vector<std::uint32_t> bins_;
};

/// FLOP charged per inner-loop point. The bin increment is integer work and
/// costs nothing.
struct FlopCostModel {
  std::uint64_t cost_angle_test = 10;
  std::uint64_t cost_projection = 25;

  friend bool operator==(const FlopCostModel&, const FlopCostModel&) = default;
};

struct IterationTrace {
  std::vector<std::uint64_t> iteration_flop;
  std::uint64_t sched_overhead_flop = 0;
  std::uint64_t sched_message_bytes = 4;
  FlopCostModel cost;  // recorded in the file header

  std::size_t size() const noexcept { return iteration_flop.size(); }
  std::uint64_t total_flop() const noexcept;

  friend bool operator==(const IterationTrace&, const IterationTrace&) = default;
};

/// Deterministic cloud of `count` points.
///
/// uniform_sphere: positions uniform on a sphere of radius 10 with outward
/// normals. clustered: eight patches on the same sphere with random sizes and
/// directional spread, emitted patch by patch so that neighbouring indices
/// share similar normals. Per-iteration cost then varies in contiguous index
/// ranges, which is what makes block scheduling imbalanced.
PointCloud generate_point_cloud(std::size_t count, std::uint64_t seed, CloudShape shape);

struct SpinImageResult {
  SpinImage image;
  std::uint64_t flop = 0;
};

/// One outer iteration of the spin-image loop for cloud[index].
SpinImageResult compute_spin_image(std::span<const OrientedPoint> cloud, const SpinImageParams& params,
                                   std::size_t index, const FlopCostModel& cost);

/// Same FLOP count as compute_spin_image without materializing the image.
std::uint64_t spin_image_flop(std::span<const OrientedPoint> cloud, const SpinImageParams& params,
                              std::size_t index, const FlopCostModel& cost);

/// Trace of the whole loop. `threads` > 1 splits iterations across threads;
/// the result is identical to the sequential one.
IterationTrace build_trace(std::span<const OrientedPoint> cloud, const SpinImageParams& params,
                           const FlopCostModel& cost, std::uint64_t sched_overhead_flop,
                           std::uint64_t sched_message_bytes, unsigned threads = 1);

/// Effective FLOP/s of one core given a measured sequential loop time.
double estimate_core_speed(const IterationTrace& trace, double sequential_loop_seconds);

void write_trace(std::ostream& out, const IterationTrace& trace);
IterationTrace read_trace(std::istream& in, std::string_view source = {});
void store_trace(const IterationTrace& trace, const std::filesystem::path& path);
IterationTrace load_trace(const std::filesystem::path& path);

void write_cloud(std::ostream& out, std::span<const OrientedPoint> cloud);
PointCloud read_cloud(std::istream& in, std::string_view source = {});

}  // namespace dlsim
