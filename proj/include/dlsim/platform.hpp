#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace dlsim {

struct Host {
  std::string id;
  std::size_t cores = 1;
  double core_speed = 1.0;  // FLOP/s
};

/// Hosts joined by a uniform latency + bandwidth pipe (no contention).
struct Platform {
  std::vector<Host> hosts;
  double link_latency = 0.0;        // s
  double link_bandwidth = 1.0;      // bytes/s
  double intra_host_latency = 0.0;  // s

  std::size_t total_cores() const noexcept;
  void validate() const;

  /// `host_count` identical hosts.
  static Platform homogeneous(std::size_t host_count, std::size_t cores, double core_speed, double latency,
                              double bandwidth, double intra_latency = 0.0);
};

Platform read_platform(std::istream& in, std::string_view source = {});
Platform load_platform(const std::filesystem::path& path);
void write_platform(std::ostream& out, const Platform& platform);

}  // namespace dlsim
