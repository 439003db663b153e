#include "dlsim/platform.hpp"

#include "dlsim/error.hpp"
#include "text_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace dlsim {

std::size_t Platform::total_cores() const noexcept {
  std::size_t n = 0;
  for (const auto& h : hosts) n += h.cores;
  return n;
}

void Platform::validate() const {
  if (hosts.empty()) throw std::invalid_argument("platform needs at least one host");
  for (const auto& h : hosts) {
    if (h.cores < 1) throw std::invalid_argument("host '" + h.id + "' needs at least one core");
    if (!(h.core_speed > 0.0) || !std::isfinite(h.core_speed))
      throw std::invalid_argument("host '" + h.id + "' core speed must be > 0");
  }
  if (!(link_bandwidth > 0.0) || !std::isfinite(link_bandwidth))
    throw std::invalid_argument("link bandwidth must be > 0");
  if (!(link_latency >= 0.0) || !std::isfinite(link_latency)) throw std::invalid_argument("link latency must be >= 0");
  if (!(intra_host_latency >= 0.0) || !std::isfinite(intra_host_latency))
    throw std::invalid_argument("intra-host latency must be >= 0");
}

Platform Platform::homogeneous(std::size_t host_count, std::size_t cores, double core_speed, double latency,
                               double bandwidth, double intra_latency) {
  Platform p;
  for (std::size_t i = 0; i < host_count; ++i) p.hosts.push_back({"node" + std::to_string(i), cores, core_speed});
  p.link_latency = latency;
  p.link_bandwidth = bandwidth;
  p.intra_host_latency = intra_latency;
  return p;
}

namespace {

double parse_real(std::string_view value, const std::string& src, std::size_t line, std::string_view key) {
  double v = 0.0;
  if (!detail::parse_number(value, v) || !std::isfinite(v))
    throw ParseError(src, line, "'" + std::string(key) + "' needs a real value, got '" + std::string(value) + "'");
  return v;
}

}  // namespace

Platform read_platform(std::istream& in, std::string_view source) {
  const std::string src(source);
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line) || detail::trim(line) != "#platform v1")
    throw ParseError(src, line.empty() ? 0 : 1, "missing '#platform v1' header");
  ++line_no;

  Platform p;
  bool have_link = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = detail::trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto tokens = detail::split_ws(text);

    if (tokens[0] == "host") {
      if (tokens.size() < 2) throw ParseError(src, line_no, "host line needs an id");
      Host h;
      h.id = std::string(tokens[1]);
      for (const auto& existing : p.hosts)
        if (existing.id == h.id) throw ParseError(src, line_no, "duplicate host id '" + h.id + "'");
      bool cores = false, speed = false;
      for (std::size_t t = 2; t < tokens.size(); ++t) {
        std::string_view key, value;
        if (!detail::split_key_value(tokens[t], key, value))
          throw ParseError(src, line_no, "expected key=value, got '" + std::string(tokens[t]) + "'");
        if (key == "cores") {
          if (!detail::parse_number(value, h.cores) || h.cores == 0)
            throw ParseError(src, line_no, "'cores' needs a positive integer");
          cores = true;
        } else if (key == "speed_flops") {
          h.core_speed = parse_real(value, src, line_no, key);
          if (!(h.core_speed > 0.0)) throw ParseError(src, line_no, "'speed_flops' must be > 0");
          speed = true;
        } else {
          throw ParseError(src, line_no, "unknown host key '" + std::string(key) + "'");
        }
      }
      if (!cores || !speed) throw ParseError(src, line_no, "host line needs cores= and speed_flops=");
      p.hosts.push_back(std::move(h));
    } else if (tokens[0] == "link") {
      if (have_link) throw ParseError(src, line_no, "duplicate link line");
      bool lat = false, bw = false;
      for (std::size_t t = 1; t < tokens.size(); ++t) {
        std::string_view key, value;
        if (!detail::split_key_value(tokens[t], key, value))
          throw ParseError(src, line_no, "expected key=value, got '" + std::string(tokens[t]) + "'");
        if (key == "latency_s") {
          p.link_latency = parse_real(value, src, line_no, key);
          lat = true;
        } else if (key == "bandwidth_Bps") {
          p.link_bandwidth = parse_real(value, src, line_no, key);
          bw = true;
        } else if (key == "intra_latency_s") {
          p.intra_host_latency = parse_real(value, src, line_no, key);
        } else {
          throw ParseError(src, line_no, "unknown link key '" + std::string(key) + "'");
        }
      }
      if (!lat || !bw) throw ParseError(src, line_no, "link line needs latency_s= and bandwidth_Bps=");
      have_link = true;
    } else {
      throw ParseError(src, line_no, "unknown directive '" + std::string(tokens[0]) + "'");
    }
  }
  if (p.hosts.empty()) throw ParseError(src, 0, "no host lines");
  if (!have_link) throw ParseError(src, 0, "no link line");
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(src, 0, e.what());
  }
  return p;
}

Platform load_platform(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open platform '" + path.string() + "'");
  return read_platform(in, path.string());
}

void write_platform(std::ostream& out, const Platform& platform) {
  char buf[128];
  out << "#platform v1\n";
  for (const auto& h : platform.hosts) {
    std::snprintf(buf, sizeof buf, " cores=%zu speed_flops=%.17g\n", h.cores, h.core_speed);
    out << "host " << h.id << buf;
  }
  std::snprintf(buf, sizeof buf, "link latency_s=%.17g bandwidth_Bps=%.17g intra_latency_s=%.17g\n",
                platform.link_latency, platform.link_bandwidth, platform.intra_host_latency);
  out << buf;
}

}  // namespace dlsim
