#pragma once

// Independent reference implementations used only by tests. They restate the
// recurrences and the event timeline directly, without sharing code with the
// library's scheduler or event engine.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

namespace oracle {

enum class Tech { STATIC, SS, FSC, GSS, FAC };

/// Chunk sizes in grant order for round-robin requests.
inline std::vector<std::size_t> chunk_sizes(Tech tech, std::size_t n, std::size_t p, std::size_t fsc_chunk = 1) {
  std::vector<std::size_t> out;
  std::size_t r = n;
  switch (tech) {
    case Tech::STATIC:
      for (std::size_t w = 0; w < p; ++w) {
        const std::size_t s = n / p + (w < n % p ? 1 : 0);
        if (s > 0) out.push_back(s);
      }
      break;
    case Tech::SS:
      out.assign(n, 1);
      break;
    case Tech::FSC:
      while (r > 0) {
        const std::size_t s = std::min(r, fsc_chunk);
        out.push_back(s);
        r -= s;
      }
      break;
    case Tech::GSS:
      while (r > 0) {
        const std::size_t s = (r + p - 1) / p;
        out.push_back(s);
        r -= s;
      }
      break;
    case Tech::FAC:
      while (r > 0) {
        const std::size_t c = std::max<std::size_t>(1, (r + 2 * p - 1) / (2 * p));
        for (std::size_t k = 0; k < p && r > 0; ++k) {
          const std::size_t s = std::min(r, c);
          out.push_back(s);
          r -= s;
        }
      }
      break;
  }
  return out;
}

/// FSC closed form from the literature, as a separate derivation.
inline std::size_t fsc_chunk(std::size_t n, std::size_t p, double h, double sigma) {
  if (p == 1) return n;
  const double l = std::ceil(std::cbrt(std::pow(std::sqrt(2.0) * n * h / (sigma * p * std::sqrt(std::log(p))), 2.0)));
  const double cap = std::ceil(static_cast<double>(n) / p);
  return static_cast<std::size_t>(std::max(1.0, std::min(l, cap)));
}

struct Timeline {
  std::vector<double> finish;
  double makespan = 0.0;
};

/// Master-worker timeline by exhaustive scanning. Every active worker has
/// exactly one outstanding request with a known arrival time; the master
/// always serves the smallest (arrival, worker) next.
///
/// `next_chunk(worker)` returns (start, size) of the next grant; size 0 means
/// that worker is told to stop.
template <class NextChunk>
Timeline master_worker(const std::vector<std::uint64_t>& flop, std::size_t workers, const std::vector<double>& speed,
                       double master_speed, const std::vector<double>& latency, double overhead_flop,
                       double message_bytes, double bandwidth, NextChunk next_chunk) {
  Timeline t;
  t.finish.assign(workers, 0.0);
  std::vector<double> arrival(workers);
  std::vector<bool> active(workers, true);
  for (std::size_t w = 0; w < workers; ++w) arrival[w] = latency[w];
  double master_free = 0.0;

  while (true) {
    std::size_t pick = workers;
    for (std::size_t w = 0; w < workers; ++w) {
      if (!active[w]) continue;
      if (pick == workers || arrival[w] < arrival[pick]) pick = w;
    }
    if (pick == workers) break;
    const double served = std::max(master_free, arrival[pick]);
    const auto [start, size] = next_chunk(pick);
    if (size == 0) {
      active[pick] = false;
      master_free = served;
      continue;
    }
    const double granted = served + overhead_flop / master_speed;
    master_free = granted;
    std::uint64_t work = 0;
    for (std::size_t i = start; i < start + size; ++i) work += flop[i];
    const double received = granted + (latency[pick] + message_bytes / bandwidth);
    const double done = received + static_cast<double>(work) / speed[pick];
    t.finish[pick] = done;
    arrival[pick] = done + latency[pick];
  }
  for (double f : t.finish) t.makespan = std::max(t.makespan, f);
  return t;
}

/// Chunk provider for `master_worker` replaying `chunk_sizes` in grant order;
/// STATIC hands each worker its own block once.
class ChunkFeed {
public:
  ChunkFeed(Tech tech, std::size_t n, std::size_t p, std::size_t fsc = 1)
      : tech_(tech), n_(n), p_(p), sizes_(chunk_sizes(tech, n, p, fsc)), given_(p, false) {}

  std::pair<std::size_t, std::size_t> operator()(std::size_t worker) {
    if (tech_ == Tech::STATIC) {
      if (given_[worker]) return {0, 0};
      given_[worker] = true;
      const std::size_t base = n_ / p_, extra = n_ % p_;
      return {worker * base + std::min(worker, extra), base + (worker < extra ? 1 : 0)};
    }
    if (k_ == sizes_.size()) return {0, 0};
    const std::size_t start = next_;
    next_ += sizes_[k_];
    return {start, sizes_[k_++]};
  }

private:
  Tech tech_;
  std::size_t n_, p_;
  std::vector<std::size_t> sizes_;
  std::vector<bool> given_;
  std::size_t k_ = 0, next_ = 0;
};

/// Pure list scheduling with zero costs: each chunk goes to the worker that
/// frees up first (lowest id on ties). Not valid for STATIC.
inline double list_schedule(const std::vector<std::uint64_t>& flop, const std::vector<std::size_t>& sizes,
                            const std::vector<double>& speed) {
  std::vector<double> ready(speed.size(), 0.0);
  std::size_t idx = 0;
  for (std::size_t s : sizes) {
    std::size_t w = 0;
    for (std::size_t v = 1; v < ready.size(); ++v)
      if (ready[v] < ready[w]) w = v;
    std::uint64_t work = 0;
    for (std::size_t i = idx; i < idx + s; ++i) work += flop[i];
    idx += s;
    ready[w] += static_cast<double>(work) / speed[w];
  }
  return *std::max_element(ready.begin(), ready.end());
}

}  // namespace oracle
