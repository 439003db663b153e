#pragma once

// Non-adaptive self-scheduling techniques as chunk-size state machines.
//
// Callers serialize next_chunk on a given state; the simulator's master is
// the only writer.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace dlsim {

enum class Technique { STATIC, SS, FSC, GSS, FAC };

inline constexpr Technique kAllTechniques[] = {Technique::STATIC, Technique::SS, Technique::FSC, Technique::GSS,
                                               Technique::FAC};

Technique parse_technique(std::string_view name);
std::string_view to_string(Technique t);

struct SchedulerConfig {
  Technique technique = Technique::SS;
  std::size_t iterations = 1;  // N
  std::size_t workers = 1;     // P
  // FSC profile, seconds. Required iff technique == FSC.
  std::optional<double> fsc_h;
  std::optional<double> fsc_sigma;
  std::optional<double> fsc_mean_iter_seconds;  // reported only

  void validate() const;
};

struct Chunk {
  std::size_t start = 0;
  std::size_t size = 0;

  std::size_t end() const noexcept { return start + size; }
  friend bool operator==(const Chunk&, const Chunk&) = default;
};

struct SchedulerState {
  std::size_t next_index = 0;  // iterations granted so far
  std::size_t remaining = 0;
  std::size_t fac_batch_remaining = 0;
  std::size_t fac_batch_chunk = 0;
  std::size_t fsc_chunk = 0;
  std::vector<bool> static_assigned;

  std::size_t chunks_granted = 0;
};

/// Fixed FSC chunk: ceil((sqrt(2) N h / (sigma P sqrt(ln P)))^(2/3)),
/// clamped to [1, ceil(N/P)]; N when P = 1.
std::size_t fsc_chunk_size(std::size_t iterations, std::size_t workers, double h, double sigma);

SchedulerState init(const SchedulerConfig& config);

/// Next chunk for `worker`, or nullopt once the loop is exhausted (for STATIC,
/// also once this worker has had its block).
std::optional<Chunk> next_chunk(SchedulerState& state, const SchedulerConfig& config, std::size_t worker);

/// Full sequence with workers requesting in round-robin order.
std::vector<Chunk> chunk_sequence(const SchedulerConfig& config);

}  // namespace dlsim
