#include "dlsim/scheduling.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dlsim {

namespace {

std::size_t ceil_div(std::size_t a, std::size_t b) { return a / b + (a % b != 0 ? 1 : 0); }

}  // namespace

Technique parse_technique(std::string_view name) {
  for (Technique t : kAllTechniques)
    if (to_string(t) == name) return t;
  throw std::invalid_argument("unknown scheduling technique '" + std::string(name) + "'");
}

std::string_view to_string(Technique t) {
  switch (t) {
    case Technique::STATIC: return "STATIC";
    case Technique::SS: return "SS";
    case Technique::FSC: return "FSC";
    case Technique::GSS: return "GSS";
    case Technique::FAC: return "FAC";
  }
  return "?";
}

void SchedulerConfig::validate() const {
  if (iterations < 1) throw std::invalid_argument("loop must have at least one iteration");
  if (workers < 1) throw std::invalid_argument("scheduler needs at least one worker");
  if (technique == Technique::FSC) {
    if (!fsc_h || !fsc_sigma) throw std::invalid_argument("FSC requires both h and sigma");
    if (!(*fsc_h > 0.0) || !(*fsc_sigma > 0.0) || !std::isfinite(*fsc_h) || !std::isfinite(*fsc_sigma))
      throw std::invalid_argument("FSC h and sigma must be positive");
  }
}

std::size_t fsc_chunk_size(std::size_t iterations, std::size_t workers, double h, double sigma) {
  if (workers == 1) return iterations;
  const double n = static_cast<double>(iterations);
  const double p = static_cast<double>(workers);
  const double x = (std::sqrt(2.0) * n * h) / (sigma * p * std::sqrt(std::log(p)));
  const double raw = std::ceil(std::pow(x, 2.0 / 3.0));
  const auto cap = ceil_div(iterations, workers);
  if (!(raw >= 1.0)) return 1;
  if (raw >= static_cast<double>(cap)) return cap;
  return static_cast<std::size_t>(raw);
}

SchedulerState init(const SchedulerConfig& config) {
  config.validate();
  SchedulerState s;
  s.remaining = config.iterations;
  if (config.technique == Technique::FSC)
    s.fsc_chunk = fsc_chunk_size(config.iterations, config.workers, *config.fsc_h, *config.fsc_sigma);
  if (config.technique == Technique::STATIC) s.static_assigned.assign(config.workers, false);
  return s;
}

std::optional<Chunk> next_chunk(SchedulerState& state, const SchedulerConfig& config, std::size_t worker) {
  if (worker >= config.workers)
    throw std::invalid_argument("worker id " + std::to_string(worker) + " outside [0, " +
                                std::to_string(config.workers) + ")");
  if (state.remaining == 0) return std::nullopt;

  const std::size_t p = config.workers;
  Chunk chunk{state.next_index, 0};
  switch (config.technique) {
    case Technique::STATIC: {
      if (state.static_assigned[worker]) return std::nullopt;
      state.static_assigned[worker] = true;
      const std::size_t base = config.iterations / p;
      const std::size_t extra = config.iterations % p;
      chunk.start = worker * base + std::min(worker, extra);
      chunk.size = base + (worker < extra ? 1 : 0);
      if (chunk.size == 0) return std::nullopt;
      break;
    }
    case Technique::SS:
      chunk.size = 1;
      break;
    case Technique::FSC:
      chunk.size = std::min(state.remaining, state.fsc_chunk);
      break;
    case Technique::GSS:
      chunk.size = std::min(state.remaining, std::max<std::size_t>(1, ceil_div(state.remaining, p)));
      break;
    case Technique::FAC:
      if (state.fac_batch_remaining == 0) {
        state.fac_batch_chunk = std::max<std::size_t>(1, ceil_div(state.remaining, 2 * p));
        state.fac_batch_remaining = p;
      }
      chunk.size = std::min(state.remaining, state.fac_batch_chunk);
      --state.fac_batch_remaining;
      break;
  }
  state.next_index += chunk.size;
  state.remaining -= chunk.size;
  ++state.chunks_granted;
  return chunk;
}

std::vector<Chunk> chunk_sequence(const SchedulerConfig& config) {
  SchedulerState state = init(config);
  std::vector<Chunk> out;
  for (std::size_t w = 0; state.remaining > 0; w = (w + 1) % config.workers)
    if (auto c = next_chunk(state, config, w)) out.push_back(*c);
  return out;
}

}  // namespace dlsim
