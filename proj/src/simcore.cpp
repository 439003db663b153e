#include "dlsim/simcore.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <queue>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>

namespace dlsim {

ExecutionModel parse_execution_model(std::string_view name) {
  if (name == "master_worker") return ExecutionModel::master_worker;
  if (name == "task_graph") return ExecutionModel::task_graph;
  throw std::invalid_argument("unknown execution model '" + std::string(name) + "'");
}

std::string_view to_string(ExecutionModel m) {
  return m == ExecutionModel::master_worker ? "master_worker" : "task_graph";
}

MasterPlacement parse_master_placement(std::string_view name) {
  if (name == "colocated_core0") return MasterPlacement::colocated_core0;
  if (name == "dedicated_core") return MasterPlacement::dedicated_core;
  throw std::invalid_argument("unknown master placement '" + std::string(name) + "'");
}

std::string_view to_string(MasterPlacement m) {
  return m == MasterPlacement::colocated_core0 ? "colocated_core0" : "dedicated_core";
}

bool event_before(const Event& a, const Event& b) noexcept {
  return std::tie(a.time, a.kind, a.worker) < std::tie(b.time, b.kind, b.worker);
}

double compute_time(std::uint64_t flop, double core_speed) {
  if (!(core_speed > 0.0) || !std::isfinite(core_speed)) throw std::invalid_argument("core speed must be > 0");
  return static_cast<double>(flop) / core_speed;
}

double comm_time(std::uint64_t bytes, double latency, double bandwidth) {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) throw std::invalid_argument("bandwidth must be > 0");
  if (!(latency >= 0.0) || !std::isfinite(latency)) throw std::invalid_argument("latency must be >= 0");
  return latency + static_cast<double>(bytes) / bandwidth;
}

Placement place(const Platform& platform, const SimConfig& config) {
  platform.validate();
  if (config.workers < 1) throw std::invalid_argument("need at least one worker");
  if (config.processes_per_host < 1) throw std::invalid_argument("processes_per_host must be >= 1");
  const bool dedicated = config.master_placement == MasterPlacement::dedicated_core;
  const std::size_t usable = platform.total_cores() - (dedicated ? 1 : 0);
  if (config.workers > usable)
    throw std::invalid_argument(std::to_string(config.workers) + " workers exceed the " + std::to_string(usable) +
                                " cores available" + (dedicated ? " beside a dedicated master" : ""));

  const std::size_t slots = config.workers + (dedicated ? 1 : 0);
  const std::size_t pph = config.processes_per_host;
  if (pph * platform.hosts.size() < slots)
    throw std::invalid_argument("processes_per_host x hosts is smaller than the number of processes");

  std::vector<std::size_t> per_host(platform.hosts.size(), 0);
  Placement out;
  out.master_host = 0;
  out.master_speed = platform.hosts[0].core_speed;
  ++per_host[0];  // the master's slot, own or shared
  for (std::size_t w = 0; w < config.workers; ++w) {
    const std::size_t slot = w + (dedicated ? 1 : 0);
    const std::size_t host = slot / pph;
    if (slot != 0) ++per_host[host];
    out.worker_host.push_back(host);
    out.worker_speed.push_back(platform.hosts[host].core_speed);
    out.worker_latency.push_back(host == out.master_host ? platform.intra_host_latency : platform.link_latency);
  }
  for (std::size_t h = 0; h < per_host.size(); ++h)
    if (per_host[h] > platform.hosts[h].cores)
      throw std::invalid_argument("host '" + platform.hosts[h].id + "' is assigned " + std::to_string(per_host[h]) +
                                  " processes but has " + std::to_string(platform.hosts[h].cores) + " cores");

  if (!config.speed_factors.empty()) {
    if (config.speed_factors.size() != config.workers)
      throw std::invalid_argument("speed_factors needs one entry per worker");
    for (std::size_t w = 0; w < config.workers; ++w) {
      const double f = config.speed_factors[w];
      if (!(f > 0.0) || !std::isfinite(f)) throw std::invalid_argument("speed factors must be > 0");
      out.worker_speed[w] *= f;
    }
  }
  return out;
}

namespace {

struct Prepared {
  Placement placement;
  std::vector<std::uint64_t> prefix;  // prefix[i] = FLOP of iterations [0, i)
  double overhead_seconds = 0.0;
  std::uint64_t message_bytes = 0;
  double bandwidth = 1.0;
};

Prepared prepare(const Platform& platform, const IterationTrace& trace, const SchedulerConfig& scheduler,
                 const SimConfig& config) {
  if (trace.size() == 0) throw std::invalid_argument("trace is empty");
  if (scheduler.iterations != trace.size())
    throw std::invalid_argument("scheduler iteration count " + std::to_string(scheduler.iterations) +
                                " does not match trace length " + std::to_string(trace.size()));
  if (scheduler.workers != config.workers)
    throw std::invalid_argument("scheduler and simulation disagree on the worker count");
  if (!(config.serial_pre_seconds >= 0.0) || !(config.serial_post_seconds >= 0.0))
    throw std::invalid_argument("serial phase durations must be >= 0");
  scheduler.validate();

  Prepared p;
  p.placement = place(platform, config);
  p.prefix.resize(trace.size() + 1, 0);
  for (std::size_t i = 0; i < trace.size(); ++i) p.prefix[i + 1] = p.prefix[i] + trace.iteration_flop[i];
  p.overhead_seconds = compute_time(trace.sched_overhead_flop, p.placement.master_speed);
  p.message_bytes = trace.sched_message_bytes;
  p.bandwidth = platform.link_bandwidth;
  return p;
}

void finish(SimResult& result, const SimConfig& config) {
  result.makespan_loop = 0.0;
  for (double t : result.loop_finish_time) result.makespan_loop = std::max(result.makespan_loop, t);
  result.makespan_app = config.serial_pre_seconds + result.makespan_loop + config.serial_post_seconds;
  result.master_placement = config.master_placement;
}

struct EventAfter {
  bool operator()(const Event& a, const Event& b) const noexcept { return event_before(b, a); }
};

}  // namespace

SimResult run_master_worker(const Platform& platform, const IterationTrace& trace, const SchedulerConfig& scheduler,
                            const SimConfig& config) {
  const Prepared prep = prepare(platform, trace, scheduler, config);
  const Placement& pl = prep.placement;
  const std::size_t workers = config.workers;

  SchedulerState state = init(scheduler);
  SimResult result;
  result.loop_finish_time.assign(workers, 0.0);

  std::priority_queue<Event, std::vector<Event>, EventAfter> events;
  std::set<std::pair<double, std::size_t>> pending;  // (arrival, worker) at the master
  std::vector<Chunk> in_flight(workers);
  bool master_busy = false;

  for (std::size_t w = 0; w < workers; ++w) events.push({pl.worker_latency[w], EventKind::worker_request, w});

  auto serve = [&](double now) {
    while (!master_busy && !pending.empty()) {
      const std::size_t w = pending.begin()->second;
      pending.erase(pending.begin());
      auto chunk = next_chunk(state, scheduler, w);
      if (!chunk) continue;  // worker retires; answering costs the master nothing
      master_busy = true;
      in_flight[w] = *chunk;
      const double granted = now + prep.overhead_seconds;
      result.chunk_log.push_back({granted, w, *chunk});
      events.push({granted, EventKind::chunk_granted, w});
    }
  };

  while (!events.empty()) {
    const Event e = events.top();
    events.pop();
    const std::size_t w = e.worker;
    switch (e.kind) {
      case EventKind::worker_request:
        pending.emplace(e.time, w);
        serve(e.time);
        break;
      case EventKind::chunk_granted:
        master_busy = false;
        events.push({e.time + comm_time(prep.message_bytes, pl.worker_latency[w], prep.bandwidth),
                     EventKind::comm_done, w});
        serve(e.time);
        break;
      case EventKind::comm_done: {
        const Chunk& c = in_flight[w];
        const std::uint64_t flop = prep.prefix[c.end()] - prep.prefix[c.start];
        events.push({e.time + compute_time(flop, pl.worker_speed[w]), EventKind::chunk_done, w});
        break;
      }
      case EventKind::chunk_done: {
        const Chunk& c = in_flight[w];
        result.total_flop_executed += prep.prefix[c.end()] - prep.prefix[c.start];
        result.loop_finish_time[w] = e.time;
        events.push({e.time + pl.worker_latency[w], EventKind::worker_request, w});
        break;
      }
    }
  }
  finish(result, config);
  return result;
}

SimResult run_task_graph(const Platform& platform, const IterationTrace& trace, const SchedulerConfig& scheduler,
                         const SimConfig& config) {
  const Prepared prep = prepare(platform, trace, scheduler, config);
  const Placement& pl = prep.placement;
  const std::size_t workers = config.workers;

  SchedulerState state = init(scheduler);
  SimResult result;
  result.loop_finish_time.assign(workers, 0.0);

  // (time the worker's last computation task ends, worker)
  std::set<std::pair<double, std::size_t>> available;
  for (std::size_t w = 0; w < workers; ++w) available.emplace(0.0, w);
  double master_free = 0.0;

  while (state.remaining > 0 && !available.empty()) {
    const auto [ready, w] = *available.begin();
    available.erase(available.begin());
    auto chunk = next_chunk(state, scheduler, w);
    if (!chunk) continue;

    const double overhead_end = std::max(master_free, ready) + prep.overhead_seconds;
    master_free = overhead_end;
    const double arrived = overhead_end + comm_time(prep.message_bytes, pl.worker_latency[w], prep.bandwidth);
    const std::uint64_t flop = prep.prefix[chunk->end()] - prep.prefix[chunk->start];
    const double done = arrived + compute_time(flop, pl.worker_speed[w]);

    result.chunk_log.push_back({overhead_end, w, *chunk});
    result.total_flop_executed += flop;
    result.loop_finish_time[w] = done;
    available.emplace(done, w);
  }
  finish(result, config);
  return result;
}

SimResult simulate(const Platform& platform, const IterationTrace& trace, const SchedulerConfig& scheduler,
                   const SimConfig& config) {
  return config.model == ExecutionModel::master_worker ? run_master_worker(platform, trace, scheduler, config)
                                                       : run_task_graph(platform, trace, scheduler, config);
}

}  // namespace dlsim
