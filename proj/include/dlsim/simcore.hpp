#pragma once

// Deterministic discrete-event execution of a loop trace under a scheduling
// technique, in a master-worker or a task-graph representation.
//
// Times are seconds from the start of the parallel loop. Work is FLOP,
// converted to time with the executing core's speed.

#include "dlsim/platform.hpp"
#include "dlsim/scheduling.hpp"
#include "dlsim/workload.hpp"

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace dlsim {

enum class ExecutionModel { master_worker, task_graph };
enum class MasterPlacement { colocated_core0, dedicated_core };

ExecutionModel parse_execution_model(std::string_view name);
std::string_view to_string(ExecutionModel m);
MasterPlacement parse_master_placement(std::string_view name);
std::string_view to_string(MasterPlacement m);

struct SimConfig {
  ExecutionModel model = ExecutionModel::master_worker;
  std::size_t workers = 1;
  std::size_t processes_per_host = 1;
  MasterPlacement master_placement = MasterPlacement::colocated_core0;
  double serial_pre_seconds = 0.0;
  double serial_post_seconds = 0.0;
  /// Per-worker multiplier on core speed; empty means all 1.
  std::vector<double> speed_factors;
};

/// Where each process runs once a SimConfig is laid onto a Platform.
struct Placement {
  std::size_t master_host = 0;
  double master_speed = 0.0;
  std::vector<std::size_t> worker_host;
  std::vector<double> worker_speed;
  std::vector<double> worker_latency;  // one-way, worker <-> master
};

/// Process slots fill hosts in order, processes_per_host at a time. A
/// dedicated master takes slot 0; a colocated master shares slot 0 with
/// worker 0 and only contributes scheduling time.
Placement place(const Platform& platform, const SimConfig& config);

struct ChunkRecord {
  double time = 0.0;  // when the master finished computing the chunk
  std::size_t worker = 0;
  Chunk chunk;

  friend bool operator==(const ChunkRecord&, const ChunkRecord&) = default;
};

struct SimResult {
  std::vector<double> loop_finish_time;  // per worker, 0 for a worker that got no chunk
  double makespan_loop = 0.0;
  double makespan_app = 0.0;
  std::vector<ChunkRecord> chunk_log;
  std::uint64_t total_flop_executed = 0;
  MasterPlacement master_placement = MasterPlacement::colocated_core0;

  friend bool operator==(const SimResult&, const SimResult&) = default;
};

enum class EventKind { worker_request, chunk_granted, chunk_done, comm_done };

struct Event {
  double time = 0.0;
  EventKind kind = EventKind::worker_request;
  std::size_t worker = 0;
};

/// Total order on (time, kind, worker).
bool event_before(const Event& a, const Event& b) noexcept;

double compute_time(std::uint64_t flop, double core_speed);
double comm_time(std::uint64_t bytes, double latency, double bandwidth);

/// Workers request chunks from a master that holds the scheduler state.
/// Request: one-way latency. Chunk calculation: sched_overhead_flop on the
/// master core, serialized. Grant: latency + message bytes / bandwidth.
/// Equal-time requests are served in worker-id order.
SimResult run_master_worker(const Platform& platform, const IterationTrace& trace, const SchedulerConfig& scheduler,
                            const SimConfig& config);

/// The chunk sequence as a task graph: per scheduling step an overhead task
/// on the master, then the grant message, then the chunk on the
/// earliest-available worker.
SimResult run_task_graph(const Platform& platform, const IterationTrace& trace, const SchedulerConfig& scheduler,
                         const SimConfig& config);

/// Dispatches on config.model.
SimResult simulate(const Platform& platform, const IterationTrace& trace, const SchedulerConfig& scheduler,
                   const SimConfig& config);

}  // namespace dlsim
