#pragma once

// Technique x model x repetition sweeps and their reports.

#include "dlsim/metrics.hpp"
#include "dlsim/platform.hpp"
#include "dlsim/scheduling.hpp"
#include "dlsim/simcore.hpp"
#include "dlsim/workload.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dlsim {

/// Parameters for generating a trace instead of reading one.
struct TraceGeneration {
  std::size_t points = 1000;
  std::uint64_t seed = 7;
  CloudShape shape = CloudShape::clustered;
  SpinImageParams params;
  FlopCostModel cost;
  std::uint64_t sched_flop = 0;
  std::uint64_t msg_bytes = 4;

  IterationTrace build(unsigned threads = 1) const;
};

struct ExperimentSpec {
  std::filesystem::path platform_path;
  std::optional<Platform> platform;  // takes precedence over platform_path
  std::filesystem::path trace_path;
  std::optional<TraceGeneration> generate;  // used when trace_path is empty
  std::optional<std::filesystem::path> native_timings_path;

  std::vector<Technique> techniques;
  std::vector<ExecutionModel> models;
  std::size_t repetitions = 1;
  std::uint64_t perturbation_seed = 0;
  double perturbation_amplitude = 0.01;

  std::size_t workers = 1;
  std::size_t processes_per_host = 1;
  MasterPlacement master_placement = MasterPlacement::colocated_core0;
  double serial_pre_seconds = 0.0;
  double serial_post_seconds = 0.0;
  std::optional<double> fsc_h;
  std::optional<double> fsc_sigma;

  void validate() const;
  /// Everything except the input sources.
  void validate_sweep() const;
};

/// Flat `key = value` file with optional [inputs], [workload] and [sweep]
/// section headers. Relative paths resolve against `base_dir`.
ExperimentSpec read_experiment_spec(std::istream& in, std::string_view source, const std::filesystem::path& base_dir);
ExperimentSpec load_experiment_spec(const std::filesystem::path& path);

/// Lines `technique=<name> t_loop_s=<real>`.
using NativeTimings = std::map<Technique, double>;
NativeTimings read_native_timings(std::istream& in, std::string_view source = {});
NativeTimings load_native_timings(const std::filesystem::path& path);

/// Per-worker speed multipliers for repetition `rep`: 1 for rep 0, otherwise
/// uniform in [1 - amplitude, 1 + amplitude] from (seed, rep, worker).
std::vector<double> perturbation_factors(std::uint64_t seed, std::size_t rep, std::size_t workers, double amplitude);

struct RunRecord {
  Technique technique;
  ExecutionModel model;
  std::size_t repetition = 0;
  double t_par = 0.0;
  double t_par_loop = 0.0;
  double cov = 0.0;
  std::size_t chunks = 0;
};

struct ReportRow {
  Technique technique;
  ExecutionModel model;
  Aggregate t_par;
  Aggregate t_par_loop;
  Aggregate cov;
  std::optional<double> percent_error;  // of median t_par_loop, iff natives given
};

struct ExperimentResult {
  std::vector<ReportRow> rows;  // technique enum order, then model
  std::vector<RunRecord> runs;
  MasterPlacement master_placement = MasterPlacement::colocated_core0;
  std::size_t iterations = 0;
  std::uint64_t total_flop = 0;
};

/// Runs every (technique, model, repetition). `threads` > 1 dispatches runs
/// concurrently; the result does not depend on it.
ExperimentResult run_experiment(const ExperimentSpec& spec, const Platform& platform, const IterationTrace& trace,
                                const NativeTimings* natives = nullptr, unsigned threads = 1);

/// Loads inputs named by the spec, then runs it.
ExperimentResult run_experiment(const ExperimentSpec& spec, unsigned threads = 1);

/// %.6g
std::string format_decimal(double v);

inline constexpr std::string_view kReportHeader = "technique,model,stat,t_par_s,t_par_loop_s,cov";

void write_report_csv(std::ostream& out, const ExperimentResult& result);
void write_report_json(std::ostream& out, const ExperimentResult& result);

/// Inverse of write_report_csv, at its printed precision.
std::vector<ReportRow> read_report_csv(std::istream& in, std::string_view source = {});

struct ComparisonEntry {
  Technique technique;
  std::optional<ExecutionModel> model;
  std::optional<double> t_nat;
  std::optional<double> t_sim;
  std::optional<double> percent_error;

  bool complete() const noexcept { return percent_error.has_value(); }
};

/// Per (technique, model) signed percent error of the median simulated loop
/// time against the native loop time. Techniques present on one side only
/// yield incomplete entries.
std::vector<ComparisonEntry> compare(const std::vector<ReportRow>& rows, const NativeTimings& natives);

inline constexpr std::string_view kComparisonHeader = "technique,model,t_nat_s,t_sim_s,percent_error,status";
void write_comparison_csv(std::ostream& out, const std::vector<ComparisonEntry>& entries);

/// Medians laid out one column per (technique, model).
void write_summary_table(std::ostream& out, const std::vector<ReportRow>& rows);

}  // namespace dlsim
