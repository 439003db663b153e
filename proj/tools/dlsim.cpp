// dlsim: trace generation, scheduling sweeps and native comparison.
//
// Exit codes: 0 success, 2 usage error, 1 runtime error.

#include "dlsim/error.hpp"
#include "dlsim/experiment.hpp"
#include "dlsim/workload.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace {

constexpr int kUsageError = 2;
constexpr int kRuntimeError = 1;

class UsageError : public std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  return out;
}

std::string json_path_for(const std::string& csv_path) {
  std::filesystem::path p(csv_path);
  p.replace_extension(".json");
  if (p == std::filesystem::path(csv_path)) p += ".json";
  return p.string();
}

struct TraceArgs {
  std::size_t points = 1000;
  std::uint64_t seed = 7;
  std::string shape = "clustered";
  int width = 200;
  double bin = 1.0;
  double angle = 3.1415926535;
  std::uint64_t cost_test = 10;
  std::uint64_t cost_proj = 25;
  std::uint64_t sched_flop = 0;
  std::uint64_t msg_bytes = 4;
  std::string cloud_in;
  std::string cloud_out;
  std::string output;
  unsigned threads = 1;
};

int cmd_trace(const TraceArgs& a) {
  dlsim::PointCloud cloud;
  if (!a.cloud_in.empty()) {
    std::ifstream in(a.cloud_in, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open cloud '" + a.cloud_in + "'");
    cloud = dlsim::read_cloud(in, a.cloud_in);
  } else {
    if (a.points == 0) throw UsageError("--points must be >= 1");
    dlsim::CloudShape shape;
    try {
      shape = dlsim::parse_cloud_shape(a.shape);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    cloud = dlsim::generate_point_cloud(a.points, a.seed, shape);
  }

  dlsim::SpinImageParams params{a.width, a.bin, a.angle};
  try {
    params.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const dlsim::FlopCostModel cost{a.cost_test, a.cost_proj};
  const auto trace = dlsim::build_trace(cloud, params, cost, a.sched_flop, a.msg_bytes, a.threads);
  dlsim::store_trace(trace, a.output);
  if (!a.cloud_out.empty()) {
    auto out = open_output(a.cloud_out);
    dlsim::write_cloud(out, cloud);
  }
  std::cout << "N=" << trace.size() << " total_flop=" << trace.total_flop() << '\n';
  return 0;
}

int cmd_simulate(const std::string& spec_path, const std::string& output, std::string json_output, unsigned threads) {
  const auto spec = dlsim::load_experiment_spec(spec_path);
  const auto result = dlsim::run_experiment(spec, threads);
  {
    auto out = open_output(output);
    dlsim::write_report_csv(out, result);
  }
  if (json_output.empty()) json_output = json_path_for(output);
  {
    auto out = open_output(json_output);
    dlsim::write_report_json(out, result);
  }
  dlsim::write_summary_table(std::cout, result.rows);
  return 0;
}

std::vector<dlsim::ReportRow> load_report(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open report '" + path + "'");
  return dlsim::read_report_csv(in, path);
}

int cmd_compare(const std::string& report_path, const std::string& native_path, const std::string& output) {
  const auto rows = load_report(report_path);
  const auto natives = dlsim::load_native_timings(native_path);
  const auto entries = dlsim::compare(rows, natives);
  {
    auto out = open_output(output);
    dlsim::write_comparison_csv(out, entries);
  }
  int status = 0;
  for (const auto& e : entries) {
    if (e.complete()) continue;
    std::cerr << "dlsim: technique " << dlsim::to_string(e.technique) << " missing from "
              << (e.t_nat ? "the simulated report" : "the native timings") << '\n';
    status = kRuntimeError;
  }
  return status;
}

int cmd_report(const std::string& input, const std::string& output) {
  const auto rows = load_report(input);
  if (output.empty()) {
    dlsim::write_summary_table(std::cout, rows);
  } else {
    auto out = open_output(output);
    dlsim::write_summary_table(out, rows);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete-event simulation of self-scheduled parallel loops"};
  app.require_subcommand(1);

  TraceArgs targs;
  auto* trace = app.add_subcommand("trace", "Generate a point cloud and write its per-iteration FLOP trace");
  trace->add_option("--points", targs.points, "Number of oriented points (loop iterations)");
  trace->add_option("--seed", targs.seed, "Generator seed");
  trace->add_option("--shape", targs.shape, "uniform_sphere or clustered");
  trace->add_option("--cloud", targs.cloud_in, "Read the point cloud from a '#cloud v1' file instead");
  trace->add_option("--width", targs.width, "Spin-image width W in pixels");
  trace->add_option("--bin", targs.bin, "Bin size B");
  trace->add_option("--angle", targs.angle, "Support angle S in radians");
  trace->add_option("--cost-test", targs.cost_test, "FLOP per angle test");
  trace->add_option("--cost-proj", targs.cost_proj, "FLOP per projection");
  trace->add_option("--sched-flop", targs.sched_flop, "FLOP per chunk calculation");
  trace->add_option("--msg-bytes", targs.msg_bytes, "Bytes per chunk-assignment message");
  trace->add_option("--cloud-output", targs.cloud_out, "Also write the point cloud");
  trace->add_option("--threads", targs.threads, "Worker threads for trace building");
  trace->add_option("--output,-o", targs.output, "Trace file")->required();

  std::string spec_path, sim_output, sim_json;
  unsigned sim_threads = 1;
  auto* simulate = app.add_subcommand("simulate", "Run an experiment spec and write the CSV/JSON report");
  simulate->add_option("--spec", spec_path, "Experiment spec file")->required();
  simulate->add_option("--output,-o", sim_output, "CSV report")->required();
  simulate->add_option("--json", sim_json, "JSON mirror (default: CSV path with .json)");
  simulate->add_option("--threads", sim_threads, "Concurrent simulation runs");

  std::string cmp_report, cmp_native, cmp_output;
  auto* compare = app.add_subcommand("compare", "Percent error of simulated versus native loop times");
  compare->add_option("--report", cmp_report, "CSV report from 'simulate'")->required();
  compare->add_option("--native", cmp_native, "Native timings file")->required();
  compare->add_option("--output,-o", cmp_output, "Comparison CSV")->required();

  std::string rep_input, rep_output;
  auto* report = app.add_subcommand("report", "Print a median summary table of a CSV report");
  report->add_option("--input", rep_input, "CSV report from 'simulate'")->required();
  report->add_option("--output,-o", rep_output, "Write the table here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (*trace) return cmd_trace(targs);
    if (*simulate) return cmd_simulate(spec_path, sim_output, sim_json, sim_threads);
    if (*compare) return cmd_compare(cmp_report, cmp_native, cmp_output);
    if (*report) return cmd_report(rep_input, rep_output);
  } catch (const UsageError& e) {
    std::cerr << "dlsim: " << e.what() << '\n';
    return kUsageError;
  } catch (const dlsim::ParseError& e) {
    std::cerr << "dlsim: " << e.what() << '\n';
    return kRuntimeError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "dlsim: invalid configuration: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "dlsim: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kUsageError;
}
