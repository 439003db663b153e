#include "dlsim/experiment.hpp"

#include "dlsim/error.hpp"
#include "dlsim/rng.hpp"
#include "text_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <mutex>
#include <thread>
#include <tuple>

namespace dlsim {

IterationTrace TraceGeneration::build(unsigned threads) const {
  const PointCloud cloud = generate_point_cloud(points, seed, shape);
  return build_trace(cloud, params, cost, sched_flop, msg_bytes, threads);
}

void ExperimentSpec::validate() const {
  validate_sweep();
  if (!platform && platform_path.empty()) throw std::invalid_argument("experiment needs a platform");
  if (trace_path.empty() && !generate) throw std::invalid_argument("experiment needs a trace or workload parameters");
}

void ExperimentSpec::validate_sweep() const {
  if (techniques.empty()) throw std::invalid_argument("experiment needs at least one technique");
  if (models.empty()) throw std::invalid_argument("experiment needs at least one execution model");
  if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
  if (!(perturbation_amplitude >= 0.0 && perturbation_amplitude < 1.0))
    throw std::invalid_argument("perturbation amplitude must be in [0, 1)");
  if (workers < 1) throw std::invalid_argument("workers must be >= 1");
  if (processes_per_host < 1) throw std::invalid_argument("processes_per_host must be >= 1");
  if (!(serial_pre_seconds >= 0.0) || !(serial_post_seconds >= 0.0))
    throw std::invalid_argument("serial phase durations must be >= 0");
  if (std::find(techniques.begin(), techniques.end(), Technique::FSC) != techniques.end() &&
      (!fsc_h || !fsc_sigma))
    throw std::invalid_argument("FSC needs fsc_h and fsc_sigma in the experiment spec");
}

// ---------------------------------------------------------------------------
// Spec file

namespace {

enum class Section { any, inputs, workload, sweep };

struct KeyInfo {
  std::string_view key;
  Section section;
};

constexpr KeyInfo kKeys[] = {
    {"platform", Section::inputs},          {"trace", Section::inputs},
    {"native_timings", Section::inputs},    {"points", Section::workload},
    {"seed", Section::workload},            {"shape", Section::workload},
    {"width", Section::workload},           {"bin", Section::workload},
    {"angle", Section::workload},           {"cost_test", Section::workload},
    {"cost_proj", Section::workload},       {"sched_flop", Section::workload},
    {"msg_bytes", Section::workload},       {"techniques", Section::sweep},
    {"models", Section::sweep},             {"repetitions", Section::sweep},
    {"perturbation_seed", Section::sweep},  {"perturbation_amplitude", Section::sweep},
    {"workers", Section::sweep},            {"processes_per_host", Section::sweep},
    {"master_placement", Section::sweep},   {"serial_pre_s", Section::sweep},
    {"serial_post_s", Section::sweep},      {"fsc_h", Section::sweep},
    {"fsc_sigma", Section::sweep},
};

std::vector<std::string_view> split_list(std::string_view value) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i <= value.size()) {
    const auto comma = value.find(',', i);
    const auto end = comma == std::string_view::npos ? value.size() : comma;
    const auto item = detail::trim(value.substr(i, end - i));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string_view::npos) break;
    i = comma + 1;
  }
  return out;
}

class SpecReader {
public:
  SpecReader(std::string source, std::size_t line) : src_(std::move(source)), line_(line) {}

  template <class T>
  T integer(std::string_view key, std::string_view value) const {
    T v{};
    if (!detail::parse_number(value, v)) fail("'" + std::string(key) + "' needs a non-negative integer");
    return v;
  }

  double real(std::string_view key, std::string_view value) const {
    double v = 0.0;
    if (!detail::parse_number(value, v) || !std::isfinite(v)) fail("'" + std::string(key) + "' needs a real value");
    return v;
  }

  template <class F>
  auto wrap(F&& f) const {
    try {
      return f();
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    }
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(src_, line_, what); }

private:
  std::string src_;
  std::size_t line_;
};

}  // namespace

ExperimentSpec read_experiment_spec(std::istream& in, std::string_view source, const std::filesystem::path& base_dir) {
  const std::string src(source);
  ExperimentSpec spec;
  TraceGeneration gen;
  bool any_workload = false;
  Section section = Section::any;
  std::vector<std::string_view> seen_keys;

  auto resolve = [&](std::string_view value) {
    std::filesystem::path p{std::string(value)};
    return p.is_relative() ? base_dir / p : p;
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto text = std::string_view(line);
    text = detail::trim(text.substr(0, text.find_first_of("#;")));
    if (text.empty()) continue;
    const SpecReader r(src, line_no);

    if (text.front() == '[') {
      if (text.back() != ']') r.fail("unterminated section header");
      const auto name = detail::trim(text.substr(1, text.size() - 2));
      if (name == "inputs") section = Section::inputs;
      else if (name == "workload") section = Section::workload;
      else if (name == "sweep") section = Section::sweep;
      else r.fail("unknown section '" + std::string(name) + "'");
      continue;
    }

    const auto eq = text.find('=');
    if (eq == std::string_view::npos) r.fail("expected 'key = value'");
    const auto key = detail::trim(text.substr(0, eq));
    const auto value = detail::trim(text.substr(eq + 1));
    const auto info = std::find_if(std::begin(kKeys), std::end(kKeys), [&](const KeyInfo& k) { return k.key == key; });
    if (info == std::end(kKeys)) r.fail("unknown key '" + std::string(key) + "'");
    if (section != Section::any && info->section != section)
      r.fail("key '" + std::string(key) + "' does not belong in this section");
    if (std::find(seen_keys.begin(), seen_keys.end(), info->key) != seen_keys.end())
      r.fail("duplicate key '" + std::string(key) + "'");
    seen_keys.push_back(info->key);
    if (value.empty()) r.fail("key '" + std::string(key) + "' has no value");

    if (info->section == Section::workload) any_workload = true;

    if (key == "platform") spec.platform_path = resolve(value);
    else if (key == "trace") spec.trace_path = resolve(value);
    else if (key == "native_timings") spec.native_timings_path = resolve(value);
    else if (key == "points") gen.points = r.integer<std::size_t>(key, value);
    else if (key == "seed") gen.seed = r.integer<std::uint64_t>(key, value);
    else if (key == "shape") gen.shape = r.wrap([&] { return parse_cloud_shape(value); });
    else if (key == "width") gen.params.image_width = r.integer<int>(key, value);
    else if (key == "bin") gen.params.bin_size = r.real(key, value);
    else if (key == "angle") gen.params.support_angle = r.real(key, value);
    else if (key == "cost_test") gen.cost.cost_angle_test = r.integer<std::uint64_t>(key, value);
    else if (key == "cost_proj") gen.cost.cost_projection = r.integer<std::uint64_t>(key, value);
    else if (key == "sched_flop") gen.sched_flop = r.integer<std::uint64_t>(key, value);
    else if (key == "msg_bytes") gen.msg_bytes = r.integer<std::uint64_t>(key, value);
    else if (key == "techniques") {
      for (auto item : split_list(value)) {
        const Technique t = r.wrap([&] { return parse_technique(item); });
        if (std::find(spec.techniques.begin(), spec.techniques.end(), t) != spec.techniques.end())
          r.fail("technique listed twice");
        spec.techniques.push_back(t);
      }
      std::sort(spec.techniques.begin(), spec.techniques.end());
    } else if (key == "models") {
      for (auto item : split_list(value)) {
        const ExecutionModel m = r.wrap([&] { return parse_execution_model(item); });
        if (std::find(spec.models.begin(), spec.models.end(), m) != spec.models.end()) r.fail("model listed twice");
        spec.models.push_back(m);
      }
      std::sort(spec.models.begin(), spec.models.end());
    } else if (key == "repetitions") spec.repetitions = r.integer<std::size_t>(key, value);
    else if (key == "perturbation_seed") spec.perturbation_seed = r.integer<std::uint64_t>(key, value);
    else if (key == "perturbation_amplitude") spec.perturbation_amplitude = r.real(key, value);
    else if (key == "workers") spec.workers = r.integer<std::size_t>(key, value);
    else if (key == "processes_per_host") spec.processes_per_host = r.integer<std::size_t>(key, value);
    else if (key == "master_placement") spec.master_placement = r.wrap([&] { return parse_master_placement(value); });
    else if (key == "serial_pre_s") spec.serial_pre_seconds = r.real(key, value);
    else if (key == "serial_post_s") spec.serial_post_seconds = r.real(key, value);
    else if (key == "fsc_h") spec.fsc_h = r.real(key, value);
    else if (key == "fsc_sigma") spec.fsc_sigma = r.real(key, value);
  }

  if (any_workload) {
    if (!spec.trace_path.empty()) throw ParseError(src, 0, "give either 'trace' or workload parameters, not both");
    try {
      if (gen.points == 0) throw std::invalid_argument("'points' must be >= 1");
      gen.params.validate();
    } catch (const std::invalid_argument& e) {
      throw ParseError(src, 0, e.what());
    }
    spec.generate = gen;
  }
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(src, 0, e.what());
  }
  return spec;
}

ExperimentSpec load_experiment_spec(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open experiment spec '" + path.string() + "'");
  return read_experiment_spec(in, path.string(), path.parent_path());
}

// ---------------------------------------------------------------------------
// Native timings

NativeTimings read_native_timings(std::istream& in, std::string_view source) {
  const std::string src(source);
  NativeTimings out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = detail::trim(line);
    if (text.empty() || text.front() == '#') continue;
    std::optional<Technique> tech;
    std::optional<double> t;
    for (auto token : detail::split_ws(text)) {
      std::string_view key, value;
      if (!detail::split_key_value(token, key, value))
        throw ParseError(src, line_no, "expected key=value, got '" + std::string(token) + "'");
      if (key == "technique") {
        try {
          tech = parse_technique(value);
        } catch (const std::invalid_argument& e) {
          throw ParseError(src, line_no, e.what());
        }
      } else if (key == "t_loop_s") {
        double v = 0.0;
        if (!detail::parse_number(value, v) || !(v > 0.0) || !std::isfinite(v))
          throw ParseError(src, line_no, "'t_loop_s' needs a positive real");
        t = v;
      } else {
        throw ParseError(src, line_no, "unknown key '" + std::string(key) + "'");
      }
    }
    if (!tech || !t) throw ParseError(src, line_no, "line needs technique= and t_loop_s=");
    if (!out.emplace(*tech, *t).second) throw ParseError(src, line_no, "duplicate technique");
  }
  return out;
}

NativeTimings load_native_timings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open native timings '" + path.string() + "'");
  return read_native_timings(in, path.string());
}

// ---------------------------------------------------------------------------
// Running

std::vector<double> perturbation_factors(std::uint64_t seed, std::size_t rep, std::size_t workers, double amplitude) {
  std::vector<double> f(workers, 1.0);
  if (rep == 0 || amplitude == 0.0) return f;
  const std::uint64_t rep_seed = CounterRng::derive(seed, rep);
  for (std::size_t w = 0; w < workers; ++w) {
    CounterRng rng(CounterRng::derive(rep_seed, w));
    f[w] = 1.0 + amplitude * rng.next_signed();
  }
  return f;
}

ExperimentResult run_experiment(const ExperimentSpec& spec, const Platform& platform, const IterationTrace& trace,
                                const NativeTimings* natives, unsigned threads) {
  spec.validate_sweep();
  platform.validate();

  SimConfig base;
  base.workers = spec.workers;
  base.processes_per_host = spec.processes_per_host;
  base.master_placement = spec.master_placement;
  base.serial_pre_seconds = spec.serial_pre_seconds;
  base.serial_post_seconds = spec.serial_post_seconds;
  place(platform, base);  // reject infeasible layouts before any run

  if (natives)
    for (Technique t : spec.techniques)
      if (!natives->count(t))
        throw std::invalid_argument("native timings have no entry for " + std::string(to_string(t)));

  struct Job {
    Technique technique;
    ExecutionModel model;
    std::size_t rep;
  };
  std::vector<Job> jobs;
  for (Technique t : spec.techniques)
    for (ExecutionModel m : spec.models)
      for (std::size_t r = 0; r < spec.repetitions; ++r) jobs.push_back({t, m, r});

  std::vector<RunRecord> runs(jobs.size());
  auto run_one = [&](std::size_t i) {
    const Job& job = jobs[i];
    SchedulerConfig sched;
    sched.technique = job.technique;
    sched.iterations = trace.size();
    sched.workers = spec.workers;
    sched.fsc_h = spec.fsc_h;
    sched.fsc_sigma = spec.fsc_sigma;
    SimConfig sim = base;
    sim.model = job.model;
    sim.speed_factors = perturbation_factors(spec.perturbation_seed, job.rep, spec.workers, spec.perturbation_amplitude);
    const SimResult res = simulate(platform, trace, sched, sim);
    runs[i] = {job.technique, job.model, job.rep, res.makespan_app, res.makespan_loop, cov(res.loop_finish_time),
               res.chunk_log.size()};
  };

  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(jobs.size())));
  if (threads == 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    {
      std::vector<std::jthread> pool;
      for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back([&] {
          for (std::size_t i; (i = next.fetch_add(1)) < jobs.size();) {
            try {
              run_one(i);
            } catch (...) {
              std::lock_guard lock(error_mutex);
              if (!error) error = std::current_exception();
            }
          }
        });
    }
    if (error) std::rethrow_exception(error);
  }

  ExperimentResult result;
  result.master_placement = spec.master_placement;
  result.iterations = trace.size();
  result.total_flop = trace.total_flop();
  for (Technique t : spec.techniques)
    for (ExecutionModel m : spec.models) {
      std::vector<double> tp, tl, cv;
      for (const auto& r : runs)
        if (r.technique == t && r.model == m) {
          tp.push_back(r.t_par);
          tl.push_back(r.t_par_loop);
          cv.push_back(r.cov);
        }
      ReportRow row{t, m, aggregate(tp), aggregate(tl), aggregate(cv), std::nullopt};
      if (natives) row.percent_error = percent_error(natives->at(t), row.t_par_loop.median);
      result.rows.push_back(row);
    }
  result.runs = std::move(runs);
  return result;
}

ExperimentResult run_experiment(const ExperimentSpec& spec, unsigned threads) {
  spec.validate();
  const Platform platform = spec.platform ? *spec.platform : load_platform(spec.platform_path);
  const IterationTrace trace = spec.trace_path.empty() ? spec.generate->build(threads) : load_trace(spec.trace_path);
  std::optional<NativeTimings> natives;
  if (spec.native_timings_path) natives = load_native_timings(*spec.native_timings_path);
  return run_experiment(spec, platform, trace, natives ? &*natives : nullptr, threads);
}

// ---------------------------------------------------------------------------
// Reports

std::string format_decimal(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

namespace {

constexpr std::string_view kStats[] = {"median", "q1", "q3", "min", "max"};

double stat_of(const Aggregate& a, std::size_t i) {
  switch (i) {
    case 0: return a.median;
    case 1: return a.q1;
    case 2: return a.q3;
    case 3: return a.min;
    default: return a.max;
  }
}

double& stat_of(Aggregate& a, std::size_t i) {
  switch (i) {
    case 0: return a.median;
    case 1: return a.q1;
    case 2: return a.q3;
    case 3: return a.min;
    default: return a.max;
  }
}

// Value as written in reports, so the JSON mirror matches the CSV.
double rounded(double v) { return std::strtod(format_decimal(v).c_str(), nullptr); }

nlohmann::ordered_json aggregate_json(const Aggregate& a) {
  nlohmann::ordered_json j;
  for (std::size_t i = 0; i < 5; ++i) j[std::string(kStats[i])] = rounded(stat_of(a, i));
  return j;
}

}  // namespace

void write_report_csv(std::ostream& out, const ExperimentResult& result) {
  out << kReportHeader << '\n';
  for (const auto& row : result.rows)
    for (std::size_t i = 0; i < 5; ++i)
      out << to_string(row.technique) << ',' << to_string(row.model) << ',' << kStats[i] << ','
          << format_decimal(stat_of(row.t_par, i)) << ',' << format_decimal(stat_of(row.t_par_loop, i)) << ','
          << format_decimal(stat_of(row.cov, i)) << '\n';
}

void write_report_json(std::ostream& out, const ExperimentResult& result) {
  nlohmann::ordered_json j;
  j["master_placement"] = std::string(to_string(result.master_placement));
  j["iterations"] = result.iterations;
  j["total_flop"] = result.total_flop;
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : result.rows) {
    nlohmann::ordered_json r;
    r["technique"] = std::string(to_string(row.technique));
    r["model"] = std::string(to_string(row.model));
    r["t_par_s"] = aggregate_json(row.t_par);
    r["t_par_loop_s"] = aggregate_json(row.t_par_loop);
    r["cov"] = aggregate_json(row.cov);
    r["percent_error"] = row.percent_error ? nlohmann::ordered_json(rounded(*row.percent_error)) : nullptr;
    j["rows"].push_back(std::move(r));
  }
  j["runs"] = nlohmann::ordered_json::array();
  for (const auto& run : result.runs) {
    nlohmann::ordered_json r;
    r["technique"] = std::string(to_string(run.technique));
    r["model"] = std::string(to_string(run.model));
    r["repetition"] = run.repetition;
    r["t_par_s"] = rounded(run.t_par);
    r["t_par_loop_s"] = rounded(run.t_par_loop);
    r["cov"] = rounded(run.cov);
    r["chunks"] = run.chunks;
    j["runs"].push_back(std::move(r));
  }
  out << j.dump(2) << '\n';
}

std::vector<ReportRow> read_report_csv(std::istream& in, std::string_view source) {
  const std::string src(source);
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != kReportHeader)
    throw ParseError(src, 1, "expected header '" + std::string(kReportHeader) + "'");
  std::vector<ReportRow> rows;
  std::vector<unsigned> filled;  // bitmask of stats seen per row
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = detail::trim(line);
    if (text.empty()) continue;
    std::vector<std::string_view> f;
    std::size_t i = 0;
    while (true) {
      const auto comma = text.find(',', i);
      f.push_back(text.substr(i, comma == std::string_view::npos ? std::string_view::npos : comma - i));
      if (comma == std::string_view::npos) break;
      i = comma + 1;
    }
    if (f.size() != 6) throw ParseError(src, line_no, "expected 6 comma-separated fields");
    Technique t;
    ExecutionModel m;
    try {
      t = parse_technique(f[0]);
      m = parse_execution_model(f[1]);
    } catch (const std::invalid_argument& e) {
      throw ParseError(src, line_no, e.what());
    }
    const auto stat = std::find(std::begin(kStats), std::end(kStats), f[2]);
    if (stat == std::end(kStats)) throw ParseError(src, line_no, "unknown stat '" + std::string(f[2]) + "'");
    const auto s = static_cast<std::size_t>(stat - std::begin(kStats));
    double v[3];
    for (int k = 0; k < 3; ++k)
      if (!detail::parse_number(f[3 + k], v[k])) throw ParseError(src, line_no, "malformed number");

    auto it = std::find_if(rows.begin(), rows.end(),
                           [&](const ReportRow& r) { return r.technique == t && r.model == m; });
    if (it == rows.end()) {
      rows.push_back({t, m, {}, {}, {}, std::nullopt});
      filled.push_back(0);
      it = rows.end() - 1;
    }
    auto& mask = filled[static_cast<std::size_t>(it - rows.begin())];
    if (mask & (1u << s)) throw ParseError(src, line_no, "duplicate stat row");
    mask |= 1u << s;
    stat_of(it->t_par, s) = v[0];
    stat_of(it->t_par_loop, s) = v[1];
    stat_of(it->cov, s) = v[2];
  }
  for (std::size_t r = 0; r < rows.size(); ++r)
    if (filled[r] != 0x1F)
      throw ParseError(src, 0,
                       "incomplete stats for " + std::string(to_string(rows[r].technique)) + "/" +
                           std::string(to_string(rows[r].model)));
  return rows;
}

std::vector<ComparisonEntry> compare(const std::vector<ReportRow>& rows, const NativeTimings& natives) {
  std::vector<ComparisonEntry> out;
  for (Technique t : kAllTechniques) {
    const auto nat = natives.find(t);
    bool simulated = false;
    for (const auto& row : rows) {
      if (row.technique != t) continue;
      simulated = true;
      ComparisonEntry e{t, row.model, std::nullopt, row.t_par_loop.median, std::nullopt};
      if (nat != natives.end()) {
        e.t_nat = nat->second;
        e.percent_error = percent_error(nat->second, row.t_par_loop.median);
      }
      out.push_back(e);
    }
    if (!simulated && nat != natives.end()) out.push_back({t, std::nullopt, nat->second, std::nullopt, std::nullopt});
  }
  std::stable_sort(out.begin(), out.end(), [](const ComparisonEntry& a, const ComparisonEntry& b) {
    return std::tie(a.technique, a.model) < std::tie(b.technique, b.model);
  });
  return out;
}

void write_comparison_csv(std::ostream& out, const std::vector<ComparisonEntry>& entries) {
  out << kComparisonHeader << '\n';
  for (const auto& e : entries) {
    out << to_string(e.technique) << ',' << (e.model ? to_string(*e.model) : "") << ','
        << (e.t_nat ? format_decimal(*e.t_nat) : "") << ',' << (e.t_sim ? format_decimal(*e.t_sim) : "") << ','
        << (e.percent_error ? format_decimal(*e.percent_error) : "") << ','
        << (e.complete() ? "ok" : e.t_nat ? "missing_simulated" : "missing_native") << '\n';
  }
}

void write_summary_table(std::ostream& out, const std::vector<ReportRow>& rows) {
  char buf[64];
  auto cell = [&](const std::string& s) {
    std::snprintf(buf, sizeof buf, "%16s", s.c_str());
    out << buf;
  };
  std::snprintf(buf, sizeof buf, "%-16s", "");
  out << buf;
  for (const auto& r : rows) cell(std::string(to_string(r.technique)));
  out << '\n';
  std::snprintf(buf, sizeof buf, "%-16s", "model");
  out << buf;
  for (const auto& r : rows) cell(r.model == ExecutionModel::master_worker ? "MW" : "TG");
  out << '\n';
  const std::pair<const char*, const Aggregate ReportRow::*> metrics[] = {
      {"T_par (s)", &ReportRow::t_par}, {"T_par_loop (s)", &ReportRow::t_par_loop}, {"c.o.v.", &ReportRow::cov}};
  for (const auto& [label, member] : metrics) {
    std::snprintf(buf, sizeof buf, "%-16s", label);
    out << buf;
    for (const auto& r : rows) cell(format_decimal((r.*member).median));
    out << '\n';
  }
}

}  // namespace dlsim
