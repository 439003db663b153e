#include "dlsim/error.hpp"
#include "dlsim/simcore.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

using namespace dlsim;

namespace {

IterationTrace trace_of(std::vector<std::uint64_t> flop, std::uint64_t overhead = 0, std::uint64_t bytes = 0) {
  IterationTrace t;
  t.iteration_flop = std::move(flop);
  t.sched_overhead_flop = overhead;
  t.sched_message_bytes = bytes;
  return t;
}

SchedulerConfig sched(Technique t, std::size_t n, std::size_t p) {
  SchedulerConfig c;
  c.technique = t;
  c.iterations = n;
  c.workers = p;
  if (t == Technique::FSC) {
    c.fsc_h = 0.5;
    c.fsc_sigma = 1.0;
  }
  return c;
}

SimConfig sim(std::size_t workers, ExecutionModel model = ExecutionModel::master_worker) {
  SimConfig c;
  c.model = model;
  c.workers = workers;
  c.processes_per_host = workers;
  return c;
}

Platform one_host(std::size_t cores, double speed = 1.0, double intra = 0.0, double bw = 1e30) {
  return Platform::homogeneous(1, cores, speed, 0.0, bw, intra);
}

std::vector<std::size_t> executed_per_iteration(const SimResult& r, std::size_t n) {
  std::vector<std::size_t> count(n, 0);
  for (const auto& rec : r.chunk_log)
    for (std::size_t i = rec.chunk.start; i < rec.chunk.end(); ++i) ++count[i];
  return count;
}

}  // namespace

TEST_SUITE("cost formulas") {
  TEST_CASE("compute_time") {
    CHECK(compute_time(705, 705.0) == 1.0);
    CHECK(compute_time(0, 3.0) == 0.0);
    CHECK(compute_time(705'000'000, 0.705e9) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(compute_time(1, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(compute_time(1, -1.0), std::invalid_argument);
  }

  TEST_CASE("comm_time") {
    CHECK(comm_time(4, 0.0, 4.0) == 1.0);
    CHECK(comm_time(0, 7e-7, 123.0) == 7e-7);
    // 100 Gbit/s = 1.25e10 B/s
    CHECK(comm_time(1250, 1e-7, 1.25e10) == doctest::Approx(2e-7).epsilon(1e-12));
    CHECK_THROWS_AS(comm_time(4, 0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(comm_time(4, -1.0, 1.0), std::invalid_argument);
  }

  TEST_CASE("event order is total on (time, kind, worker)") {
    CHECK(event_before({1.0, EventKind::chunk_done, 0}, {2.0, EventKind::worker_request, 0}));
    CHECK(event_before({1.0, EventKind::worker_request, 5}, {1.0, EventKind::chunk_granted, 0}));
    CHECK(event_before({1.0, EventKind::comm_done, 1}, {1.0, EventKind::comm_done, 2}));
    CHECK_FALSE(event_before({1.0, EventKind::comm_done, 2}, {1.0, EventKind::comm_done, 2}));
  }
}

TEST_SUITE("master-worker") {
  TEST_CASE("one worker runs iterations back to back") {
    const auto r = run_master_worker(one_host(1), trace_of({10, 10}), sched(Technique::SS, 2, 1), sim(1));
    CHECK(r.makespan_loop == 20.0);
    CHECK(r.loop_finish_time == std::vector<double>{20.0});
    REQUIRE(r.chunk_log.size() == 2);
    CHECK(r.chunk_log[0].time == 0.0);
    CHECK(r.chunk_log[1].time == 10.0);
  }

  TEST_CASE("two workers split four equal iterations") {
    const auto r = run_master_worker(one_host(2), trace_of({4, 4, 4, 4}), sched(Technique::SS, 4, 2), sim(2));
    CHECK(r.makespan_loop == 8.0);
    std::size_t per_worker[2] = {};
    for (const auto& rec : r.chunk_log) per_worker[rec.worker] += rec.chunk.size;
    CHECK(per_worker[0] == 2);
    CHECK(per_worker[1] == 2);
  }

  TEST_CASE("half-second grant message") {
    // 4-byte grant over an 8 B/s link, no latency: each round trip adds 0.5 s.
    const auto r = run_master_worker(one_host(2, 1.0, 0.0, 8.0), trace_of({4, 4, 4, 4}, 0, 4),
                                     sched(Technique::SS, 4, 2), sim(2));
    CHECK(r.makespan_loop == doctest::Approx(9.0).epsilon(1e-12));

    // Same round trip split as 0.25 s each way.
    const auto l = run_master_worker(one_host(2, 1.0, 0.25), trace_of({4, 4, 4, 4}), sched(Technique::SS, 4, 2), sim(2));
    CHECK(l.makespan_loop == doctest::Approx(9.0).epsilon(1e-12));
  }

  TEST_CASE("master serializes chunk calculations") {
    // Overhead 1 s per chunk for two simultaneous requests: second grant at t=2.
    const auto r = run_master_worker(one_host(2), trace_of({3, 3}, 1), sched(Technique::SS, 2, 2), sim(2));
    REQUIRE(r.chunk_log.size() == 2);
    CHECK(r.chunk_log[0].worker == 0);
    CHECK(r.chunk_log[0].time == 1.0);
    CHECK(r.chunk_log[1].worker == 1);
    CHECK(r.chunk_log[1].time == 2.0);
    CHECK(r.makespan_loop == 5.0);
  }

  TEST_CASE("serial phases wrap the loop") {
    auto c = sim(2);
    c.serial_pre_seconds = 1.5;
    c.serial_post_seconds = 0.25;
    const auto r = run_master_worker(one_host(2), trace_of({4, 4, 4, 4}), sched(Technique::SS, 4, 2), c);
    CHECK(r.makespan_app == 1.5 + 8.0 + 0.25);
  }

  TEST_CASE("remote workers pay the link latency") {
    auto p = Platform::homogeneous(2, 1, 1.0, 1.0, 1e30, 0.0);
    auto c = sim(2);
    c.processes_per_host = 1;
    const auto r = run_master_worker(p, trace_of({4, 4}), sched(Technique::STATIC, 2, 2), c);
    CHECK(r.loop_finish_time[0] == 4.0);
    CHECK(r.loop_finish_time[1] == 6.0);  // 1 s request + 1 s grant
  }

  TEST_CASE("matches the scanning oracle on random small cases") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 40; ++rep) {
      const std::size_t workers = 1 + rng() % 3;
      const std::size_t n = 1 + rng() % 8;
      std::vector<std::uint64_t> flop(n);
      for (auto& f : flop) f = rng() % 20;
      const std::uint64_t overhead = rng() % 4, bytes = rng() % 8;
      Platform p = Platform::homogeneous(workers, 1, 1.0 + 3 * u(rng), u(rng), 1.0 + 7 * u(rng), 0.5 * u(rng));
      auto c = sim(workers);
      c.processes_per_host = 1;
      const Technique techs[] = {Technique::STATIC, Technique::SS, Technique::GSS, Technique::FAC};
      const oracle::Tech otechs[] = {oracle::Tech::STATIC, oracle::Tech::SS, oracle::Tech::GSS, oracle::Tech::FAC};
      const std::size_t k = rng() % 4;
      const auto r = run_master_worker(p, trace_of(flop, overhead, bytes), sched(techs[k], n, workers), c);
      const auto pl = place(p, c);
      const auto o = oracle::master_worker(flop, workers, pl.worker_speed, pl.master_speed, pl.worker_latency,
                                           static_cast<double>(overhead), static_cast<double>(bytes),
                                           p.link_bandwidth, oracle::ChunkFeed(otechs[k], n, workers));
      CHECK(r.makespan_loop == doctest::Approx(o.makespan).epsilon(1e-12));
    }
  }
}

TEST_SUITE("task graph") {
  TEST_CASE("three-task chain") {
    const auto r = run_task_graph(one_host(1, 1.0, 0.0, 4.0), trace_of({6}, 3, 4), sched(Technique::SS, 1, 1), sim(1));
    CHECK(r.makespan_loop == 10.0);
  }

  TEST_CASE("STATIC block split") {
    const auto r = run_task_graph(one_host(2), trace_of({1, 1, 1, 1}), sched(Technique::STATIC, 4, 2),
                                  sim(2, ExecutionModel::task_graph));
    CHECK(r.makespan_loop == 2.0);
  }

  TEST_CASE("zero costs agree with the master-worker model") {
    const auto t = trace_of({5, 1, 9, 2, 2, 7, 3, 3, 8, 1, 4});
    for (Technique tech : kAllTechniques) {
      const auto s = sched(tech, t.size(), 3);
      const auto mw = run_master_worker(one_host(3), t, s, sim(3));
      const auto tg = run_task_graph(one_host(3), t, s, sim(3, ExecutionModel::task_graph));
      CHECK(mw.makespan_loop == tg.makespan_loop);
      if (tech != Technique::STATIC)
        CHECK(mw.makespan_loop == oracle::list_schedule(t.iteration_flop, oracle::chunk_sizes(
                                                           static_cast<oracle::Tech>(tech), t.size(), 3,
                                                           fsc_chunk_size(t.size(), 3, 0.5, 1.0)),
                                                        {1.0, 1.0, 1.0}));
    }
  }
}

TEST_SUITE("simulation properties") {
  TEST_CASE("work conservation, bounds and determinism") {
    std::mt19937_64 rng(5);
    for (int rep = 0; rep < 30; ++rep) {
      const std::size_t n = 1 + rng() % 300, workers = 1 + rng() % 12;
      std::vector<std::uint64_t> flop(n);
      for (auto& f : flop) f = rng() % 1000;
      const auto t = trace_of(flop, rng() % 50, 4);
      const auto p = Platform::homogeneous(3, 4, 1000.0 + rng() % 500, 1e-3, 1e4, 1e-4);
      auto c = sim(workers, rep % 2 ? ExecutionModel::task_graph : ExecutionModel::master_worker);
      c.processes_per_host = 4;
      for (Technique tech : kAllTechniques) {
        const auto s = sched(tech, n, workers);
        const auto r = simulate(p, t, s, c);
        CHECK(r.total_flop_executed == t.total_flop());
        const auto counts = executed_per_iteration(r, n);
        CHECK(std::all_of(counts.begin(), counts.end(), [](auto k) { return k == 1; }));
        const double speed = p.hosts[0].core_speed;
        CHECK(r.makespan_loop >= static_cast<double>(t.total_flop()) / (workers * speed) * (1 - 1e-12));
        CHECK(r.makespan_loop >= static_cast<double>(*std::max_element(flop.begin(), flop.end())) / speed * (1 - 1e-12));
        CHECK(r.makespan_loop == *std::max_element(r.loop_finish_time.begin(), r.loop_finish_time.end()));
        CHECK(simulate(p, t, s, c) == r);
      }
    }
  }

  TEST_CASE("faster cores shrink the makespan proportionally") {
    const auto t = trace_of({13, 2, 40, 7, 7, 1, 22, 9, 3, 31, 5, 8});
    for (Technique tech : kAllTechniques)
      for (double alpha : {2.0, 3.0, 7.5}) {
        const auto s = sched(tech, t.size(), 4);
        const auto base = run_master_worker(one_host(4, 10.0), t, s, sim(4));
        const auto fast = run_master_worker(one_host(4, 10.0 * alpha), t, s, sim(4));
        CHECK(fast.makespan_loop == doctest::Approx(base.makespan_loop / alpha).epsilon(1e-12));
      }
  }

  TEST_CASE("SS pays per-request overhead") {
    const auto flat = std::vector<std::uint64_t>(200, 100);
    double prev = 0.0;
    for (std::uint64_t c : {0, 1, 5, 20, 80}) {
      const auto r = run_master_worker(one_host(8, 100.0), trace_of(flat, c, 4), sched(Technique::SS, 200, 8), sim(8));
      CHECK(r.makespan_loop >= prev);
      prev = r.makespan_loop;
      CHECK(r.chunk_log.size() == 200);
      const auto fac = run_master_worker(one_host(8, 100.0), trace_of(flat, c, 4), sched(Technique::FAC, 200, 8), sim(8));
      CHECK(fac.chunk_log.size() < r.chunk_log.size());
    }
  }

  TEST_CASE("speed factors scale individual workers") {
    auto c = sim(2);
    c.speed_factors = {1.0, 0.5};
    const auto r = run_master_worker(one_host(2), trace_of({4, 4}), sched(Technique::STATIC, 2, 2), c);
    CHECK(r.loop_finish_time == std::vector<double>{4.0, 8.0});
    c.speed_factors = {1.0};
    CHECK_THROWS_AS(run_master_worker(one_host(2), trace_of({4, 4}), sched(Technique::STATIC, 2, 2), c),
                    std::invalid_argument);
  }
}

TEST_SUITE("placement") {
  TEST_CASE("workers fill hosts in blocks") {
    const auto p = Platform::homogeneous(2, 16, 1.0, 7e-7, 6.8e9, 1e-8);
    SimConfig c = sim(32);
    c.processes_per_host = 16;
    const auto pl = place(p, c);
    CHECK(pl.worker_host[15] == 0);
    CHECK(pl.worker_host[16] == 1);
    CHECK(pl.worker_latency[0] == 1e-8);
    CHECK(pl.worker_latency[31] == 7e-7);
  }

  TEST_CASE("infeasible layouts are rejected") {
    const auto p = Platform::homogeneous(2, 16, 1.0, 0.0, 1.0);
    SimConfig c = sim(33);
    c.processes_per_host = 17;
    CHECK_THROWS_AS(place(p, c), std::invalid_argument);
    c.workers = 32;
    c.processes_per_host = 16;
    c.master_placement = MasterPlacement::dedicated_core;
    CHECK_THROWS_AS(place(p, c), std::invalid_argument);
    c.workers = 31;
    const auto pl = place(p, c);
    CHECK(pl.worker_host[14] == 0);
    CHECK(pl.worker_host[15] == 1);
  }

  TEST_CASE("mismatched trace and scheduler") {
    CHECK_THROWS_AS(run_master_worker(one_host(2), trace_of({1, 2, 3}), sched(Technique::SS, 4, 2), sim(2)),
                    std::invalid_argument);
    CHECK_THROWS_AS(run_task_graph(one_host(2), trace_of({1, 2, 3}), sched(Technique::SS, 3, 1), sim(2)),
                    std::invalid_argument);
  }
}

TEST_SUITE("platform files") {
  Platform parse(const std::string& text) {
    std::istringstream in(text);
    return read_platform(in, "p.platform");
  }

  TEST_CASE("valid file") {
    const auto p = parse(
        "#platform v1\n"
        "host n0 cores=20 speed_flops=0.705e9\n"
        "host n1 cores=20 speed_flops=705000000\n"
        "link latency_s=1e-7 bandwidth_Bps=1.25e10 intra_latency_s=5e-9\n");
    REQUIRE(p.hosts.size() == 2);
    CHECK(p.hosts[0].core_speed == 0.705e9);
    CHECK(p.hosts[1].core_speed == 0.705e9);
    CHECK(p.hosts[0].cores == 20);
    CHECK(p.link_latency == 1e-7);
    CHECK(p.link_bandwidth == 1.25e10);
    CHECK(p.intra_host_latency == 5e-9);
    CHECK(p.total_cores() == 40);

    std::ostringstream out;
    write_platform(out, p);
    const auto again = parse(out.str());
    CHECK(again.hosts[1].core_speed == p.hosts[1].core_speed);
    CHECK(again.link_bandwidth == p.link_bandwidth);
  }

  TEST_CASE("errors") {
    CHECK_THROWS_AS(parse("host a cores=1 speed_flops=1\nlink latency_s=0 bandwidth_Bps=1\n"), ParseError);
    CHECK_THROWS_AS(parse("#platform v1\nhost a cores=1 speed_flops=1 turbo=1\nlink latency_s=0 bandwidth_Bps=1\n"),
                    ParseError);
    CHECK_THROWS_AS(parse("#platform v1\nhost a cores=1 speed_flops=1\n"), ParseError);
    CHECK_THROWS_AS(parse("#platform v1\nlink latency_s=0 bandwidth_Bps=1\n"), ParseError);
    CHECK_THROWS_AS(parse("#platform v1\nhost a cores=1 speed_flops=1\nhost a cores=1 speed_flops=1\n"
                          "link latency_s=0 bandwidth_Bps=1\n"),
                    ParseError);
    CHECK_THROWS_AS(parse("#platform v1\nhost a cores=0 speed_flops=1\nlink latency_s=0 bandwidth_Bps=1\n"),
                    ParseError);
    CHECK_THROWS_AS(parse("#platform v1\nhost a cores=1 speed_flops=1\nlink latency_s=0 bandwidth_Bps=0\n"),
                    ParseError);
    CHECK_THROWS_AS(parse("#platform v1\nhost a cores=1 speed_flops=1\nlink latency_s=0 bandwidth_Bps=1 mtu=9000\n"),
                    ParseError);
    try {
      parse("#platform v1\nhost a cores=1 speed_flops=1\nrouter r0\n");
      FAIL("expected error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
  }
}
