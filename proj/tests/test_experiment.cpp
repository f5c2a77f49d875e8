#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "v2v/experiment.hpp"

using namespace v2v;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("v2v_test_" + name);
  fs::remove_all(dir);
  return dir;
}

// Tiny, fast grid.
SweepSpec small_spec() {
  SweepSpec spec;
  spec.rates_hz = {5, 40};
  spec.densities = {50};
  spec.queue_capacities = {1, 10};
  spec.seeds = {1, 2};
  spec.base_overrides = {{"sim_duration_s", "1.5"}, {"warmup_s", "0.5"}};
  return spec;
}

// A result whose only content is one curve of a given metric.
SweepResult curve(const std::vector<std::pair<double, double>>& points, Metric metric,
                  double density = 50, int capacity = 1) {
  SweepResult r;
  for (const auto& [rate, value] : points) {
    CellSummary c;
    c.density = density;
    c.capacity = capacity;
    c.rate_hz = rate;
    c.runs = 1;
    Stat s{value, 0.0, 1};
    switch (metric) {
      case Metric::Risk: c.risk = s; break;
      case Metric::Aoi: c.aoi = s; break;
      case Metric::Delay: c.delay = s; break;
      case Metric::CollisionLoss: c.collision_loss = s; break;
      case Metric::Throughput: c.throughput = s; break;
    }
    r.summary.push_back(c);
  }
  return r;
}

}  // namespace

TEST_CASE("sweep spec parsing") {
  const SweepSpec spec = parse_sweep_spec(
      "rates_hz = 1, 5,10\n"
      "densities = 50\n"
      "queue_capacities = 1,100\n"
      "disciplines = fcfs,lcfs\n"
      "seeds = 1,2,3\n"
      "sim_duration_s = 20\n");
  CHECK(spec.rates_hz == std::vector<double>{1, 5, 10});
  CHECK(spec.queue_capacities == std::vector<int>{1, 100});
  CHECK(spec.disciplines.size() == 2);
  CHECK(spec.run_count() == 3 * 1 * 2 * 2 * 3);
  CHECK(spec.base_overrides.at("sim_duration_s") == "20");

  CHECK(SweepSpec{}.run_count() == 800);
  CHECK_THROWS_AS(parse_sweep_spec("rates_hz = 1,x\n"), ConfigError);
  CHECK_THROWS_AS(parse_sweep_spec("colour = blue\n"), ConfigError);
  CHECK_THROWS_AS(parse_sweep_spec("seeds = \n"), ConfigError);
  CHECK_THROWS_AS(parse_sweep_spec("queue_capacities = 0\n"), ConfigError);
}

TEST_CASE("cell enumeration") {
  SweepSpec spec;
  spec.seeds = {1, 2, 3};
  spec.queue_capacities = {1};
  const auto cells = enumerate_cells(spec);
  CHECK(cells.size() == 60);
  CHECK(cells[0].seed == 1);
  CHECK(cells[1].seed == 2);
  CHECK(cells[3].rate_hz == 5);
  CHECK(cells[30].density == 200);
  CHECK(cells[30].config.density_veh_per_km == 200);
  CHECK(cells[30].config.beacon_rate_hz == 1);
  CHECK(cells[30].config_hash == cells[30].config.hash());
}

TEST_CASE("sweep of 10 rates x 2 densities x 1 queue x 3 seeds") {
  SweepSpec spec;
  spec.seeds = {1, 2, 3};
  spec.queue_capacities = {1};
  spec.base_overrides = {{"sim_duration_s", "0.3"}, {"warmup_s", "0.1"}};
  const SweepResult r = run_sweep(spec);
  CHECK(r.rows.size() == 60);
  CHECK(r.failures() == 0);
  CHECK(r.summary.size() == 20);
  for (const auto& c : r.summary) CHECK(c.runs == 3);
}

TEST_CASE("summary statistics") {
  const Stat s = summarize({1.0, 2.0, 3.0, std::nan("")});
  CHECK(s.n == 3);
  CHECK(s.mean == doctest::Approx(2.0));
  CHECK(s.std == doctest::Approx(1.0));
  CHECK(summarize({4.0}).std == 0.0);
  CHECK(std::isnan(summarize({}).mean));
}

TEST_CASE("sweep output is cached, order-independent and worker-independent") {
  const SweepSpec spec = small_spec();
  const fs::path a = fresh_dir("a"), b = fresh_dir("b"), c = fresh_dir("c");

  SweepOptions serial;
  serial.out_dir = a.string();
  const SweepResult first = run_sweep(spec, serial);
  REQUIRE(first.failures() == 0);
  const std::string rows = slurp(a / "sweep_rows.csv");
  const std::string summary = slurp(a / "sweep_summary.csv");

  SUBCASE("rerun reuses every cached run") {
    std::map<fs::path, fs::file_time_type> stamps;
    for (const auto& e : fs::directory_iterator(a / "runs")) stamps[e.path()] = e.last_write_time();
    CHECK(stamps.size() == spec.run_count());
    run_sweep(spec, serial);
    for (const auto& [p, t] : stamps) CHECK(fs::last_write_time(p) == t);
    CHECK(slurp(a / "sweep_rows.csv") == rows);
    CHECK(slurp(a / "sweep_summary.csv") == summary);
  }
  SUBCASE("shuffled execution") {
    SweepOptions shuffled;
    shuffled.out_dir = b.string();
    shuffled.shuffle = true;
    run_sweep(spec, shuffled);
    CHECK(slurp(b / "sweep_rows.csv") == rows);
    CHECK(slurp(b / "sweep_summary.csv") == summary);
  }
  SUBCASE("parallel workers") {
    SweepOptions parallel;
    parallel.out_dir = c.string();
    parallel.workers = 4;
    run_sweep(spec, parallel);
    CHECK(slurp(c / "sweep_rows.csv") == rows);
    CHECK(slurp(c / "sweep_summary.csv") == summary);
  }
  SUBCASE("rows survive a CSV round trip") {
    const SweepResult loaded = load_sweep_result(a.string());
    REQUIRE(loaded.rows.size() == first.rows.size());
    std::ostringstream again;
    write_rows_csv(again, loaded.rows);
    CHECK(again.str() == rows);
    std::ostringstream sum;
    write_summary_csv(sum, loaded.summary);
    CHECK(sum.str() == summary);
  }
}

TEST_CASE("a failing cell is recorded and the sweep goes on") {
  SweepSpec spec = small_spec();
  spec.densities = {50, 0.2};  // 0 vehicles: rejected by config validation
  spec.validate();
  const SweepResult r = run_sweep(spec);
  CHECK(r.failures() == spec.run_count() / 2);
  for (const auto& row : r.rows) {
    CHECK(row.ok == (row.density == 50));
    if (!row.ok) CHECK(!row.error.empty());
  }
}

TEST_CASE("optimal rate") {
  SUBCASE("interior minimum") {
    const auto r = curve({{1, 0.5}, {5, 0.3}, {10, 0.2}, {25, 0.05}, {50, 0.1}, {80, 0.4}},
                         Metric::Risk);
    CHECK(optimal_rate(r, Metric::Risk, 50, 1, QueueDiscipline::Fcfs).rate_hz == 25);
  }
  SUBCASE("monotone decreasing curve picks the highest rate") {
    const auto r = curve({{1, 5}, {10, 4}, {80, 1}}, Metric::Aoi);
    CHECK(optimal_rate(r, Metric::Aoi, 50, 1, QueueDiscipline::Fcfs).rate_hz == 80);
  }
  SUBCASE("ties go to the lower rate") {
    const auto r = curve({{5, 0.3}, {10, 0.1}, {15, 0.1}, {20, 0.2}}, Metric::Risk);
    CHECK(optimal_rate(r, Metric::Risk, 50, 1, QueueDiscipline::Fcfs).rate_hz == 10);
  }
  SUBCASE("throughput is maximised") {
    const auto r = curve({{5, 100}, {15, 400}, {80, 300}}, Metric::Throughput);
    const auto best = optimal_rate(r, Metric::Throughput, 50, 1, QueueDiscipline::Fcfs);
    CHECK(best.rate_hz == 15);
    CHECK(best.curve.size() == 3);
  }
  SUBCASE("missing slice or cells") {
    auto r = curve({{5, 1}, {10, 2}}, Metric::Risk);
    CHECK_THROWS_AS(optimal_rate(r, Metric::Risk, 200, 1, QueueDiscipline::Fcfs),
                    std::invalid_argument);
    auto other = curve({{5, 1}}, Metric::Risk, 200);
    r.summary.insert(r.summary.end(), other.summary.begin(), other.summary.end());
    try {
      optimal_rate(r, Metric::Risk, 200, 1, QueueDiscipline::Fcfs);
      FAIL("expected an error");
    } catch (const std::invalid_argument& e) {
      CHECK(std::string(e.what()).find("rate_hz=10") != std::string::npos);
    }
  }
}

TEST_CASE("figure data columns") {
  CHECK(metric_column(parse_metric("risk")) == "risk_proportion");
  CHECK(metric_column(parse_metric("aoi")) == "system_aoi_s");
  CHECK(metric_column(parse_metric("throughput")) == "total_pps");
  CHECK(metric_column(parse_metric("delay")) == "mean_delay_s");
  CHECK(metric_column(parse_metric("loss")) == "collision_losses");
  CHECK_THROWS(parse_metric("speed"));

  const auto r = curve({{5, 0.25}, {10, 0.125}}, Metric::Aoi);
  std::ostringstream out;
  emit_figure_data(out, r, Metric::Aoi);
  CHECK(out.str() ==
        "metric,density,capacity,discipline,rate_hz,metric_mean,metric_std,n_seeds\n"
        "system_aoi_s,50,1,fcfs,5,0.25,0,1\n"
        "system_aoi_s,50,1,fcfs,10,0.125,0,1\n");
}
