#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "v2v/config.hpp"
#include "v2v/metrics.hpp"

namespace v2v {

// Grid of runs. Keys other than the five axes in a spec file are SimConfig
// overrides applied to every cell before the axis values.
struct SweepSpec {
  std::vector<double> rates_hz{1, 5, 10, 15, 20, 25, 35, 50, 65, 80};
  std::vector<double> densities{50, 200};
  std::vector<int> queue_capacities{1, 5, 10, 100};
  std::vector<QueueDiscipline> disciplines{QueueDiscipline::Fcfs};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::map<std::string, std::string> base_overrides;

  /// Throws ConfigError for empty axes or overrides SimConfig rejects.
  void validate() const;
  std::size_t run_count() const;
};

/// `key = a,b,c` text. Unknown keys must be SimConfig fields.
SweepSpec parse_sweep_spec(const std::string& text);
SweepSpec read_sweep_spec(const std::string& path);

struct SweepCell {
  double density = 0.0;
  double rate_hz = 0.0;
  int capacity = 1;
  QueueDiscipline discipline = QueueDiscipline::Fcfs;
  std::uint64_t seed = 0;
  SimConfig config;
  std::string config_hash;
};

/// Cartesian product in canonical order: density, capacity, discipline,
/// rate, seed (seed varies fastest).
std::vector<SweepCell> enumerate_cells(const SweepSpec& spec);

struct SweepRow {
  double density = 0.0;
  double rate_hz = 0.0;
  int capacity = 1;
  QueueDiscipline discipline = QueueDiscipline::Fcfs;
  std::uint64_t seed = 0;
  std::string config_hash;
  bool ok = false;
  std::string error;  // empty when ok
  RunMetrics metrics;
};

// Across-seed statistics of one metric; failed runs and NaN values are
// left out, `n` says how many seeds contributed.
struct Stat {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for n < 2
  std::size_t n = 0;
};
Stat summarize(const std::vector<double>& values);

struct CellSummary {
  double density = 0.0;
  int capacity = 1;
  QueueDiscipline discipline = QueueDiscipline::Fcfs;
  double rate_hz = 0.0;
  std::size_t runs = 0;
  Stat risk, aoi, delay, collision_loss, throughput, queue_drops;
};

struct SweepResult {
  std::vector<SweepRow> rows;          // canonical cell order
  std::vector<CellSummary> summary;    // canonical (density, capacity, discipline, rate) order
  std::size_t failures() const;
};

/// Per-cell means and standard deviations, rebuilt from raw rows.
std::vector<CellSummary> aggregate(const std::vector<SweepRow>& rows);

struct SweepOptions {
  std::string out_dir;      // empty: nothing cached or written
  unsigned workers = 1;
  bool shuffle = false;     // execute cells in a permuted order (testing)
  std::function<void(std::size_t done, std::size_t total, const SweepRow&)> progress;
};

/// Runs every cell not already cached under out_dir/runs and writes
/// out_dir/sweep_rows.csv and out_dir/sweep_summary.csv. A failing cell is
/// recorded in its row and the sweep continues.
SweepResult run_sweep(const SweepSpec& spec, const SweepOptions& options = {});

void write_rows_csv(std::ostream& out, const std::vector<SweepRow>& rows);
void write_summary_csv(std::ostream& out, const std::vector<CellSummary>& summary);
std::vector<SweepRow> read_rows_csv(std::istream& in);
/// Loads out_dir/sweep_rows.csv and re-aggregates it.
SweepResult load_sweep_result(const std::string& out_dir);

enum class Metric { Risk, Aoi, Delay, CollisionLoss, Throughput };
Metric parse_metric(const std::string& name);
std::string to_string(Metric m);
/// Column name of the underlying RunMetrics field.
std::string metric_column(Metric m);
const Stat& stat_of(const CellSummary& cell, Metric m);

struct OptimalRate {
  double rate_hz = 0.0;
  std::vector<std::pair<double, Stat>> curve;  // by ascending rate
};

/// Argmin over rates of the across-seed mean (argmax for throughput); ties
/// go to the lowest rate. Throws std::invalid_argument naming the missing
/// cells when the slice is absent or incomplete.
OptimalRate optimal_rate(const SweepResult& result, Metric metric, double density, int capacity,
                         QueueDiscipline discipline);

/// Long format: metric,density,capacity,discipline,rate_hz,metric_mean,
/// metric_std,n_seeds.
void emit_figure_data(std::ostream& out, const SweepResult& result, Metric metric);

}  // namespace v2v
