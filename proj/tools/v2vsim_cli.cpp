// v2vsim: single runs, sweeps, optimal-rate queries and figure data.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "v2v/experiment.hpp"
#include "v2v/metrics.hpp"
#include "v2v/simulator.hpp"

namespace fs = std::filesystem;
using namespace v2v;

namespace {

void print_metrics(std::ostream& out, const RunMetrics& m, const LossCounters& c) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "vehicles = %llu\n"
                "risk_proportion = %.6g\n"
                "system_aoi_s = %.6g\n"
                "total_pps = %.6g\n"
                "per_vehicle_pps = %.6g\n"
                "mean_delay_s = %.6g\n"
                "receptions = %llu\n"
                "collision_losses = %llu\n"
                "queue_drops = %llu\n"
                "communicating_pairs = %llu\n"
                "risky_pairs = %llu\n"
                "excluded_pairs = %llu\n",
                static_cast<unsigned long long>(m.vehicles), m.risk_proportion, m.system_aoi_s,
                m.total_pps, m.per_vehicle_pps, m.mean_delay_s,
                static_cast<unsigned long long>(m.receptions),
                static_cast<unsigned long long>(m.collision_losses),
                static_cast<unsigned long long>(m.queue_drops),
                static_cast<unsigned long long>(m.communicating_pairs),
                static_cast<unsigned long long>(m.risky_pairs),
                static_cast<unsigned long long>(m.excluded_pairs));
  out << buf;
  std::snprintf(buf, sizeof buf,
                "# whole run: generated %llu, transmitted %llu, received %llu, collision %llu, "
                "below_sensitivity %llu, queue_drops %llu, unfinished %llu\n",
                static_cast<unsigned long long>(c.beacons_generated),
                static_cast<unsigned long long>(c.frames_transmitted),
                static_cast<unsigned long long>(c.received),
                static_cast<unsigned long long>(c.collision_losses),
                static_cast<unsigned long long>(c.below_sensitivity),
                static_cast<unsigned long long>(c.queue_drops),
                static_cast<unsigned long long>(c.unfinished));
  out << buf;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

int cmd_run(const std::string& config_path, const std::vector<std::string>& sets,
            const std::optional<std::uint64_t>& seed, const std::string& out_dir,
            bool frame_log) {
  SimConfig config;
  if (!config_path.empty()) config = apply_overrides(config, read_key_value_file(config_path));
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    config.set(s.substr(0, eq), s.substr(eq + 1));
  }
  if (seed) config.seed = *seed;
  config.validate();

  const auto vehicles = place_vehicles(config);
  MetricsCollector collector(config, vehicles);
  std::vector<SimulationObserver*> observers{&collector};

  std::ofstream receptions, frames;
  std::optional<ReceptionLogWriter> rx_writer;
  std::optional<FrameLogWriter> frame_writer;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    open_out(fs::path(out_dir) / "config.txt") << config.to_key_value_text();
    auto scenario = open_out(fs::path(out_dir) / "scenario.csv");
    write_scenario_csv(scenario, vehicles);
    receptions = open_out(fs::path(out_dir) / "receptions.csv");
    observers.push_back(&rx_writer.emplace(receptions));
    if (frame_log) {
      frames = open_out(fs::path(out_dir) / "frames.csv");
      observers.push_back(&frame_writer.emplace(frames));
    }
  } else if (frame_log) {
    throw ConfigError("--frame-log needs --out");
  }

  ObserverFanout fanout(observers);
  const LossCounters counters = run_simulation(config, vehicles, fanout);
  const RunMetrics metrics = collector.run_metrics(counters);

  std::cout << "config_hash = " << config.hash() << '\n';
  print_metrics(std::cout, metrics, counters);
  if (!out_dir.empty()) {
    auto m = open_out(fs::path(out_dir) / "metrics.txt");
    m << "config_hash = " << config.hash() << '\n';
    print_metrics(m, metrics, counters);
    auto pairs = open_out(fs::path(out_dir) / "pairs.csv");
    write_pair_metrics_csv(pairs, collector.pair_metrics());
  }
  return 0;
}

int cmd_sweep(const std::string& spec_path, const std::string& out_dir, unsigned workers,
              bool quiet) {
  const SweepSpec spec = read_sweep_spec(spec_path);
  SweepOptions options;
  options.out_dir = out_dir;
  options.workers = workers;
  if (!quiet)
    options.progress = [](std::size_t done, std::size_t total, const SweepRow& row) {
      std::fprintf(stderr, "[%zu/%zu] density=%g rate=%g cap=%d %s seed=%llu %s\n", done, total,
                   row.density, row.rate_hz, row.capacity, to_string(row.discipline).c_str(),
                   static_cast<unsigned long long>(row.seed),
                   row.ok ? "ok" : ("FAILED: " + row.error).c_str());
    };
  const SweepResult result = run_sweep(spec, options);
  std::cout << "runs = " << result.rows.size() << "\nfailures = " << result.failures()
            << "\nrows = " << (fs::path(out_dir) / "sweep_rows.csv").string()
            << "\nsummary = " << (fs::path(out_dir) / "sweep_summary.csv").string() << '\n';
  return result.failures() == 0 ? 0 : 3;
}

int cmd_optimal(const std::string& in_dir, const std::string& metric_name, double density,
                int capacity, const std::string& discipline) {
  const Metric metric = parse_metric(metric_name);
  const SweepResult result = load_sweep_result(in_dir);
  const OptimalRate best = optimal_rate(result, metric, density, capacity,
                                        parse_discipline(discipline));
  std::printf("optimal_rate_hz = %g\n# rate_hz,%s_mean,%s_std,n_seeds\n", best.rate_hz,
              metric_column(metric).c_str(), metric_column(metric).c_str());
  for (const auto& [rate, s] : best.curve)
    std::printf("%g,%.9g,%.9g,%zu%s\n", rate, s.mean, s.std, s.n,
                rate == best.rate_hz ? "  <-" : "");
  return 0;
}

int cmd_figure(const std::string& in_dir, const std::string& which, const std::string& out_path) {
  const Metric metric = parse_metric(which);
  const SweepResult result = load_sweep_result(in_dir);
  auto out = open_out(out_path);
  emit_figure_data(out, result, metric);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Beacon-rate / queueing simulator for V2V safety broadcasts"};
  app.require_subcommand(1);

  std::string config_path, out_dir, spec_path, in_dir, metric, which, discipline = "fcfs";
  std::vector<std::string> sets;
  std::uint64_t seed = 0;
  bool frame_log = false, quiet = false;
  unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  double density = 0.0;
  int capacity = 1;

  auto* run = app.add_subcommand("run", "simulate one configuration");
  run->add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);
  run->add_option("--set", sets, "override one field, key=value (repeatable)");
  auto* seed_opt = run->add_option("--seed", seed, "RNG seed");
  run->add_option("--out", out_dir, "write config, scenario, receptions, pairs and metrics here");
  run->add_flag("--frame-log", frame_log, "also write per-receiver frame outcomes (large)");

  auto* sweep = app.add_subcommand("sweep", "run a rate x density x queue grid");
  sweep->add_option("--spec", spec_path, "sweep spec file")->required()->check(CLI::ExistingFile);
  sweep->add_option("--out", out_dir, "output directory (resumable)")->required();
  sweep->add_option("--workers", workers, "parallel runs")->check(CLI::PositiveNumber);
  sweep->add_flag("--quiet", quiet, "no per-run progress");

  auto* optimal = app.add_subcommand("optimal", "best beacon rate of one sweep slice");
  optimal->add_option("--in", in_dir, "sweep output directory")->required();
  optimal->add_option("--metric", metric, "risk | aoi | throughput")
      ->required()
      ->check(CLI::IsMember({"risk", "aoi", "throughput"}));
  optimal->add_option("--density", density, "veh/km")->required();
  optimal->add_option("--capacity", capacity, "queue capacity")->required();
  optimal->add_option("--discipline", discipline, "fcfs | lcfs")
      ->check(CLI::IsMember({"fcfs", "lcfs"}));

  auto* figure = app.add_subcommand("figure", "long-format CSV for one figure");
  figure->add_option("--in", in_dir, "sweep output directory")->required();
  figure->add_option("--which", which, "risk | aoi | delay | loss | throughput")
      ->required()
      ->check(CLI::IsMember({"risk", "aoi", "delay", "loss", "throughput"}));
  figure->add_option("--out", out_dir, "CSV file to write")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run)
      return cmd_run(config_path, sets,
                     seed_opt->count() ? std::optional<std::uint64_t>(seed) : std::nullopt,
                     out_dir, frame_log);
    if (*sweep) return cmd_sweep(spec_path, out_dir, workers, quiet);
    if (*optimal) return cmd_optimal(in_dir, metric, density, capacity, discipline);
    if (*figure) return cmd_figure(in_dir, which, out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
