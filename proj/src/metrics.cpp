#include "v2v/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>

namespace v2v {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const ReceptionRecord& freshest_by(double t, const PairTrace& trace) {
  if (trace.receptions.empty() || t < trace.t_start() || t > trace.t_end())
    throw std::out_of_range("time outside the pair's observation interval");
  const ReceptionRecord* best = nullptr;
  for (const auto& r : trace.receptions) {
    if (r.rx_time > t) break;
    if (!best || r.gen_time > best->gen_time) best = &r;
  }
  return *best;
}

PairAccumulator accumulate(const PairTrace& trace, const Vehicle& sender, double rel_speed) {
  PairAccumulator acc;
  for (const auto& r : trace.receptions) acc.add(r, sender, rel_speed);
  return acc;
}

}  // namespace

bool PairTrace::communicating() const {
  return receptions.size() >= 2 && t_end() > t_start();
}

std::vector<PairTrace> build_pair_traces(std::span<const ReceptionRecord> log, double from_time) {
  std::map<std::pair<std::uint32_t, std::uint32_t>, PairTrace> by_pair;
  for (const auto& r : log) {
    if (r.rx_time < from_time) continue;
    auto& trace = by_pair[{r.sender_id, r.receiver_id}];
    trace.sender_id = r.sender_id;
    trace.receiver_id = r.receiver_id;
    trace.receptions.push_back(r);
  }
  std::vector<PairTrace> out;
  out.reserve(by_pair.size());
  for (auto& [key, trace] : by_pair) {
    std::stable_sort(trace.receptions.begin(), trace.receptions.end(),
                     [](const auto& a, const auto& b) { return a.rx_time < b.rx_time; });
    out.push_back(std::move(trace));
  }
  return out;
}

double integrate_abs_linear(double a, double b, double t0, double t1) {
  const double f0 = a + b * t0;
  const double f1 = a + b * t1;
  if ((f0 >= 0.0) == (f1 >= 0.0) || f0 == 0.0 || f1 == 0.0)
    return std::abs(0.5 * (f0 + f1)) * (t1 - t0);
  const double root = -a / b;
  return 0.5 * std::abs(f0) * (root - t0) + 0.5 * std::abs(f1) * (t1 - root);
}

void PairAccumulator::add(const ReceptionRecord& r, const Vehicle& sender, double rel_speed) {
  if (count_ == 0) {
    first_rx_ = last_rx_ = r.rx_time;
    fresh_gen_ = r.gen_time;
    fresh_pos_ = r.gen_pos_x;
    count_ = 1;
    delay_sum_ += r.delay();
    return;
  }
  const double t0 = last_rx_;
  const double t1 = r.rx_time;
  // Error between receptions: x0 + v t - reported, linear in t.
  const double a = sender.x0 - fresh_pos_;
  const double b = sender.speed;
  te_area_ += integrate_abs_linear(a, b, t0, t1);
  if (rel_speed > 0.0) dttc_area_ += integrate_abs_linear(a / rel_speed, b / rel_speed, t0, t1);
  aoi_area_ += 0.5 * (t1 - t0) * ((t0 - fresh_gen_) + (t1 - fresh_gen_));

  if (r.gen_time > fresh_gen_) {
    fresh_gen_ = r.gen_time;
    fresh_pos_ = r.gen_pos_x;
  }
  last_rx_ = t1;
  ++count_;
  delay_sum_ += r.delay();
}

double tracking_error_at(double t, const PairTrace& trace, const Vehicle& sender) {
  return std::abs(sender.x_at(t) - freshest_by(t, trace).gen_pos_x);
}

std::optional<double> avg_tracking_error(const PairTrace& trace, const Vehicle& sender) {
  if (!trace.communicating()) return std::nullopt;
  const auto acc = accumulate(trace, sender, 0.0);
  return acc.tracking_error_area() / acc.interval();
}

std::optional<TtcValues> ttc_values(double t, const PairTrace& trace, const Vehicle& sender,
                                    const Vehicle& receiver, double rel_speed_floor_mps) {
  const double s = std::abs(sender.speed - receiver.speed);
  const double reported = freshest_by(t, trace).gen_pos_x;
  if (s < rel_speed_floor_mps) return std::nullopt;
  const double xv = receiver.x_at(t);
  return TtcValues{std::abs(xv - reported) / s, std::abs(xv - sender.x_at(t)) / s};
}

bool classify_risky(double avg_delta_ttc_s, const SimConfig& config) {
  return avg_delta_ttc_s > config.risk_threshold_s();
}

std::optional<double> avg_aoi(const PairTrace& trace) {
  if (!trace.communicating()) return std::nullopt;
  const auto acc = accumulate(trace, Vehicle{}, 0.0);
  return acc.aoi_area() / acc.interval();
}

std::optional<double> system_aoi(std::span<const PairMetrics> pairs) {
  if (pairs.empty()) return std::nullopt;
  double sum = 0.0;
  for (const auto& p : pairs) sum += p.avg_aoi_s;
  return sum / static_cast<double>(pairs.size());
}

Throughput throughput(std::uint64_t receptions, double tau_s, std::size_t vehicle_count) {
  if (!(tau_s > 0.0)) throw std::invalid_argument("throughput interval must be > 0");
  Throughput t;
  t.total_pps = static_cast<double>(receptions) / tau_s;
  t.per_vehicle_pps = vehicle_count ? t.total_pps / static_cast<double>(vehicle_count) : 0.0;
  return t;
}

DelayAndLoss delay_and_loss(std::span<const ReceptionRecord> log, const LossCounters& counters) {
  DelayAndLoss out;
  out.collision_losses = counters.collision_losses;
  out.queue_drops = counters.queue_drops;
  if (!log.empty()) {
    double sum = 0.0;
    for (const auto& r : log) sum += r.delay();
    out.mean_delay_s = sum / static_cast<double>(log.size());
  }
  return out;
}

MetricsCollector::MetricsCollector(const SimConfig& config, std::span<const Vehicle> vehicles)
    : config_(config),
      vehicles_(vehicles.begin(), vehicles.end()),
      pairs_(vehicles.size() * vehicles.size()) {}

void MetricsCollector::on_reception(const ReceptionRecord& r) {
  if (seconds_to_ticks(r.rx_time) < seconds_to_ticks(config_.warmup_s)) return;
  const Vehicle& sender = vehicles_[r.sender_id];
  const double rel = std::abs(sender.speed - vehicles_[r.receiver_id].speed);
  pairs_[r.sender_id * vehicles_.size() + r.receiver_id].add(r, sender, rel);
  ++receptions_;
  delay_sum_ += r.delay();
}

std::vector<PairMetrics> MetricsCollector::pair_metrics() const {
  std::vector<PairMetrics> out;
  const std::size_t n = vehicles_.size();
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = 0; v < n; ++v) {
      const PairAccumulator& acc = pairs_[u * n + v];
      if (!acc.communicating()) continue;
      PairMetrics m;
      m.sender_id = static_cast<std::uint32_t>(u);
      m.receiver_id = static_cast<std::uint32_t>(v);
      m.receptions = acc.count();
      const double span = acc.interval();
      m.avg_tracking_error_m = acc.tracking_error_area() / span;
      m.avg_aoi_s = acc.aoi_area() / span;
      m.mean_delay_s = acc.delay_sum() / static_cast<double>(acc.count());
      m.rel_speed_mps = std::abs(vehicles_[u].speed - vehicles_[v].speed);
      m.excluded_low_relspeed = m.rel_speed_mps < config_.rel_speed_floor_mps;
      if (m.excluded_low_relspeed) {
        m.avg_delta_ttc_s = kNaN;
      } else {
        m.avg_delta_ttc_s = acc.delta_ttc_area() / span;
        m.risky = classify_risky(m.avg_delta_ttc_s, config_);
      }
      out.push_back(m);
    }
  }
  return out;
}

RunMetrics MetricsCollector::run_metrics(const LossCounters& counters) const {
  const auto pairs = pair_metrics();
  RunMetrics m;
  m.vehicles = vehicles_.size();
  m.communicating_pairs = pairs.size();
  for (const auto& p : pairs) {
    if (p.excluded_low_relspeed)
      ++m.excluded_pairs;
    else if (p.risky)
      ++m.risky_pairs;
  }
  const std::uint64_t eligible = m.communicating_pairs - m.excluded_pairs;
  m.risk_proportion = eligible ? static_cast<double>(m.risky_pairs) / eligible : kNaN;
  m.system_aoi_s = system_aoi(pairs).value_or(kNaN);

  const auto tp = throughput(receptions_, config_.measurement_interval_s(), vehicles_.size());
  m.total_pps = tp.total_pps;
  m.per_vehicle_pps = tp.per_vehicle_pps;
  m.receptions = receptions_;
  m.mean_delay_s = receptions_ ? delay_sum_ / static_cast<double>(receptions_) : kNaN;
  m.queue_drops = counters.window_queue_drops;
  m.collision_losses = counters.window_collision_losses;
  return m;
}

std::vector<PairMetrics> compute_pair_metrics(const SimConfig& config,
                                              std::span<const Vehicle> vehicles,
                                              std::span<const ReceptionRecord> log) {
  MetricsCollector collector(config, vehicles);
  for (const auto& r : log) collector.on_reception(r);
  return collector.pair_metrics();
}

RunMetrics compute_run_metrics(const SimConfig& config, const SimulationResult& result) {
  MetricsCollector collector(config, result.vehicles);
  for (const auto& r : result.log) collector.on_reception(r);
  return collector.run_metrics(result.counters);
}

RunMetrics simulate_and_measure(const SimConfig& config, std::vector<PairMetrics>* pairs_out) {
  config.validate();
  const auto vehicles = place_vehicles(config);
  MetricsCollector collector(config, vehicles);
  const LossCounters counters = run_simulation(config, vehicles, collector);
  if (pairs_out) *pairs_out = collector.pair_metrics();
  return collector.run_metrics(counters);
}

void write_pair_metrics_csv(std::ostream& out, std::span<const PairMetrics> pairs) {
  out << "sender,receiver,receptions,avg_tracking_error_m,avg_delta_ttc_s,avg_aoi_s,"
         "mean_delay_s,risky,excluded\n";
  char buf[256];
  for (const auto& p : pairs) {
    std::snprintf(buf, sizeof buf, "%u,%u,%llu,%.17g,%.17g,%.17g,%.17g,%d,%d\n", p.sender_id,
                  p.receiver_id, static_cast<unsigned long long>(p.receptions),
                  p.avg_tracking_error_m, p.avg_delta_ttc_s, p.avg_aoi_s, p.mean_delay_s,
                  p.risky ? 1 : 0, p.excluded_low_relspeed ? 1 : 0);
    out << buf;
  }
}

}  // namespace v2v
