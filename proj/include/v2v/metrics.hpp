#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "v2v/config.hpp"
#include "v2v/mobility.hpp"
#include "v2v/simulator.hpp"

namespace v2v {

/// Directed sender -> receiver reception history, in rx_time order.
struct PairTrace {
  std::uint32_t sender_id = 0;
  std::uint32_t receiver_id = 0;
  std::vector<ReceptionRecord> receptions;

  double t_start() const { return receptions.front().rx_time; }
  double t_end() const { return receptions.back().rx_time; }
  /// At least two receptions spanning a nonzero interval.
  bool communicating() const;
};

/// Groups a reception log into pair traces, dropping receptions before
/// `from_time`. Pairs are returned in (sender, receiver) order.
std::vector<PairTrace> build_pair_traces(std::span<const ReceptionRecord> log,
                                         double from_time = 0.0);

/// |x_u(t) - x_reported| with x_reported the position carried by the freshest
/// beacon received by t. Throws std::out_of_range outside [T_start, T_end].
double tracking_error_at(double t, const PairTrace& trace, const Vehicle& sender);

/// Time average of the tracking error over [T_start, T_end], integrated
/// exactly. nullopt for a non-communicating pair.
std::optional<double> avg_tracking_error(const PairTrace& trace, const Vehicle& sender);

struct TtcValues {
  double calculated = 0.0;  // from the reported position
  double actual = 0.0;      // from the true position
};

/// TTC the receiver computes from the freshest beacon vs the true TTC.
/// nullopt when the relative speed is below `rel_speed_floor_mps`.
std::optional<TtcValues> ttc_values(double t, const PairTrace& trace, const Vehicle& sender,
                                    const Vehicle& receiver, double rel_speed_floor_mps);

/// avg_delta_ttc > t_react + t_brake. Over- and underestimates both count.
bool classify_risky(double avg_delta_ttc_s, const SimConfig& config);

/// Sawtooth age area over [T_start, T_end] divided by its length. Receptions
/// older than the freshest one held do not reset the age.
std::optional<double> avg_aoi(const PairTrace& trace);

struct PairMetrics {
  std::uint32_t sender_id = 0;
  std::uint32_t receiver_id = 0;
  std::uint64_t receptions = 0;
  double avg_tracking_error_m = 0.0;
  double avg_delta_ttc_s = 0.0;  // NaN when excluded
  double avg_aoi_s = 0.0;
  double mean_delay_s = 0.0;
  double rel_speed_mps = 0.0;
  bool risky = false;
  bool excluded_low_relspeed = false;
};

/// Mean of avg_aoi over the given (communicating) pairs.
std::optional<double> system_aoi(std::span<const PairMetrics> pairs);

struct Throughput {
  double total_pps = 0.0;
  double per_vehicle_pps = 0.0;
};
Throughput throughput(std::uint64_t receptions, double tau_s, std::size_t vehicle_count);

struct DelayAndLoss {
  std::optional<double> mean_delay_s;
  std::uint64_t collision_losses = 0;
  std::uint64_t queue_drops = 0;
};
DelayAndLoss delay_and_loss(std::span<const ReceptionRecord> log, const LossCounters& counters);

struct RunMetrics {
  double risk_proportion = 0.0;  // NaN when no eligible pair
  double system_aoi_s = 0.0;     // NaN when no communicating pair
  double total_pps = 0.0;
  double per_vehicle_pps = 0.0;
  double mean_delay_s = 0.0;  // NaN when nothing was received
  std::uint64_t receptions = 0;
  std::uint64_t queue_drops = 0;
  std::uint64_t collision_losses = 0;
  std::uint64_t communicating_pairs = 0;
  std::uint64_t excluded_pairs = 0;
  std::uint64_t risky_pairs = 0;
  std::uint64_t vehicles = 0;
};

// Online per-pair integration. Feed one pair's receptions in rx order; the
// state is a handful of scalars, so a whole run can be reduced without
// keeping its log.
class PairAccumulator {
 public:
  void add(const ReceptionRecord& r, const Vehicle& sender, double rel_speed);

  std::uint64_t count() const { return count_; }
  bool communicating() const { return count_ >= 2 && last_rx_ > first_rx_; }
  double first_rx() const { return first_rx_; }
  double last_rx() const { return last_rx_; }
  double interval() const { return last_rx_ - first_rx_; }
  double tracking_error_area() const { return te_area_; }
  double delta_ttc_area() const { return dttc_area_; }
  double aoi_area() const { return aoi_area_; }
  double delay_sum() const { return delay_sum_; }

 private:
  std::uint64_t count_ = 0;
  double first_rx_ = 0.0;
  double last_rx_ = 0.0;
  double fresh_gen_ = 0.0;
  double fresh_pos_ = 0.0;
  double te_area_ = 0.0;
  double dttc_area_ = 0.0;
  double aoi_area_ = 0.0;
  double delay_sum_ = 0.0;
};

/// Integral of |a + b t| over [t0, t1], split at the root when it lies inside.
double integrate_abs_linear(double a, double b, double t0, double t1);

// Reduces a run to pair and run metrics as receptions stream in. Receptions
// before the warm-up are ignored.
class MetricsCollector : public SimulationObserver {
 public:
  MetricsCollector(const SimConfig& config, std::span<const Vehicle> vehicles);

  void on_reception(const ReceptionRecord& r) override;

  /// Metrics of every communicating pair, in (sender, receiver) order.
  std::vector<PairMetrics> pair_metrics() const;
  RunMetrics run_metrics(const LossCounters& counters) const;

 private:
  const SimConfig config_;
  std::vector<Vehicle> vehicles_;
  std::vector<PairAccumulator> pairs_;  // sender * N + receiver
  std::uint64_t receptions_ = 0;
  double delay_sum_ = 0.0;
};

/// Pair and run metrics of a finished run's full log.
std::vector<PairMetrics> compute_pair_metrics(const SimConfig& config,
                                              std::span<const Vehicle> vehicles,
                                              std::span<const ReceptionRecord> log);
RunMetrics compute_run_metrics(const SimConfig& config, const SimulationResult& result);

/// Simulates `config` and reduces it on the fly.
RunMetrics simulate_and_measure(const SimConfig& config,
                                std::vector<PairMetrics>* pairs_out = nullptr);

/// CSV: sender,receiver,receptions,avg_tracking_error_m,avg_delta_ttc_s,
/// avg_aoi_s,mean_delay_s,risky,excluded
void write_pair_metrics_csv(std::ostream& out, std::span<const PairMetrics> pairs);

}  // namespace v2v
