#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>

namespace v2v {

enum class QueueDiscipline { Fcfs, Lcfs };

std::string to_string(QueueDiscipline d);
QueueDiscipline parse_discipline(const std::string& text);

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Every scenario parameter of one simulation run. Defaults reproduce the
// highway setup (1 km, 3 lanes, 320 B beacons at 6 Mbps, gamma = 3).
struct SimConfig {
  // geometry and traffic
  double road_length_m = 1000.0;
  int lanes = 3;
  double lane_width_m = 4.0;
  double density_veh_per_km = 50.0;
  double speed_mean_mps = 25.0;
  double speed_spread_mps = 3.0;  // standard deviation

  // beaconing
  double beacon_rate_hz = 10.0;
  double rate_jitter = 0.1;
  int packet_size_bytes = 320;
  double data_rate_mbps = 6.0;

  // radio
  double channel_freq_ghz = 5.9;
  double bandwidth_mhz = 10.0;
  double path_loss_exponent = 3.0;
  double tx_power_dbm = 33.0;
  double rx_sensitivity_dbm = -90.0;
  double sinr_threshold_db = 8.0;
  double noise_figure_db = 6.0;
  // A frame from another vehicle at or above this power marks the medium busy.
  double cs_threshold_dbm = -100.0;

  // 802.11p 10 MHz MAC timing
  double slot_us = 13.0;
  double sifs_us = 32.0;
  double difs_us = 58.0;
  double preamble_us = 40.0;
  int cw_min = 127;

  int queue_capacity = 1;
  QueueDiscipline queue_discipline = QueueDiscipline::Fcfs;

  // driver model
  double t_react_s = 1.0;
  double decel_mps2 = 4.6;
  double rel_speed_floor_mps = 0.05;

  double sim_duration_s = 60.0;
  double warmup_s = 1.0;
  std::uint64_t seed = 1;

  /// Braking time from the mean speed; always derived, never stored.
  double t_brake_s() const { return speed_mean_mps / decel_mps2; }
  /// Risky-pair threshold on the averaged TTC error.
  double risk_threshold_s() const { return t_react_s + t_brake_s(); }
  /// round(density * length / 1000), halves rounded up.
  int vehicle_count() const;
  double measurement_interval_s() const { return sim_duration_s - warmup_s; }

  /// Throws ConfigError naming the first offending field.
  void validate() const;

  /// Assigns one field from its textual form. Throws ConfigError on unknown
  /// keys or malformed values.
  void set(const std::string& key, const std::string& value);

  /// Canonical `key = value` listing of every field in declaration order.
  /// Doubles are printed with 17 significant digits so parsing it back
  /// reproduces the config exactly.
  std::string to_key_value_text() const;

  /// FNV-1a 64 of to_key_value_text(), as 16 hex digits.
  std::string hash() const;

  bool operator==(const SimConfig&) const = default;
};

/// Parses `key = value` lines; `#` starts a comment; blank lines ignored.
/// Values keep their raw text (list values included).
std::map<std::string, std::string> parse_key_value_text(const std::string& text);
std::map<std::string, std::string> read_key_value_file(const std::string& path);

/// Applies every entry of `entries` onto `base`.
SimConfig apply_overrides(SimConfig base, const std::map<std::string, std::string>& entries);

}  // namespace v2v
