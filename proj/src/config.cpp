#include "v2v/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

namespace v2v {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

double parse_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  try {
    std::size_t used = 0;
    double v = std::stod(t, &used);
    if (used != t.size()) throw std::invalid_argument(t);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("invalid number for '" + key + "': '" + text + "'");
  }
}

long long parse_integer(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  long long v = 0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || p != t.data() + t.size())
    throw ConfigError("invalid integer for '" + key + "': '" + text + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || p != t.data() + t.size())
    throw ConfigError("invalid unsigned integer for '" + key + "': '" + text + "'");
  return v;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// One row per field. Order is the canonical serialization order and must not
// change, otherwise every stored config hash changes with it.
struct Field {
  const char* name;
  std::function<std::string(const SimConfig&)> get;
  std::function<void(SimConfig&, const std::string&)> set;
};

#define V2V_DOUBLE_FIELD(member)                                                      \
  Field {                                                                             \
    #member, [](const SimConfig& c) { return format_double(c.member); },               \
        [](SimConfig& c, const std::string& v) { c.member = parse_double(#member, v); } \
  }
#define V2V_INT_FIELD(member)                                                          \
  Field {                                                                              \
    #member, [](const SimConfig& c) { return std::to_string(c.member); },               \
        [](SimConfig& c, const std::string& v) {                                       \
          c.member = static_cast<int>(parse_integer(#member, v));                      \
        }                                                                              \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      V2V_DOUBLE_FIELD(road_length_m),
      V2V_INT_FIELD(lanes),
      V2V_DOUBLE_FIELD(lane_width_m),
      V2V_DOUBLE_FIELD(density_veh_per_km),
      V2V_DOUBLE_FIELD(speed_mean_mps),
      V2V_DOUBLE_FIELD(speed_spread_mps),
      V2V_DOUBLE_FIELD(beacon_rate_hz),
      V2V_DOUBLE_FIELD(rate_jitter),
      V2V_INT_FIELD(packet_size_bytes),
      V2V_DOUBLE_FIELD(data_rate_mbps),
      V2V_DOUBLE_FIELD(channel_freq_ghz),
      V2V_DOUBLE_FIELD(bandwidth_mhz),
      V2V_DOUBLE_FIELD(path_loss_exponent),
      V2V_DOUBLE_FIELD(tx_power_dbm),
      V2V_DOUBLE_FIELD(rx_sensitivity_dbm),
      V2V_DOUBLE_FIELD(sinr_threshold_db),
      V2V_DOUBLE_FIELD(noise_figure_db),
      V2V_DOUBLE_FIELD(cs_threshold_dbm),
      V2V_DOUBLE_FIELD(slot_us),
      V2V_DOUBLE_FIELD(sifs_us),
      V2V_DOUBLE_FIELD(difs_us),
      V2V_DOUBLE_FIELD(preamble_us),
      V2V_INT_FIELD(cw_min),
      V2V_INT_FIELD(queue_capacity),
      Field{"queue_discipline", [](const SimConfig& c) { return to_string(c.queue_discipline); },
            [](SimConfig& c, const std::string& v) { c.queue_discipline = parse_discipline(v); }},
      V2V_DOUBLE_FIELD(t_react_s),
      V2V_DOUBLE_FIELD(decel_mps2),
      V2V_DOUBLE_FIELD(rel_speed_floor_mps),
      V2V_DOUBLE_FIELD(sim_duration_s),
      V2V_DOUBLE_FIELD(warmup_s),
      Field{"seed", [](const SimConfig& c) { return std::to_string(c.seed); },
            [](SimConfig& c, const std::string& v) { c.seed = parse_u64("seed", v); }},
  };
  return table;
}

#undef V2V_DOUBLE_FIELD
#undef V2V_INT_FIELD

}  // namespace

std::string to_string(QueueDiscipline d) { return d == QueueDiscipline::Fcfs ? "fcfs" : "lcfs"; }

QueueDiscipline parse_discipline(const std::string& text) {
  const std::string t = lower(trim(text));
  if (t == "fcfs") return QueueDiscipline::Fcfs;
  if (t == "lcfs") return QueueDiscipline::Lcfs;
  throw ConfigError("unknown queue discipline '" + text + "' (expected fcfs or lcfs)");
}

int SimConfig::vehicle_count() const {
  return static_cast<int>(std::floor(density_veh_per_km * road_length_m / 1000.0 + 0.5));
}

void SimConfig::validate() const {
  auto positive = [](const char* name, double v) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(name) + " must be > 0");
  };
  positive("road_length_m", road_length_m);
  positive("lane_width_m", lane_width_m);
  positive("density_veh_per_km", density_veh_per_km);
  positive("speed_mean_mps", speed_mean_mps);
  positive("beacon_rate_hz", beacon_rate_hz);
  positive("data_rate_mbps", data_rate_mbps);
  positive("channel_freq_ghz", channel_freq_ghz);
  positive("bandwidth_mhz", bandwidth_mhz);
  positive("path_loss_exponent", path_loss_exponent);
  positive("slot_us", slot_us);
  positive("sifs_us", sifs_us);
  positive("difs_us", difs_us);
  positive("preamble_us", preamble_us);
  positive("decel_mps2", decel_mps2);
  positive("t_react_s", t_react_s);
  positive("rel_speed_floor_mps", rel_speed_floor_mps);
  positive("sim_duration_s", sim_duration_s);
  if (lanes < 1) throw ConfigError("lanes must be >= 1");
  if (queue_capacity < 1) throw ConfigError("queue_capacity must be >= 1");
  if (packet_size_bytes < 0) throw ConfigError("packet_size_bytes must be >= 0");
  if (cw_min < 0) throw ConfigError("cw_min must be >= 0");
  if (speed_spread_mps < 0.0) throw ConfigError("speed_spread_mps must be >= 0");
  if (rate_jitter < 0.0) throw ConfigError("rate_jitter must be >= 0");
  if (warmup_s < 0.0 || warmup_s >= sim_duration_s)
    throw ConfigError("warmup_s must lie in [0, sim_duration_s)");
  if (vehicle_count() < 1) throw ConfigError("density and road length yield no vehicles");
  for (double v : {tx_power_dbm, rx_sensitivity_dbm, sinr_threshold_db, noise_figure_db,
                   cs_threshold_dbm})
    if (!std::isfinite(v)) throw ConfigError("radio parameters must be finite");
}

void SimConfig::set(const std::string& key, const std::string& value) {
  const std::string k = trim(key);
  for (const auto& f : fields()) {
    if (k == f.name) {
      f.set(*this, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + k + "'");
}

std::string SimConfig::to_key_value_text() const {
  std::string out;
  for (const auto& f : fields()) {
    out += f.name;
    out += " = ";
    out += f.get(*this);
    out += '\n';
  }
  return out;
}

std::string SimConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : to_key_value_text()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::map<std::string, std::string> parse_key_value_text(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

std::map<std::string, std::string> read_key_value_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_key_value_text(ss.str());
}

SimConfig apply_overrides(SimConfig base, const std::map<std::string, std::string>& entries) {
  for (const auto& [k, v] : entries) base.set(k, v);
  return base;
}

}  // namespace v2v
