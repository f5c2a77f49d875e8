#include "v2v/mac.hpp"

namespace v2v {

double frame_airtime(int size_bytes, double data_rate_mbps, double preamble_us) {
  return preamble_us * 1e-6 + (size_bytes * 8.0) / (data_rate_mbps * 1e6);
}

double first_generation_time(double beacon_rate_hz, RandomStream& rng) {
  return rng.uniform01() / beacon_rate_hz;
}

double next_generation_time(double current, double beacon_rate_hz, double jitter,
                            RandomStream& rng) {
  const double period = 1.0 / beacon_rate_hz;
  return current + period * (1.0 + rng.uniform(0.0, jitter));
}

MacTiming MacTiming::from(const SimConfig& config) {
  MacTiming t;
  t.slot = microseconds_to_ticks(config.slot_us);
  t.sifs = microseconds_to_ticks(config.sifs_us);
  t.difs = microseconds_to_ticks(config.difs_us);
  t.airtime = seconds_to_ticks(
      frame_airtime(config.packet_size_bytes, config.data_rate_mbps, config.preamble_us));
  t.cw_min = config.cw_min;
  return t;
}

}  // namespace v2v
