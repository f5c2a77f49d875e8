#pragma once

#include "v2v/config.hpp"
#include "v2v/event_queue.hpp"
#include "v2v/rng.hpp"

namespace v2v {

/// Preamble plus payload serialization time, in seconds.
double frame_airtime(int size_bytes, double data_rate_mbps, double preamble_us);

/// First beacon of a vehicle: uniform on [0, period).
double first_generation_time(double beacon_rate_hz, RandomStream& rng);

/// current + P (1 + U), U uniform on [0, jitter], P = 1 / rate.
double next_generation_time(double current, double beacon_rate_hz, double jitter,
                            RandomStream& rng);

/// Broadcast backoff: uniform on {0, ..., cw_min}. No doubling, no retries.
inline int draw_backoff(int cw_min, RandomStream& rng) { return rng.uniform_int(0, cw_min); }

// MAC timing in ticks, precomputed once per run.
struct MacTiming {
  Tick slot = 0;
  Tick sifs = 0;
  Tick difs = 0;
  Tick airtime = 0;
  int cw_min = 0;

  static MacTiming from(const SimConfig& config);
};

}  // namespace v2v
