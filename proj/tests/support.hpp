#pragma once

#include <vector>

#include "v2v/config.hpp"
#include "v2v/mobility.hpp"
#include "v2v/simulator.hpp"

namespace v2v::testing {

// Short run with defaults otherwise; keeps the suite fast.
inline SimConfig small_config(double density, double rate, double duration = 3.0) {
  SimConfig c;
  c.density_veh_per_km = density;
  c.beacon_rate_hz = rate;
  c.sim_duration_s = duration;
  c.warmup_s = 0.5;
  return c;
}

// Strong transmitter and deaf-proof receiver: everything on a 1 km road is
// received unless it collides.
inline SimConfig ideal_range_config() {
  SimConfig c;
  c.tx_power_dbm = 60.0;
  c.rx_sensitivity_dbm = -85.0;
  c.cs_threshold_dbm = -85.0;
  return c;
}

inline Vehicle make_vehicle(std::uint32_t id, double x0, double speed, int lane = 0,
                            double lane_width = 4.0) {
  Vehicle v;
  v.id = id;
  v.lane = lane;
  v.x0 = x0;
  v.y = (lane + 0.5) * lane_width;
  v.speed = speed;
  return v;
}

// Records what the engine put on the air and every per-receiver outcome.
struct Recorder : SimulationObserver {
  struct Outcome {
    std::uint64_t frame_id;
    std::uint32_t receiver;
    Disposition disposition;
  };
  std::vector<Transmission> transmissions;
  std::vector<Outcome> outcomes;
  std::vector<ReceptionRecord> receptions;

  void on_reception(const ReceptionRecord& r) override { receptions.push_back(r); }
  void on_transmission(const Transmission& t) override { transmissions.push_back(t); }
  void on_frame_outcome(Tick, std::uint64_t frame_id, std::uint32_t, std::uint32_t receiver,
                        Disposition d) override {
    outcomes.push_back({frame_id, receiver, d});
  }
  bool wants_frame_outcomes() const override { return true; }
};

}  // namespace v2v::testing
