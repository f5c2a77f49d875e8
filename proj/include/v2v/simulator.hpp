#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "v2v/beacon.hpp"
#include "v2v/channel.hpp"
#include "v2v/config.hpp"
#include "v2v/event_queue.hpp"
#include "v2v/mobility.hpp"

namespace v2v {

/// One successful beacon delivery.
struct ReceptionRecord {
  std::uint32_t sender_id = 0;
  std::uint32_t receiver_id = 0;
  std::uint32_t seq = 0;
  double gen_time = 0.0;
  double rx_time = 0.0;
  double gen_pos_x = 0.0;
  double sender_speed = 0.0;

  double delay() const { return rx_time - gen_time; }
  bool operator==(const ReceptionRecord&) const = default;
};

// Per-receiver accounting. Each transmitted frame contributes one
// disposition for every other vehicle; a beacon that never reaches the air
// (dropped, or still queued at the end) counts once per potential receiver.
struct LossCounters {
  std::uint64_t beacons_generated = 0;
  std::uint64_t frames_transmitted = 0;
  std::uint64_t received = 0;
  std::uint64_t collision_losses = 0;
  std::uint64_t below_sensitivity = 0;
  std::uint64_t queue_drops = 0;
  std::uint64_t unfinished = 0;  // queued, contending or on the air at the end

  // Same counters restricted to events at or after the warm-up.
  std::uint64_t window_received = 0;
  std::uint64_t window_collision_losses = 0;
  std::uint64_t window_queue_drops = 0;

  /// generated * (N - 1) == received + collision + below
  ///                         + (queue_drops + unfinished) * (N - 1)
  bool balances(std::size_t vehicle_count) const;

  bool operator==(const LossCounters&) const = default;
};

/// A frame put on the air.
struct Transmission {
  std::uint64_t frame_id = 0;
  std::uint32_t sender_id = 0;
  Tick start = 0;
  Tick end = 0;
  Beacon beacon;
};

// Hooks into a running simulation. Called synchronously from the engine
// thread in event order.
class SimulationObserver {
 public:
  virtual ~SimulationObserver() = default;
  virtual void on_reception(const ReceptionRecord&) {}
  virtual void on_transmission(const Transmission&) {}
  /// Per (frame, receiver) outcome; only called when wants_frame_outcomes().
  virtual void on_frame_outcome(Tick /*tx_end*/, std::uint64_t /*frame_id*/,
                                std::uint32_t /*sender*/, std::uint32_t /*receiver*/,
                                Disposition) {}
  virtual bool wants_frame_outcomes() const { return false; }
};

/// Runs the beacon broadcast scenario over `vehicles` until
/// config.sim_duration_s. Validates the config first. Bit-identical output for
/// identical inputs.
LossCounters run_simulation(const SimConfig& config, std::span<const Vehicle> vehicles,
                            SimulationObserver& observer);

struct SimulationResult {
  std::vector<ReceptionRecord> log;
  LossCounters counters;
  std::vector<Vehicle> vehicles;
};

/// Places vehicles from the config seed and collects every reception.
SimulationResult run_simulation(const SimConfig& config);
SimulationResult run_simulation(const SimConfig& config, std::vector<Vehicle> vehicles);

/// CSV: sender,receiver,seq,gen_time,rx_time,gen_pos_x,sender_speed
void write_reception_log(std::ostream& out, std::span<const ReceptionRecord> log);

// Streams receptions as CSV (same columns as write_reception_log).
class ReceptionLogWriter : public SimulationObserver {
 public:
  explicit ReceptionLogWriter(std::ostream& out);
  void on_reception(const ReceptionRecord& r) override;

 private:
  std::ostream& out_;
};

/// CSV: time,sender,receiver,disposition, one line per (frame, receiver).
class FrameLogWriter : public SimulationObserver {
 public:
  explicit FrameLogWriter(std::ostream& out);
  void on_frame_outcome(Tick tx_end, std::uint64_t frame_id, std::uint32_t sender,
                        std::uint32_t receiver, Disposition d) override;
  bool wants_frame_outcomes() const override { return true; }

 private:
  std::ostream& out_;
};

/// Forwards every callback to several observers.
class ObserverFanout : public SimulationObserver {
 public:
  explicit ObserverFanout(std::vector<SimulationObserver*> targets) : targets_(std::move(targets)) {}
  void on_reception(const ReceptionRecord& r) override;
  void on_transmission(const Transmission& t) override;
  void on_frame_outcome(Tick tx_end, std::uint64_t frame_id, std::uint32_t sender,
                        std::uint32_t receiver, Disposition d) override;
  bool wants_frame_outcomes() const override;

 private:
  std::vector<SimulationObserver*> targets_;
};

}  // namespace v2v
