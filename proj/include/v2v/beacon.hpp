#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>

#include "v2v/config.hpp"
#include "v2v/event_queue.hpp"

namespace v2v {

/// Safety beacon: the sender's kinematic snapshot at generation time.
struct Beacon {
  std::uint32_t sender_id = 0;
  std::uint32_t seq = 0;
  Tick gen_tick = 0;
  double gen_pos_x = 0.0;
  double gen_pos_y = 0.0;
  double sender_speed = 0.0;
  int size_bytes = 0;

  double gen_time() const { return ticks_to_seconds(gen_tick); }
};

// Beacons waiting for the MAC. The frame currently contending or on the air
// is held by the MAC, not here, so capacity counts waiting beacons only.
class BeaconQueue {
 public:
  BeaconQueue(QueueDiscipline discipline, int capacity);

  /// FCFS drops the arrival when full; LCFS evicts the oldest waiting beacon
  /// and admits the arrival. Returns the dropped beacon, if any.
  std::optional<Beacon> enqueue(const Beacon& b);
  /// FCFS serves the oldest, LCFS the newest. nullopt when empty.
  std::optional<Beacon> dequeue();

  std::size_t size() const { return contents_.size(); }
  bool empty() const { return contents_.empty(); }
  int capacity() const { return capacity_; }
  QueueDiscipline discipline() const { return discipline_; }
  /// Waiting beacons, oldest first.
  const std::deque<Beacon>& contents() const { return contents_; }

 private:
  QueueDiscipline discipline_;
  int capacity_;
  std::deque<Beacon> contents_;
};

}  // namespace v2v
