#pragma once

#include <cstdint>
#include <optional>
#include <queue>
#include <vector>

namespace v2v {

/// Simulated time in integer nanoseconds. MAC slot arithmetic stays exact.
using Tick = std::int64_t;

inline constexpr Tick kTicksPerSecond = 1'000'000'000;

Tick seconds_to_ticks(double seconds);
inline double ticks_to_seconds(Tick t) { return static_cast<double>(t) * 1e-9; }
inline Tick microseconds_to_ticks(double us) { return seconds_to_ticks(us * 1e-6); }

// Declaration order is the tie-break priority at equal time: a frame ending
// releases the medium before anything else happening at the same tick.
enum class EventKind : std::uint8_t {
  TxEnd = 0,
  BeaconGeneration = 1,
  TxAttempt = 2,
  BackoffExpiry = 3,
  SimEnd = 4,
};

struct Event {
  Tick time = 0;
  EventKind kind = EventKind::SimEnd;
  std::uint32_t subject = 0;  // vehicle id
  std::uint64_t payload = 0;  // frame id for TxEnd, access token for MAC timers
  std::uint64_t seq = 0;      // assigned by the queue
};

// Min-heap on (time, kind, subject, insertion sequence).
class EventQueue {
 public:
  /// Throws std::logic_error when `e.time` precedes the current time.
  void schedule(Event e);
  /// Pops the next event and advances the clock; nullopt when drained.
  std::optional<Event> pop();

  Tick now() const { return now_; }
  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const;
  };
  std::priority_queue<Event, std::vector<Event>, Later> heap_;
  Tick now_ = 0;
  std::uint64_t next_seq_ = 0;
};

}  // namespace v2v
