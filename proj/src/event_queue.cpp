#include "v2v/event_queue.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace v2v {

Tick seconds_to_ticks(double seconds) {
  return static_cast<Tick>(std::llround(seconds * static_cast<double>(kTicksPerSecond)));
}

bool EventQueue::Later::operator()(const Event& a, const Event& b) const {
  if (a.time != b.time) return a.time > b.time;
  if (a.kind != b.kind) return a.kind > b.kind;
  if (a.subject != b.subject) return a.subject > b.subject;
  return a.seq > b.seq;
}

void EventQueue::schedule(Event e) {
  if (e.time < now_) {
    throw std::logic_error("event scheduled in the past: kind=" +
                           std::to_string(static_cast<int>(e.kind)) +
                           " vehicle=" + std::to_string(e.subject) + " time=" +
                           std::to_string(e.time) + "ns now=" + std::to_string(now_) + "ns");
  }
  e.seq = next_seq_++;
  heap_.push(e);
}

std::optional<Event> EventQueue::pop() {
  if (heap_.empty()) return std::nullopt;
  Event e = heap_.top();
  heap_.pop();
  now_ = e.time;
  return e;
}

}  // namespace v2v
