#include "v2v/beacon.hpp"

#include <stdexcept>

namespace v2v {

BeaconQueue::BeaconQueue(QueueDiscipline discipline, int capacity)
    : discipline_(discipline), capacity_(capacity) {
  if (capacity < 1) throw std::invalid_argument("queue capacity must be >= 1");
}

std::optional<Beacon> BeaconQueue::enqueue(const Beacon& b) {
  if (static_cast<int>(contents_.size()) < capacity_) {
    contents_.push_back(b);
    return std::nullopt;
  }
  if (discipline_ == QueueDiscipline::Fcfs) return b;
  Beacon evicted = contents_.front();
  contents_.pop_front();
  contents_.push_back(b);
  return evicted;
}

std::optional<Beacon> BeaconQueue::dequeue() {
  if (contents_.empty()) return std::nullopt;
  Beacon b;
  if (discipline_ == QueueDiscipline::Fcfs) {
    b = contents_.front();
    contents_.pop_front();
  } else {
    b = contents_.back();
    contents_.pop_back();
  }
  return b;
}

}  // namespace v2v
