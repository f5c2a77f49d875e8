#include "v2v/simulator.hpp"

#include <algorithm>
#include <cstdio>
#include <optional>
#include <ostream>
#include <stdexcept>

#include "v2v/mac.hpp"
#include "v2v/rng.hpp"

namespace v2v {

bool LossCounters::balances(std::size_t vehicle_count) const {
  if (vehicle_count < 2) return received + collision_losses + below_sensitivity == 0;
  const std::uint64_t others = vehicle_count - 1;
  return beacons_generated * others ==
         received + collision_losses + below_sensitivity + (queue_drops + unfinished) * others;
}

namespace {

enum class RxState : unsigned char { Pending, Lost, Below, Sender };

struct AirFrame {
  Transmission tx;
  std::vector<double> power_mw;  // at every vehicle, 0 for the sender
  std::vector<RxState> state;
};

// Per-vehicle MAC state. `in_service` is the head-of-line frame, contending
// or on the air. `backoff` < 0 means no backoff is pending, so a frame that
// finds the medium idle may go after one DIFS.
struct Node {
  Node(QueueDiscipline d, int cap, RandomStream r) : queue(d, cap), rng(std::move(r)) {}

  BeaconQueue queue;
  RandomStream rng;
  std::optional<Beacon> in_service;
  int backoff = -1;
  int busy = 0;  // frames from others currently sensed
  bool transmitting = false;

  bool access_pending = false;
  EventKind access_kind = EventKind::TxAttempt;
  Tick access_time = 0;
  Tick countdown_start = 0;
  std::uint64_t token = 0;

  Tick next_gen = 0;
  std::uint32_t next_seq = 0;
};

class Engine {
 public:
  Engine(const SimConfig& config, std::span<const Vehicle> vehicles, SimulationObserver& observer)
      : cfg_(config),
        vehicles_(vehicles),
        obs_(observer),
        timing_(MacTiming::from(config)),
        link_(config),
        n_(vehicles.size()),
        end_tick_(seconds_to_ticks(config.sim_duration_s)),
        warmup_tick_(seconds_to_ticks(config.warmup_s)),
        noise_mw_(dbm_to_mw(noise_floor_dbm(config))),
        sinr_threshold_(dbm_to_mw(config.sinr_threshold_db)),
        cs_mw_(dbm_to_mw(config.cs_threshold_dbm)),
        want_outcomes_(observer.wants_frame_outcomes()) {
    for (std::size_t i = 0; i < vehicles.size(); ++i)
      if (vehicles[i].id != i) throw std::invalid_argument("vehicle ids must equal their index");
    interference_mw_.assign(n_, 0.0);
    pending_.resize(n_);
    nodes_.reserve(n_);
    for (const auto& v : vehicles_)
      nodes_.emplace_back(config.queue_discipline, config.queue_capacity,
                          build_rng(config.seed, v.id));
  }

  LossCounters run() {
    for (std::uint32_t v = 0; v < n_; ++v) {
      if (!vehicles_[v].beaconing) continue;
      Node& node = nodes_[v];
      node.next_gen = seconds_to_ticks(first_generation_time(cfg_.beacon_rate_hz, node.rng));
      if (node.next_gen < end_tick_) queue_.schedule({node.next_gen, EventKind::BeaconGeneration, v});
    }
    queue_.schedule({end_tick_, EventKind::SimEnd, 0});

    while (auto e = queue_.pop()) {
      switch (e->kind) {
        case EventKind::BeaconGeneration:
          on_generation(e->subject, e->time);
          break;
        case EventKind::TxAttempt:
        case EventKind::BackoffExpiry:
          on_access(e->subject, e->time, e->payload);
          break;
        case EventKind::TxEnd:
          on_tx_end(e->subject, e->time, e->payload);
          break;
        case EventKind::SimEnd:
          finish();
          return counters_;
      }
    }
    throw std::logic_error("event queue drained before SimEnd");
  }

 private:
  bool window(Tick t) const { return t >= warmup_tick_; }
  bool medium_idle(const Node& n) const { return n.busy == 0 && !n.transmitting; }

  void on_generation(std::uint32_t v, Tick now) {
    Node& node = nodes_[v];
    const Vehicle& veh = vehicles_[v];
    const double t = ticks_to_seconds(now);

    Beacon b;
    b.sender_id = v;
    b.seq = node.next_seq++;
    b.gen_tick = now;
    b.gen_pos_x = veh.x_at(t);
    b.gen_pos_y = veh.y;
    b.sender_speed = veh.speed;
    b.size_bytes = cfg_.packet_size_bytes;
    ++counters_.beacons_generated;

    if (!node.in_service) {
      node.in_service = b;
      on_frame_ready(v, now);
    } else if (node.queue.enqueue(b)) {
      ++counters_.queue_drops;
      if (window(now)) ++counters_.window_queue_drops;
    }

    const double next = next_generation_time(t, cfg_.beacon_rate_hz, cfg_.rate_jitter, node.rng);
    node.next_gen = seconds_to_ticks(next);
    if (node.next_gen < end_tick_) queue_.schedule({node.next_gen, EventKind::BeaconGeneration, v});
  }

  // A frame became head of line.
  void on_frame_ready(std::uint32_t v, Tick now) {
    Node& node = nodes_[v];
    if (node.access_pending) return;
    if (medium_idle(node)) {
      if (node.backoff < 0)
        arm_access(v, EventKind::TxAttempt, now + timing_.difs);
      else
        start_countdown(v, now);
    } else if (node.backoff < 0) {
      node.backoff = draw_backoff(timing_.cw_min, node.rng);
    }
  }

  void arm_access(std::uint32_t v, EventKind kind, Tick at) {
    Node& node = nodes_[v];
    node.access_pending = true;
    node.access_kind = kind;
    node.access_time = at;
    queue_.schedule({at, kind, v, ++node.token});
  }

  void start_countdown(std::uint32_t v, Tick now) {
    Node& node = nodes_[v];
    node.countdown_start = now + timing_.difs;
    arm_access(v, EventKind::BackoffExpiry, node.countdown_start + node.backoff * timing_.slot);
  }

  // Medium turned idle at `v`.
  void on_idle(std::uint32_t v, Tick now) {
    Node& node = nodes_[v];
    if (node.access_pending) return;
    if (node.backoff >= 0)
      start_countdown(v, now);
    else if (node.in_service)
      arm_access(v, EventKind::TxAttempt, now + timing_.difs);
  }

  // Medium turned busy at `v`. An access due at this very tick still fires:
  // both stations chose the same slot and collide.
  void on_busy(std::uint32_t v, Tick now) {
    Node& node = nodes_[v];
    if (!node.access_pending || node.access_time <= now) return;
    node.access_pending = false;
    ++node.token;
    if (node.access_kind == EventKind::TxAttempt) {
      node.backoff = draw_backoff(timing_.cw_min, node.rng);
    } else {
      const Tick elapsed = now - node.countdown_start;
      if (elapsed > 0) node.backoff -= static_cast<int>(elapsed / timing_.slot);
    }
  }

  void on_access(std::uint32_t v, Tick now, std::uint64_t token) {
    Node& node = nodes_[v];
    if (!node.access_pending || token != node.token) return;  // cancelled
    node.access_pending = false;
    node.backoff = -1;
    if (node.in_service) start_tx(v, now);
  }

  std::uint32_t acquire_slot() {
    if (free_slots_.empty()) {
      pool_.push_back(AirFrame{{}, std::vector<double>(n_), std::vector<RxState>(n_)});
      return static_cast<std::uint32_t>(pool_.size() - 1);
    }
    const std::uint32_t slot = free_slots_.back();
    free_slots_.pop_back();
    return slot;
  }

  static void erase_value(std::vector<std::uint32_t>& list, std::uint32_t value) {
    auto it = std::find(list.begin(), list.end(), value);
    if (it == list.end()) throw std::logic_error("pending reception missing from receiver list");
    *it = list.back();
    list.pop_back();
  }

  void start_tx(std::uint32_t v, Tick now) {
    Node& node = nodes_[v];
    node.transmitting = true;
    ++counters_.frames_transmitted;

    const std::uint32_t slot = acquire_slot();
    AirFrame& f = pool_[slot];
    f.tx.frame_id = next_frame_id_++;
    f.tx.sender_id = v;
    f.tx.start = now;
    f.tx.end = now + timing_.airtime;
    f.tx.beacon = *node.in_service;

    const double t = ticks_to_seconds(now);
    const Vehicle& sender = vehicles_[v];
    const double sx = sender.x_at(t);
    const double sensitivity = link_.sensitivity_mw();
    for (std::uint32_t r = 0; r < n_; ++r) {
      if (r == v) {
        f.power_mw[r] = 0.0;
        f.state[r] = RxState::Sender;
        continue;
      }
      const double dx = vehicles_[r].x_at(t) - sx;
      const double dy = vehicles_[r].y - sender.y;
      const double p = link_.rx_power_mw(dx * dx + dy * dy);
      f.power_mw[r] = p;
      interference_mw_[r] += p;
      if (p < sensitivity)
        f.state[r] = RxState::Below;
      else
        f.state[r] = nodes_[r].transmitting ? RxState::Lost : RxState::Pending;
      if (p >= cs_mw_ && ++nodes_[r].busy == 1 && !nodes_[r].transmitting) on_busy(r, now);
    }

    // The sender can no longer hear frames already on the air.
    for (std::uint32_t g : pending_[v]) pool_[g].state[v] = RxState::Lost;
    pending_[v].clear();

    // Interference only grows when a frame starts, so checking every pending
    // reception here covers the worst point of each frame's air interval.
    for (std::uint32_t r = 0; r < n_; ++r) {
      if (r == v) continue;
      const double total = noise_mw_ + interference_mw_[r];
      auto& list = pending_[r];
      for (std::size_t i = 0; i < list.size();) {
        AirFrame& g = pool_[list[i]];
        if (g.power_mw[r] < sinr_threshold_ * (total - g.power_mw[r])) {
          g.state[r] = RxState::Lost;
          list[i] = list.back();
          list.pop_back();
        } else {
          ++i;
        }
      }
      if (f.state[r] == RxState::Pending) {
        if (f.power_mw[r] < sinr_threshold_ * (total - f.power_mw[r]))
          f.state[r] = RxState::Lost;
        else
          list.push_back(slot);
      }
    }

    in_air_.push_back(slot);
    obs_.on_transmission(f.tx);
    queue_.schedule({f.tx.end, EventKind::TxEnd, v, slot});
  }

  void on_tx_end(std::uint32_t v, Tick now, std::uint64_t payload) {
    const auto slot = static_cast<std::uint32_t>(payload);
    auto it = std::find(in_air_.begin(), in_air_.end(), slot);
    if (it == in_air_.end()) throw std::logic_error("TxEnd for a frame not on the air");
    in_air_.erase(it);
    AirFrame& f = pool_[slot];

    const bool in_window = window(now);
    const Beacon& b = f.tx.beacon;
    for (std::uint32_t r = 0; r < n_; ++r) {
      interference_mw_[r] -= f.power_mw[r];
      Disposition d;
      switch (f.state[r]) {
        case RxState::Sender:
          continue;
        case RxState::Pending: {
          d = Disposition::Received;
          erase_value(pending_[r], slot);
          ++counters_.received;
          if (in_window) ++counters_.window_received;
          ReceptionRecord rec{v,           r,           b.seq, b.gen_time(), ticks_to_seconds(now),
                              b.gen_pos_x, b.sender_speed};
          obs_.on_reception(rec);
          break;
        }
        case RxState::Lost:
          d = Disposition::CollisionLoss;
          ++counters_.collision_losses;
          if (in_window) ++counters_.window_collision_losses;
          break;
        case RxState::Below:
        default:
          d = Disposition::BelowSensitivity;
          ++counters_.below_sensitivity;
          break;
      }
      if (want_outcomes_) obs_.on_frame_outcome(now, f.tx.frame_id, v, r, d);
    }
    // Drop accumulated rounding once the channel is silent.
    if (in_air_.empty()) std::fill(interference_mw_.begin(), interference_mw_.end(), 0.0);

    Node& node = nodes_[v];
    node.transmitting = false;
    node.in_service = node.queue.dequeue();
    node.backoff = draw_backoff(timing_.cw_min, node.rng);

    for (std::uint32_t r = 0; r < n_; ++r) {
      if (r == v || f.power_mw[r] < cs_mw_) continue;
      if (--nodes_[r].busy == 0 && !nodes_[r].transmitting) on_idle(r, now);
    }
    if (node.busy == 0) on_idle(v, now);

    free_slots_.push_back(slot);
  }

  void finish() {
    for (const auto& node : nodes_)
      counters_.unfinished += node.queue.size() + (node.in_service ? 1 : 0);
  }

  const SimConfig& cfg_;
  std::span<const Vehicle> vehicles_;
  SimulationObserver& obs_;
  MacTiming timing_;
  LinkBudget link_;
  std::size_t n_;
  Tick end_tick_;
  Tick warmup_tick_;
  double noise_mw_;
  double sinr_threshold_;
  double cs_mw_;
  bool want_outcomes_;

  EventQueue queue_;
  std::vector<Node> nodes_;
  std::vector<AirFrame> pool_;
  std::vector<std::uint32_t> free_slots_;
  std::vector<std::uint32_t> in_air_;          // pool slots, in start order
  std::vector<double> interference_mw_;        // per receiver, all frames on the air
  std::vector<std::vector<std::uint32_t>> pending_;  // per receiver, receptions still clean
  std::uint64_t next_frame_id_ = 0;
  LossCounters counters_;
};

class LogCollector : public SimulationObserver {
 public:
  explicit LogCollector(std::vector<ReceptionRecord>& log) : log_(log) {}
  void on_reception(const ReceptionRecord& r) override { log_.push_back(r); }

 private:
  std::vector<ReceptionRecord>& log_;
};

}  // namespace

LossCounters run_simulation(const SimConfig& config, std::span<const Vehicle> vehicles,
                            SimulationObserver& observer) {
  config.validate();
  Engine engine(config, vehicles, observer);
  return engine.run();
}

SimulationResult run_simulation(const SimConfig& config, std::vector<Vehicle> vehicles) {
  SimulationResult result;
  result.vehicles = std::move(vehicles);
  LogCollector collector(result.log);
  result.counters = run_simulation(config, result.vehicles, collector);
  return result;
}

SimulationResult run_simulation(const SimConfig& config) {
  config.validate();
  return run_simulation(config, place_vehicles(config));
}

namespace {

void write_reception_line(std::ostream& out, const ReceptionRecord& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%u,%u,%u,%.17g,%.17g,%.17g,%.17g\n", r.sender_id, r.receiver_id,
                r.seq, r.gen_time, r.rx_time, r.gen_pos_x, r.sender_speed);
  out << buf;
}

constexpr const char* kReceptionHeader =
    "sender,receiver,seq,gen_time,rx_time,gen_pos_x,sender_speed\n";

}  // namespace

void write_reception_log(std::ostream& out, std::span<const ReceptionRecord> log) {
  out << kReceptionHeader;
  for (const auto& r : log) write_reception_line(out, r);
}

ReceptionLogWriter::ReceptionLogWriter(std::ostream& out) : out_(out) { out_ << kReceptionHeader; }

void ReceptionLogWriter::on_reception(const ReceptionRecord& r) { write_reception_line(out_, r); }

FrameLogWriter::FrameLogWriter(std::ostream& out) : out_(out) {
  out_ << "time,sender,receiver,disposition\n";
}

void FrameLogWriter::on_frame_outcome(Tick tx_end, std::uint64_t, std::uint32_t sender,
                                      std::uint32_t receiver, Disposition d) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.9f,%u,%u,%s\n", ticks_to_seconds(tx_end), sender, receiver,
                to_string(d));
  out_ << buf;
}

void ObserverFanout::on_reception(const ReceptionRecord& r) {
  for (auto* t : targets_) t->on_reception(r);
}
void ObserverFanout::on_transmission(const Transmission& tx) {
  for (auto* t : targets_) t->on_transmission(tx);
}
void ObserverFanout::on_frame_outcome(Tick tx_end, std::uint64_t frame_id, std::uint32_t sender,
                                      std::uint32_t receiver, Disposition d) {
  for (auto* t : targets_)
    if (t->wants_frame_outcomes()) t->on_frame_outcome(tx_end, frame_id, sender, receiver, d);
}
bool ObserverFanout::wants_frame_outcomes() const {
  return std::any_of(targets_.begin(), targets_.end(),
                     [](const SimulationObserver* t) { return t->wants_frame_outcomes(); });
}

}  // namespace v2v
