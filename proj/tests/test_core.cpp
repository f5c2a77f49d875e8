#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "v2v/beacon.hpp"
#include "v2v/channel.hpp"
#include "v2v/config.hpp"
#include "v2v/event_queue.hpp"
#include "v2v/mac.hpp"
#include "v2v/mobility.hpp"
#include "v2v/rng.hpp"

using namespace v2v;

TEST_CASE("config defaults and derived values") {
  SimConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.vehicle_count() == 50);
  c.density_veh_per_km = 200;
  CHECK(c.vehicle_count() == 200);
  CHECK(c.t_brake_s() == doctest::Approx(5.4348).epsilon(1e-4));
  CHECK(c.risk_threshold_s() == doctest::Approx(6.4348).epsilon(1e-4));
  CHECK(c.measurement_interval_s() == doctest::Approx(59.0));
}

TEST_CASE("config text round trip keeps value and hash") {
  SimConfig c;
  c.beacon_rate_hz = 35.0;
  c.speed_spread_mps = 0.1;  // not exactly representable
  c.queue_discipline = QueueDiscipline::Lcfs;
  c.seed = 18446744073709551615ULL;
  const SimConfig back = apply_overrides(SimConfig{}, parse_key_value_text(c.to_key_value_text()));
  CHECK(back == c);
  CHECK(back.hash() == c.hash());
  CHECK(c.hash().size() == 16);

  SimConfig d = c;
  d.seed = 7;
  CHECK(d.hash() != c.hash());
}

TEST_CASE("config parsing rejects bad input") {
  SimConfig c;
  CHECK_THROWS_AS(c.set("no_such_field", "1"), ConfigError);
  CHECK_THROWS_AS(c.set("beacon_rate_hz", "fast"), ConfigError);
  CHECK_THROWS_AS(c.set("lanes", "2.5"), ConfigError);
  CHECK_THROWS_AS(c.set("queue_discipline", "random"), ConfigError);
  CHECK_THROWS_AS(parse_key_value_text("just words\n"), ConfigError);

  auto kv = parse_key_value_text("# comment\n  beacon_rate_hz = 25   # trailing\n\nlanes=2\n");
  CHECK(kv.size() == 2);
  CHECK(kv["beacon_rate_hz"] == "25");
  c.set("queue_discipline", "LCFS");
  CHECK(c.queue_discipline == QueueDiscipline::Lcfs);
}

TEST_CASE("config validation") {
  auto invalid = [](auto mutate) {
    SimConfig c;
    mutate(c);
    CHECK_THROWS_AS(c.validate(), ConfigError);
  };
  invalid([](SimConfig& c) { c.beacon_rate_hz = 0; });
  invalid([](SimConfig& c) { c.road_length_m = -1; });
  invalid([](SimConfig& c) { c.lanes = 0; });
  invalid([](SimConfig& c) { c.queue_capacity = 0; });
  invalid([](SimConfig& c) { c.warmup_s = 60; });
  invalid([](SimConfig& c) { c.data_rate_mbps = 0; });
  invalid([](SimConfig& c) { c.density_veh_per_km = 0.1; });
}

TEST_CASE("rng streams") {
  auto draw = [](std::uint64_t seed, std::uint64_t stream) {
    RandomStream r = build_rng(seed, stream);
    std::vector<std::uint64_t> out;
    for (int i = 0; i < 16; ++i) out.push_back(r.next_u64());
    return out;
  };
  CHECK(draw(1, 0) == draw(1, 0));
  CHECK(draw(1, 0) != draw(1, 1));
  CHECK(draw(1, 0) != draw(2, 0));
  CHECK(draw(1, kScenarioStream) != draw(1, 0));
}

TEST_CASE("rng distributions") {
  RandomStream r(42, 3);
  double lo = 1, hi = 0;
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform01();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  CHECK(lo >= 0.0);
  CHECK(hi < 1.0);

  std::set<int> seen;
  for (int i = 0; i < 10000; ++i) {
    const int k = r.uniform_int(-2, 3);
    CHECK(k >= -2);
    CHECK(k <= 3);
    seen.insert(k);
  }
  CHECK(seen.size() == 6);

  const int n = 200000;
  double sum = 0, sq = 0;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal(25.0, 3.0);
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;
  CHECK(std::abs(mean - 25.0) < 4 * 3.0 / std::sqrt(n));
  CHECK(std::sqrt(sq / n - mean * mean) == doctest::Approx(3.0).epsilon(0.01));
}

TEST_CASE("event queue ordering") {
  SUBCASE("time order") {
    EventQueue q;
    q.schedule({seconds_to_ticks(1.0), EventKind::BeaconGeneration, 0});
    q.schedule({seconds_to_ticks(0.5), EventKind::BeaconGeneration, 0});
    CHECK(q.pop()->time == seconds_to_ticks(0.5));
    CHECK(q.now() == seconds_to_ticks(0.5));
    CHECK(q.pop()->time == seconds_to_ticks(1.0));
  }
  SUBCASE("equal time, same kind: lower vehicle id first") {
    EventQueue q;
    q.schedule({seconds_to_ticks(1.0), EventKind::TxAttempt, 7});
    q.schedule({seconds_to_ticks(1.0), EventKind::TxAttempt, 3});
    CHECK(q.pop()->subject == 3);
    CHECK(q.pop()->subject == 7);
  }
  SUBCASE("equal time: kind priority, then insertion") {
    EventQueue q;
    const Tick t = 100;
    q.schedule({t, EventKind::SimEnd, 0});
    q.schedule({t, EventKind::BackoffExpiry, 0});
    q.schedule({t, EventKind::TxAttempt, 0, 11});
    q.schedule({t, EventKind::TxAttempt, 0, 22});
    q.schedule({t, EventKind::BeaconGeneration, 9});
    q.schedule({t, EventKind::TxEnd, 9});
    std::vector<EventKind> kinds;
    std::vector<std::uint64_t> payloads;
    while (auto e = q.pop()) {
      kinds.push_back(e->kind);
      payloads.push_back(e->payload);
    }
    CHECK(kinds == std::vector<EventKind>{EventKind::TxEnd, EventKind::BeaconGeneration,
                                          EventKind::TxAttempt, EventKind::TxAttempt,
                                          EventKind::BackoffExpiry, EventKind::SimEnd});
    CHECK(payloads[2] == 11);
    CHECK(payloads[3] == 22);
  }
  SUBCASE("empty pop signals completion") {
    EventQueue q;
    CHECK_FALSE(q.pop().has_value());
    CHECK(q.empty());
  }
  SUBCASE("scheduling into the past is rejected") {
    EventQueue q;
    q.schedule({500, EventKind::TxEnd, 0});
    q.pop();
    CHECK_THROWS_AS(q.schedule({499, EventKind::TxEnd, 0}), std::logic_error);
    CHECK_NOTHROW(q.schedule({500, EventKind::TxEnd, 0}));
  }
}

TEST_CASE("tick conversion") {
  CHECK(seconds_to_ticks(1.0) == kTicksPerSecond);
  CHECK(microseconds_to_ticks(13.0) == 13000);
  CHECK(seconds_to_ticks(0.1) == 100'000'000);
  CHECK(ticks_to_seconds(seconds_to_ticks(12.345678901)) == doctest::Approx(12.345678901));
}

TEST_CASE("placement") {
  SimConfig c;
  const auto vs = place_vehicles(c);
  REQUIRE(vs.size() == 50);
  int per_lane[3] = {0, 0, 0};
  for (const auto& v : vs) {
    ++per_lane[v.lane];
    CHECK(v.speed > 0.0);
    CHECK(v.y == doctest::Approx((v.lane + 0.5) * c.lane_width_m));
    CHECK(v.x0 >= 0.0);
    CHECK(v.x0 < c.road_length_m);
  }
  CHECK(per_lane[0] == 17);
  CHECK(per_lane[1] == 17);
  CHECK(per_lane[2] == 16);
  // evenly spaced within a lane
  CHECK(vs[3].x0 - vs[0].x0 == doctest::Approx(1000.0 / 17));
  CHECK(vs[5].x0 - vs[2].x0 == doctest::Approx(1000.0 / 16));

  c.density_veh_per_km = 200;
  CHECK(place_vehicles(c).size() == 200);
}

TEST_CASE("placement is seeded and speeds follow the configured law") {
  SimConfig c;
  CHECK(place_vehicles(c) == place_vehicles(c));
  SimConfig other = c;
  other.seed = 2;
  CHECK(place_vehicles(c) != place_vehicles(other));

  double sum = 0;
  int n = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    c.seed = seed;
    for (const auto& v : place_vehicles(c)) {
      sum += v.speed;
      ++n;
    }
  }
  CHECK(n == 500);
  CHECK(std::abs(sum / n - 25.0) < 3.0 * 3.0 / std::sqrt(n));
}

TEST_CASE("position and distance") {
  Vehicle v;
  v.x0 = 0;
  v.speed = 25;
  CHECK(position_at(v, 0.1).x == doctest::Approx(2.5));
  v.x0 = 123.0;
  CHECK(position_at(v, 0.0).x == 123.0);
  v.x0 = 990;
  CHECK(position_at(v, 10).x == doctest::Approx(1240));

  Vehicle a, b;
  a.x0 = 0;
  b.x0 = 100;
  CHECK(distance(a, b, 0) == doctest::Approx(100));
  b.x0 = 3;
  b.y = 4;
  CHECK(distance(a, b, 0) == doctest::Approx(5));
  b = a;
  CHECK(distance(a, b, 0) == 0.0);
  SimConfig c;
  CHECK(path_loss_db(distance(a, b, 0), c) == doctest::Approx(path_loss_db(1.0, c)));
}

TEST_CASE("scenario csv") {
  std::ostringstream out;
  std::vector<Vehicle> vs(1);
  vs[0].x0 = 1.5;
  vs[0].speed = 20;
  write_scenario_csv(out, vs);
  CHECK(out.str() == "id,lane,x0,y,speed\n0,0,1.5,0,20\n");
}

namespace {
Beacon beacon(std::uint32_t seq) {
  Beacon b;
  b.seq = seq;
  return b;
}
}  // namespace

TEST_CASE("queue admission") {
  SUBCASE("FCFS full drops the arrival") {
    BeaconQueue q(QueueDiscipline::Fcfs, 1);
    CHECK_FALSE(q.enqueue(beacon(5)).has_value());
    auto dropped = q.enqueue(beacon(6));
    REQUIRE(dropped.has_value());
    CHECK(dropped->seq == 6);
    CHECK(q.contents().front().seq == 5);
  }
  SUBCASE("LCFS full evicts the oldest") {
    BeaconQueue q(QueueDiscipline::Lcfs, 1);
    q.enqueue(beacon(5));
    auto dropped = q.enqueue(beacon(6));
    REQUIRE(dropped.has_value());
    CHECK(dropped->seq == 5);
    REQUIRE(q.size() == 1);
    CHECK(q.contents().front().seq == 6);
  }
  SUBCASE("below capacity") {
    BeaconQueue q(QueueDiscipline::Fcfs, 5);
    for (std::uint32_t s = 0; s < 3; ++s) q.enqueue(beacon(s));
    CHECK_FALSE(q.enqueue(beacon(3)).has_value());
    CHECK(q.size() == 4);
  }
  SUBCASE("service order") {
    BeaconQueue f(QueueDiscipline::Fcfs, 10), l(QueueDiscipline::Lcfs, 10);
    for (std::uint32_t s = 0; s < 3; ++s) {
      f.enqueue(beacon(s));
      l.enqueue(beacon(s));
    }
    CHECK(f.dequeue()->seq == 0);
    CHECK(l.dequeue()->seq == 2);
    CHECK(l.dequeue()->seq == 1);
    CHECK(l.dequeue()->seq == 0);
    CHECK_FALSE(l.dequeue().has_value());
  }
  CHECK_THROWS(BeaconQueue(QueueDiscipline::Fcfs, 0));
}

TEST_CASE("frame airtime") {
  CHECK(frame_airtime(320, 6, 40) * 1e6 == doctest::Approx(466.6667).epsilon(1e-6));
  CHECK(frame_airtime(0, 6, 40) * 1e6 == doctest::Approx(40.0));
  CHECK(frame_airtime(320, 12, 40) * 1e6 == doctest::Approx(253.3333).epsilon(1e-6));
  const MacTiming t = MacTiming::from(SimConfig{});
  CHECK(t.airtime == 466667);
  CHECK(t.difs == 58000);
  CHECK(t.slot == 13000);
}

TEST_CASE("beacon generation spacing") {
  RandomStream r(9, 1);
  double t = 0;
  for (int i = 0; i < 100; ++i) {
    const double next = next_generation_time(t, 10, 0.0, r);
    CHECK(next - t == doctest::Approx(0.1).epsilon(1e-12));
    t = next;
  }
  double sum = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double gap = next_generation_time(5.0, 10, 0.1, r) - 5.0;
    CHECK(gap >= 0.1 - 1e-12);
    CHECK(gap <= 0.11 + 1e-12);
    sum += gap;
  }
  CHECK(sum / n == doctest::Approx(0.1 * 1.05).epsilon(0.01));
  for (int i = 0; i < 1000; ++i) {
    const double first = first_generation_time(25, r);
    CHECK(first >= 0);
    CHECK(first < 0.04);
  }
}

TEST_CASE("backoff draws stay in the contention window") {
  RandomStream r(3, 4);
  std::set<int> seen;
  for (int i = 0; i < 10000; ++i) {
    const int k = draw_backoff(15, r);
    CHECK(k >= 0);
    CHECK(k <= 15);
    seen.insert(k);
  }
  CHECK(seen.size() == 16);
}

TEST_CASE("path loss and noise") {
  SimConfig c;
  CHECK(reference_loss_db(5.9) == doctest::Approx(47.86).epsilon(1e-4));
  CHECK(path_loss_db(1, c) == doctest::Approx(47.86).epsilon(1e-4));
  CHECK(path_loss_db(10, c) == doctest::Approx(77.86).epsilon(1e-4));
  CHECK(path_loss_db(100, c) == doctest::Approx(107.86).epsilon(1e-4));
  CHECK(path_loss_db(0.2, c) == path_loss_db(1, c));
  CHECK(noise_floor_dbm(c) == doctest::Approx(-98.0).epsilon(1e-9));

  LinkBudget link(c);
  for (double d : {0.5, 1.0, 7.0, 120.0, 950.0})
    CHECK(mw_to_dbm(link.rx_power_mw(d * d)) ==
          doctest::Approx(c.tx_power_dbm - path_loss_db(d, c)).epsilon(1e-12));
  c.path_loss_exponent = 2.7;
  LinkBudget other(c);
  CHECK(mw_to_dbm(other.rx_power_mw(300.0 * 300.0)) ==
        doctest::Approx(c.tx_power_dbm - path_loss_db(300, c)).epsilon(1e-12));
}

TEST_CASE("reception outcome") {
  SimConfig c;
  c.rx_sensitivity_dbm = -85;
  const Tick start = 1000, end = 1000 + 466667;

  CHECK(reception_outcome(-60, start, end, {}, c) == Disposition::Received);
  CHECK(reception_outcome(-100, start, end, {}, c) == Disposition::BelowSensitivity);

  // two equal-power frames: SINR ~ 0 dB for both
  std::vector<Interferer> other{{start + 100, end + 100, -60}};
  CHECK(reception_outcome(-60, start, end, other, c) == Disposition::CollisionLoss);
  std::vector<Interferer> first{{start, end, -60}};
  CHECK(reception_outcome(-60, start + 100, end + 100, first, c) == Disposition::CollisionLoss);

  // 10 dB below the signal clears an 8 dB threshold
  std::vector<Interferer> weak{{start + 5000, end, -70}};
  CHECK(reception_outcome(-60, start, end, weak, c) == Disposition::Received);
  // two of them together do not (10 dB - 3 dB < 8 dB)
  weak.push_back({start + 9000, end + 9000, -70});
  CHECK(reception_outcome(-60, start, end, weak, c) == Disposition::CollisionLoss);
  // but not if they never coexist
  weak[0].end = start + 8000;
  CHECK(reception_outcome(-60, start, end, weak, c) == Disposition::Received);

  // touching intervals do not overlap
  std::vector<Interferer> before{{0, start, -50}}, after{{end, end + 10, -50}};
  CHECK(reception_outcome(-60, start, end, before, c) == Disposition::Received);
  CHECK(reception_outcome(-60, start, end, after, c) == Disposition::Received);

  // half duplex
  std::vector<Interferer> own{{end - 1, end + 500, 30, true}};
  CHECK(reception_outcome(-40, start, end, own, c) == Disposition::CollisionLoss);

  // near the noise floor: -89 dBm is above sensitivity -90 but SNR = 9 dB
  c.rx_sensitivity_dbm = -95;
  CHECK(reception_outcome(-89, start, end, {}, c) == Disposition::Received);
  CHECK(reception_outcome(-91, start, end, {}, c) == Disposition::CollisionLoss);
}
