#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "v2v/config.hpp"
#include "v2v/rng.hpp"

namespace v2v {

struct Position {
  double x = 0.0;
  double y = 0.0;
};

// One vehicle on a straight, unbounded multi-lane road. No lane changes and
// no acceleration: the trajectory is x0 + speed * t for the whole run.
struct Vehicle {
  std::uint32_t id = 0;
  int lane = 0;
  double x0 = 0.0;
  double y = 0.0;
  double speed = 0.0;
  bool beaconing = true;  // false: receive-only

  double x_at(double t) const { return x0 + speed * t; }
  bool operator==(const Vehicle&) const = default;
};

Position position_at(const Vehicle& v, double t);

/// Euclidean distance in the road plane. Not floored; the channel applies
/// its own reference-distance clamp.
double distance(const Vehicle& u, const Vehicle& v, double t);

/// Round-robin lane assignment, evenly spaced x0 over [0, road_length) per
/// lane, lane-centre y, Normal(mean, spread) speeds redrawn until positive.
std::vector<Vehicle> place_vehicles(const SimConfig& config, RandomStream& rng);

/// Places vehicles with the scenario stream of `config.seed`.
std::vector<Vehicle> place_vehicles(const SimConfig& config);

/// CSV audit dump: id,lane,x0,y,speed.
void write_scenario_csv(std::ostream& out, std::span<const Vehicle> vehicles);

}  // namespace v2v
