#include "v2v/mobility.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace v2v {

Position position_at(const Vehicle& v, double t) { return {v.x_at(t), v.y}; }

double distance(const Vehicle& u, const Vehicle& v, double t) {
  const double dx = u.x_at(t) - v.x_at(t);
  const double dy = u.y - v.y;
  return std::sqrt(dx * dx + dy * dy);
}

std::vector<Vehicle> place_vehicles(const SimConfig& config, RandomStream& rng) {
  const int n = config.vehicle_count();
  const int lanes = config.lanes;

  std::vector<int> per_lane(lanes, 0);
  for (int i = 0; i < n; ++i) ++per_lane[i % lanes];

  std::vector<Vehicle> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    Vehicle v;
    v.id = static_cast<std::uint32_t>(i);
    v.lane = i % lanes;
    const int slot = i / lanes;
    v.x0 = config.road_length_m * slot / per_lane[v.lane];
    v.y = (v.lane + 0.5) * config.lane_width_m;
    do {
      v.speed = rng.normal(config.speed_mean_mps, config.speed_spread_mps);
    } while (!(v.speed > 0.0));
    out.push_back(v);
  }
  return out;
}

std::vector<Vehicle> place_vehicles(const SimConfig& config) {
  RandomStream rng = build_rng(config.seed, kScenarioStream);
  return place_vehicles(config, rng);
}

void write_scenario_csv(std::ostream& out, std::span<const Vehicle> vehicles) {
  out << "id,lane,x0,y,speed\n";
  char buf[160];
  for (const auto& v : vehicles) {
    std::snprintf(buf, sizeof buf, "%u,%d,%.17g,%.17g,%.17g\n", v.id, v.lane, v.x0, v.y, v.speed);
    out << buf;
  }
}

}  // namespace v2v
