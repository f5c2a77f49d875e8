#pragma once

#include <cmath>
#include <span>

#include "v2v/config.hpp"
#include "v2v/event_queue.hpp"

namespace v2v {

inline constexpr double kSpeedOfLight = 299'792'458.0;
inline constexpr double kReferenceDistanceM = 1.0;

enum class Disposition : unsigned char { Received, CollisionLoss, BelowSensitivity };

const char* to_string(Disposition d);

/// Free-space loss at the 1 m reference distance: 20 log10(4 pi d0 f / c).
double reference_loss_db(double carrier_ghz);

/// Log-distance loss; distances below 1 m are clamped to 1 m.
double path_loss_db(double distance_m, const SimConfig& config);

/// Thermal noise over the channel plus receiver noise figure.
double noise_floor_dbm(const SimConfig& config);

inline double dbm_to_mw(double dbm);
inline double mw_to_dbm(double mw);

// Received power in linear units straight from the squared distance. Same
// law as path_loss_db, evaluated without the dB round trip.
class LinkBudget {
 public:
  explicit LinkBudget(const SimConfig& config);
  double rx_power_mw(double distance_sq_m2) const;
  double sensitivity_mw() const { return sensitivity_mw_; }

 private:
  double gain_at_reference_;  // tx power in mW over the reference loss
  double half_exponent_;
  bool cubic_;
  double sensitivity_mw_;
};

/// A concurrent transmission as seen by one receiver over [start, end).
struct Interferer {
  Tick start = 0;
  Tick end = 0;
  double power_dbm = 0.0;
  /// The receiver itself is transmitting this frame (half duplex).
  bool own_transmission = false;
};

// Decides the fate of one frame at one receiver from the complete set of
// transmissions overlapping it. The interference level is piecewise constant,
// so the worst SINR is found by evaluating at the frame start and at every
// interferer start inside the frame.
Disposition reception_outcome(double signal_dbm, Tick frame_start, Tick frame_end,
                              std::span<const Interferer> overlapping, const SimConfig& config);

// ---- inline definitions ----

inline double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }
inline double mw_to_dbm(double mw) { return 10.0 * std::log10(mw); }

}  // namespace v2v
