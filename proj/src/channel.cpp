#include "v2v/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace v2v {

const char* to_string(Disposition d) {
  switch (d) {
    case Disposition::Received:
      return "received";
    case Disposition::CollisionLoss:
      return "collision";
    case Disposition::BelowSensitivity:
      return "below_sensitivity";
  }
  return "?";
}

double reference_loss_db(double carrier_ghz) {
  const double f = carrier_ghz * 1e9;
  return 20.0 * std::log10(4.0 * std::numbers::pi * kReferenceDistanceM * f / kSpeedOfLight);
}

double path_loss_db(double distance_m, const SimConfig& config) {
  const double d = std::max(distance_m, kReferenceDistanceM);
  return reference_loss_db(config.channel_freq_ghz) +
         10.0 * config.path_loss_exponent * std::log10(d / kReferenceDistanceM);
}

double noise_floor_dbm(const SimConfig& config) {
  return -174.0 + 10.0 * std::log10(config.bandwidth_mhz * 1e6) + config.noise_figure_db;
}

LinkBudget::LinkBudget(const SimConfig& config)
    : gain_at_reference_(dbm_to_mw(config.tx_power_dbm - reference_loss_db(config.channel_freq_ghz))),
      half_exponent_(0.5 * config.path_loss_exponent),
      cubic_(config.path_loss_exponent == 3.0),
      sensitivity_mw_(dbm_to_mw(config.rx_sensitivity_dbm)) {}

double LinkBudget::rx_power_mw(double distance_sq_m2) const {
  const double d2 = std::max(distance_sq_m2, kReferenceDistanceM * kReferenceDistanceM);
  const double attenuation = cubic_ ? d2 * std::sqrt(d2) : std::pow(d2, half_exponent_);
  return gain_at_reference_ / attenuation;
}

Disposition reception_outcome(double signal_dbm, Tick frame_start, Tick frame_end,
                              std::span<const Interferer> overlapping, const SimConfig& config) {
  if (signal_dbm < config.rx_sensitivity_dbm) return Disposition::BelowSensitivity;

  std::vector<Tick> checkpoints{frame_start};
  for (const auto& i : overlapping) {
    if (i.start >= frame_end || i.end <= frame_start) continue;
    if (i.own_transmission) return Disposition::CollisionLoss;
    if (i.start > frame_start) checkpoints.push_back(i.start);
  }

  const double signal_mw = dbm_to_mw(signal_dbm);
  const double noise_mw = dbm_to_mw(noise_floor_dbm(config));
  const double threshold = dbm_to_mw(config.sinr_threshold_db);
  for (Tick at : checkpoints) {
    double interference = noise_mw;
    for (const auto& i : overlapping)
      if (i.start <= at && at < i.end) interference += dbm_to_mw(i.power_dbm);
    if (signal_mw < threshold * interference) return Disposition::CollisionLoss;
  }
  return Disposition::Received;
}

}  // namespace v2v
