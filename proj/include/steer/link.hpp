#pragma once

#include <string>

namespace steer {

enum class RatKind { Lte, Nr };

/// Physical and channel constants for one radio access technology.
///
/// The downlink rate to a vehicle at distance d is
///   bandwidth * log2(1 + gain * power * fading * C * d^-alpha / (noise + interference))
/// and drops to zero beyond max_range_m.
struct RatConfig {
  int id = 0;
  std::string name = "LTE";
  RatKind kind = RatKind::Lte;
  double bandwidth_hz = 20e6;
  double tx_power_w = 10.0;
  double antenna_gain = 1.0;
  double pathloss_c = 2.53e-6;
  double pathloss_alpha = 3.0;
  double noise_w = 8.0e-14;
  double interference_w = 0.0;
  double fading_h = 1.0;
  double max_range_m = 922.0;

  bool operator==(const RatConfig&) const = default;
};

/// Distances below this are clamped before evaluating the power law.
inline constexpr double kMinDistanceM = 1.0;

/// Throws ConfigError when a field violates its physical range.
void validate(const RatConfig& rat);

double path_loss(const RatConfig& rat, double d_m);
double sinr(const RatConfig& rat, double d_m);

/// Shannon rate in bit/s; zero outside coverage.
double data_rate(const RatConfig& rat, double d_m);

/// Same as data_rate but with an explicit fading draw replacing rat.fading_h.
double data_rate(const RatConfig& rat, double d_m, double fading);

/// Defaults calibrated so that NR beats LTE close to the base station and
/// falls below it at roughly 150 m, inside NR's 200 m coverage.
RatConfig default_lte();
RatConfig default_nr();

}  // namespace steer
