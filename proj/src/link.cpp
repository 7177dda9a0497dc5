#include "steer/link.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "steer/errors.hpp"

namespace steer {

void validate(const RatConfig& rat) {
  if (!(rat.bandwidth_hz > 0.0)) throw ConfigError(rat.name + ": bandwidth_hz must be > 0");
  if (!(rat.tx_power_w >= 0.0)) throw ConfigError(rat.name + ": tx_power_w must be >= 0");
  if (!(rat.pathloss_alpha >= 2.0)) throw ConfigError(rat.name + ": pathloss_alpha must be >= 2");
  if (!(rat.noise_w > 0.0)) throw ConfigError(rat.name + ": noise_w must be > 0");
  if (!(rat.interference_w >= 0.0)) throw ConfigError(rat.name + ": interference_w must be >= 0");
  if (!(rat.max_range_m > 0.0)) throw ConfigError(rat.name + ": max_range_m must be > 0");
  if (!(rat.pathloss_c > 0.0)) throw ConfigError(rat.name + ": pathloss_c must be > 0");
  if (!(rat.antenna_gain >= 0.0) || !(rat.fading_h >= 0.0))
    throw ConfigError(rat.name + ": gain and fading must be >= 0");
}

double path_loss(const RatConfig& rat, double d_m) {
  const double d = std::max(d_m, kMinDistanceM);
  return rat.pathloss_c * std::pow(d, -rat.pathloss_alpha);
}

static double sinr_with(const RatConfig& rat, double d_m, double fading) {
  return rat.antenna_gain * rat.tx_power_w * fading * path_loss(rat, d_m) /
         (rat.noise_w + rat.interference_w);
}

double sinr(const RatConfig& rat, double d_m) { return sinr_with(rat, d_m, rat.fading_h); }

double data_rate(const RatConfig& rat, double d_m, double fading) {
  if (d_m > rat.max_range_m) return 0.0;
  // log1p keeps full precision when the SINR is tiny.
  return rat.bandwidth_hz * std::log1p(sinr_with(rat, d_m, fading)) / std::numbers::ln2;
}

double data_rate(const RatConfig& rat, double d_m) { return data_rate(rat, d_m, rat.fading_h); }

RatConfig default_lte() {
  RatConfig r;
  r.id = 0;
  r.name = "LTE";
  r.kind = RatKind::Lte;
  r.bandwidth_hz = 20e6;
  r.tx_power_w = 10.0;
  r.antenna_gain = 1.0;
  r.pathloss_c = 2.53e-6;
  r.pathloss_alpha = 3.0;
  r.noise_w = 8.0e-14;
  r.max_range_m = 922.0;
  return r;
}

RatConfig default_nr() {
  RatConfig r;
  r.id = 1;
  r.name = "NR";
  r.kind = RatKind::Nr;
  r.bandwidth_hz = 100e6;
  r.tx_power_w = 10.0;
  r.antenna_gain = 1.0;
  r.pathloss_c = 3.0e-5;
  r.pathloss_alpha = 4.0;
  r.noise_w = 4.0e-13;
  r.max_range_m = 200.0;
  return r;
}

}  // namespace steer
