#include "modest/exponents.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace modest {

Reliability awgn_reliability(const ChannelSpec& channel, double rate) {
  if (!(rate >= 0.0)) throw std::domain_error("awgn_reliability: need R >= 0");
  const double c = channel.capacity();
  if (rate >= c) return {0.0, rate > c};
  if (rate <= 0.25 * c) return {0.5 * c - rate, false};
  const double d = std::sqrt(c) - std::sqrt(rate);
  return {d * d, false};
}

double fading_reliability(double gain, const ChannelSpec& channel, double rate) {
  if (!(gain >= 0.0) || !(rate >= 0.0))
    throw std::domain_error("fading_reliability: need a >= 0 and R >= 0");
  const double c = channel.capacity();
  const double a_out = std::sqrt(rate / c);
  if (gain <= a_out) return 0.0;
  if (gain >= 2.0 * a_out) return 0.5 * gain * gain * c - rate;
  const double d = gain * std::sqrt(c) - std::sqrt(rate);
  return d * d;
}

SpherePacking sphere_packing_exponent(const BandSpec& band, double rate,
                                      double rho_max) {
  if (!(rate > 0.0)) throw std::domain_error("sphere_packing_exponent: need R > 0");
  if (!(rho_max > 0.0))
    throw std::domain_error("sphere_packing_exponent: need rho_max > 0");
  const double w = band.bandwidth;
  const double s = band.channel.power;
  const double n0 = band.channel.noise_density;
  auto objective = [&](double rho) {
    return rho * w * std::log1p(s / (n0 * w * (1.0 + rho))) - rho * rate;
  };
  MaxResult m = maximize_concave_1d(objective, 0.0, rho_max, 1e-10 * (1.0 + rho_max));
  if (m.value <= 0.0) return {0.0, 0.0};  // at or above band-limited capacity
  return {m.value, m.arg};
}

double critical_rate(const BandSpec& band) {
  const double w = band.bandwidth;
  const double s = band.channel.power;
  const double n0 = band.channel.noise_density;
  return w * (std::log1p(s / (2.0 * n0 * w)) - 0.5 * s / (s + 2.0 * n0 * w));
}

MomentBound moment_bound_exponent(const ChannelSpec& channel, double alpha) {
  if (!(alpha > 0.0)) throw std::domain_error("moment_bound_exponent: need alpha > 0");
  const double c = channel.capacity();
  auto objective = [&](double r) {
    return awgn_reliability(channel, r).value + alpha * r;
  };
  // Coarse grid locates the basin; golden section refines it.  The objective
  // is convex (E convex plus linear), so unimodality holds.
  const int n = 4096;
  int best = 0;
  double best_v = objective(0.0);
  for (int i = 1; i <= n; ++i) {
    double r = c * i / n;
    double v = objective(r);
    if (v < best_v) {
      best_v = v;
      best = i;
    }
  }
  double lo = c * std::max(0, best - 2) / n;
  double hi = c * std::min(n, best + 2) / n;
  MaxResult m = maximize_concave_1d([&](double r) { return -objective(r); }, lo,
                                    hi, 1e-10 * c);
  return {m.arg, -m.value};
}

int critical_dimension(const ChannelSpec& channel, double per_dim_rate) {
  if (!(per_dim_rate > 0.0)) throw std::domain_error("critical_dimension: need R > 0");
  return static_cast<int>(floor_snapped(channel.capacity() / per_dim_rate));
}

double outage_probability(const FadingSpec& fading, double rate) {
  if (!(rate >= 0.0)) throw std::domain_error("outage_probability: need R >= 0");
  return -std::expm1(-rate / (2.0 * fading.average_capacity()));
}

FadingZeroRate fading_zero_rate_value(const FadingSpec& fading, double duration) {
  if (!(duration > 0.0)) throw std::domain_error("fading_zero_rate_value: need T > 0");
  const double k = fading.average_capacity() * duration;  // Cbar*T
  auto integrand = [k](double theta) {
    double s2 = std::sin(theta);
    s2 *= s2;
    return s2 / (k + s2);
  };
  double v = integrate_1d(integrand, 0.0, std::numbers::pi / 2.0) / std::numbers::pi;
  return {v, 1.0 / (4.0 * (k + 1.0)), 1.0 / (4.0 * k)};
}

}  // namespace modest
