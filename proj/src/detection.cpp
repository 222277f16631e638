#include "modest/detection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace modest {

namespace {

// log of g(t) = (M-1) * (-ln Phi(t + mu)), the exponent of the correct-decode
// factor.  Decreasing in t.  Returns -inf once -ln Phi underflows.
double log_g(double log_k, double t, double mu) {
  double lpc = log_normal_cdf(t + mu);  // <= 0
  if (lpc == 0.0) return -std::numeric_limits<double>::infinity();
  return log_k + std::log(-lpc);
}

// Smallest t with log g(t) <= target (g decreasing).
double crossing(double log_k, double mu, double target) {
  double lo = -mu - 46.0;  // g is astronomically large here
  double hi = -mu + 42.0;  // and has underflowed here
  for (int i = 0; i < 200 && hi - lo > 1e-9 * (1.0 + std::abs(hi)); ++i) {
    double mid = 0.5 * (lo + hi);
    if (log_g(log_k, mid, mu) > target)
      lo = mid;
    else
      hi = mid;
  }
  return hi;
}

}  // namespace

double simplex_energy(double m, double energy) {
  if (!(m >= 2.0)) throw std::domain_error("simplex_energy: need M >= 2");
  return energy * m / (m - 1.0);
}

double exact_mary_error(const SignalSetSpec& set, const QuadratureSpec& spec) {
  double e_over_n0 = set.energy_over_n0;
  if (set.geometry == SignalGeometry::kSimplex)
    e_over_n0 = simplex_energy(set.m, e_over_n0);

  // Sufficient statistics: one correlation per signal, i.i.d. unit-variance
  // Gaussians after normalization, the true one with mean mu = sqrt(2 E/N0).
  const double mu = std::sqrt(2.0 * e_over_n0);
  const double k = set.m - 1.0;
  const double log_k = std::log(k);

  // P_e = Phi(A) + Int_A^B phi(t)(1 - exp(-g(t))) dt, where left of A the
  // error factor is saturated (g >= 45) and right of B it is negligible.
  // Both cut points come from the transition condition on g = (M-1)Q(t+mu).
  double a = crossing(log_k, mu, std::log(45.0));
  a = std::max(a, -38.0);  // phi underflows anyway below this
  double target_b = -40.0;
  double p = 0.0;
  for (int attempt = 0; attempt < 5; ++attempt) {
    double b = std::max({crossing(log_k, mu, target_b), a + 1.0, 12.0});
    auto integrand = [&](double t) {
      double h = k * log_normal_cdf(t + mu);  // (M-1) ln Phi, in [-inf, 0]
      return normal_pdf(t) * (-std::expm1(h));
    };
    QuadratureSpec qs = spec;
    qs.abs_tol = std::min(qs.abs_tol, 1e-280);  // let rel_tol govern tiny P_e
    p = normal_cdf(a) + integrate_1d(integrand, a, b, qs);
    // Residual right tail is below g(B) * Q(max(B,0)); push B out if it
    // could matter at the requested relative accuracy.
    double lg_b = log_g(log_k, b, mu);
    double tail = std::exp(std::min(lg_b, 0.0)) * q_tail(std::max(b, 0.0));
    if (p <= 0.0 || tail <= 1e-8 * p) break;
    target_b -= 80.0;
  }
  return std::clamp(p, 0.0, 1.0);
}

double zero_rate_lower_bound(double delta, double energy_over_n0) {
  if (!(delta > 0.0) || !(delta < 1.0))
    throw std::domain_error("zero_rate_lower_bound: need delta in (0,1)");
  if (!(energy_over_n0 >= 0.0))
    throw std::domain_error("zero_rate_lower_bound: need E/N0 >= 0");
  const double f = floor_snapped(1.0 / delta);
  if (f <= 2.0)
    throw std::domain_error(
        "zero_rate_lower_bound: bound undefined at this threshold (need "
        "floor(1/delta) > 2)");
  const double coeff = 0.5 * (1.0 + delta - delta * f);
  return coeff * q_tail(std::sqrt(energy_over_n0 * f / (f - 2.0)));
}

double zero_rate_upper_bound(double delta, double energy_over_n0) {
  if (!(delta > 0.0) || !(delta < 1.0))
    throw std::domain_error("zero_rate_upper_bound: need delta in (0,1)");
  if (!(energy_over_n0 >= 0.0))
    throw std::domain_error("zero_rate_upper_bound: need E/N0 >= 0");
  const double c = ceil_snapped(1.0 / delta);
  const double v = (c - 1.0) * q_tail(std::sqrt(energy_over_n0 * c / (c - 1.0)));
  return std::clamp(v, 0.0, 1.0);
}

double convexity_threshold(double rate, double c_min) {
  if (!(rate > 0.0)) throw std::domain_error("convexity_threshold: need R > 0");
  if (!(rate < c_min))
    throw std::domain_error("convexity_threshold: need R < C_min");
  const double sr = std::sqrt(rate);
  const double sc = std::sqrt(c_min);
  const double d = sc - sr;
  return sr / (2.0 * sc * d * d);
}

PowerProfile::PowerProfile(std::vector<double> s, double delta, double cap)
    : samples(std::move(s)), bin_width(delta), average_power_cap(cap) {
  if (samples.empty()) throw std::domain_error("PowerProfile: no samples");
  if (!(delta > 0.0)) throw std::domain_error("PowerProfile: need bin width > 0");
  for (double v : samples)
    if (!(v > 0.0)) throw std::domain_error("PowerProfile: samples must be > 0");
  double mean = std::accumulate(samples.begin(), samples.end(), 0.0) /
                static_cast<double>(samples.size());
  if (mean > cap * (1.0 + 1e-12))
    throw std::domain_error("PowerProfile: grid mean exceeds the power cap");
}

VariablePowerBound variable_power_bound(const PowerProfile& profile,
                                        double rate, double duration,
                                        double noise_density, double eps) {
  if (!(duration > 0.0))
    throw std::domain_error("variable_power_bound: need T > 0");
  if (!(noise_density > 0.0))
    throw std::domain_error("variable_power_bound: need N0 > 0");
  if (eps <= 0.0) eps = 1.0 / std::sqrt(duration);  // default schedule
  const double r_eff = rate - 2.0 * eps;
  if (!(r_eff > 0.0))
    throw std::domain_error("variable_power_bound: need R - 2*eps > 0");

  const auto [mn, mx] =
      std::minmax_element(profile.samples.begin(), profile.samples.end());
  const double s_min = *mn;
  const double s_max = *mx;
  const double delta = profile.bin_width;
  const int r = std::max(
      1, static_cast<int>(ceil_snapped((s_max - s_min) / delta)));

  std::vector<std::size_t> counts(r, 0);
  for (double s : profile.samples) {
    int i = static_cast<int>((s - s_min) / delta);
    i = std::clamp(i, 0, r - 1);  // the top edge belongs to the last bin
    ++counts[static_cast<std::size_t>(i)];
  }

  // Keep bins carrying at least an exp(-eps*T) fraction of the samples, the
  // relative-mass version of the |C_i| >= exp(-eps T) M cutoff.
  const double cutoff = std::exp(-eps * duration);
  const double n = static_cast<double>(profile.samples.size());
  double retained = 0.0;
  std::vector<int> kept;
  for (int i = 0; i < r; ++i) {
    if (static_cast<double>(counts[static_cast<std::size_t>(i)]) / n >= cutoff) {
      kept.push_back(i);
      retained += static_cast<double>(counts[static_cast<std::size_t>(i)]);
    }
  }
  if (kept.empty())
    throw NumericsError("variable_power_bound: all bins filtered");

  auto bin_power = [&](int i) {
    if (r == 1) return 0.5 * (s_min + s_max);  // degenerate: keep exact power
    return s_min + (i + 0.5) * delta;
  };

  double weakest = std::numeric_limits<double>::infinity();
  double mixture = 0.0;
  double mean_power = 0.0;
  for (int i : kept) {
    const double pi = static_cast<double>(counts[static_cast<std::size_t>(i)]) / retained;
    const double s_i = bin_power(i);
    weakest = std::min(weakest, s_i);
    const double c_i = s_i / noise_density;
    if (!(r_eff < c_i))
      throw std::domain_error(
          "variable_power_bound: rate at or above the capacity of a retained "
          "bin");
    mixture += pi * std::exp(-duration *
                             awgn_reliability(ChannelSpec(s_i, noise_density),
                                              r_eff)
                                 .value);
    mean_power += pi * s_i;
  }
  const double convexified =
      std::exp(-duration *
               awgn_reliability(ChannelSpec(mean_power, noise_density), r_eff)
                   .value);
  const double threshold = convexity_threshold(r_eff, weakest / noise_density);
  return {mixture,
          convexified,
          threshold,
          retained / n,
          static_cast<int>(kept.size()),
          mixture >= convexified * (1.0 - 1e-12)};
}

}  // namespace modest
