#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "modest/detection.hpp"
#include "modest/numerics.hpp"
#include "modest/simulator.hpp"

#include <cmath>
#include <vector>

using namespace modest;

TEST_CASE("binary orthogonal closed form") {
  // Two-statistic difference gives P_e = Q(sqrt(E/N0)).
  for (double e : {0.25, 1.0, 4.0, 9.0}) {
    double exact = exact_mary_error(SignalSetSpec(2.0, e));
    CHECK(exact == doctest::Approx(q_tail(std::sqrt(e))).epsilon(1e-10));
  }
}

TEST_CASE("zero energy is pure guessing") {
  for (double m : {2.0, 5.0, 100.0, 4096.0}) {
    CHECK(exact_mary_error(SignalSetSpec(m, 0.0)) ==
          doctest::Approx(1.0 - 1.0 / m).epsilon(1e-10));
  }
}

TEST_CASE("monotone in M and in energy") {
  double prev = 0.0;
  for (double m : {2.0, 4.0, 8.0, 64.0, 1024.0}) {
    double p = exact_mary_error(SignalSetSpec(m, 2.0));
    CHECK(p > prev);
    prev = p;
  }
  prev = 1.0;
  for (double e : {0.5, 1.0, 2.0, 4.0, 8.0, 16.0}) {
    double p = exact_mary_error(SignalSetSpec(16.0, e));
    CHECK(p < prev);
    prev = p;
  }
}

TEST_CASE("huge signal sets through the log path") {
  // M ~ e^300; the transition sits deep where Q underflows pointwise.
  double m = std::exp(300.0);
  double p = exact_mary_error(SignalSetSpec(m, 300.0));
  CHECK(p > 0.05);
  CHECK(p < 0.95);
  CHECK(exact_mary_error(SignalSetSpec(m, 250.0)) > p);
  CHECK(exact_mary_error(SignalSetSpec(m, 360.0)) < p);
  // Deep reliable regime stays positive and tiny.
  double tiny = exact_mary_error(SignalSetSpec(std::exp(80.0), 400.0));
  CHECK(tiny > 0.0);
  CHECK(tiny < 1e-10);
}

TEST_CASE("quadrature agrees with Monte Carlo") {
  // The simulator is the independent route here: 1e5 trials, 3 binomial
  // sigma slack.
  const std::uint64_t n = 100000;
  for (auto [m, two_e] : std::vector<std::pair<std::uint64_t, double>>{
           {16, 16.0}, {8, 4.0}}) {
    double mu = std::sqrt(two_e);
    std::uint64_t k = 0;
    for (std::uint64_t t = 0; t < n; ++t) {
      k += transmit_decode(t % m, m, mu, RandomStream{99, t}) != t % m;
    }
    double exact = exact_mary_error(SignalSetSpec(double(m), two_e / 2.0));
    double sd = std::sqrt(exact * (1.0 - exact) / double(n));
    CHECK(std::abs(double(k) / double(n) - exact) < 3.0 * sd);
  }
}

TEST_CASE("simplex energy boost") {
  CHECK(simplex_energy(2.0, 1.0) == doctest::Approx(2.0));
  CHECK(simplex_energy(4.0, 1.0) == doctest::Approx(4.0 / 3.0));
  CHECK(simplex_energy(1e12, 1.0) == doctest::Approx(1.0).epsilon(1e-11));
  CHECK_THROWS_AS(simplex_energy(1.5, 1.0), std::domain_error);
  // Simplex geometry = orthogonal at boosted energy.
  double simplex = exact_mary_error(
      SignalSetSpec(8.0, 2.0, SignalGeometry::kSimplex));
  double boosted = exact_mary_error(SignalSetSpec(8.0, 2.0 * 8.0 / 7.0));
  CHECK(simplex == doctest::Approx(boosted).epsilon(1e-12));
}

TEST_CASE("zero-rate bounds: spot values through the q_tail oracle") {
  CHECK(zero_rate_lower_bound(0.25, 1.0) ==
        doctest::Approx(0.125 * q_tail(std::sqrt(2.0))).epsilon(1e-12));
  CHECK(zero_rate_lower_bound(0.25, 1.0) ==
        doctest::Approx(0.0098312004).epsilon(1e-7));
  CHECK(zero_rate_lower_bound(0.2, 1.0) ==
        doctest::Approx(0.1 * q_tail(std::sqrt(5.0 / 3.0))).epsilon(1e-12));
  CHECK(zero_rate_lower_bound(0.25, 0.0) == doctest::Approx(0.0625).epsilon(1e-12));
  // Upper bound: 3 Q(sqrt(4/3)) = 0.37231962.
  CHECK(zero_rate_upper_bound(0.25, 1.0) ==
        doctest::Approx(3.0 * q_tail(std::sqrt(4.0 / 3.0))).epsilon(1e-12));
  CHECK(zero_rate_upper_bound(0.25, 1.0) ==
        doctest::Approx(0.3723196185).epsilon(1e-7));
  // Antipodal case: ceil(1/delta) = 2.
  CHECK(zero_rate_upper_bound(0.5, 2.0) ==
        doctest::Approx(q_tail(2.0)).epsilon(1e-12));
  // Clamp at weak energy.
  CHECK(zero_rate_upper_bound(0.05, 0.0) == 1.0);
  CHECK_THROWS_AS(zero_rate_lower_bound(0.4, 1.0), std::domain_error);
  CHECK_THROWS_AS(zero_rate_lower_bound(0.5, 1.0), std::domain_error);
}

TEST_CASE("sandwich around the exact simplex error") {
  for (double delta : {0.1, 0.05}) {
    for (double e : {1.0, 4.0}) {
      double m = ceil_snapped(1.0 / delta);
      double exact =
          exact_mary_error(SignalSetSpec(m, e, SignalGeometry::kSimplex));
      CHECK(zero_rate_lower_bound(delta, e) <= exact);
      CHECK(exact <= zero_rate_upper_bound(delta, e));
    }
  }
}

TEST_CASE("convexity threshold") {
  CHECK(convexity_threshold(0.25, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(convexity_threshold(1e-8, 1.0) < 1e-3);
  CHECK(convexity_threshold(0.999, 1.0) > 1e5);
  CHECK_THROWS_AS(convexity_threshold(1.0, 1.0), std::domain_error);
  // Numeric convexity of exp(-T E(R,S)) in S for T past the threshold.
  const double rate = 0.2, n0 = 1.0;
  const double s_min = 0.5;
  const double t = 1.1 * convexity_threshold(rate, s_min / n0);
  auto f = [&](double s) {
    return std::exp(-t * awgn_reliability(ChannelSpec(s, n0), rate).value);
  };
  const double h = 1e-3;
  for (double s = s_min; s <= 2.0; s += 0.01) {
    double second = f(s + h) - 2.0 * f(s) + f(s - h);
    CHECK(second >= -1e-12);
  }
}

TEST_CASE("variable power: constant profile reduces exactly") {
  PowerProfile profile(std::vector<double>(64, 1.0), 0.1, 1.0);
  double t = 9.0, rate = 0.5, eps = 0.1;
  VariablePowerBound vp = variable_power_bound(profile, rate, t, 1.0, eps);
  double expected =
      std::exp(-t * awgn_reliability(ChannelSpec(1.0, 1.0), rate - 2 * eps).value);
  CHECK(vp.mixture == doctest::Approx(expected).epsilon(1e-14));
  CHECK(vp.convexified == doctest::Approx(expected).epsilon(1e-14));
  CHECK(vp.retained_bins == 1);
  CHECK(vp.ordering_holds);
}

TEST_CASE("variable power: two-level profile") {
  // Half the parameter range at 0.8S, half at 1.2S.  eps*T must exceed ln 2
  // or the half-mass bins fall under the e^{-eps T} cutoff.
  std::vector<double> samples;
  for (int i = 0; i < 32; ++i) samples.push_back(0.8);
  for (int i = 0; i < 32; ++i) samples.push_back(1.2);
  PowerProfile profile(samples, 0.2, 1.0);
  double rate = 0.2, eps = 0.01, t = 80.0;
  double r_eff = rate - 2 * eps;

  // Well above the convexity threshold the mixture dominates.
  VariablePowerBound above = variable_power_bound(profile, rate, t, 1.0, eps);
  CHECK(above.retained_bins == 2);
  CHECK(above.threshold_duration ==
        doctest::Approx(convexity_threshold(r_eff, 0.9)).epsilon(1e-12));
  CHECK(above.threshold_duration < t);
  CHECK(above.mixture >= above.convexified);
  CHECK(above.ordering_holds);
  // Direct evaluation: bins snap to 0.9 and 1.1 with equal weights.
  double direct = 0.5 * std::exp(-t * awgn_reliability(ChannelSpec(0.9, 1.0), r_eff).value) +
                  0.5 * std::exp(-t * awgn_reliability(ChannelSpec(1.1, 1.0), r_eff).value);
  CHECK(above.mixture == doctest::Approx(direct).epsilon(1e-12));
  CHECK(above.convexified ==
        doctest::Approx(std::exp(-t * awgn_reliability(ChannelSpec(1.0, 1.0), r_eff).value))
            .epsilon(1e-12));
}

TEST_CASE("variable power: below the threshold the ordering may reverse") {
  // Rate close to the weak bin's capacity pushes the convexity threshold to
  // ~4650 while retention only needs T >= ln2/eps = 139; at T = 150 the
  // exponential is still concave across the bins and the ordering flips.
  std::vector<double> samples;
  for (int i = 0; i < 32; ++i) samples.push_back(0.9);
  for (int i = 0; i < 32; ++i) samples.push_back(1.1);
  PowerProfile profile(samples, 0.1, 1.0);
  double rate = 0.94, eps = 0.005, t = 150.0;
  VariablePowerBound below = variable_power_bound(profile, rate, t, 1.0, eps);
  CHECK(below.retained_bins == 2);
  CHECK(below.threshold_duration > t);  // genuinely below threshold
  CHECK(below.mixture < below.convexified);
  CHECK_FALSE(below.ordering_holds);
}

TEST_CASE("variable power: filters and errors") {
  // eps*T small enough that no bin reaches the mass cutoff.
  std::vector<double> ramp;
  for (int i = 0; i < 200; ++i) ramp.push_back(0.5 + i * 0.005);
  PowerProfile profile(ramp, 0.005, 1.2);
  CHECK_THROWS_WITH_AS(variable_power_bound(profile, 0.2, 1.0, 1.0, 0.001),
                       "variable_power_bound: all bins filtered",
                       NumericsError);
  // Rate above a retained bin's capacity.
  PowerProfile weak(std::vector<double>(8, 0.5), 0.1, 0.5);
  CHECK_THROWS_AS(variable_power_bound(weak, 0.6, 10.0, 1.0, 0.01),
                  std::domain_error);
  // R - 2 eps must stay positive.
  CHECK_THROWS_AS(variable_power_bound(weak, 0.1, 10.0, 1.0, 0.05),
                  std::domain_error);
  // The grid-mean cap is enforced.
  CHECK_THROWS_AS(PowerProfile(std::vector<double>{2.0, 2.0}, 0.1, 1.0),
                  std::domain_error);
}
