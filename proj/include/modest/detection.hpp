#pragma once

#include "modest/exponents.hpp"
#include "modest/numerics.hpp"

#include <cstdint>
#include <vector>

namespace modest {

enum class SignalGeometry { kOrthogonal, kSimplex };

// Equal-energy signal set for M-ary detection.  m is a real count so the
// quadrature stays usable for set sizes like e^{RT}/2 far beyond 2^63;
// energy_over_n0 is the dimensionless ratio E/N0.
struct SignalSetSpec {
  double m;
  double energy_over_n0;
  SignalGeometry geometry = SignalGeometry::kOrthogonal;

  SignalSetSpec(double m_count, double e_over_n0,
                SignalGeometry geom = SignalGeometry::kOrthogonal)
      : m(m_count), energy_over_n0(e_over_n0), geometry(geom) {
    if (!(m_count >= 2.0)) throw std::domain_error("SignalSetSpec: need M >= 2");
    if (!(e_over_n0 >= 0.0))
      throw std::domain_error("SignalSetSpec: need E/N0 >= 0");
  }
};

// Exact error probability of ML detection over M equal-energy orthogonal
// signals:
//   P_e = Int phi(t) * (1 - Phi(t + sqrt(2 E/N0))^{M-1}) dt.
// Simplex sets are evaluated as orthogonal sets at energy boosted by
// M/(M-1).  The (M-1)*ln Phi product is kept in log space so M up to e^300
// is fine.
double exact_mary_error(const SignalSetSpec& set,
                        const QuadratureSpec& spec = {});

// Energy of the orthogonal set equivalent to an M-ary simplex: E * M/(M-1).
double simplex_energy(double m, double energy);

// Zero-rate (fixed threshold) bounds on P{|Uhat - U| > delta/2}.
// Lower: (1/2)(1 + d - d*floor(1/d)) * Q( sqrt(E/N0 * f/(f-2)) ), f = floor(1/d).
// Requires floor(1/delta) > 2.
double zero_rate_lower_bound(double delta, double energy_over_n0);

// Upper: (ceil(1/d) - 1) * Q( sqrt(E/N0 * c/(c-1)) ), clamped to [0,1].
double zero_rate_upper_bound(double delta, double energy_over_n0);

// Smallest duration for which exp(-T E(R,S)) is convex in S across
// [S_min, inf):  sqrt(R) / (2 sqrt(C_min) (sqrt(C_min) - sqrt(R))^2),
// with C_min the capacity of the weakest power.  Requires R < C_min.
double convexity_threshold(double rate, double c_min);

// Sampled power profile S(u) on a uniform grid over [-1/2, +1/2).
struct PowerProfile {
  std::vector<double> samples;  // S(u) at the grid points, all > 0
  double bin_width;             // delta, watts
  double average_power_cap;     // S; grid mean must not exceed it

  PowerProfile(std::vector<double> s, double delta, double cap);
};

struct VariablePowerBound {
  double mixture;      // sum_i pi_i exp(-T E(R - 2eps, S_i))
  double convexified;  // exp(-T E(R - 2eps, sum_i pi_i S_i))
  double threshold_duration;  // convexity threshold at the weakest retained bin
  double retained_mass;       // fraction of samples in retained bins
  int retained_bins;
  bool ordering_holds;  // mixture >= convexified (up to fp slack)
};

// Bins the profile into widths delta, keeps bins whose sample-mass fraction
// is at least exp(-eps*T), snaps bin powers to S_i = S_min + (i+1/2)delta
// (a degenerate single bin keeps the exact power), and evaluates both sides
// of the convexity step.  eps defaults to 1/sqrt(T) when not given.
VariablePowerBound variable_power_bound(const PowerProfile& profile,
                                        double rate, double duration,
                                        double noise_density,
                                        double eps = 0.0);

}  // namespace modest
