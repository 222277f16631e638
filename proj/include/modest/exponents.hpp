#pragma once

#include "modest/numerics.hpp"

#include <stdexcept>

namespace modest {

// Infinite-bandwidth AWGN channel: signal power S (watts) and two-sided
// noise density parameter N0 (watts/Hz).  Capacity C = S/N0 in nats/second.
// Rates and exponents are in nats per second throughout; all logs natural.
struct ChannelSpec {
  double power;          // S
  double noise_density;  // N0

  ChannelSpec(double s, double n0) : power(s), noise_density(n0) {
    if (!(s > 0.0) || !(n0 > 0.0))
      throw std::domain_error("ChannelSpec: need S > 0 and N0 > 0");
  }
  static ChannelSpec from_capacity(double c) { return ChannelSpec(c, 1.0); }
  double capacity() const { return power / noise_density; }
};

// Rayleigh fading on top of a channel; gain density (a/sigma^2)exp(-a^2/2sigma^2).
// Average capacity is sigma^2 * C.
struct FadingSpec {
  ChannelSpec channel;
  double scale;  // sigma

  FadingSpec(ChannelSpec ch, double sigma) : channel(ch), scale(sigma) {
    if (!(sigma > 0.0)) throw std::domain_error("FadingSpec: need sigma > 0");
  }
  double average_capacity() const { return scale * scale * channel.capacity(); }
};

// Band-limited AWGN channel.
struct BandSpec {
  double bandwidth;  // W in Hz
  ChannelSpec channel;

  BandSpec(double w, ChannelSpec ch) : bandwidth(w), channel(ch) {
    if (!(w > 0.0)) throw std::domain_error("BandSpec: need W > 0");
  }
};

// Exponent value plus a strong-converse marker, so callers can tell
// "zero exponent, excess probability -> 1" (R > C) apart from the
// zero exponent at R = C exactly.
struct Reliability {
  double value;
  bool strong_converse;
};

// Reliability function of the infinite-bandwidth AWGN channel:
//   C/2 - R              for 0 <= R <= C/4,
//   (sqrt C - sqrt R)^2  for C/4 <= R <= C,
//   0                    for R >= C (strong converse flagged for R > C).
Reliability awgn_reliability(const ChannelSpec& channel, double rate);

// Same curve under a fixed fading gain a (capacity a^2 C), written as a
// function of a parametrized by R:
//   a^2 C/2 - R             for a >= 2 sqrt(R/C),
//   (a sqrt C - sqrt R)^2   for sqrt(R/C) <= a <= 2 sqrt(R/C),
//   0                       for a <= sqrt(R/C)   (outage).
double fading_reliability(double gain, const ChannelSpec& channel, double rate);

struct SpherePacking {
  double value;
  double rho_star;
};

// Sphere-packing exponent of the band-limited channel:
//   max_{rho in [0, rho_max]} rho W ln(1 + S/(N0 W (1+rho))) - rho R.
// Meaningful as the true reliability only for R >= critical_rate(band);
// the default bracket is kept wide because the maximizer leaves [0,1]
// below the critical rate.
SpherePacking sphere_packing_exponent(const BandSpec& band, double rate,
                                      double rho_max = 64.0);

// R_c(W) = W [ ln(1 + S/(2 N0 W)) - (1/2) S/(S + 2 N0 W) ].
double critical_rate(const BandSpec& band);

struct MomentBound {
  double rate;      // minimizing R*
  double exponent;  // min_R E(R) + alpha R
};

// Minimizes E(R) + alpha*R over [0, C] (grid plus golden refinement).
// Closed forms: C/2 at R*->0 for alpha >= 1; alpha*C/(1+alpha) at
// R* = C/(1+alpha)^2 for 0 < alpha < 1.
MomentBound moment_bound_exponent(const ChannelSpec& channel, double alpha);

// floor(C/R): the largest parameter dimension whose total rate stays below
// capacity.  At exact divisibility d = C/R the total rate equals C and the
// exponent is zero, so that dimension is already non-decaying.
int critical_dimension(const ChannelSpec& channel, double per_dim_rate);

// P(A^2 C < R) = 1 - exp(-R / (2 Cbar)).
double outage_probability(const FadingSpec& fading, double rate);

struct FadingZeroRate {
  double value;        // E{ Q(A sqrt(C T)) }
  double lower_bound;  // 1 / (4 (Cbar T + 1))
  double upper_bound;  // 1 / (4 Cbar T)
};

// Exact E{Q(A sqrt(CT))} = (1/pi) Int_0^{pi/2} sin^2 t / (Cbar T + sin^2 t) dt
// by quadrature, with the algebraic sandwich bounds.
FadingZeroRate fading_zero_rate_value(const FadingSpec& fading, double duration);

}  // namespace modest
