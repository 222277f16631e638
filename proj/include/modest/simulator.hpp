#pragma once

#include "modest/exponents.hpp"
#include "modest/numerics.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace modest {

inline constexpr std::uint64_t kDefaultMCap = 1ULL << 24;

// Uniform quantization grid over [-1/2, +1/2): M cells of width 1/M with
// points at the cell centers.  effective_rate = ln(2M)/T is the rate the
// grid actually realizes once M is rounded to an integer.
struct GridCode {
  std::uint64_t m;
  double delta;           // 1/M
  double threshold;       // delta/2, half the spacing
  double effective_rate;  // ln(2M)/T

  double point(std::uint64_t i) const {
    return -0.5 + (static_cast<double>(i) + 0.5) * delta;
  }
};

// M = max(2, round(e^{RT}/2)).  Throws if e^{RT}/2 exceeds m_cap.
GridCode build_grid(double rate, double duration,
                    std::uint64_t m_cap = kDefaultMCap);

// Index of the grid point nearest to u; cell-boundary ties resolve to the
// upper cell.  Requires u in [-1/2, +1/2).
std::uint64_t quantize(double u, const GridCode& grid);

// Draws m unit normals, adds mu to the true coordinate, returns the argmax.
// Ties (probability zero) break to the lowest index.
std::uint64_t transmit_decode(std::uint64_t true_index, std::uint64_t m,
                              double mu, StreamCursor& stream);
std::uint64_t transmit_decode(std::uint64_t true_index, std::uint64_t m,
                              double mu, RandomStream stream);

// Exact sample of max of `count` i.i.d. unit normals from one uniform v:
// solves Phi(w)^count = v through the complementary tail, so counts up to
// ~1e300 keep full precision.  This is what lets the simulator decode signal
// sets far too large to materialize.
double sample_max_normal(double count, double v);

struct ExperimentConfig {
  ChannelSpec channel;
  double duration;            // T, seconds
  std::vector<double> rates;  // per-dimension rates, nats/s
  std::uint64_t trials = 0;
  std::uint64_t seed = 0;
  std::optional<double> fading_scale = std::nullopt;  // sigma; Rayleigh draw
  std::optional<double> fixed_delta = std::nullopt;   // zero-rate fixed threshold
  bool simplex_boost = false;  // fixed-delta mode: energy boost M/(M-1)
  std::uint64_t m_cap = kDefaultMCap;
  std::uint64_t materialize_limit = 4096;  // statistics drawn explicitly below this
  unsigned workers = 1;
  double ci_level = 0.95;
};

struct Interval {
  double lo;
  double hi;
};

// Wilson score interval; behaves sanely at k = 0 and k = n.
Interval wilson_interval(std::uint64_t successes, std::uint64_t trials,
                         double level);

struct TailEstimate {
  std::uint64_t excess_count;  // k
  std::uint64_t trials;        // n
  double p_hat;                // k/n
  Interval ci;
  double ci_level;
  std::string event;  // echo of the event definition
  // Bookkeeping for the event==decode-error identity of the grid scheme;
  // equals excess_count whenever the threshold is half the cell width.
  std::uint64_t decode_error_count;
};

// Scalar grid scheme: draw U, quantize, transmit over M orthogonal signals
// with mu = sqrt(2CT), estimate the decoded cell center, count
// |Uhat - U| > threshold.  Requires a 1-D config.
TailEstimate run_excess_error(const ExperimentConfig& cfg);

// Cartesian product grid over d dimensions, one orthogonal signal per cell;
// counts the union event over the per-dimension thresholds (which for this
// scheme coincides with a decode error).  d = 1 reduces exactly to
// run_excess_error.
TailEstimate run_multidim(const ExperimentConfig& cfg);

// Adds a per-trial Rayleigh gain A (inverse CDF: sigma*sqrt(-2 ln V)) that
// scales the signal mean; the ML decoder is unchanged.
TailEstimate run_fading(const ExperimentConfig& cfg);

struct TrialSample {
  double u;
  double u_hat;
  std::uint64_t true_index;
  std::uint64_t decoded_index;
  std::vector<double> statistics;  // the M decoder inputs
};

// Scalar run that keeps per-trial inputs and outputs for the
// estimator-to-detector harness.  Requires M <= materialize_limit.
std::vector<TrialSample> run_collect_samples(const ExperimentConfig& cfg);

// The derived detector: decide the hypothesis whose grid point is nearest
// to u_hat.  Returns its empirical error rate over the samples.
double estimator_to_detector(const std::vector<TrialSample>& samples,
                             double delta, std::uint64_t m);

struct MsePair {
  double direct;         // mean of squared errors
  double tail_integral;  // 2 Int_0^1 d * P(|err| >= d) dd on the empirical law
};

// The two routes are algebraically identical; both are returned so callers
// can check the identity numerically.  Errors must lie in [0,1].
MsePair mse_from_tail(const std::vector<double>& abs_errors);

}  // namespace modest
