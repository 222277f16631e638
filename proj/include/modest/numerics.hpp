#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace modest {

// Tolerances and subdivision budget for the adaptive quadrature.
// The defaults are tight enough that quadrature error is negligible
// against Monte Carlo error wherever the integral serves as an oracle.
struct QuadratureSpec {
  double abs_tol = 1e-12;
  double rel_tol = 1e-10;
  int max_depth = 60;
};

class NumericsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Subdivision budget exhausted; carries the best estimate so far.
class QuadratureError : public NumericsError {
 public:
  QuadratureError(const std::string& what, double partial_value)
      : NumericsError(what), partial_(partial_value) {}
  double partial() const { return partial_; }

 private:
  double partial_;
};

// The objective returned NaN (or was otherwise unevaluable).
class EvaluationError : public NumericsError {
 public:
  using NumericsError::NumericsError;
};

// ---------------------------------------------------------------------------
// Gaussian tail machinery.
// ---------------------------------------------------------------------------

// Q(x) = P(N(0,1) > x), clamped to [0,1].  Relative error a few ulp for
// |x| <= 8 (delegates to erfc) and leading asymptotic order beyond.
double q_tail(double x);

// ln Q(x), valid far past the point where Q(x) underflows (x up to ~1e7).
// Needed for products of the form (M-1)*Q(x) with M as large as e^300.
double log_q_tail(double x);

double normal_pdf(double x);
double log_normal_pdf(double x);
double normal_cdf(double x);

// ln Phi(x), accurate in both tails.
double log_normal_cdf(double x);

// Inverse CDF of N(0,1) for p in (0,1).  Acklam's rational initial guess
// followed by Newton steps on ln Q, so the deep tails are accurate too.
double normal_quantile(double p);

// Solves Q(x) = p for p in (0,1); full relative accuracy down to the
// smallest positive doubles.
double q_tail_inverse(double p);

// ---------------------------------------------------------------------------
// Quadrature and 1-D optimization.
// ---------------------------------------------------------------------------

// Adaptive Simpson on [a,b]; the estimate is within
// max(abs_tol, rel_tol*|value|) of the true integral for smooth f.
// Infinite endpoints are mapped through x = t/(1-t^2) on (-1,1) (and the
// one-sided analogues), so integrands must decay at infinity.
// Throws QuadratureError on depth exhaustion (with the partial value).
double integrate_1d(const std::function<double(double)>& f, double a, double b,
                    const QuadratureSpec& spec = {});

struct MaxResult {
  double arg;
  double value;
};

// Golden-section search for a unimodal g on [lo,hi].  Non-unimodal input is
// undetected (contract); NaN from g throws EvaluationError.
MaxResult maximize_concave_1d(const std::function<double(double)>& g,
                              double lo, double hi, double tol);

// ---------------------------------------------------------------------------
// Deterministic random streams.
// ---------------------------------------------------------------------------

// Immutable stream descriptor: (seed, id) fully determines the sequence.
// Distinct ids give statistically independent streams, so callers can key
// streams by trial index and stay independent of worker partitioning.
struct RandomStream {
  std::uint64_t seed = 0;
  std::uint64_t id = 0;
};

// Counter-based view of a stream: draw k is a pure function of
// (seed, id, k), never of batching.  Copyable; the cursor is the only state.
class StreamCursor {
 public:
  explicit StreamCursor(RandomStream stream);

  std::uint64_t bits();
  double uniform();       // [0,1), 53-bit
  double uniform_open();  // (0,1), for inverse-CDF transforms
  double normal();        // inverse-CDF, one uniform per variate
  std::uint64_t below(std::uint64_t n);  // unbiased integer in [0,n)

  std::uint64_t index() const { return next_; }
  void seek(std::uint64_t index) { next_ = index; }

 private:
  std::uint64_t key_;
  std::uint64_t next_ = 0;
};

// Bulk draw: n values in [0,1) from draw indices 0..n-1.
std::vector<double> stream_uniform(RandomStream stream, std::size_t n);

// ---------------------------------------------------------------------------
// Small helpers.
// ---------------------------------------------------------------------------

// floor/ceil with a relative snap, so quotients like 1/0.2 that land a few
// ulp shy of an integer are treated as that integer.
double floor_snapped(double x, double rel = 1e-9);
double ceil_snapped(double x, double rel = 1e-9);

}  // namespace modest
