#include "modest/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace modest {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // ln sqrt(2*pi)
constexpr double kSqrt2Pi = 2.50662827463100050242;

}  // namespace

double q_tail(double x) {
  double q = 0.5 * std::erfc(x * kInvSqrt2);
  return std::clamp(q, 0.0, 1.0);
}

double log_q_tail(double x) {
  if (std::isnan(x)) return std::numeric_limits<double>::quiet_NaN();
  if (x <= 0.0) {
    // Q(x) = 1 - Q(-x); log1p keeps accuracy when Q(-x) is tiny.
    return std::log1p(-q_tail(-x));
  }
  if (x < 34.0) {
    return std::log(q_tail(x));  // no underflow until x ~ 37.5
  }
  // Asymptotic: Q(x) = phi(x)/x * (1 - 1/x^2 + 3/x^4 - 15/x^6 + ...).
  // At x >= 34 eight terms are below 1e-18 relative.
  const double inv2 = 1.0 / (x * x);
  double term = 1.0;
  double series = 1.0;
  for (int k = 1; k <= 10; ++k) {
    term *= -(2.0 * k - 1.0) * inv2;
    series += term;
    if (std::abs(term) < 1e-19 * series) break;
  }
  return -0.5 * x * x - std::log(x) - kLogSqrt2Pi + std::log(series);
}

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / kSqrt2Pi;
}

double log_normal_pdf(double x) {
  return -0.5 * x * x - kLogSqrt2Pi;
}

double normal_cdf(double x) {
  return q_tail(-x);
}

double log_normal_cdf(double x) {
  // Phi(x) = Q(-x); pick whichever side keeps the argument of log small.
  if (x >= 0.0) return std::log1p(-q_tail(x));
  return log_q_tail(-x);
}

namespace {

// Acklam's rational approximation to the normal quantile (~1.2e-9 relative).
double acklam_quantile(double p) {
  static const double a1 = -39.69683028665376, a2 = 220.9460984245205,
                      a3 = -275.9285104469687, a4 = 138.3577518672690,
                      a5 = -30.66479806614716, a6 = 2.506628277459239;
  static const double b1 = -54.47609879822406, b2 = 161.5858368580409,
                      b3 = -155.6989798598866, b4 = 66.80131188771972,
                      b5 = -13.28068155288572;
  static const double c1 = -7.784894002430293e-03, c2 = -3.223964580411365e-01,
                      c3 = -2.400758277161838, c4 = -2.549732539343734,
                      c5 = 4.374664141464968, c6 = 2.938163982698783;
  static const double d1 = 7.784695709041462e-03, d2 = 3.224671290700398e-01,
                      d3 = 2.445134137142996, d4 = 3.754408661907416;
  const double plow = 0.02425;
  if (p < plow) {
    double q = std::sqrt(-2.0 * std::log(p));
    return (((((c1 * q + c2) * q + c3) * q + c4) * q + c5) * q + c6) /
           ((((d1 * q + d2) * q + d3) * q + d4) * q + 1.0);
  }
  if (p > 1.0 - plow) {
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c1 * q + c2) * q + c3) * q + c4) * q + c5) * q + c6) /
           ((((d1 * q + d2) * q + d3) * q + d4) * q + 1.0);
  }
  double q = p - 0.5;
  double r = q * q;
  return (((((a1 * r + a2) * r + a3) * r + a4) * r + a5) * r + a6) * q /
         (((((b1 * r + b2) * r + b3) * r + b4) * r + b5) * r + 1.0);
}

// Newton iteration on F(y) = ln Q(y) - ln p.  Works uniformly for p <= 0.5
// because everything stays in log space; two steps reach machine precision
// from Acklam's guess.
double q_tail_inverse_half(double p) {
  const double lp = std::log(p);
  double y = -acklam_quantile(p);  // Q(y) = p  <=>  Phi(-y) = p
  for (int iter = 0; iter < 3; ++iter) {
    double lq = log_q_tail(y);
    double step = (lq - lp) * std::exp(lq - log_normal_pdf(y));  // (lnQ-lnp)*Q/phi
    y += step;
    if (std::abs(step) <= 1e-15 * (1.0 + std::abs(y))) break;
  }
  return y;
}

}  // namespace

double q_tail_inverse(double p) {
  if (!(p > 0.0) || !(p < 1.0))
    throw EvaluationError("q_tail_inverse: p must be in (0,1)");
  if (p > 0.5) return -q_tail_inverse_half(1.0 - p);  // 1-p exact for p>0.5
  return q_tail_inverse_half(p);
}

double normal_quantile(double p) {
  if (!(p > 0.0) || !(p < 1.0))
    throw EvaluationError("normal_quantile: p must be in (0,1)");
  if (p <= 0.5) return -q_tail_inverse_half(p);
  return q_tail_inverse_half(1.0 - p);
}

// ---------------------------------------------------------------------------
// Adaptive Simpson.
// ---------------------------------------------------------------------------

namespace {

struct SimpsonState {
  const std::function<double(double)>& f;
  bool exhausted = false;
};

double eval_checked(const std::function<double(double)>& f, double x) {
  double v = f(x);
  if (std::isnan(v)) throw EvaluationError("integrand returned NaN");
  return v;
}

double simpson_recurse(SimpsonState& st, double a, double b, double fa,
                       double fm, double fb, double whole, double tol,
                       int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = eval_checked(st.f, lm);
  const double frm = eval_checked(st.f, rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (std::abs(delta) <= 15.0 * tol || m == a || m == b) {
    return left + right + delta / 15.0;
  }
  if (depth <= 0) {
    st.exhausted = true;
    return left + right + delta / 15.0;
  }
  return simpson_recurse(st, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_recurse(st, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate_finite(const std::function<double(double)>& f, double a,
                        double b, const QuadratureSpec& spec) {
  // Composite pass over fixed panels first.  It scales the relative
  // tolerance, and seeding the adaptive refinement per panel keeps a feature
  // much narrower than the range from slipping between the first samples.
  const int n = 128;
  const double h = (b - a) / n;
  struct Panel {
    double x0, x1, f0, fm, f1, simpson;
  };
  std::vector<Panel> panels;
  panels.reserve(n);
  double coarse = 0.0;
  double fa = eval_checked(f, a);
  for (int i = 0; i < n; ++i) {
    double x0 = a + i * h;
    double x1 = (i + 1 == n) ? b : x0 + h;
    double fm = eval_checked(f, 0.5 * (x0 + x1));
    double fb = eval_checked(f, x1);
    double s = (x1 - x0) / 6.0 * (fa + 4.0 * fm + fb);
    panels.push_back({x0, x1, fa, fm, fb, s});
    coarse += s;
    fa = fb;
  }
  const double tol = std::max(spec.abs_tol, spec.rel_tol * std::abs(coarse));

  SimpsonState st{f};
  double value = 0.0;
  for (const Panel& p : panels) {
    value += simpson_recurse(st, p.x0, p.x1, p.f0, p.fm, p.f1, p.simpson,
                             tol / n, spec.max_depth);
  }
  if (st.exhausted) throw QuadratureError("quadrature failure: depth exhausted", value);
  return value;
}

}  // namespace

double integrate_1d(const std::function<double(double)>& f, double a, double b,
                    const QuadratureSpec& spec) {
  if (std::isnan(a) || std::isnan(b) || !(a < b))
    throw EvaluationError("integrate_1d: need a < b");
  const bool inf_lo = std::isinf(a);
  const bool inf_hi = std::isinf(b);
  if (!inf_lo && !inf_hi) return integrate_finite(f, a, b, spec);

  // Map the infinite range onto an open unit interval; the clamp keeps the
  // Jacobian finite and truncates only where the integrand must already be 0.
  const double edge = 1.0 - 1e-12;
  if (inf_lo && inf_hi) {
    auto g = [&f](double t) {
      double d = 1.0 - t * t;
      double x = t / d;
      return f(x) * (1.0 + t * t) / (d * d);
    };
    return integrate_finite(g, -edge, edge, spec);
  }
  if (inf_hi) {
    auto g = [&f, a](double t) {
      double d = 1.0 - t;
      return f(a + t / d) / (d * d);
    };
    return integrate_finite(g, 0.0, edge, spec);
  }
  auto g = [&f, b](double t) {
    double d = 1.0 - t;
    return f(b - t / d) / (d * d);
  };
  return integrate_finite(g, 0.0, edge, spec);
}

MaxResult maximize_concave_1d(const std::function<double(double)>& g,
                              double lo, double hi, double tol) {
  if (!(lo < hi)) throw EvaluationError("maximize_concave_1d: need lo < hi");
  if (!(tol > 0.0)) throw EvaluationError("maximize_concave_1d: need tol > 0");
  auto eval = [&g](double x) {
    double v = g(x);
    if (std::isnan(v)) throw EvaluationError("objective returned NaN");
    return v;
  };
  constexpr double kInvPhi = 0.61803398874989484820;
  double a = lo, b = hi;
  double x1 = b - kInvPhi * (b - a);
  double x2 = a + kInvPhi * (b - a);
  double f1 = eval(x1), f2 = eval(x2);
  while (b - a > tol) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kInvPhi * (b - a);
      f2 = eval(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kInvPhi * (b - a);
      f1 = eval(x1);
    }
  }
  double xm = 0.5 * (a + b);
  double fm = eval(xm);
  // Endpoints can win when the maximizer sits on the boundary.
  MaxResult best{xm, fm};
  double flo = eval(lo), fhi = eval(hi);
  if (flo > best.value) best = {lo, flo};
  if (fhi > best.value) best = {hi, fhi};
  return best;
}

// ---------------------------------------------------------------------------
// Counter-based stream.
// ---------------------------------------------------------------------------

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// SplitMix64 finalizer (Stafford mix 13): the per-draw output function.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t stream_key(RandomStream s) {
  std::uint64_t k = mix64(s.seed + kGolden);
  return mix64(k ^ (s.id * 0xD1B54A32D192ED03ULL + 0x2545F4914F6CDD1DULL));
}

inline std::uint64_t draw_bits(std::uint64_t key, std::uint64_t index) {
  return mix64(key + index * kGolden);
}

}  // namespace

StreamCursor::StreamCursor(RandomStream stream) : key_(stream_key(stream)) {}

std::uint64_t StreamCursor::bits() { return draw_bits(key_, next_++); }

double StreamCursor::uniform() {
  return static_cast<double>(bits() >> 11) * 0x1.0p-53;
}

double StreamCursor::uniform_open() {
  return (static_cast<double>(bits() >> 11) + 0.5) * 0x1.0p-53;
}

double StreamCursor::normal() {
  return normal_quantile(uniform_open());
}

std::uint64_t StreamCursor::below(std::uint64_t n) {
  if (n == 0) throw EvaluationError("StreamCursor::below: n must be positive");
  // Lemire's multiply-and-reject; the loop terminates after a variable
  // number of draws, which is fine because streams are keyed per caller.
  while (true) {
    std::uint64_t v = bits();
    unsigned __int128 m = static_cast<unsigned __int128>(v) * n;
    std::uint64_t lo = static_cast<std::uint64_t>(m);
    if (lo < n) {
      std::uint64_t threshold = (0ULL - n) % n;
      if (lo < threshold) continue;
    }
    return static_cast<std::uint64_t>(m >> 64);
  }
}

std::vector<double> stream_uniform(RandomStream stream, std::size_t n) {
  std::vector<double> out;
  out.reserve(n);
  StreamCursor cur(stream);
  for (std::size_t i = 0; i < n; ++i) out.push_back(cur.uniform());
  return out;
}

double floor_snapped(double x, double rel) {
  double r = std::round(x);
  if (std::abs(x - r) <= rel * std::max(1.0, std::abs(x))) return r;
  return std::floor(x);
}

double ceil_snapped(double x, double rel) {
  double r = std::round(x);
  if (std::abs(x - r) <= rel * std::max(1.0, std::abs(x))) return r;
  return std::ceil(x);
}

}  // namespace modest
