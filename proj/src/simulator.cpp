#include "modest/simulator.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

namespace modest {

GridCode build_grid(double rate, double duration, std::uint64_t m_cap) {
  if (!(rate > 0.0) || !(duration > 0.0))
    throw std::domain_error("build_grid: need R > 0 and T > 0");
  const double half_count = 0.5 * std::exp(rate * duration);
  if (!(half_count <= static_cast<double>(m_cap)))
    throw std::domain_error(
        "grid too large; reduce R*T or use exact_mary_error");
  const std::uint64_t m =
      std::max<std::uint64_t>(2, static_cast<std::uint64_t>(std::llround(half_count)));
  const double delta = 1.0 / static_cast<double>(m);
  return {m, delta, 0.5 * delta,
          std::log(2.0 * static_cast<double>(m)) / duration};
}

std::uint64_t quantize(double u, const GridCode& grid) {
  if (!(u >= -0.5) || !(u < 0.5))
    throw std::domain_error("quantize: u outside [-1/2, +1/2)");
  // floor((u+1/2)*M) sends a cell-boundary tie to the upper cell.
  double cell = std::floor((u + 0.5) * static_cast<double>(grid.m));
  auto i = static_cast<std::uint64_t>(std::max(cell, 0.0));
  return std::min(i, grid.m - 1);
}

std::uint64_t transmit_decode(std::uint64_t true_index, std::uint64_t m,
                              double mu, StreamCursor& stream) {
  if (m < 2) throw std::domain_error("transmit_decode: need M >= 2");
  if (true_index >= m) throw std::domain_error("transmit_decode: index out of range");
  if (!(mu >= 0.0)) throw std::domain_error("transmit_decode: need mu >= 0");
  std::uint64_t best = 0;
  double best_z = -std::numeric_limits<double>::infinity();
  for (std::uint64_t j = 0; j < m; ++j) {
    double z = stream.normal() + (j == true_index ? mu : 0.0);
    if (z > best_z) {  // strict: ties break to the lowest index
      best_z = z;
      best = j;
    }
  }
  return best;
}

std::uint64_t transmit_decode(std::uint64_t true_index, std::uint64_t m,
                              double mu, RandomStream stream) {
  StreamCursor cur(stream);
  return transmit_decode(true_index, m, mu, cur);
}

double sample_max_normal(double count, double v) {
  if (!(count >= 1.0)) throw std::domain_error("sample_max_normal: need count >= 1");
  if (!(v > 0.0) || !(v < 1.0))
    throw std::domain_error("sample_max_normal: need v in (0,1)");
  // P(W <= w) = Phi(w)^count = v  =>  Q(w) = 1 - v^{1/count}; expm1 keeps
  // relative accuracy when 1/count is tiny.
  double eps = -std::expm1(std::log(v) / count);
  eps = std::max(eps, std::numeric_limits<double>::min());
  return q_tail_inverse(eps);
}

Interval wilson_interval(std::uint64_t successes, std::uint64_t trials,
                         double level) {
  if (trials == 0) return {0.0, 1.0};
  if (!(level > 0.0) || !(level < 1.0))
    throw std::domain_error("wilson_interval: level must be in (0,1)");
  const double z = normal_quantile(0.5 + 0.5 * level);
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double radius =
      z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, center - radius), std::min(1.0, center + radius)};
}

namespace {

constexpr std::uint64_t kMcHardLimit = 1ULL << 62;

struct Layout {
  std::vector<GridCode> grids;            // per dimension
  std::vector<double> event_thresholds;   // per dimension
  std::vector<std::uint64_t> strides;     // mixed-radix, dim 0 least significant
  std::uint64_t m_total = 0;
  double mu_base = 0.0;
  bool fading = false;
  double sigma = 1.0;
  bool standard = true;  // event threshold is half the cell width
};

Layout make_layout(const ExperimentConfig& cfg) {
  if (cfg.trials == 0) throw std::domain_error("experiment: trials must be >= 1");
  if (!(cfg.duration > 0.0)) throw std::domain_error("experiment: need T > 0");
  if (!(cfg.ci_level > 0.0) || !(cfg.ci_level < 1.0))
    throw std::domain_error("experiment: ci level must be in (0,1)");

  Layout lay;
  lay.fading = cfg.fading_scale.has_value();
  if (lay.fading) {
    lay.sigma = *cfg.fading_scale;
    if (!(lay.sigma > 0.0)) throw std::domain_error("experiment: need sigma > 0");
  }

  double boost = 1.0;
  if (cfg.fixed_delta.has_value()) {
    if (!cfg.rates.empty())
      throw std::domain_error("experiment: fixed-delta mode takes no rates");
    const double delta = *cfg.fixed_delta;
    if (!(delta > 0.0) || !(delta < 1.0))
      throw std::domain_error("experiment: fixed delta must be in (0,1)");
    const auto m =
        static_cast<std::uint64_t>(std::max(2.0, ceil_snapped(1.0 / delta)));
    GridCode grid{m, 1.0 / static_cast<double>(m),
                  0.5 / static_cast<double>(m),
                  std::log(2.0 * static_cast<double>(m)) / cfg.duration};
    lay.grids.push_back(grid);
    lay.event_thresholds.push_back(0.5 * delta);
    lay.standard = (grid.threshold == lay.event_thresholds[0]);
    if (cfg.simplex_boost)
      boost = static_cast<double>(m) / (static_cast<double>(m) - 1.0);
  } else {
    if (cfg.simplex_boost)
      throw std::domain_error("experiment: simplex boost needs fixed-delta mode");
    if (cfg.rates.empty()) throw std::domain_error("experiment: no rates given");
    for (double r : cfg.rates) {
      GridCode grid = build_grid(r, cfg.duration, cfg.m_cap);
      lay.grids.push_back(grid);
      lay.event_thresholds.push_back(grid.threshold);
    }
  }

  double total = 1.0;
  for (const GridCode& g : lay.grids) total *= static_cast<double>(g.m);
  if (total > static_cast<double>(cfg.m_cap))
    throw std::domain_error(
        "grid too large; reduce R*T or use exact_mary_error");
  if (total > static_cast<double>(kMcHardLimit))
    throw std::domain_error(
        "experiment: product grid beyond 2^62 cells; use exact_mary_error");
  lay.m_total = 1;
  lay.strides.resize(lay.grids.size());
  for (std::size_t d = 0; d < lay.grids.size(); ++d) {
    lay.strides[d] = lay.m_total;
    lay.m_total *= lay.grids[d].m;
  }

  lay.mu_base =
      std::sqrt(2.0 * cfg.channel.capacity() * cfg.duration * boost);
  return lay;
}

struct TrialResult {
  bool event;
  bool decode_error;
};

TrialResult simulate_trial(const Layout& lay, const ExperimentConfig& cfg,
                           std::uint64_t trial, TrialSample* sample) {
  StreamCursor cur(RandomStream{cfg.seed, trial});
  const std::size_t dims = lay.grids.size();

  // U is drawn as (cell, within-cell offset).  The pair is a uniform draw on
  // [-1/2, +1/2) factored along the grid, and it keeps the excess event
  // exact for grids far finer than double resolution near +-1/2, where
  // point(j) - u would otherwise lose the entire cell width to rounding.
  std::uint64_t cell[16];
  double frac[16];
  std::uint64_t true_flat = 0;
  for (std::size_t d = 0; d < dims; ++d) {
    cell[d] = cur.below(lay.grids[d].m);
    frac[d] = cur.uniform();
    true_flat += cell[d] * lay.strides[d];
  }

  double gain = 1.0;
  if (lay.fading) gain = lay.sigma * std::sqrt(-2.0 * std::log(cur.uniform_open()));
  const double mu = gain * lay.mu_base;

  std::uint64_t decoded;
  if (lay.m_total <= cfg.materialize_limit) {
    if (sample) {
      sample->statistics.resize(lay.m_total);
      std::uint64_t best = 0;
      double best_z = -std::numeric_limits<double>::infinity();
      for (std::uint64_t j = 0; j < lay.m_total; ++j) {
        double z = cur.normal() + (j == true_flat ? mu : 0.0);
        sample->statistics[j] = z;
        if (z > best_z) {
          best_z = z;
          best = j;
        }
      }
      decoded = best;
    } else {
      decoded = transmit_decode(true_flat, lay.m_total, mu, cur);
    }
  } else {
    // The non-true statistics are i.i.d.; only their maximum matters for the
    // decision, and given an error the argmax is uniform over the others.
    const double z_true = mu + cur.normal();
    const double w =
        sample_max_normal(static_cast<double>(lay.m_total - 1), cur.uniform_open());
    if (w > z_true) {
      std::uint64_t r = cur.below(lay.m_total - 1);
      decoded = (r >= true_flat) ? r + 1 : r;
    } else {
      decoded = true_flat;
    }
  }

  // Per dimension, u_hat - u = delta * (j - i + 1/2 - frac), so the event
  // |u_hat - u| > thr is |j - i + 1/2 - frac| > q with q = thr/delta.  Any
  // |j - i| >= 2 clears q < 1 outright; neighbors consult frac.  The q = 1/2
  // grid case reduces to j != i except the exact lower-boundary tie frac = 0.
  bool event = false;
  bool boundary_tie = false;
  std::uint64_t rem = decoded;
  for (std::size_t d = 0; d < dims; ++d) {
    std::uint64_t jd = rem % lay.grids[d].m;
    rem /= lay.grids[d].m;
    const double q = lay.event_thresholds[d] * static_cast<double>(lay.grids[d].m);
    const std::uint64_t id = cell[d];
    bool ev;
    if (jd == id) {
      ev = std::abs(0.5 - frac[d]) > q;  // impossible for q >= 1/2
    } else if (jd + 1 == id) {
      ev = 0.5 + frac[d] > q;
      if (!ev) boundary_tie = true;
    } else if (jd == id + 1) {
      ev = 1.5 - frac[d] > q;
      if (!ev) boundary_tie = true;
    } else {
      ev = true;
    }
    event = event || ev;
  }
  const bool decode_error = decoded != true_flat;
  // With the threshold at half the cell width the excess event is exactly a
  // decode error, except for draws landing exactly on a cell boundary.
  assert(!lay.standard || event == decode_error || boundary_tie);
  (void)boundary_tie;

  if (sample) {
    const GridCode& g = lay.grids[0];
    sample->u = -0.5 + (static_cast<double>(cell[0]) + frac[0]) * g.delta;
    sample->u_hat = g.point(decoded % g.m);
    sample->true_index = true_flat;
    sample->decoded_index = decoded;
  }
  return {event, decode_error};
}

std::string describe_event(const Layout& lay) {
  std::ostringstream os;
  if (lay.grids.size() == 1) {
    os << "|u_hat - u| > " << lay.event_thresholds[0];
  } else {
    os << "max_d |u_hat_d - u_d| > delta_d/2 (d = " << lay.grids.size() << ")";
  }
  return os.str();
}

TailEstimate run_kernel(const ExperimentConfig& cfg, const Layout& lay) {
  const unsigned workers =
      std::max(1u, std::min<unsigned>(cfg.workers, 64));
  std::vector<std::uint64_t> events(workers, 0), decode_errors(workers, 0);
  auto work = [&](unsigned w) {
    const std::uint64_t lo = cfg.trials * w / workers;
    const std::uint64_t hi = cfg.trials * (w + 1) / workers;
    std::uint64_t ev = 0, de = 0;
    for (std::uint64_t t = lo; t < hi; ++t) {
      TrialResult r = simulate_trial(lay, cfg, t, nullptr);
      ev += r.event;
      de += r.decode_error;
    }
    events[w] = ev;
    decode_errors[w] = de;
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& th : pool) th.join();
  }
  std::uint64_t k = 0, kd = 0;
  for (unsigned w = 0; w < workers; ++w) {
    k += events[w];
    kd += decode_errors[w];
  }
  const double p = static_cast<double>(k) / static_cast<double>(cfg.trials);
  return {k,
          cfg.trials,
          p,
          wilson_interval(k, cfg.trials, cfg.ci_level),
          cfg.ci_level,
          describe_event(lay),
          kd};
}

}  // namespace

TailEstimate run_excess_error(const ExperimentConfig& cfg) {
  Layout lay = make_layout(cfg);
  if (lay.grids.size() != 1)
    throw std::domain_error("run_excess_error: scalar (d = 1) config required");
  return run_kernel(cfg, lay);
}

TailEstimate run_multidim(const ExperimentConfig& cfg) {
  Layout lay = make_layout(cfg);
  if (lay.grids.size() > 16)
    throw std::domain_error("run_multidim: at most 16 dimensions");
  return run_kernel(cfg, lay);
}

TailEstimate run_fading(const ExperimentConfig& cfg) {
  if (!cfg.fading_scale.has_value())
    throw std::domain_error("run_fading: config has no fading scale");
  Layout lay = make_layout(cfg);
  if (lay.grids.size() != 1)
    throw std::domain_error("run_fading: scalar (d = 1) config required");
  return run_kernel(cfg, lay);
}

std::vector<TrialSample> run_collect_samples(const ExperimentConfig& cfg) {
  Layout lay = make_layout(cfg);
  if (lay.grids.size() != 1)
    throw std::domain_error("run_collect_samples: scalar config required");
  if (lay.m_total > cfg.materialize_limit)
    throw std::domain_error(
        "run_collect_samples: M exceeds the materialize limit");
  std::vector<TrialSample> samples(cfg.trials);
  for (std::uint64_t t = 0; t < cfg.trials; ++t)
    simulate_trial(lay, cfg, t, &samples[t]);
  return samples;
}

double estimator_to_detector(const std::vector<TrialSample>& samples,
                             double delta, std::uint64_t m) {
  if (samples.empty())
    throw std::domain_error("estimator_to_detector: no samples");
  if (m < 2) throw std::domain_error("estimator_to_detector: need M >= 2");
  if (std::abs(delta * static_cast<double>(m) - 1.0) > 1e-9)
    throw std::domain_error("estimator_to_detector: mismatched delta/M");
  GridCode grid{m, 1.0 / static_cast<double>(m), 0.5 / static_cast<double>(m),
                0.0};
  std::uint64_t errors = 0;
  for (const TrialSample& s : samples) {
    if (!s.statistics.empty() && s.statistics.size() != m)
      throw std::domain_error("estimator_to_detector: mismatched delta/M");
    double u_hat = std::min(s.u_hat, std::nextafter(0.5, 0.0));
    u_hat = std::max(u_hat, -0.5);
    errors += quantize(u_hat, grid) != quantize(s.u, grid);
  }
  return static_cast<double>(errors) / static_cast<double>(samples.size());
}

namespace {

// Neumaier-compensated sum; both MSE routes use it so the identity check
// measures the algebra, not the summation order.
double compensated_sum(const std::vector<double>& terms) {
  double sum = 0.0, comp = 0.0;
  for (double t : terms) {
    double s = sum + t;
    if (std::abs(sum) >= std::abs(t))
      comp += (sum - s) + t;
    else
      comp += (t - s) + sum;
    sum = s;
  }
  return sum + comp;
}

}  // namespace

MsePair mse_from_tail(const std::vector<double>& abs_errors) {
  if (abs_errors.empty()) throw std::domain_error("mse_from_tail: empty list");
  for (double e : abs_errors)
    if (!(e >= 0.0) || !(e <= 1.0))
      throw std::domain_error("mse_from_tail: errors must lie in [0,1]");
  const double n = static_cast<double>(abs_errors.size());

  std::vector<double> squares(abs_errors.size());
  for (std::size_t i = 0; i < abs_errors.size(); ++i)
    squares[i] = abs_errors[i] * abs_errors[i];
  const double direct = compensated_sum(squares) / n;

  // 2 Int_0^1 d * Phat(|err| >= d) dd with Phat the empirical step function:
  // on (s_j, s_{j+1}] the survivor is (n-j-1)/n, so each segment contributes
  // survivor * (s_{j+1}^2 - s_j^2).
  std::vector<double> sorted(abs_errors);
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> segments;
  segments.reserve(sorted.size());
  double prev_sq = 0.0;
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    double sq = sorted[j] * sorted[j];
    double survivor = (n - static_cast<double>(j)) / n;
    segments.push_back(survivor * (sq - prev_sq));
    prev_sq = sq;
  }
  const double tail = compensated_sum(segments);
  return {direct, tail};
}

}  // namespace modest
