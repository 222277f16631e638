#include "modest/jscc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace modest {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

ExponentCurve ExponentCurve::from_points(
    std::vector<std::pair<double, double>> knots) {
  if (knots.size() < 2)
    throw std::domain_error("ExponentCurve: need at least two knots");
  ExponentCurve c;
  c.rates_.reserve(knots.size());
  c.values_.reserve(knots.size());
  for (const auto& [r, v] : knots) {
    if (!c.rates_.empty() && !(r > c.rates_.back()))
      throw std::domain_error("ExponentCurve: rates must be strictly increasing");
    if (std::isnan(v) || v < 0.0)
      throw std::domain_error("ExponentCurve: values must be >= 0 (or inf)");
    c.rates_.push_back(r);
    c.values_.push_back(v);
  }
  return c;
}

ExponentCurve ExponentCurve::step(double knee, double lo, double hi) {
  if (!(lo <= knee) || !(knee < hi))
    throw std::domain_error("ExponentCurve::step: need lo <= knee < hi");
  double past = std::nextafter(knee, hi);
  std::vector<std::pair<double, double>> knots;
  if (lo < knee) knots.emplace_back(lo, 0.0);
  knots.emplace_back(knee, 0.0);
  knots.emplace_back(past, kInf);
  if (hi > past) knots.emplace_back(hi, kInf);
  return from_points(std::move(knots));
}

ExponentCurve ExponentCurve::awgn(const ChannelSpec& channel,
                                  const std::vector<double>& rates) {
  std::vector<std::pair<double, double>> knots;
  knots.reserve(rates.size());
  for (double r : rates)
    knots.emplace_back(r, awgn_reliability(channel, r).value);
  return from_points(std::move(knots));
}

ExponentCurve ExponentCurve::parse(std::istream& in) {
  std::vector<std::pair<double, double>> knots;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    double rate;
    std::string value_tok;
    if (!(ls >> rate)) {
      std::string stray;
      if (ls.clear(), std::istringstream(line) >> stray)
        throw std::domain_error("curve file: bad rate on line " +
                                std::to_string(lineno));
      continue;  // blank / comment-only line
    }
    if (!(ls >> value_tok))
      throw std::domain_error("curve file: missing value on line " +
                              std::to_string(lineno));
    double value;
    if (value_tok == "inf" || value_tok == "Inf" || value_tok == "INF") {
      value = kInf;
    } else {
      try {
        std::size_t pos = 0;
        value = std::stod(value_tok, &pos);
        if (pos != value_tok.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw std::domain_error("curve file: bad value on line " +
                                std::to_string(lineno));
      }
    }
    knots.emplace_back(rate, value);
  }
  return from_points(std::move(knots));
}

ExponentCurve ExponentCurve::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::domain_error("curve file: cannot open " + path);
  return parse(in);
}

std::string ExponentCurve::serialize() const {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < rates_.size(); ++i) {
    os << rates_[i] << ' ';
    if (std::isinf(values_[i]))
      os << "inf";
    else
      os << values_[i];
    os << '\n';
  }
  return os.str();
}

double ExponentCurve::eval(double rate) const {
  if (rate <= rates_.front()) return values_.front();
  if (rate >= rates_.back()) return values_.back();
  auto it = std::lower_bound(rates_.begin(), rates_.end(), rate);
  std::size_t hi = static_cast<std::size_t>(it - rates_.begin());
  if (rates_[hi] == rate) return values_[hi];
  std::size_t lo = hi - 1;
  if (std::isinf(values_[lo]) || std::isinf(values_[hi])) return kInf;
  double w = (rate - rates_[lo]) / (rates_[hi] - rates_[lo]);
  return values_[lo] + w * (values_[hi] - values_[lo]);
}

std::vector<double> make_rate_grid(double lo, double hi, int steps,
                                   const std::vector<double>& extra) {
  if (!(lo < hi)) throw std::domain_error("make_rate_grid: need lo < hi");
  if (steps < 2) throw std::domain_error("make_rate_grid: need steps >= 2");
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(steps) + extra.size());
  for (int i = 0; i < steps; ++i)
    grid.push_back(lo + (hi - lo) * i / (steps - 1));
  for (double x : extra)
    if (x >= lo && x <= hi) grid.push_back(x);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

double joint_exponent(const ExponentCurve& source, const ExponentCurve& channel,
                      const std::vector<double>& grid) {
  if (grid.empty()) throw std::domain_error("joint_exponent: empty grid");
  double best = kInf;
  for (double r : grid) {
    double f = source.eval(r);
    double e = channel.eval(r);
    if (std::isinf(f) || std::isinf(e)) continue;  // inf absorbs the sum
    best = std::min(best, f + e);
  }
  return best;
}

double separation_exponent(const ExponentCurve& source,
                           const ExponentCurve& channel,
                           const std::vector<double>& grid) {
  if (grid.empty()) throw std::domain_error("separation_exponent: empty grid");
  double best = 0.0;
  bool any = false;
  for (double r : grid) {
    double v = std::min(source.eval(r), channel.eval(r));
    if (!any || v > best) best = v;
    any = true;
  }
  return best;
}

UniformSourceReport uniform_source_equality(double knee_rate,
                                            const ChannelSpec& channel,
                                            int grid_steps) {
  const double c = channel.capacity();
  if (!(knee_rate > 0.0) || !(knee_rate < c))
    throw std::domain_error("uniform_source_equality: need R* in (0, C)");
  ExponentCurve f = ExponentCurve::step(knee_rate, 0.0, c);
  // The grid carries the knee and the first representable rate past it, so
  // the discrete sup sees the open region R > R* where min{F,E} = E.
  std::vector<double> grid = make_rate_grid(
      0.0, c, grid_steps, {knee_rate, std::nextafter(knee_rate, c)});
  ExponentCurve e = ExponentCurve::awgn(channel, grid);
  double joint = joint_exponent(f, e, grid);
  double sep = separation_exponent(f, e, grid);
  double expected = awgn_reliability(channel, knee_rate).value;
  double dev = std::max(std::abs(joint - expected), std::abs(sep - expected));
  return {joint, sep, expected, dev};
}

}  // namespace modest
