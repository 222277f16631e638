#pragma once

#include "modest/exponents.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace modest {

// Tabulated rate -> exponent curve with linear interpolation between knots.
// A value of +infinity is a first-class marker: it absorbs addition and
// dominates min, and any bracket touching an infinite knot evaluates to
// infinity.  Evaluation outside the knot range clamps to the end values.
class ExponentCurve {
 public:
  static ExponentCurve from_points(std::vector<std::pair<double, double>> knots);

  // F = 0 up to the knee (inclusive), infinity strictly beyond it.
  static ExponentCurve step(double knee, double lo, double hi);

  // Tabulates the AWGN reliability function on the given rates.
  static ExponentCurve awgn(const ChannelSpec& channel,
                            const std::vector<double>& rates);

  // Two-column text: "rate value" per line, `inf` accepted as a value,
  // '#' starts a comment.
  static ExponentCurve parse(std::istream& in);
  static ExponentCurve load_file(const std::string& path);
  std::string serialize() const;

  double eval(double rate) const;
  double min_rate() const { return rates_.front(); }
  double max_rate() const { return rates_.back(); }
  std::size_t size() const { return rates_.size(); }

 private:
  ExponentCurve() = default;
  std::vector<double> rates_;
  std::vector<double> values_;
};

// Uniform grid over [lo, hi] with the extra knots inserted exactly.
std::vector<double> make_rate_grid(double lo, double hi, int steps,
                                   const std::vector<double>& extra = {});

// min over the grid of F(R) + E(R).
double joint_exponent(const ExponentCurve& source, const ExponentCurve& channel,
                      const std::vector<double>& grid);

// sup over the grid of min{F(R), E(R)}.
double separation_exponent(const ExponentCurve& source,
                           const ExponentCurve& channel,
                           const std::vector<double>& grid);

struct UniformSourceReport {
  double joint;
  double separation;
  double expected;  // awgn reliability at the knee
  double max_deviation;
};

// Builds the step source at knee R*, evaluates both exponents on a grid that
// contains R* (and the first point past it, representing the open region
// R > R* whose supremum the separation exponent takes), and reports the
// deviation from the AWGN reliability at R*.
UniformSourceReport uniform_source_equality(double knee_rate,
                                            const ChannelSpec& channel,
                                            int grid_steps = 10000);

}  // namespace modest
