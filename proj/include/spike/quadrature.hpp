#pragma once

#include <cstddef>
#include <vector>

namespace spike {

struct GaussRule {
  std::vector<double> x;  ///< nodes on [-1, 1]
  std::vector<double> w;
};

/// Gauss-Legendre rule with n points (cached per n).
const GaussRule& gauss_legendre(int n);

/// Panelled Gauss rule on [a, b] split at the given breakpoints.
struct Panel1D {
  std::vector<double> x;
  std::vector<double> w;
};
Panel1D panel_rule(const std::vector<double>& breaks, int points_per_panel);

/// Breakpoints 0, 1, 2, 4, ... up to `end`, with extra breaks merged in.
std::vector<double> geometric_breaks(double end, std::vector<double> extra = {});

/// Composite Simpson on an even number of equal intervals of width h.
double simpson(const std::vector<double>& f, double h, std::size_t stride = 1);

}  // namespace spike
