#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace riccilab {

// 1-D quadrature/collocation grid in a reduced coordinate. Weights are
// plain coordinate weights; metric measure factors are part of the
// integrand. Nodes are strictly increasing, weights positive.
struct ReducedGrid {
  std::vector<double> nodes;
  std::vector<double> weights;
  double lo = 0.0;
  double hi = 0.0;
  double truncation_radius = 0.0;  // for noncompact domains; 0 = compact
  bool periodic = false;
  bool uniform = false;

  std::size_t size() const { return nodes.size(); }
  double spacing() const;  // uniform grids only

  // Sum of w_i * f(x_i).
  double integrate(const std::function<double(double)>& f) const;
  double integrate(const std::vector<double>& samples) const;

  void validate() const;  // throws ConfigError on malformed data
};

// Cell-centered uniform grid on [lo, hi]: nodes at lo + (i+1/2)h, w = h.
// Midpoint weights; spectrally accurate for smooth periodic integrands and
// for integrands with even extension across both ends.
ReducedGrid uniform_cell_grid(double lo, double hi, std::size_t n,
                              bool periodic = false);

// Gauss-Legendre grid on [lo, hi].
ReducedGrid gauss_legendre_grid(double lo, double hi, std::size_t n);

// Gauss-Legendre nodes/weights on [-1, 1].
void gauss_legendre_rule(std::size_t n, std::vector<double>& x,
                         std::vector<double>& w);

// Derivative stencils on uniform cell-centered grids, 4th order interior.
// Boundary closure: `even` mirrors samples across an end (zonal symmetry),
// `periodic` wraps, `one_sided` falls back to one-sided 4th order stencils.
enum class EdgeRule { even_reflect, periodic, one_sided };

std::vector<double> derivative_uniform(const std::vector<double>& f, double h,
                                       EdgeRule left, EdgeRule right);
std::vector<double> second_derivative_uniform(const std::vector<double>& f,
                                              double h, EdgeRule left,
                                              EdgeRule right);

}  // namespace riccilab
