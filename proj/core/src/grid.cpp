#include "riccilab/grid.hpp"

#include <cmath>
#include <numbers>

#include "riccilab/errors.hpp"

namespace riccilab {

double ReducedGrid::spacing() const {
  if (!uniform || nodes.size() < 2) throw ConfigError("spacing(): grid is not uniform");
  return (hi - lo) / static_cast<double>(nodes.size());
}

double ReducedGrid::integrate(const std::function<double(double)>& f) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) acc += weights[i] * f(nodes[i]);
  return acc;
}

double ReducedGrid::integrate(const std::vector<double>& samples) const {
  if (samples.size() != nodes.size())
    throw ConfigError("integrate(): sample count does not match grid");
  double acc = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) acc += weights[i] * samples[i];
  return acc;
}

void ReducedGrid::validate() const {
  if (nodes.empty()) throw ConfigError("grid: no nodes");
  if (nodes.size() != weights.size()) throw ConfigError("grid: node/weight mismatch");
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i)
    if (!(nodes[i] < nodes[i + 1])) throw ConfigError("grid: nodes not strictly increasing");
  for (double w : weights)
    if (!(w > 0.0)) throw ConfigError("grid: nonpositive weight");
  // Weights must integrate constants to the coordinate length.
  double len = 0.0;
  for (double w : weights) len += w;
  double expect = hi - lo;
  if (expect > 0.0 && std::abs(len - expect) > 1e-9 * expect)
    throw ConfigError("grid: weights do not integrate constants to the interval length");
}

ReducedGrid uniform_cell_grid(double lo, double hi, std::size_t n, bool periodic) {
  if (!(hi > lo) || n == 0) throw ConfigError("uniform_cell_grid: bad interval or count");
  ReducedGrid g;
  g.lo = lo;
  g.hi = hi;
  g.periodic = periodic;
  g.uniform = true;
  const double h = (hi - lo) / static_cast<double>(n);
  g.nodes.resize(n);
  g.weights.assign(n, h);
  for (std::size_t i = 0; i < n; ++i) g.nodes[i] = lo + (static_cast<double>(i) + 0.5) * h;
  return g;
}

void gauss_legendre_rule(std::size_t n, std::vector<double>& x, std::vector<double>& w) {
  x.resize(n);
  w.resize(n);
  const std::size_t m = (n + 1) / 2;
  for (std::size_t i = 0; i < m; ++i) {
    // Chebyshev-based initial guess, then Newton on P_n.
    double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                        (static_cast<double>(n) + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - static_cast<double>(j) * p2) /
             (static_cast<double>(j) + 1.0);
      }
      pp = static_cast<double>(n) * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    w[n - 1 - i] = w[i];
  }
}

ReducedGrid gauss_legendre_grid(double lo, double hi, std::size_t n) {
  if (!(hi > lo) || n == 0) throw ConfigError("gauss_legendre_grid: bad interval or count");
  std::vector<double> x, w;
  gauss_legendre_rule(n, x, w);
  ReducedGrid g;
  g.lo = lo;
  g.hi = hi;
  g.uniform = false;
  g.nodes.resize(n);
  g.weights.resize(n);
  const double mid = 0.5 * (hi + lo), half = 0.5 * (hi - lo);
  for (std::size_t i = 0; i < n; ++i) {
    g.nodes[i] = mid + half * x[i];
    g.weights[i] = half * w[i];
  }
  return g;
}

namespace {

// Index mapper realizing the edge rule for cell-centered grids.
// For even reflection about the left face, ghost index -1-j maps to j.
inline double sample(const std::vector<double>& f, long i, EdgeRule left, EdgeRule right) {
  const long n = static_cast<long>(f.size());
  if (i >= 0 && i < n) return f[static_cast<std::size_t>(i)];
  if (i < 0) {
    switch (left) {
      case EdgeRule::even_reflect: return f[static_cast<std::size_t>(-1 - i)];
      case EdgeRule::periodic: return f[static_cast<std::size_t>((i % n + n) % n)];
      case EdgeRule::one_sided: break;
    }
  } else {
    switch (right) {
      case EdgeRule::even_reflect: return f[static_cast<std::size_t>(2 * n - 1 - i)];
      case EdgeRule::periodic: return f[static_cast<std::size_t>(i % n)];
      case EdgeRule::one_sided: break;
    }
  }
  return 0.0;  // unreachable for supported rules; one_sided handled by caller
}

}  // namespace

std::vector<double> derivative_uniform(const std::vector<double>& f, double h,
                                       EdgeRule left, EdgeRule right) {
  const long n = static_cast<long>(f.size());
  if (n < 5) throw StencilError("derivative_uniform: need at least 5 samples");
  std::vector<double> d(f.size());
  auto at = [&](long i) { return sample(f, i, left, right); };
  for (long i = 0; i < n; ++i) {
    const bool interior = (i >= 2 || left != EdgeRule::one_sided) &&
                          (i <= n - 3 || right != EdgeRule::one_sided);
    if (interior) {
      d[i] = (-at(i + 2) + 8.0 * at(i + 1) - 8.0 * at(i - 1) + at(i - 2)) / (12.0 * h);
    } else if (i < 2) {  // one-sided 4th order, forward
      d[i] = (-25.0 * at(i) + 48.0 * at(i + 1) - 36.0 * at(i + 2) + 16.0 * at(i + 3) -
              3.0 * at(i + 4)) /
             (12.0 * h);
    } else {  // backward
      d[i] = (25.0 * at(i) - 48.0 * at(i - 1) + 36.0 * at(i - 2) - 16.0 * at(i - 3) +
              3.0 * at(i - 4)) /
             (12.0 * h);
    }
  }
  return d;
}

std::vector<double> second_derivative_uniform(const std::vector<double>& f, double h,
                                              EdgeRule left, EdgeRule right) {
  const long n = static_cast<long>(f.size());
  if (n < 6) throw StencilError("second_derivative_uniform: need at least 6 samples");
  std::vector<double> d(f.size());
  auto at = [&](long i) { return sample(f, i, left, right); };
  for (long i = 0; i < n; ++i) {
    const bool interior = (i >= 2 || left != EdgeRule::one_sided) &&
                          (i <= n - 3 || right != EdgeRule::one_sided);
    if (interior) {
      d[i] = (-at(i + 2) + 16.0 * at(i + 1) - 30.0 * at(i) + 16.0 * at(i - 1) - at(i - 2)) /
             (12.0 * h * h);
    } else if (i < 2) {
      d[i] = (45.0 * at(i) - 154.0 * at(i + 1) + 214.0 * at(i + 2) - 156.0 * at(i + 3) +
              61.0 * at(i + 4) - 10.0 * at(i + 5)) /
             (12.0 * h * h);
    } else {
      d[i] = (45.0 * at(i) - 154.0 * at(i - 1) + 214.0 * at(i - 2) - 156.0 * at(i - 3) +
              61.0 * at(i - 4) - 10.0 * at(i - 5)) /
             (12.0 * h * h);
    }
  }
  return d;
}

}  // namespace riccilab
