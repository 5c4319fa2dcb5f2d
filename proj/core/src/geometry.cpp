#include "riccilab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "riccilab/errors.hpp"

namespace riccilab {

namespace {

constexpr double kPi = std::numbers::pi;

// Dense k x k helpers, k <= 4 in practice.
std::vector<double> mat_vec(const std::vector<double>& a, const std::vector<double>& x) {
  const std::size_t k = x.size();
  std::vector<double> y(k, 0.0);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) y[i] += a[i * k + j] * x[j];
  return y;
}

std::vector<double> mat_mul(const std::vector<double>& a, const std::vector<double>& b,
                            std::size_t k) {
  std::vector<double> c(k * k, 0.0);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t l = 0; l < k; ++l)
      for (std::size_t j = 0; j < k; ++j) c[i * k + j] += a[i * k + l] * b[l * k + j];
  return c;
}

// Gauss-Jordan inverse; returns determinant through *det.
std::vector<double> mat_inverse(std::vector<double> a, std::size_t k, double* det) {
  std::vector<double> inv(k * k, 0.0);
  for (std::size_t i = 0; i < k; ++i) inv[i * k + i] = 1.0;
  double d = 1.0;
  for (std::size_t col = 0; col < k; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < k; ++r)
      if (std::abs(a[r * k + col]) > std::abs(a[piv * k + col])) piv = r;
    if (piv != col) {
      for (std::size_t j = 0; j < k; ++j) {
        std::swap(a[piv * k + j], a[col * k + j]);
        std::swap(inv[piv * k + j], inv[col * k + j]);
      }
      d = -d;
    }
    const double p = a[col * k + col];
    d *= p;
    if (std::abs(p) < 1e-14) {
      if (det) *det = 0.0;
      return inv;
    }
    for (std::size_t j = 0; j < k; ++j) {
      a[col * k + j] /= p;
      inv[col * k + j] /= p;
    }
    for (std::size_t r = 0; r < k; ++r) {
      if (r == col) continue;
      const double f = a[r * k + col];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < k; ++j) {
        a[r * k + j] -= f * a[col * k + j];
        inv[r * k + j] -= f * inv[col * k + j];
      }
    }
  }
  if (det) *det = d;
  return inv;
}

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

bool is_orthogonal(const std::vector<double>& q, std::size_t k, double tol) {
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      double dot = 0.0;
      for (std::size_t l = 0; l < k; ++l) dot += q[l * k + i] * q[l * k + j];
      if (std::abs(dot - (i == j ? 1.0 : 0.0)) > tol) return false;
    }
  return true;
}

bool near_integer_vector(const std::vector<double>& v, double tol) {
  for (double x : v)
    if (std::abs(x - std::round(x)) > tol) return false;
  return true;
}

// Enumerate integer offsets in [-range, range]^k.
template <class F>
void for_integer_cube(std::size_t k, int range, F&& f) {
  std::vector<int> m(k, -range);
  while (true) {
    f(m);
    std::size_t i = 0;
    while (i < k && ++m[i] > range) m[i++] = -range;
    if (i == k) break;
  }
}

double sin_power_integral(double theta_max, int p) {
  // int_0^theta sin^p, p >= 0, by 64-point Gauss-Legendre (smooth integrand).
  std::vector<double> x, w;
  gauss_legendre_rule(64, x, w);
  double acc = 0.0;
  const double half = 0.5 * theta_max;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double th = half * (x[i] + 1.0);
    acc += w[i] * half * std::pow(std::sin(th), p);
  }
  return acc;
}

}  // namespace

double unit_sphere_volume(int n) {
  return 2.0 * std::pow(kPi, 0.5 * (n + 1)) / std::tgamma(0.5 * (n + 1));
}

double unit_ball_volume(int n) {
  return std::pow(kPi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

double lattice_covolume(const FlatTorus& torus) {
  double det = 0.0;
  mat_inverse(torus.basis, static_cast<std::size_t>(torus.dim), &det);
  return std::abs(det);
}

double lattice_min_norm(const FlatTorus& torus) {
  const std::size_t k = static_cast<std::size_t>(torus.dim);
  double best = std::numeric_limits<double>::infinity();
  for_integer_cube(k, 3, [&](const std::vector<int>& m) {
    bool zero = true;
    for (int mi : m) zero = zero && mi == 0;
    if (zero) return;
    std::vector<double> v(k, 0.0);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) v[i] += torus.basis[i * k + j] * m[j];
    best = std::min(best, norm(v));
  });
  return best;
}

std::vector<double> lattice_wrap(const FlatTorus& torus, std::vector<double> delta) {
  const std::size_t k = static_cast<std::size_t>(torus.dim);
  double det = 0.0;
  const std::vector<double> binv = mat_inverse(torus.basis, k, &det);
  const std::vector<double> frac = mat_vec(binv, delta);
  std::vector<int> base(k);
  for (std::size_t i = 0; i < k; ++i) base[i] = static_cast<int>(std::llround(frac[i]));
  std::vector<double> best = delta;
  double best_norm = std::numeric_limits<double>::infinity();
  for_integer_cube(k, 2, [&](const std::vector<int>& off) {
    std::vector<double> cand = delta;
    for (std::size_t i = 0; i < k; ++i) {
      const double mi = static_cast<double>(base[i] + off[i]);
      for (std::size_t r = 0; r < k; ++r) cand[r] -= torus.basis[r * k + i] * mi;
    }
    const double nn = norm(cand);
    if (nn < best_norm) {
      best_norm = nn;
      best = cand;
    }
  });
  return best;
}

Point deck_apply(const DeckMap& m, const Point& y) {
  const std::size_t k = y.size();
  Point out = mat_vec(m.linear, y);
  for (std::size_t i = 0; i < k; ++i) out[i] += m.shift[i];
  return out;
}

ModelFlow::ModelFlow(Variant v) : v_(std::move(v)) { validate(); }

ModelFlow ModelFlow::euclidean(int n) { return ModelFlow(EuclideanStatic{n}); }

ModelFlow ModelFlow::flat_torus(int k, std::vector<double> basis) {
  return ModelFlow(FlatTorus{k, std::move(basis)});
}

ModelFlow ModelFlow::cube_torus(int k, double side) {
  std::vector<double> basis(static_cast<std::size_t>(k) * k, 0.0);
  for (int i = 0; i < k; ++i) basis[static_cast<std::size_t>(i) * k + i] = side;
  return ModelFlow(FlatTorus{k, std::move(basis)});
}

ModelFlow ModelFlow::flat_product(FlatTorus torus, int euclidean_dim) {
  return ModelFlow(FlatProduct{std::move(torus), euclidean_dim});
}

ModelFlow ModelFlow::torus_quotient(FlatTorus cover, std::vector<DeckMap> deck) {
  return ModelFlow(TorusQuotient{std::move(cover), std::move(deck)});
}

ModelFlow ModelFlow::shrinking_sphere(int n, double t_sing) {
  return ModelFlow(ShrinkingSphere{n, t_sing});
}

ModelFlow ModelFlow::cigar() { return ModelFlow(CigarSoliton{}); }

namespace {

void validate_torus(const FlatTorus& t) {
  if (t.dim < 1) throw ConfigError("flat torus: dim must be >= 1");
  if (t.basis.size() != static_cast<std::size_t>(t.dim) * t.dim)
    throw ConfigError("flat torus: basis must be dim x dim");
  if (lattice_covolume(t) < 1e-12) throw ConfigError("flat torus: lattice basis is singular");
}

void validate_quotient(const TorusQuotient& q) {
  validate_torus(q.cover);
  const std::size_t k = static_cast<std::size_t>(q.cover.dim);
  if (q.deck.empty()) throw ConfigError("torus quotient: deck group is empty");
  double det = 0.0;
  const std::vector<double> binv = mat_inverse(q.cover.basis, k, &det);
  bool has_id = false;
  for (const DeckMap& m : q.deck) {
    if (m.linear.size() != k * k || m.shift.size() != k)
      throw ConfigError("torus quotient: deck map has wrong dimensions");
    if (!is_orthogonal(m.linear, k, 1e-9))
      throw ConfigError("torus quotient: deck map is not an isometry");
    // Q must map the lattice to itself: B^{-1} Q B integer.
    const std::vector<double> conj = mat_mul(mat_mul(binv, m.linear, k), q.cover.basis, k);
    if (!near_integer_vector(conj, 1e-9))
      throw ConfigError("torus quotient: deck map does not preserve the lattice");
    bool id = true;
    for (std::size_t i = 0; i < k && id; ++i) {
      for (std::size_t j = 0; j < k && id; ++j)
        id = std::abs(m.linear[i * k + j] - (i == j ? 1.0 : 0.0)) < 1e-12;
      id = id && std::abs(m.shift[i]) < 1e-12;
    }
    has_id = has_id || id;
  }
  if (!has_id) throw ConfigError("torus quotient: deck group must contain the identity");

  // Closure under composition, modulo the lattice.
  auto same_map = [&](const std::vector<double>& qa, const Point& ba, const DeckMap& m) {
    for (std::size_t i = 0; i < k * k; ++i)
      if (std::abs(qa[i] - m.linear[i]) > 1e-9) return false;
    std::vector<double> diff(k);
    for (std::size_t i = 0; i < k; ++i) diff[i] = ba[i] - m.shift[i];
    return near_integer_vector(mat_vec(binv, diff), 1e-9);
  };
  for (const DeckMap& a : q.deck)
    for (const DeckMap& b : q.deck) {
      const std::vector<double> qc = mat_mul(a.linear, b.linear, k);
      Point bc = mat_vec(a.linear, b.shift);
      for (std::size_t i = 0; i < k; ++i) bc[i] += a.shift[i];
      bool found = false;
      for (const DeckMap& m : q.deck) found = found || same_map(qc, bc, m);
      if (!found) throw ConfigError("torus quotient: deck maps are not closed under composition");
    }
}

}  // namespace

void ModelFlow::validate() const {
  std::visit(
      [](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, EuclideanStatic>) {
          if (f.dim < 1) throw ConfigError("euclidean: dim must be >= 1");
        } else if constexpr (std::is_same_v<T, FlatTorus>) {
          validate_torus(f);
        } else if constexpr (std::is_same_v<T, FlatProduct>) {
          validate_torus(f.torus);
          if (f.euclidean_dim < 0) throw ConfigError("flat product: euclidean_dim must be >= 0");
        } else if constexpr (std::is_same_v<T, TorusQuotient>) {
          validate_quotient(f);
        } else if constexpr (std::is_same_v<T, ShrinkingSphere>) {
          if (f.dim < 2) throw ConfigError("shrinking sphere: dim must be >= 2");
          if (!(f.t_sing > 0.0)) throw ConfigError("shrinking sphere: t_sing must be positive");
        }
      },
      v_);
}

FlowKind ModelFlow::kind() const {
  return std::visit(
      [](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, EuclideanStatic>) return FlowKind::euclidean;
        else if constexpr (std::is_same_v<T, FlatTorus>) return FlowKind::flat_torus;
        else if constexpr (std::is_same_v<T, FlatProduct>) return FlowKind::flat_product;
        else if constexpr (std::is_same_v<T, TorusQuotient>) return FlowKind::torus_quotient;
        else if constexpr (std::is_same_v<T, ShrinkingSphere>) return FlowKind::shrinking_sphere;
        else return FlowKind::cigar;
      },
      v_);
}

int ModelFlow::dim() const {
  switch (kind()) {
    case FlowKind::euclidean: return as<EuclideanStatic>().dim;
    case FlowKind::flat_torus: return as<FlatTorus>().dim;
    case FlowKind::flat_product:
      return as<FlatProduct>().torus.dim + as<FlatProduct>().euclidean_dim;
    case FlowKind::torus_quotient: return as<TorusQuotient>().cover.dim;
    case FlowKind::shrinking_sphere: return as<ShrinkingSphere>().dim;
    case FlowKind::cigar: return 2;
  }
  return 0;
}

bool ModelFlow::is_static() const {
  const FlowKind k = kind();
  return k != FlowKind::shrinking_sphere && k != FlowKind::cigar;
}

bool ModelFlow::is_flat() const { return is_static(); }

bool ModelFlow::compact() const {
  switch (kind()) {
    case FlowKind::flat_torus:
    case FlowKind::torus_quotient:
    case FlowKind::shrinking_sphere: return true;
    case FlowKind::flat_product: return as<FlatProduct>().euclidean_dim == 0;
    default: return false;
  }
}

DomainKind ModelFlow::domain() const {
  switch (kind()) {
    case FlowKind::euclidean: return DomainKind::euclid_radial;
    case FlowKind::shrinking_sphere: return DomainKind::sphere_polar;
    case FlowKind::cigar: return DomainKind::cigar_radial;
    default: return DomainKind::flat_coords;
  }
}

std::string ModelFlow::name() const {
  switch (kind()) {
    case FlowKind::euclidean: return "euclidean" + std::to_string(dim());
    case FlowKind::flat_torus: return "torus" + std::to_string(dim());
    case FlowKind::flat_product: return "product";
    case FlowKind::torus_quotient: return "quotient";
    case FlowKind::shrinking_sphere: return "sphere" + std::to_string(dim());
    case FlowKind::cigar: return "cigar";
  }
  return "?";
}

void ModelFlow::check_time(double t) const {
  if (!(t <= 0.0)) throw DomainError("time outside flow domain (-infty, 0]");
  if (kind() == FlowKind::shrinking_sphere && !(t < as<ShrinkingSphere>().t_sing))
    throw DomainError("time at or beyond the sphere singular time");
}

double ModelFlow::sphere_scale(double t) const {
  const auto& s = as<ShrinkingSphere>();
  return 2.0 * (s.dim - 1) * (s.t_sing - t);
}

double ModelFlow::cigar_xi(double rho, double t) const {
  return std::asinh(rho * std::exp(-2.0 * t));
}

double ModelFlow::cigar_rho(double xi, double t) const {
  return std::sinh(xi) * std::exp(2.0 * t);
}

MetricDescriptor ModelFlow::metric_scale(double t) const {
  check_time(t);
  MetricDescriptor d;
  switch (kind()) {
    case FlowKind::shrinking_sphere: d.scale = sphere_scale(t); break;
    case FlowKind::cigar:
      d.homogeneous = false;
      d.cigar_a = std::exp(4.0 * t);
      break;
    default: d.scale = 1.0; break;
  }
  return d;
}

double ModelFlow::scalar_curvature(const Point& x, double t) const {
  check_time(t);
  switch (kind()) {
    case FlowKind::shrinking_sphere: {
      const int n = dim();
      return n * (n - 1) / sphere_scale(t);
    }
    case FlowKind::cigar: {
      const double a = std::exp(4.0 * t);
      const double rho = x.empty() ? 0.0 : x[0];
      return 4.0 * a / (a + rho * rho);
    }
    default: return 0.0;
  }
}

void ModelFlow::ricci_eigenvalues(const Point& x, double t, double& radial,
                                  double& tangential) const {
  switch (kind()) {
    case FlowKind::shrinking_sphere:
      radial = tangential = (dim() - 1) / sphere_scale(t);
      return;
    case FlowKind::cigar:
      radial = tangential = 0.5 * scalar_curvature(x, t);
      return;
    default: radial = tangential = 0.0; return;
  }
}

double ModelFlow::max_sectional(const Point& x, double t) const {
  switch (kind()) {
    case FlowKind::shrinking_sphere: return 1.0 / sphere_scale(t);
    case FlowKind::cigar: return 0.5 * scalar_curvature(x, t);
    default: return 0.0;
  }
}

double ModelFlow::geodesic_distance(const Point& x, const Point& y, double t) const {
  check_time(t);
  switch (kind()) {
    case FlowKind::euclidean: {
      double s = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
      return std::sqrt(s);
    }
    case FlowKind::flat_torus: {
      std::vector<double> d(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) d[i] = x[i] - y[i];
      return norm(lattice_wrap(as<FlatTorus>(), std::move(d)));
    }
    case FlowKind::flat_product: {
      const auto& p = as<FlatProduct>();
      const std::size_t k = static_cast<std::size_t>(p.torus.dim);
      std::vector<double> dt(k);
      for (std::size_t i = 0; i < k; ++i) dt[i] = x[i] - y[i];
      const double a = norm(lattice_wrap(p.torus, std::move(dt)));
      double b = 0.0;
      for (std::size_t i = k; i < x.size(); ++i) b += (x[i] - y[i]) * (x[i] - y[i]);
      return std::sqrt(a * a + b);
    }
    case FlowKind::torus_quotient: {
      const auto& q = as<TorusQuotient>();
      double best = std::numeric_limits<double>::infinity();
      for (const DeckMap& h : q.deck) {
        const Point hy = deck_apply(h, y);
        std::vector<double> d(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) d[i] = x[i] - hy[i];
        best = std::min(best, norm(lattice_wrap(q.cover, std::move(d))));
      }
      return best;
    }
    case FlowKind::shrinking_sphere:
      return std::sqrt(sphere_scale(t)) * std::abs(x[0] - y[0]);
    case FlowKind::cigar:
      return std::abs(cigar_xi(x[0], t) - cigar_xi(y[0], t));
  }
  return 0.0;
}

double ModelFlow::reduced_measure(double u, double s) const {
  switch (kind()) {
    case FlowKind::euclidean: {
      const int n = dim();
      return unit_sphere_volume(n - 1) * std::pow(u, n - 1);
    }
    case FlowKind::flat_torus:
      if (dim() != 1) throw ConfigError("reduced_measure: torus reduction is 1-D only");
      return 1.0;
    case FlowKind::shrinking_sphere: {
      const int n = dim();
      const double c = sphere_scale(s);
      return std::pow(c, 0.5 * n) * unit_sphere_volume(n - 1) *
             std::pow(std::sin(u), n - 1);
    }
    case FlowKind::cigar:
      // comoving arclength coordinate; static measure 2 pi tanh(xi)
      return 2.0 * kPi * std::tanh(u);
    default:
      throw ConfigError("reduced_measure: variant has no 1-D reduction");
  }
}

double ModelFlow::total_volume(double t) const {
  check_time(t);
  switch (kind()) {
    case FlowKind::flat_torus: return lattice_covolume(as<FlatTorus>());
    case FlowKind::torus_quotient:
      return lattice_covolume(as<TorusQuotient>().cover) /
             static_cast<double>(as<TorusQuotient>().deck.size());
    case FlowKind::flat_product:
      if (as<FlatProduct>().euclidean_dim == 0) return lattice_covolume(as<FlatProduct>().torus);
      return std::numeric_limits<double>::infinity();
    case FlowKind::shrinking_sphere:
      return std::pow(sphere_scale(t), 0.5 * dim()) * unit_sphere_volume(dim());
    default: return std::numeric_limits<double>::infinity();
  }
}

namespace {

// Fundamental-domain grid count for torus/quotient balls, k >= 2.
double counted_ball_volume(const FlatTorus& torus,
                           const std::function<double(const Point&)>& dist_to_base, double r) {
  const std::size_t k = static_cast<std::size_t>(torus.dim);
  const int res = (k == 2) ? 192 : 48;
  const double cell = lattice_covolume(torus) / std::pow(static_cast<double>(res), k);
  double vol = 0.0;
  std::vector<int> idx(k, 0);
  while (true) {
    Point p(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
      const double frac = (idx[i] + 0.5) / res;
      for (std::size_t rr = 0; rr < k; ++rr) p[rr] += torus.basis[rr * k + i] * frac;
    }
    if (dist_to_base(p) < r) vol += cell;
    std::size_t i = 0;
    while (i < k && ++idx[i] >= res) idx[i++] = 0;
    if (i == k) break;
  }
  return vol;
}

}  // namespace

double ModelFlow::ball_volume(const Point& x, double r, double t) const {
  check_time(t);
  if (!(r > 0.0)) throw ConfigError("ball_volume: radius must be positive");
  switch (kind()) {
    case FlowKind::euclidean: return unit_ball_volume(dim()) * std::pow(r, dim());
    case FlowKind::flat_torus: {
      if (dim() == 1) return std::min(2.0 * r, lattice_covolume(as<FlatTorus>()));
      auto d = [&](const Point& p) { return geodesic_distance(x, p, t); };
      return counted_ball_volume(as<FlatTorus>(), d, r);
    }
    case FlowKind::torus_quotient: {
      const auto& q = as<TorusQuotient>();
      auto d = [&](const Point& p) { return geodesic_distance(x, p, t); };
      return counted_ball_volume(q.cover, d, r) / static_cast<double>(q.deck.size());
    }
    case FlowKind::flat_product: {
      const auto& p = as<FlatProduct>();
      if (p.torus.dim != 1) throw ConfigError("ball_volume: product supports 1-D torus factor");
      const int m = p.euclidean_dim;
      const double L = lattice_covolume(p.torus);
      // slice volume over the circle coordinate
      const ReducedGrid g = gauss_legendre_grid(0.0, L, 256);
      double vol = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) {
        std::vector<double> du = {g.nodes[i] - x[0]};
        const double dT = norm(lattice_wrap(p.torus, std::move(du)));
        if (dT >= r) continue;
        const double s2 = r * r - dT * dT;
        vol += g.weights[i] * unit_ball_volume(m) * std::pow(s2, 0.5 * m);
      }
      return vol;
    }
    case FlowKind::shrinking_sphere: {
      const int n = dim();
      const double c = sphere_scale(t);
      const double th = std::min(r / std::sqrt(c), kPi);
      return std::pow(c, 0.5 * n) * unit_sphere_volume(n - 1) * sin_power_integral(th, n - 1);
    }
    case FlowKind::cigar: {
      // Ball area via the asymptotic-cylinder distance
      //   d((xi1,0),(xi2,phi))^2 ~ (xi1-xi2)^2 + (m_avg * phi)^2,
      // exact far from the tip; trend-grade near it.
      const double xib = cigar_xi(x[0], t);
      const double lo = std::max(0.0, xib - r), hi = xib + r;
      const ReducedGrid g = gauss_legendre_grid(lo, hi, 512);
      double vol = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double xi = g.nodes[i];
        const double dxi = xi - xib;
        if (std::abs(dxi) >= r) continue;
        const double mbar = std::max(1e-12, 0.5 * (std::tanh(xi) + std::tanh(xib)));
        const double phi = std::min(kPi, std::sqrt(r * r - dxi * dxi) / mbar);
        vol += g.weights[i] * std::tanh(xi) * 2.0 * phi;
      }
      return vol;
    }
  }
  return 0.0;
}

VolumeRatio ModelFlow::volume_ratio(const Point& x, double t, double r, int curvature_samples,
                                    double truncation_radius) const {
  check_time(t);
  if (!(r > 0.0)) throw ConfigError("volume_ratio: radius must be positive");
  if (truncation_radius > 0.0) {
    const bool noncompact = !compact();
    if (noncompact && kind() != FlowKind::flat_product) {
      double reach = 0.0;
      if (kind() == FlowKind::cigar)
        reach = cigar_xi(x[0], t) + r;
      else
        reach = (x.empty() ? 0.0 : norm(x)) + r;
      const double limit = (kind() == FlowKind::cigar) ? cigar_xi(truncation_radius, t)
                                                       : truncation_radius;
      if (reach > limit)
        throw ConfigError("volume_ratio: ball extends beyond the truncation radius");
    }
  }

  VolumeRatio out;
  out.ratio = ball_volume(x, r, t) / std::pow(r, dim());
  out.distance_approximate = (kind() == FlowKind::cigar);

  // Curvature admissibility sampled on the parabolic cube B_t(x,r) x [t-r^2, t].
  const int ns = std::max(2, curvature_samples);
  double kmax = 0.0;
  for (int it = 0; it < ns; ++it) {
    const double s = t - r * r * (static_cast<double>(it) / (ns - 1));
    check_time(s);  // flows here are ancient; always fine, kept for symmetry
    for (int ix = 0; ix < ns; ++ix) {
      Point p = x;
      const double frac = -1.0 + 2.0 * static_cast<double>(ix) / (ns - 1);
      if (kind() == FlowKind::shrinking_sphere) {
        const double c = sphere_scale(s);
        p[0] = std::clamp(x[0] + frac * r / std::sqrt(c), 0.0, kPi);
      } else if (kind() == FlowKind::cigar) {
        const double xi = std::max(0.0, cigar_xi(x[0], t) + frac * r);
        p[0] = cigar_rho(xi, s);
      }
      kmax = std::max(kmax, std::abs(max_sectional(p, s)));
    }
    if (is_flat()) break;  // curvature identically zero
  }
  out.max_curvature = kmax;
  out.admissible = kmax <= 1.0 / (r * r) + 1e-12;
  return out;
}

}  // namespace riccilab
