#include "riccilab/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

#include "riccilab/errors.hpp"
#include "riccilab/pdesolver.hpp"

namespace riccilab {

namespace {

constexpr double kPi = std::numbers::pi;

double vec_norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

// B^{-T} basis of the dual lattice.
std::vector<double> dual_basis(const FlatTorus& torus) {
  const std::size_t k = static_cast<std::size_t>(torus.dim);
  // invert by Gauss elimination on an augmented copy (k <= 4)
  std::vector<double> a = torus.basis;
  std::vector<double> inv(k * k, 0.0);
  for (std::size_t i = 0; i < k; ++i) inv[i * k + i] = 1.0;
  for (std::size_t col = 0; col < k; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < k; ++r)
      if (std::abs(a[r * k + col]) > std::abs(a[piv * k + col])) piv = r;
    for (std::size_t j = 0; j < k; ++j) {
      std::swap(a[piv * k + j], a[col * k + j]);
      std::swap(inv[piv * k + j], inv[col * k + j]);
    }
    const double p = a[col * k + col];
    for (std::size_t j = 0; j < k; ++j) {
      a[col * k + j] /= p;
      inv[col * k + j] /= p;
    }
    for (std::size_t r = 0; r < k; ++r) {
      if (r == col) continue;
      const double f = a[r * k + col];
      for (std::size_t j = 0; j < k; ++j) {
        a[r * k + j] -= f * a[col * k + j];
        inv[r * k + j] -= f * inv[col * k + j];
      }
    }
  }
  // transpose of the inverse
  std::vector<double> bt(k * k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) bt[i * k + j] = inv[j * k + i];
  return bt;
}

double basis_min_norm(const std::vector<double>& basis, std::size_t k) {
  FlatTorus t{static_cast<int>(k), basis};
  return lattice_min_norm(t);
}

// Shell-by-shell lattice sums with a geometric remainder bound. `target`
// must decay superexponentially in the shell index, which both the image
// and the dual representation do.
template <class TermFn>
double shell_sum(std::size_t k, double abs_tol, int max_shell, double first_gap,
                 TermFn&& term_bound_and_sum, TruncationInfo* info) {
  (void)first_gap;
  double total = 0.0;
  double prev_bound = 0.0;
  int terms = 0;
  for (int shell = 0; shell <= max_shell; ++shell) {
    double shell_bound = 0.0;
    const double shell_value = term_bound_and_sum(shell, &shell_bound, &terms);
    total += shell_value;
    if (shell > 0 && shell_bound < 0.5 * abs_tol &&
        (prev_bound == 0.0 || shell_bound < prev_bound)) {
      if (info) {
        info->terms = terms;
        info->remainder = 2.0 * shell_bound;
      }
      return total;
    }
    prev_bound = shell_bound;
  }
  throw TruncationError("lattice sum did not reach tolerance", max_shell + 8);
  (void)k;
}

}  // namespace

double euclidean_kernel(int n, double dist, double tau) {
  if (!(tau > 0.0)) throw DomainError("kernel requires s < t");
  return std::pow(4.0 * kPi * tau, -0.5 * n) * std::exp(-dist * dist / (4.0 * tau));
}

double potential_from_H(int n, double tau, double H) {
  if (!(H > 0.0)) throw DomainError("potential_from_H: kernel value must be positive");
  return -std::log(H) - 0.5 * n * std::log(4.0 * kPi * tau);
}

double torus_kernel(const FlatTorus& torus, std::vector<double> delta, double tau,
                    double abs_tol, TruncationInfo* info) {
  if (!(tau > 0.0)) throw DomainError("kernel requires s < t");
  const std::size_t k = static_cast<std::size_t>(torus.dim);
  delta = lattice_wrap(torus, std::move(delta));
  const double lmin = lattice_min_norm(torus);
  const double crossover = lmin * lmin / (4.0 * kPi);
  const double dnorm = std::sqrt(vec_norm2(delta));

  if (tau <= crossover) {
    // image representation
    const double pref = std::pow(4.0 * kPi * tau, -0.5 * k);
    auto shell = [&](int j, double* bound, int* terms) {
      double acc = 0.0;
      int count = 0;
      std::vector<int> m(k, -j);
      while (true) {
        int linf = 0;
        for (int mi : m) linf = std::max(linf, std::abs(mi));
        if (linf == j) {
          std::vector<double> p = delta;
          for (std::size_t i = 0; i < k; ++i)
            for (std::size_t r = 0; r < k; ++r)
              p[r] += torus.basis[r * k + i] * static_cast<double>(m[i]);
          acc += pref * std::exp(-vec_norm2(p) / (4.0 * tau));
          ++count;
        }
        std::size_t i = 0;
        while (i < k && ++m[i] > j) m[i++] = -j;
        if (i == k) break;
      }
      *terms += count;
      const double gap = std::max(0.0, (j + 1) * lmin - dnorm);
      const double next_count = std::pow(2.0 * (j + 1) + 1.0, static_cast<double>(k));
      *bound = next_count * pref * std::exp(-gap * gap / (4.0 * tau));
      return acc;
    };
    if (info) info->dual = false;
    return shell_sum(k, abs_tol, 64, lmin, shell, info);
  }

  // dual (Fourier) representation
  const std::vector<double> db = dual_basis(torus);
  const double dual_min = basis_min_norm(db, k);
  const double vol = lattice_covolume(torus);
  auto shell = [&](int j, double* bound, int* terms) {
    double acc = 0.0;
    int count = 0;
    std::vector<int> m(k, -j);
    while (true) {
      int linf = 0;
      for (int mi : m) linf = std::max(linf, std::abs(mi));
      if (linf == j) {
        std::vector<double> w(k, 0.0);
        for (std::size_t i = 0; i < k; ++i)
          for (std::size_t r = 0; r < k; ++r)
            w[r] += db[r * k + i] * static_cast<double>(m[i]);
        double phase = 0.0;
        for (std::size_t r = 0; r < k; ++r) phase += w[r] * delta[r];
        acc += std::exp(-4.0 * kPi * kPi * vec_norm2(w) * tau) * std::cos(2.0 * kPi * phase) /
               vol;
        ++count;
      }
      std::size_t i = 0;
      while (i < k && ++m[i] > j) m[i++] = -j;
      if (i == k) break;
    }
    *terms += count;
    const double gap = (j + 1) * dual_min;
    const double next_count = std::pow(2.0 * (j + 1) + 1.0, static_cast<double>(k));
    *bound = next_count * std::exp(-4.0 * kPi * kPi * gap * gap * tau) / vol;
    return acc;
  };
  if (info) info->dual = true;
  return shell_sum(k, abs_tol, 64, dual_min, shell, info);
}

std::vector<double> torus_kernel_grad(const FlatTorus& torus, std::vector<double> delta,
                                      double tau, double abs_tol) {
  if (!(tau > 0.0)) throw DomainError("kernel requires s < t");
  const std::size_t k = static_cast<std::size_t>(torus.dim);
  delta = lattice_wrap(torus, std::move(delta));
  const double lmin = lattice_min_norm(torus);
  const double crossover = lmin * lmin / (4.0 * kPi);
  std::vector<double> g(k, 0.0);

  if (tau <= crossover) {
    const double pref = std::pow(4.0 * kPi * tau, -0.5 * k);
    const int jmax = 12;
    std::vector<int> m(k, -jmax);
    while (true) {
      std::vector<double> p = delta;
      for (std::size_t i = 0; i < k; ++i)
        for (std::size_t r = 0; r < k; ++r)
          p[r] += torus.basis[r * k + i] * static_cast<double>(m[i]);
      const double e = pref * std::exp(-vec_norm2(p) / (4.0 * tau));
      if (e > abs_tol * 1e-4 || true) {
        for (std::size_t r = 0; r < k; ++r) g[r] += -p[r] / (2.0 * tau) * e;
      }
      std::size_t i = 0;
      while (i < k && ++m[i] > jmax) m[i++] = -jmax;
      if (i == k) break;
    }
    return g;
  }

  const std::vector<double> db = dual_basis(torus);
  const double vol = lattice_covolume(torus);
  const int jmax = 12;
  std::vector<int> m(k, -jmax);
  while (true) {
    std::vector<double> w(k, 0.0);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t r = 0; r < k; ++r) w[r] += db[r * k + i] * static_cast<double>(m[i]);
    double phase = 0.0;
    for (std::size_t r = 0; r < k; ++r) phase += w[r] * delta[r];
    const double e = std::exp(-4.0 * kPi * kPi * vec_norm2(w) * tau) / vol;
    for (std::size_t r = 0; r < k; ++r)
      g[r] += -2.0 * kPi * w[r] * std::sin(2.0 * kPi * phase) * e;
    std::size_t i = 0;
    while (i < k && ++m[i] > jmax) m[i++] = -jmax;
    if (i == k) break;
  }
  return g;
}

double quotient_kernel(const std::function<double(const Point&)>& cover_kernel,
                       const std::vector<DeckMap>& deck, const Point& z) {
  if (deck.empty()) throw ConfigError("quotient_kernel: empty deck group");
  double acc = 0.0;
  for (const DeckMap& h : deck) acc += cover_kernel(deck_apply(h, z));
  return acc;
}

double exact_flat_kernel(const ModelFlow& flow, const Point& z, double s, const Point& x,
                         double t, double abs_tol, TruncationInfo* info) {
  if (!(s < t)) throw DomainError("kernel requires s < t");
  flow.check_time(t);
  const double tau = t - s;
  switch (flow.kind()) {
    case FlowKind::euclidean:
      return euclidean_kernel(flow.dim(), flow.geodesic_distance(z, x, t), tau);
    case FlowKind::flat_torus: {
      std::vector<double> d(z.size());
      for (std::size_t i = 0; i < z.size(); ++i) d[i] = x[i] - z[i];
      return torus_kernel(flow.as<FlatTorus>(), std::move(d), tau, abs_tol, info);
    }
    case FlowKind::flat_product: {
      const auto& p = flow.as<FlatProduct>();
      const std::size_t k = static_cast<std::size_t>(p.torus.dim);
      std::vector<double> d(k);
      for (std::size_t i = 0; i < k; ++i) d[i] = x[i] - z[i];
      const double ht = torus_kernel(p.torus, std::move(d), tau, abs_tol, info);
      double de2 = 0.0;
      for (std::size_t i = k; i < z.size(); ++i) de2 += (x[i] - z[i]) * (x[i] - z[i]);
      const double he = (p.euclidean_dim > 0)
                            ? euclidean_kernel(p.euclidean_dim, std::sqrt(de2), tau)
                            : 1.0;
      return ht * he;
    }
    case FlowKind::torus_quotient: {
      const auto& q = flow.as<TorusQuotient>();
      auto cover = [&](const Point& zz) {
        std::vector<double> d(zz.size());
        for (std::size_t i = 0; i < zz.size(); ++i) d[i] = x[i] - zz[i];
        return torus_kernel(q.cover, std::move(d), tau, abs_tol, info);
      };
      return quotient_kernel(cover, q.deck, z);
    }
    default:
      throw ConfigError("exact_flat_kernel: flow variant is not flat");
  }
}

std::vector<double> exact_flat_kernel_grad(const ModelFlow& flow, const Point& z, double s,
                                           const Point& x, double t, double abs_tol) {
  if (!(s < t)) throw DomainError("kernel requires s < t");
  const double tau = t - s;
  switch (flow.kind()) {
    case FlowKind::euclidean: {
      const double H = exact_flat_kernel(flow, z, s, x, t, abs_tol);
      std::vector<double> g(z.size());
      for (std::size_t i = 0; i < z.size(); ++i) g[i] = (x[i] - z[i]) / (2.0 * tau) * H;
      return g;
    }
    case FlowKind::flat_torus: {
      std::vector<double> d(z.size());
      for (std::size_t i = 0; i < z.size(); ++i) d[i] = x[i] - z[i];
      // d/dz = -d/d(delta)
      std::vector<double> g = torus_kernel_grad(flow.as<FlatTorus>(), std::move(d), tau, abs_tol);
      for (double& v : g) v = -v;
      return g;
    }
    case FlowKind::flat_product: {
      const auto& p = flow.as<FlatProduct>();
      const std::size_t k = static_cast<std::size_t>(p.torus.dim);
      std::vector<double> d(k);
      for (std::size_t i = 0; i < k; ++i) d[i] = x[i] - z[i];
      std::vector<double> dcopy = d;
      const double ht = torus_kernel(p.torus, std::move(dcopy), tau, abs_tol);
      std::vector<double> gt = torus_kernel_grad(p.torus, std::move(d), tau, abs_tol);
      double de2 = 0.0;
      for (std::size_t i = k; i < z.size(); ++i) de2 += (x[i] - z[i]) * (x[i] - z[i]);
      const double he = (p.euclidean_dim > 0)
                            ? euclidean_kernel(p.euclidean_dim, std::sqrt(de2), tau)
                            : 1.0;
      std::vector<double> g(z.size(), 0.0);
      for (std::size_t i = 0; i < k; ++i) g[i] = -gt[i] * he;
      for (std::size_t i = k; i < z.size(); ++i)
        g[i] = ht * he * (x[i] - z[i]) / (2.0 * tau);
      return g;
    }
    case FlowKind::torus_quotient: {
      const auto& q = flow.as<TorusQuotient>();
      const std::size_t k = static_cast<std::size_t>(q.cover.dim);
      std::vector<double> g(k, 0.0);
      for (const DeckMap& h : q.deck) {
        const Point hz = deck_apply(h, z);
        std::vector<double> d(k);
        for (std::size_t i = 0; i < k; ++i) d[i] = x[i] - hz[i];
        const std::vector<double> gd = torus_kernel_grad(q.cover, std::move(d), tau, abs_tol);
        // chain rule through z -> h(z) = Qz + b: d/dz_i = sum_r (-gd_r) Q_{ri}
        for (std::size_t i = 0; i < k; ++i)
          for (std::size_t r = 0; r < k; ++r) g[i] += -gd[r] * h.linear[r * k + i];
      }
      return g;
    }
    default:
      throw ConfigError("exact_flat_kernel_grad: flow variant is not flat");
  }
}

namespace {

// Three-term Gegenbauer recurrence C^a_j(x), advanced one degree per call.
struct GegenbauerLadder {
  double a = 0.5;
  double x = 1.0;
  int j = -1;
  double cm1 = 0.0, cm2 = 0.0;
  double next() {
    ++j;
    double c;
    if (j == 0)
      c = 1.0;
    else if (j == 1)
      c = 2.0 * a * x;
    else
      c = (2.0 * x * (j + a - 1.0) * cm1 - (j + 2.0 * a - 2.0) * cm2) / j;
    cm2 = cm1;
    cm1 = c;
    return c;
  }
};

}  // namespace

SphereEval sphere_kernel_eval(const ModelFlow& flow, double theta, double s, double t,
                              double abs_tol, int l_max, bool with_derivatives) {
  const auto& sp = flow.as<ShrinkingSphere>();
  if (!(s < t)) throw DomainError("kernel requires s < t");
  flow.check_time(t);
  const int n = sp.dim;
  const double rho = (sp.t_sing - t) / (sp.t_sing - s);  // in (0,1)
  const double alpha = 0.5 * (n - 1);
  const double x = std::cos(theta);
  const double sin_th = std::sin(theta);
  const double pref = std::pow(flow.sphere_scale(t), -0.5 * n) / unit_sphere_volume(n);

  GegenbauerLadder val{alpha, x};        // C^alpha_l
  GegenbauerLadder der1{alpha + 1.0, x}; // C^{alpha+1}_{l-1}
  GegenbauerLadder der2{alpha + 2.0, x}; // C^{alpha+2}_{l-2}

  double sum = std::pow(rho, 0.5 * n);  // l = 0: N_0 Pbar_0 rho^{q_0}
  double dsum = 0.0, d2sum = 0.0;
  val.next();  // consume l = 0

  double norm1 = 1.0;   // C^alpha_l(1)
  double binom = 1.0;   // binom(l+n-2, l)
  const int cap = (l_max >= 0) ? l_max : 20000;
  int l = 0;
  double tail_bound = std::numeric_limits<double>::infinity();
  while (l < cap) {
    ++l;
    binom *= (l + n - 2.0) / l;
    const double mult = (2.0 * l + n - 1.0) / (n - 1.0) * binom;  // N_{l,n}
    norm1 *= (l + 2.0 * alpha - 1.0) / l;
    const double ql = 0.5 * n + l * (l + n - 1.0) / (2.0 * (n - 1.0));
    const double rq = std::pow(rho, ql);
    const double pbar = val.next() / norm1;
    sum += mult * pbar * rq;
    if (with_derivatives) {
      const double dP_dx = 2.0 * alpha * der1.next();  // d/dx C^alpha_l
      double d2P_dx2 = 0.0;
      if (l >= 2) d2P_dx2 = 4.0 * alpha * (alpha + 1.0) * der2.next();
      // chain rule through x = cos(theta)
      dsum += mult * rq / norm1 * (-sin_th) * dP_dx;
      d2sum += mult * rq / norm1 * (d2P_dx2 * sin_th * sin_th - dP_dx * x);
    }
    // |Pbar_l| <= 1, so the tail is controlled by sum_{j>l} N_j rho^{q_j};
    // q grows quadratically in l, so the term ratio shrinks monotonically
    // once below 1 and gives a geometric bound.
    const double term_bound = mult * rq;
    const double q_next = 0.5 * n + (l + 1.0) * (l + n) / (2.0 * (n - 1.0));
    const double ratio = std::pow(rho, q_next - ql) *
                         ((2.0 * (l + 1) + n - 1.0) / (2.0 * l + n - 1.0)) *
                         ((l + n - 1.0) / (l + 1.0));
    if (ratio < 0.9) {
      tail_bound = term_bound * ratio / (1.0 - ratio);
      if (l_max < 0 && tail_bound * pref < abs_tol) break;
    }
  }
  if (l_max < 0 && !(tail_bound * pref < abs_tol))
    throw TruncationError("sphere spectral series not converged", cap);

  SphereEval out;
  out.terms = l;
  out.remainder = std::isfinite(tail_bound) ? tail_bound * pref
                                            : std::numeric_limits<double>::infinity();
  if (l_max >= 0 && !(out.remainder <= abs_tol))
    throw TruncationError("sphere spectral series: remainder above tolerance at l_max", l + 32);
  out.H = pref * sum;
  out.dH = pref * dsum;
  out.d2H = pref * d2sum;
  return out;
}

double spectral_sphere_kernel(const ModelFlow& flow, double theta, double s, double t,
                              double abs_tol, int l_max) {
  return sphere_kernel_eval(flow, theta, s, t, abs_tol, l_max, false).H;
}

double sup_kernel(const ModelFlow& flow, double T1, double T2, const SupKernelOptions& opts) {
  if (!(T1 < T2)) throw DomainError("sup_kernel requires T1 < T2");
  flow.check_time(T2);
  const double tau = T2 - T1;
  switch (flow.kind()) {
    case FlowKind::euclidean:
      return std::pow(4.0 * kPi * tau, -0.5 * flow.dim());
    case FlowKind::flat_torus:
    case FlowKind::flat_product:
    case FlowKind::torus_quotient: {
      // Both representations are maximized at coincidence.
      Point zero(static_cast<std::size_t>(flow.dim()), 0.0);
      return exact_flat_kernel(flow, zero, T1, zero, T2, opts.tol);
    }
    case FlowKind::shrinking_sphere:
      return sphere_kernel_eval(flow, 0.0, T1, T2, opts.tol).H;
    case FlowKind::cigar: {
      // Sampled sup via forward solves of duration tau from each base point.
      std::vector<Point> bases = opts.search_points;
      if (bases.empty()) bases = {{0.0}, {0.5}, {1.0}, {2.0}, {4.0}};
      double best = 0.0;
      for (const Point& b : bases) {
        SolverOptions so;
        so.nodes = opts.grid_nodes;
        KernelField fwd = solve_forward(flow, b, T1, T2, {T2}, so);
        for (double v : fwd.slices.back().H) best = std::max(best, v);
      }
      return best;
    }
  }
  return 0.0;
}

const KernelSlice& KernelField::slice_at(double s) const {
  for (const KernelSlice& sl : slices)
    if (std::abs(sl.s - s) <= 1e-12 * std::max(1.0, std::abs(s))) return sl;
  throw LookupError("KernelField: no slice at requested time");
}

double KernelField::mass(const KernelSlice& sl) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i)
    acc += grid.weights[i] * flow.reduced_measure(grid.nodes[i], sl.s) * sl.H[i];
  return acc;
}

void KernelField::validate(double mass_tol) const {
  for (const KernelSlice& sl : slices) {
    if (!(sl.s < base_time)) throw DataQualityError("KernelField: slice at or after base time");
    for (double h : sl.H)
      if (!(h > 0.0)) throw DataQualityError("KernelField: nonpositive kernel sample");
    for (double v : sl.f)
      if (!std::isfinite(v)) throw DataQualityError("KernelField: non-finite potential sample");
    const double m = mass(sl);
    if (std::abs(m - 1.0) > mass_tol)
      throw DataQualityError("KernelField: slice mass outside tolerance");
  }
}

KernelField make_exact_field(const ModelFlow& flow, const Point& x, double t,
                             const std::vector<double>& slice_times, const ReducedGrid& grid,
                             double abs_tol) {
  if (!flow.is_flat()) throw ConfigError("make_exact_field: flow variant is not flat");
  KernelField field{flow, x, t, grid, {}, {}};
  field.meta.method = KernelMethod::exact;
  const int n = flow.dim();
  for (double s : slice_times) {
    if (!(s < t)) throw DomainError("make_exact_field: slice must be before base time");
    KernelSlice sl;
    sl.s = s;
    sl.H.resize(grid.size());
    sl.f.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      Point z;
      if (flow.kind() == FlowKind::euclidean) {
        z.assign(static_cast<std::size_t>(n), 0.0);
        z[0] = x.empty() ? grid.nodes[i] : x[0] + grid.nodes[i];
        // radial grid about the base point: distance equals the node radius
        TruncationInfo info;
        sl.H[i] = euclidean_kernel(n, grid.nodes[i], t - s);
        field.meta.terms = std::max(field.meta.terms, info.terms);
      } else {
        if (n != 1) throw ConfigError("make_exact_field: sampled flat fields are 1-D");
        z = {grid.nodes[i]};
        TruncationInfo info;
        sl.H[i] = exact_flat_kernel(flow, z, s, x, t, abs_tol, &info);
        field.meta.terms = std::max(field.meta.terms, info.terms);
        field.meta.truncation_error = std::max(field.meta.truncation_error, info.remainder);
      }
      sl.f[i] = potential_from_H(n, t - s, sl.H[i]);
    }
    field.slices.push_back(std::move(sl));
  }
  std::sort(field.slices.begin(), field.slices.end(),
            [](const KernelSlice& a, const KernelSlice& b) { return a.s < b.s; });
  return field;
}

KernelField make_spectral_field(const ModelFlow& flow, double t,
                                const std::vector<double>& slice_times, const ReducedGrid& grid,
                                double abs_tol) {
  if (flow.kind() != FlowKind::shrinking_sphere)
    throw ConfigError("make_spectral_field: spectral kernels exist on the sphere only");
  KernelField field{flow, {0.0}, t, grid, {}, {}};
  field.meta.method = KernelMethod::spectral;
  const int n = flow.dim();
  for (double s : slice_times) {
    if (!(s < t)) throw DomainError("make_spectral_field: slice must be before base time");
    KernelSlice sl;
    sl.s = s;
    sl.H.resize(grid.size());
    sl.f.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const SphereEval ev = sphere_kernel_eval(flow, grid.nodes[i], s, t, abs_tol);
      sl.H[i] = ev.H;
      sl.f[i] = potential_from_H(n, t - s, ev.H);
      field.meta.terms = std::max(field.meta.terms, ev.terms);
      field.meta.truncation_error = std::max(field.meta.truncation_error, ev.remainder);
    }
    field.slices.push_back(std::move(sl));
  }
  std::sort(field.slices.begin(), field.slices.end(),
            [](const KernelSlice& a, const KernelSlice& b) { return a.s < b.s; });
  return field;
}

void write_kernel_csv(const KernelField& field, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open for writing: " + path);
  out << "slice_time,node,H,f\n";
  out.precision(17);
  for (const KernelSlice& sl : field.slices)
    for (std::size_t i = 0; i < field.grid.size(); ++i)
      out << sl.s << ',' << field.grid.nodes[i] << ',' << sl.H[i] << ',' << sl.f[i] << '\n';
}

}  // namespace riccilab
