#include "riccilab/pdesolver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

#include "riccilab/errors.hpp"

namespace riccilab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kGamma = 2.0 - std::numbers::sqrt2;  // TR-BDF2 stage fraction
constexpr double kB3 = (1.0 - kGamma) / (2.0 - kGamma);
// Embedded third-order weights minus the scheme weights (error estimator).
constexpr double kC2 = 1.0 / 3.0;
inline double err_c1() {
  const double bh2 = 1.0 / (6.0 * kGamma * (1.0 - kGamma));
  const double bh3 = 0.5 - kGamma * bh2;
  const double bh1 = 1.0 - bh2 - bh3;
  return bh1 - 1.0 / (2.0 * (2.0 - kGamma));
}
inline double err_c3() {
  const double bh2 = 1.0 / (6.0 * kGamma * (1.0 - kGamma));
  const double bh3 = 0.5 - kGamma * bh2;
  return bh3 - kB3;
}

struct Tri {
  std::vector<double> a, d, c;  // sub / diag / super of the operator L
  bool periodic = false;
  // periodic corners: row 0 couples to n-1 with `alpha`, row n-1 to 0 with `beta`
  double alpha = 0.0, beta = 0.0;

  void matvec(const std::vector<double>& u, std::vector<double>& y) const {
    const std::size_t n = u.size();
    for (std::size_t i = 0; i < n; ++i) {
      double v = d[i] * u[i];
      if (i > 0) v += a[i] * u[i - 1];
      if (i + 1 < n) v += c[i] * u[i + 1];
      y[i] = v;
    }
    if (periodic && n > 2) {
      y[0] += alpha * u[n - 1];
      y[n - 1] += beta * u[0];
    }
  }
};

// Thomas solve of (I - beta_dt * L) x = b given L as Tri. Workspace kept by
// the caller to avoid per-step allocation.
struct TriSolver {
  std::vector<double> md, mc, ma, tmp, u_sm, z_sm;

  void solve(const Tri& L, double beta_dt, std::vector<double> b, std::vector<double>& x) {
    const std::size_t n = b.size();
    md.resize(n);
    mc.resize(n);
    ma.resize(n);
    tmp.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      md[i] = 1.0 - beta_dt * L.d[i];
      ma[i] = -beta_dt * L.a[i];
      mc[i] = -beta_dt * L.c[i];
    }
    if (!L.periodic) {
      thomas(ma, md, mc, b, x);
      return;
    }
    // Sherman-Morrison for the cyclic corners.
    const double alpha = -beta_dt * L.alpha;
    const double beta = -beta_dt * L.beta;
    const double gamma = -md[0];
    std::vector<double> d2 = md;
    d2[0] -= gamma;
    d2[n - 1] -= alpha * beta / gamma;
    u_sm.assign(n, 0.0);
    u_sm[0] = gamma;
    u_sm[n - 1] = beta;
    thomas(ma, d2, mc, b, x);
    thomas(ma, d2, mc, u_sm, z_sm);
    const double vy = x[0] + alpha / gamma * x[n - 1];
    const double vz = z_sm[0] + alpha / gamma * z_sm[n - 1];
    const double fact = vy / (1.0 + vz);
    for (std::size_t i = 0; i < n; ++i) x[i] -= fact * z_sm[i];
  }

 private:
  void thomas(const std::vector<double>& a, const std::vector<double>& d,
              const std::vector<double>& c, const std::vector<double>& b,
              std::vector<double>& x) {
    const std::size_t n = b.size();
    tmp.resize(n);
    x.resize(n);
    double piv = d[0];
    x[0] = b[0] / piv;
    for (std::size_t i = 1; i < n; ++i) {
      tmp[i] = c[i - 1] / piv;
      piv = d[i] - a[i] * tmp[i];
      x[i] = (b[i] - a[i] * x[i - 1]) / piv;
    }
    for (std::size_t i = n - 1; i-- > 0;) x[i] -= tmp[i + 1] * x[i + 1];
  }
};

enum class FaceBC { flux_free, absorbing, periodic };

// One symmetry-reduced line problem: fills the flux-form operator
//   (L u)_i = (F_{i+1/2} - F_{i-1/2}) / (h mu_i) - r0_i u_i,
//   F = wD (u_R - u_L)/h - wb (u_L + u_R)/2
// at a given metric time.
struct LineProblem {
  ReducedGrid grid;
  FaceBC left = FaceBC::flux_free, right = FaceBC::absorbing;
  bool time_independent = false;
  std::function<void(double s, std::vector<double>& wD, std::vector<double>& wb,
                     std::vector<double>& mu, std::vector<double>& r0)>
      fill;

  void assemble(double s, Tri& L) {
    const std::size_t n = grid.size();
    const double h = grid.spacing();
    if (wD_.empty() || !time_independent) {
      wD_.resize(n + 1);
      wb_.resize(n + 1);
      mu_.resize(n);
      r0_.resize(n);
      fill(s, wD_, wb_, mu_, r0_);
    }
    L.a.assign(n, 0.0);
    L.d.assign(n, 0.0);
    L.c.assign(n, 0.0);
    L.periodic = (left == FaceBC::periodic);
    for (std::size_t i = 0; i < n; ++i) {
      const double inv = 1.0 / (h * mu_[i]);
      // right face i+1/2 (index i+1)
      if (i + 1 < n || L.periodic) {
        L.c[i] += (wD_[i + 1] / h - 0.5 * wb_[i + 1]) * inv;
        L.d[i] += (-wD_[i + 1] / h - 0.5 * wb_[i + 1]) * inv;
      } else if (right == FaceBC::absorbing) {
        L.d[i] += (-2.0 * wD_[i + 1] / h) * inv;
      }
      // left face i-1/2 (index i)
      if (i > 0 || L.periodic) {
        L.a[i] += (wD_[i] / h + 0.5 * wb_[i]) * inv;
        L.d[i] += (-wD_[i] / h + 0.5 * wb_[i]) * inv;
      } else if (left == FaceBC::absorbing) {
        L.d[i] += (-2.0 * wD_[i] / h) * inv;
      }
      L.d[i] -= r0_[i];
    }
    if (L.periodic) {
      const double inv0 = 1.0 / (h * mu_[0]);
      const double invn = 1.0 / (h * mu_[n - 1]);
      L.alpha = (wD_[0] / h + 0.5 * wb_[0]) * inv0;       // row 0 <- u_{n-1} via face 0
      L.beta = (wD_[n] / h - 0.5 * wb_[n]) * invn;        // row n-1 <- u_0 via face n
    }
  }

  // Outward boundary flux (mass loss rate) for the current coefficients.
  double boundary_outflux(const std::vector<double>& u) const {
    if (wD_.empty()) return 0.0;
    const std::size_t n = u.size();
    const double h = grid.spacing();
    double out = 0.0;
    if (right == FaceBC::absorbing) out += 2.0 * wD_[n] / h * u[n - 1];
    if (left == FaceBC::absorbing) out += 2.0 * wD_[0] / h * u[0];
    return out;
  }

  const std::vector<double>& mu() const { return mu_; }

 private:
  std::vector<double> wD_, wb_, mu_, r0_;
};

double wrms(const std::vector<double>& e, const std::vector<double>& u, double atol,
            double rtol) {
  double acc = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    const double sc = atol + rtol * std::abs(u[i]);
    const double q = e[i] / sc;
    acc += q * q;
  }
  return std::sqrt(acc / static_cast<double>(e.size()));
}

struct StepperState {
  double dt = 0.0;
};

// March u from tau_a to tau_b (exactly), adapting TR-BDF2 steps.
void advance(LineProblem& line, std::vector<double>& u, double tau_a, double tau_b,
             const std::function<double(double)>& s_of_tau, const SolverOptions& opts,
             SolverDiagnostics& diag, bool positivity, double* leak, StepperState& st) {
  const std::size_t n = u.size();
  Tri L0, Lg, L1;
  TriSolver solver;
  std::vector<double> k1(n), k2(n), k3(n), rhs(n), ustar(n), unew(n), e(n), ef(n);
  const double c1 = err_c1(), c3 = err_c3();
  const double span = tau_b - tau_a;
  if (span <= 0.0) return;
  double tau = tau_a;
  double dt = (st.dt > 0.0) ? std::min(st.dt, span) : span * 1e-3;
  const double dt_min = std::max(span * 1e-14, 1e-300);

  while (tau_b - tau > 1e-14 * std::max(1.0, tau_b)) {
    dt = std::min(dt, tau_b - tau);
    if (++diag.steps > opts.max_steps)
      throw ConvergenceError("solver exceeded the step budget");

    line.assemble(s_of_tau(tau), L0);
    L0.matvec(u, k1);
    for (std::size_t i = 0; i < n; ++i) rhs[i] = u[i] + 0.5 * kGamma * dt * k1[i];
    line.assemble(s_of_tau(tau + kGamma * dt), Lg);
    solver.solve(Lg, 0.5 * kGamma * dt, rhs, ustar);
    Lg.matvec(ustar, k2);

    const double w1 = 1.0 / (kGamma * (2.0 - kGamma));
    const double w0 = (1.0 - kGamma) * (1.0 - kGamma) / (kGamma * (2.0 - kGamma));
    for (std::size_t i = 0; i < n; ++i) rhs[i] = w1 * ustar[i] - w0 * u[i];
    line.assemble(s_of_tau(tau + dt), L1);
    solver.solve(L1, kB3 * dt, rhs, unew);
    L1.matvec(unew, k3);

    for (std::size_t i = 0; i < n; ++i)
      e[i] = dt * (c1 * k1[i] + kC2 * k2[i] + c3 * k3[i]);
    solver.solve(L1, kB3 * dt, e, ef);

    double peak = 0.0, mn = 0.0;
    for (double v : unew) {
      peak = std::max(peak, std::abs(v));
      mn = std::min(mn, v);
    }
    const double err = wrms(ef, unew, opts.abs_tol * std::max(peak, 1e-300), opts.rel_tol);
    const bool pos_ok = !positivity || mn >= -1e-11 * peak;
    if (err <= 1.0 && pos_ok) {
      if (leak) *leak += line.boundary_outflux(unew) * dt;
      u.swap(unew);
      tau += dt;
      diag.min_value = std::min(diag.min_value, mn);
      diag.sup_value = std::max(diag.sup_value, peak);
      const double grow = opts.safety * std::pow(std::max(err, 1e-8), -1.0 / 3.0);
      dt *= std::clamp(grow, 0.3, 4.0);
    } else {
      ++diag.rejected;
      dt *= pos_ok ? std::clamp(opts.safety * std::pow(err, -1.0 / 3.0), 0.1, 0.5) : 0.25;
      if (dt < dt_min)
        throw ConvergenceError(pos_ok ? "solver step size underflow"
                                      : "persistent positivity violation");
    }
  }
  st.dt = dt;
}

// ---- variant problems ----

LineProblem make_problem(const ModelFlow& flow, const ReducedGrid& grid, bool conjugate,
                         int angular_mode) {
  LineProblem p;
  p.grid = grid;
  const int n = flow.dim();
  switch (flow.kind()) {
    case FlowKind::flat_torus:
      p.left = p.right = FaceBC::periodic;
      p.time_independent = true;
      p.fill = [ng = grid.size()](double, std::vector<double>& wD, std::vector<double>& wb,
                                  std::vector<double>& mu, std::vector<double>& r0) {
        std::fill(wD.begin(), wD.end(), 1.0);
        std::fill(wb.begin(), wb.end(), 0.0);
        std::fill(mu.begin(), mu.end(), 1.0);
        std::fill(r0.begin(), r0.end(), 0.0);
        (void)ng;
      };
      return p;
    case FlowKind::euclidean:
      p.left = FaceBC::flux_free;
      p.right = FaceBC::absorbing;
      p.time_independent = true;
      p.fill = [g = grid, n](double, std::vector<double>& wD, std::vector<double>& wb,
                             std::vector<double>& mu, std::vector<double>& r0) {
        const double h = g.spacing();
        for (std::size_t j = 0; j <= g.size(); ++j) {
          const double r = g.lo + static_cast<double>(j) * h;
          wD[j] = std::pow(r, n - 1);
          wb[j] = 0.0;
        }
        for (std::size_t i = 0; i < g.size(); ++i) {
          mu[i] = std::pow(g.nodes[i], n - 1);
          r0[i] = 0.0;
        }
      };
      return p;
    case FlowKind::shrinking_sphere:
      p.left = p.right = FaceBC::flux_free;  // face weights vanish at the poles
      p.time_independent = false;
      p.fill = [g = grid, n, flow, conjugate](double s, std::vector<double>& wD,
                                              std::vector<double>& wb, std::vector<double>& mu,
                                              std::vector<double>& r0) {
        const double c = flow.sphere_scale(s);
        const double cpow = std::pow(c, 0.5 * n);
        const double h = g.spacing();
        for (std::size_t j = 0; j <= g.size(); ++j) {
          const double th = std::clamp(g.lo + static_cast<double>(j) * h, 0.0, kPi);
          wD[j] = cpow * std::pow(std::sin(th), n - 1) / c;
          wb[j] = 0.0;
        }
        const double R = n * (n - 1.0) / c;
        for (std::size_t i = 0; i < g.size(); ++i) {
          mu[i] = cpow * std::pow(std::sin(g.nodes[i]), n - 1);
          r0[i] = conjugate ? R : 0.0;
        }
      };
      return p;
    case FlowKind::cigar:
      p.left = (grid.lo <= 1e-12) ? FaceBC::flux_free : FaceBC::absorbing;
      p.right = FaceBC::absorbing;
      p.time_independent = true;  // autonomous in the comoving frame
      p.fill = [g = grid, conjugate, angular_mode](double, std::vector<double>& wD,
                                                   std::vector<double>& wb,
                                                   std::vector<double>& mu,
                                                   std::vector<double>& r0) {
        const double h = g.spacing();
        for (std::size_t j = 0; j <= g.size(); ++j) {
          const double xi = g.lo + static_cast<double>(j) * h;
          const double th = std::tanh(xi);
          wD[j] = th;
          wb[j] = (conjugate ? 2.0 : -2.0) * th * th;
        }
        for (std::size_t i = 0; i < g.size(); ++i) {
          const double xi = g.nodes[i];
          const double th = std::tanh(xi);
          mu[i] = th;
          const double sech2 = 1.0 - th * th;
          r0[i] = (conjugate ? 0.0 : 4.0 * sech2);
          if (angular_mode > 0)
            r0[i] += static_cast<double>(angular_mode) * angular_mode / (th * th);
        }
      };
      return p;
    default:
      throw ConfigError("pde solver: unsupported flow variant (use exact kernels)");
  }
}

double mass_of(const ModelFlow& flow, const ReducedGrid& grid, const std::vector<double>& u,
               double s) {
  double m = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i)
    m += grid.weights[i] * flow.reduced_measure(grid.nodes[i], s) * u[i];
  return m;
}

double default_tau0(const SolverOptions& opts, double horizon, double tau_first) {
  if (opts.tau0 > 0.0) return opts.tau0;
  return std::min(opts.tau0_factor * horizon, 1e-2 * tau_first);
}

double positive_floor(const std::vector<double>& u) {
  double peak = 0.0;
  for (double v : u) peak = std::max(peak, v);
  return std::max(peak, 1e-300) * 1e-280;
}

// Monotone cubic (Fritsch-Carlson) interpolation of nonnegative profiles
// onto a new grid; zero outside the source window.
std::vector<double> pchip_resample(const ReducedGrid& from, const std::vector<double>& u,
                                   const ReducedGrid& to) {
  const std::size_t n = from.size();
  std::vector<double> slope(n, 0.0), d(n - 1);
  const double h = from.spacing();
  for (std::size_t i = 0; i + 1 < n; ++i) d[i] = (u[i + 1] - u[i]) / h;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (d[i - 1] * d[i] <= 0.0)
      slope[i] = 0.0;
    else
      slope[i] = 2.0 * d[i - 1] * d[i] / (d[i - 1] + d[i]);  // harmonic mean
  }
  slope[0] = d[0];
  slope[n - 1] = d[n - 2];
  std::vector<double> out(to.size(), 0.0);
  for (std::size_t j = 0; j < to.size(); ++j) {
    const double x = to.nodes[j];
    if (x <= from.nodes.front() || x >= from.nodes.back()) continue;
    const std::size_t i =
        std::min(n - 2, static_cast<std::size_t>((x - from.nodes.front()) / h));
    const double tloc = (x - from.nodes[i]) / h;
    const double h00 = (1 + 2 * tloc) * (1 - tloc) * (1 - tloc);
    const double h10 = tloc * (1 - tloc) * (1 - tloc);
    const double h01 = tloc * tloc * (3 - 2 * tloc);
    const double h11 = tloc * tloc * (tloc - 1);
    out[j] = std::max(0.0, h00 * u[i] + h10 * h * slope[i] + h01 * u[i + 1] +
                               h11 * h * slope[i + 1]);
  }
  return out;
}

}  // namespace

ReducedGrid pde_grid(const ModelFlow& flow, const SolverOptions& opts, double tau_max) {
  switch (flow.kind()) {
    case FlowKind::flat_torus: {
      if (flow.dim() != 1) throw ConfigError("pde solver: torus solves are 1-D");
      const double L = lattice_covolume(flow.as<FlatTorus>());
      return uniform_cell_grid(0.0, L, static_cast<std::size_t>(opts.nodes), true);
    }
    case FlowKind::euclidean: {
      ReducedGrid g = uniform_cell_grid(0.0, opts.truncation_radius,
                                        static_cast<std::size_t>(opts.nodes));
      g.truncation_radius = opts.truncation_radius;
      return g;
    }
    case FlowKind::shrinking_sphere:
      return uniform_cell_grid(0.0, kPi, static_cast<std::size_t>(opts.nodes));
    case FlowKind::cigar: {
      // Window sized for the outward drift (speed 2) plus diffusive spread.
      const double tau0 = default_tau0(opts, tau_max, tau_max);
      const double xi_hi = opts.cigar_base_xi + 2.0 * tau_max +
                           opts.window_pad * std::sqrt(4.0 * tau_max) + 10.0;
      const double h_seed = std::sqrt(2.0 * std::max(tau0, 1e-12)) / 3.2;
      const double h_wave = std::sqrt(4.0 * std::max(tau_max, 1e-6)) / 48.0;
      const double h = std::min({h_seed, std::max(h_wave, 1e-4), 0.35});
      std::size_t nn = static_cast<std::size_t>(std::ceil(xi_hi / h));
      nn = std::clamp<std::size_t>(nn, static_cast<std::size_t>(opts.nodes), 65536);
      ReducedGrid g = uniform_cell_grid(0.0, xi_hi, nn);
      g.truncation_radius = xi_hi;
      return g;
    }
    default:
      throw ConfigError("pde solver: unsupported flow variant");
  }
}

std::vector<double> delta_seed(const ModelFlow& flow, const Point& x, double t,
                               const ReducedGrid& grid, double tau0,
                               const SolverOptions& opts) {
  if (!(tau0 > 0.0)) throw ConfigError("delta_seed: tau0 must be positive");
  const int n = flow.dim();
  const double s = t - tau0;
  const double h = grid.spacing();

  // metric spacing at the seed location
  double h_metric = h;
  if (flow.kind() == FlowKind::shrinking_sphere)
    h_metric = std::sqrt(flow.sphere_scale(s)) * h;
  if (std::sqrt(2.0 * tau0) < 3.0 * h_metric)
    throw ConfigError("delta_seed: grid too coarse for tau0 (need sqrt(2 tau0) >= 3 spacings)");

  std::vector<double> u(grid.size());
  const double pref = std::pow(4.0 * kPi * tau0, -0.5 * n);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double dist = 0.0;
    double vv = 1.0;
    switch (flow.kind()) {
      case FlowKind::euclidean:
        dist = grid.nodes[i];
        break;
      case FlowKind::flat_torus: {
        std::vector<double> d = {grid.nodes[i] - (x.empty() ? 0.0 : x[0])};
        dist = std::abs(lattice_wrap(flow.as<FlatTorus>(), std::move(d))[0]);
        break;
      }
      case FlowKind::shrinking_sphere: {
        const double th = std::abs(grid.nodes[i] - (x.empty() ? 0.0 : x[0]));
        dist = std::sqrt(flow.sphere_scale(s)) * th;
        if (opts.seed_van_vleck && th > 1e-10 && th < 3.0)
          vv = std::pow(th / std::sin(th), 0.5 * (n - 1));
        break;
      }
      case FlowKind::cigar: {
        const double xi = grid.nodes[i];
        dist = std::abs(xi - opts.cigar_base_xi);
        if (opts.seed_van_vleck && opts.cigar_base_xi == 0.0 && xi > 1e-10)
          vv = std::sqrt(xi / std::tanh(xi));
        break;
      }
      default:
        throw ConfigError("delta_seed: unsupported flow variant");
    }
    u[i] = pref * std::exp(-dist * dist / (4.0 * tau0)) * vv;
  }
  const double m = mass_of(flow, grid, u, s);
  if (!(m > 0.0)) throw ConvergenceError("delta_seed: zero seed mass");
  for (double& v : u) v /= m;
  return u;
}

namespace {

KernelField run_line(const ModelFlow& flow, const Point& base, double base_time,
                     const std::vector<double>& slice_times, bool conjugate,
                     const SolverOptions& opts, SolverDiagnostics* diag_out) {
  if (slice_times.empty()) throw ConfigError("solver: no slice times requested");
  std::vector<double> taus;
  for (double s : slice_times) {
    const double tau = conjugate ? base_time - s : s - base_time;
    if (!(tau > 0.0))
      throw DomainError(conjugate ? "solve_conjugate: slices must satisfy s < t"
                                  : "solve_forward: slices must satisfy t > T");
    taus.push_back(tau);
  }
  std::sort(taus.begin(), taus.end());
  const double horizon = taus.back();
  const double tau0 = default_tau0(opts, horizon, taus.front());
  if (tau0 >= taus.front())
    throw ConfigError("solver: seed offset overlaps the first requested slice");

  SolverOptions seed_opts = opts;
  if (flow.kind() == FlowKind::cigar && !base.empty())
    seed_opts.cigar_base_xi = flow.cigar_xi(base[0], base_time);

  ReducedGrid grid = pde_grid(flow, seed_opts, horizon);
  SolverDiagnostics diag;
  diag.tau0 = tau0;
  auto s_of_tau = [&](double tau) {
    return conjugate ? base_time - tau : base_time + tau;
  };

  // delta_seed places the Gaussian at metric time (arg - tau0); shifting the
  // argument by 2 tau0 puts the forward seed at base_time + tau0 as needed.
  std::vector<double> u = delta_seed(flow, base, conjugate ? base_time : base_time + 2.0 * tau0,
                                     grid, tau0, seed_opts);

  LineProblem line = make_problem(flow, grid, conjugate, opts.cigar_angular_mode);
  KernelField field{flow, base, base_time, grid, {}, {}};
  field.meta.method = KernelMethod::pde;

  const int n = flow.dim();
  StepperState st;
  double leak = 0.0;
  double tau = tau0;
  diag.sup_value = *std::max_element(u.begin(), u.end());
  const bool positivity = opts.enforce_positivity && opts.cigar_angular_mode == 0;
  for (double target : taus) {
    advance(line, u, tau, target, s_of_tau, opts, diag, positivity, &leak, st);
    tau = target;
    KernelSlice sl;
    sl.s = s_of_tau(tau);
    sl.H.resize(grid.size());
    sl.f.resize(grid.size());
    const double floor_v = positive_floor(u);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      sl.H[i] = positivity ? std::max(u[i], floor_v) : u[i];
      sl.f[i] = positivity ? potential_from_H(n, tau, sl.H[i]) : 0.0;
    }
    if (conjugate) {
      const double m = mass_of(flow, grid, u, sl.s);
      const double defect = std::abs(m + leak - 1.0);
      diag.final_mass_defect = defect;
      diag.max_mass_drift_rate = std::max(diag.max_mass_drift_rate, defect / tau);
      if (defect > opts.mass_drift_tol * std::max(tau, 1.0) + 1e-12)
        throw ConvergenceError("solve_conjugate: mass drift above tolerance");
      field.meta.mass_drift = std::max(field.meta.mass_drift, defect);
    }
    field.slices.push_back(std::move(sl));
  }
  diag.boundary_leakage = leak;
  field.meta.boundary_leakage = leak;
  std::sort(field.slices.begin(), field.slices.end(),
            [](const KernelSlice& a, const KernelSlice& b) { return a.s < b.s; });
  if (diag_out) *diag_out = diag;
  return field;
}

}  // namespace

KernelField solve_conjugate(const ModelFlow& flow, const Point& x, double t,
                            const std::vector<double>& slice_times, const SolverOptions& opts,
                            SolverDiagnostics* diag) {
  flow.check_time(t);
  return run_line(flow, x, t, slice_times, true, opts, diag);
}

KernelField solve_forward(const ModelFlow& flow, const Point& z, double T, double t_end,
                          const std::vector<double>& slice_times, const SolverOptions& opts,
                          SolverDiagnostics* diag) {
  flow.check_time(t_end);
  if (!(T < t_end)) throw DomainError("solve_forward: need T < t_end");
  std::vector<double> slices = slice_times;
  if (slices.empty()) slices = {t_end};
  return run_line(flow, z, T, slices, false, opts, diag);
}

std::vector<MovingSlice> solve_cigar_deep(const ModelFlow& flow, double t,
                                          const std::vector<double>& slice_times,
                                          const SolverOptions& opts,
                                          SolverDiagnostics* diag_out) {
  if (flow.kind() != FlowKind::cigar) throw ConfigError("solve_cigar_deep: cigar only");
  flow.check_time(t);
  std::vector<double> taus;
  for (double s : slice_times) {
    if (!(s < t)) throw DomainError("solve_cigar_deep: slices must satisfy s < t");
    taus.push_back(t - s);
  }
  std::sort(taus.begin(), taus.end());
  const double tau0 = default_tau0(opts, taus.back(), taus.front());
  if (tau0 >= taus.front())
    throw ConfigError("solve_cigar_deep: seed offset overlaps the first slice");

  SolverDiagnostics diag;
  diag.tau0 = tau0;
  // initial window around the tip
  const std::size_t nn = static_cast<std::size_t>(opts.window_nodes);
  double xi_hi = std::max(30.0, 14.0 * std::sqrt(taus.front()) + 10.0);
  ReducedGrid grid = uniform_cell_grid(0.0, xi_hi, nn);
  {
    const double h_needed = std::sqrt(2.0 * tau0) / 3.0;
    if (grid.spacing() > h_needed) {
      xi_hi = h_needed * static_cast<double>(nn);
      grid = uniform_cell_grid(0.0, xi_hi, nn);
    }
  }
  std::vector<double> u = delta_seed(flow, {0.0}, t, grid, tau0, opts);
  LineProblem line = make_problem(flow, grid, true, 0);

  auto s_of_tau = [&](double tau) { return t - tau; };
  StepperState st;
  double leak = 0.0;
  double tau = tau0;
  std::vector<MovingSlice> out;

  auto support = [&](std::size_t& lo, std::size_t& hi) {
    double peak = 0.0;
    for (double v : u) peak = std::max(peak, v);
    const double cut = peak * 1e-13;
    lo = 0;
    hi = u.size() - 1;
    while (lo + 1 < u.size() && u[lo] < cut) ++lo;
    while (hi > 0 && u[hi] < cut) --hi;
  };

  auto maybe_regrid = [&]() {
    std::size_t lo, hi;
    support(lo, hi);
    const double width = grid.hi - grid.lo;
    const bool near_right = grid.nodes[hi] > grid.hi - 0.06 * width;
    const bool too_wide_left = grid.nodes[lo] > grid.lo + 0.45 * width && grid.lo == 0.0 &&
                               grid.nodes[lo] > 25.0;
    if (!near_right && !too_wide_left) return;
    const double spread = 8.0 * std::sqrt(4.0 * (tau + 1.0)) + 20.0;
    const double new_lo = std::max(0.0, grid.nodes[lo] - 0.5 * spread);
    const double new_hi = grid.nodes[hi] + 1.3 * spread;
    // Keep the cell Peclet number h * drift / diffusivity below 2, or the
    // centered advective flux loses positivity.
    std::size_t nodes_needed =
        static_cast<std::size_t>(std::ceil((new_hi - new_lo) / 0.85));
    const std::size_t n_new = std::max(nn, nodes_needed);
    const double m_before = mass_of(flow, grid, u, t - tau);
    ReducedGrid ng = uniform_cell_grid(new_lo, new_hi, n_new);
    std::vector<double> nu = pchip_resample(grid, u, ng);
    const double m_after = mass_of(flow, ng, nu, t - tau);
    leak += m_before - m_after;  // resampling defect, folded into the budget
    grid = ng;
    u = std::move(nu);
    line = make_problem(flow, grid, true, 0);
    ++diag.regrids;
  };

  for (double target : taus) {
    while (tau < target * (1.0 - 1e-15)) {
      // The profile drifts outward at speed 2; never march longer than it
      // takes to consume half of the remaining window margin.
      std::size_t lo, hi;
      support(lo, hi);
      const double margin = std::max(grid.hi - grid.nodes[hi], grid.spacing());
      const double seg =
          std::min(target, tau + std::clamp(0.25 * margin, 0.25, 2000.0));
      advance(line, u, tau, seg, s_of_tau, opts, diag, true, &leak, st);
      tau = seg;
      maybe_regrid();
    }
    MovingSlice sl;
    sl.s = t - target;
    sl.grid = grid;
    sl.H.resize(u.size());
    sl.f.resize(u.size());
    const double floor_v = positive_floor(u);
    for (std::size_t i = 0; i < u.size(); ++i) {
      sl.H[i] = std::max(u[i], floor_v);
      sl.f[i] = potential_from_H(2, target, sl.H[i]);
    }
    const double m = mass_of(flow, grid, u, sl.s);
    const double defect = std::abs(m + leak - 1.0);
    diag.final_mass_defect = defect;
    diag.max_mass_drift_rate = std::max(diag.max_mass_drift_rate, defect / target);
    if (defect > opts.mass_drift_tol * std::max(target, 1.0) + 1e-12)
      throw ConvergenceError("solve_cigar_deep: mass drift above tolerance");
    out.push_back(std::move(sl));
  }
  diag.boundary_leakage = leak;
  if (diag_out) *diag_out = diag;
  return out;
}

CigarModeField solve_cigar_modes(const ModelFlow& flow, double rho_base, double t,
                                 const std::vector<double>& slice_times, int n_modes,
                                 const SolverOptions& opts, SolverDiagnostics* diag_out) {
  if (flow.kind() != FlowKind::cigar) throw ConfigError("solve_cigar_modes: cigar only");
  flow.check_time(t);
  if (n_modes < 1) throw ConfigError("solve_cigar_modes: need at least the zonal mode");
  std::vector<double> taus;
  for (double s : slice_times) {
    if (!(s < t)) throw DomainError("solve_cigar_modes: slices must satisfy s < t");
    taus.push_back(t - s);
  }
  std::sort(taus.begin(), taus.end());
  const double horizon = taus.back();
  const double tau0 = default_tau0(opts, horizon, taus.front());
  if (tau0 >= taus.front())
    throw ConfigError("solve_cigar_modes: seed offset overlaps the first slice");

  const double xi_b = flow.cigar_xi(rho_base, t);
  SolverOptions gopts = opts;
  gopts.cigar_base_xi = xi_b;
  ReducedGrid grid = pde_grid(flow, gopts, horizon);

  // Angular projection of the short-time Gaussian seed about (xi_b, 0).
  const double mbar_b = std::max(std::tanh(xi_b), 1e-3);
  int nphi = 512;
  {
    const double want = 6.0 * kPi * mbar_b / std::sqrt(2.0 * tau0);
    nphi = std::max(nphi, static_cast<int>(std::ceil(want)));
  }
  SolverDiagnostics diag;
  diag.tau0 = tau0;
  CigarModeField field;
  field.grid = grid;
  field.base_xi = xi_b;
  field.base_time = t;
  field.slice_times.clear();
  for (double tv : taus) field.slice_times.push_back(t - tv);  // matches mode storage order
  field.modes.assign(static_cast<std::size_t>(n_modes), {});

  // seed each mode
  std::vector<std::vector<double>> u(static_cast<std::size_t>(n_modes),
                                     std::vector<double>(grid.size(), 0.0));
  const double pref = 1.0 / (4.0 * kPi * tau0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double xi = grid.nodes[i];
    const double dxi = xi - xi_b;
    if (std::abs(dxi) > 14.0 * std::sqrt(tau0)) continue;
    const double mbar = 0.5 * (std::tanh(xi) + std::tanh(xi_b));
    for (int m = 0; m < n_modes; ++m) {
      double acc = 0.0;
      for (int j = 0; j < nphi; ++j) {
        const double phi = -kPi + 2.0 * kPi * (j + 0.5) / nphi;
        const double d2 = dxi * dxi + mbar * mbar * phi * phi;
        acc += std::exp(-d2 / (4.0 * tau0)) * std::cos(m * phi);
      }
      u[static_cast<std::size_t>(m)][i] = pref * acc / nphi;  // (1/2pi) int H cos(m phi)
    }
  }
  // normalize total mass (carried entirely by the zonal mode)
  const double m0 = mass_of(flow, grid, u[0], t - tau0);
  if (!(m0 > 0.0)) throw ConvergenceError("solve_cigar_modes: zero seed mass");
  for (auto& um : u)
    for (double& v : um) v /= m0;

  auto s_of_tau = [&](double tau) { return t - tau; };
  std::vector<StepperState> st(static_cast<std::size_t>(n_modes));
  std::vector<LineProblem> lines;
  lines.reserve(static_cast<std::size_t>(n_modes));
  for (int m = 0; m < n_modes; ++m) lines.push_back(make_problem(flow, grid, true, m));

  double leak = 0.0;
  double tau = tau0;
  for (double target : taus) {
    for (int m = 0; m < n_modes; ++m) {
      double* leak_ptr = (m == 0) ? &leak : nullptr;
      advance(lines[static_cast<std::size_t>(m)], u[static_cast<std::size_t>(m)], tau, target,
              s_of_tau, opts, diag, m == 0, leak_ptr, st[static_cast<std::size_t>(m)]);
    }
    tau = target;
    for (int m = 0; m < n_modes; ++m)
      field.modes[static_cast<std::size_t>(m)].push_back(u[static_cast<std::size_t>(m)]);
    const double mm = mass_of(flow, grid, u[0], t - tau);
    const double defect = std::abs(mm + leak - 1.0);
    diag.final_mass_defect = defect;
    if (defect > opts.mass_drift_tol * std::max(tau, 1.0) + 1e-12)
      throw ConvergenceError("solve_cigar_modes: mass drift above tolerance");
  }
  diag.boundary_leakage = leak;
  if (diag_out) *diag_out = diag;
  return field;
}

}  // namespace riccilab
