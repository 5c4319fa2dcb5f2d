#include "riccilab/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "riccilab/errors.hpp"

namespace riccilab {

namespace {

constexpr double kPi = std::numbers::pi;

// sech^2 without overflow for large arguments.
double sech2(double x) {
  const double ax = std::abs(x);
  if (ax > 350.0) return 0.0;
  const double e = std::exp(-ax);
  const double s = 2.0 * e / (1.0 + e * e);
  return s * s;
}

double cigar_R_comoving(double xi) { return 4.0 * sech2(xi); }

struct EdgeRules {
  EdgeRule left = EdgeRule::even_reflect;
  EdgeRule right = EdgeRule::one_sided;
};

EdgeRules edge_rules(const ModelFlow& flow, const ReducedGrid& grid) {
  EdgeRules r;
  switch (flow.kind()) {
    case FlowKind::flat_torus:
      r.left = r.right = EdgeRule::periodic;
      break;
    case FlowKind::shrinking_sphere:
      r.left = r.right = EdgeRule::even_reflect;
      break;
    case FlowKind::euclidean:
      r.left = EdgeRule::even_reflect;
      r.right = EdgeRule::one_sided;
      break;
    case FlowKind::cigar:
      r.left = (grid.lo <= 1e-12) ? EdgeRule::even_reflect : EdgeRule::one_sided;
      r.right = EdgeRule::one_sided;
      break;
    default:
      throw ConfigError("entropy: sampled fields require a 1-D reduced domain");
  }
  return r;
}

struct SliceContext {
  const ModelFlow* flow;
  const ReducedGrid* grid;
  const std::vector<double>* H;
  const std::vector<double>* f;
  double s;  // slice time
  double t;  // base time
  double truncation_error = 0.0;
};

double measure_at(const ModelFlow& flow, double node, double s) {
  return flow.reduced_measure(node, s);
}

double grad_scale(const ModelFlow& flow, double s) {
  // |grad f|^2 = (f')^2 / scale in the reduced coordinate
  if (flow.kind() == FlowKind::shrinking_sphere) return flow.sphere_scale(s);
  return 1.0;
}

double slice_R(const ModelFlow& flow, double node, double s) {
  switch (flow.kind()) {
    case FlowKind::shrinking_sphere:
      return flow.dim() * (flow.dim() - 1.0) / flow.sphere_scale(s);
    case FlowKind::cigar:
      return cigar_R_comoving(node);  // comoving arclength coordinate
    default:
      return 0.0;
  }
}

// Sum with an embedded every-other-node estimate of the quadrature error.
struct QuadAccum {
  double full = 0.0;
  double half = 0.0;
  void add(std::size_t i, double w, double v) {
    full += w * v;
    if (i % 2 == 0) half += 2.0 * w * v;
  }
  double error() const { return std::abs(full - half); }
};

struct SliceEntropies {
  ValueWithError W, N;
  double mass = 0.0;
};

SliceEntropies slice_entropy(const SliceContext& c) {
  const ModelFlow& flow = *c.flow;
  const ReducedGrid& grid = *c.grid;
  const int n = flow.dim();
  const double tau = c.t - c.s;
  const EdgeRules er = edge_rules(flow, grid);
  const std::vector<double> fp = derivative_uniform(*c.f, grid.spacing(), er.left, er.right);
  const double gscale = grad_scale(flow, c.s);

  QuadAccum qw, qn, qmass;
  double abs_bracket = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double mu = measure_at(flow, grid.nodes[i], c.s);
    const double H = (*c.H)[i];
    const double f = (*c.f)[i];
    const double grad2 = fp[i] * fp[i] / gscale;
    const double R = slice_R(flow, grid.nodes[i], c.s);
    const double bw = tau * (grad2 + R) + f - n;
    const double w = grid.weights[i] * mu;
    qw.add(i, w, bw * H);
    qn.add(i, w, f * H);
    qmass.add(i, w, H);
    abs_bracket += w * std::abs(bw) * 1.0;
  }
  SliceEntropies out;
  out.mass = qmass.full;
  const double mass_defect = std::abs(qmass.full - 1.0);
  out.W.value = qw.full;
  out.N.value = qn.full - 0.5 * n;
  const double trunc_w = c.truncation_error * abs_bracket / std::max(1e-300, 1.0);
  out.W.error = qw.error() + mass_defect * (std::abs(out.W.value) + n) + trunc_w;
  out.N.error = qn.error() + mass_defect * (std::abs(out.N.value) + n) +
                c.truncation_error * qmass.full * 10.0;
  return out;
}

std::vector<double> deviation_sq_impl(const SliceContext& c) {
  const ModelFlow& flow = *c.flow;
  const ReducedGrid& grid = *c.grid;
  const int n = flow.dim();
  const double tau = c.t - c.s;
  const EdgeRules er = edge_rules(flow, grid);
  const double h = grid.spacing();
  const std::vector<double> fp = derivative_uniform(*c.f, h, er.left, er.right);
  const std::vector<double> fpp = second_derivative_uniform(*c.f, h, er.left, er.right);
  std::vector<double> dev(grid.size(), 0.0);
  const double lam = 1.0 / (2.0 * tau);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double ric = 0.0, h_rad = 0.0, h_tan = 0.0;
    switch (flow.kind()) {
      case FlowKind::euclidean:
        h_rad = fpp[i];
        h_tan = fp[i] / grid.nodes[i];
        break;
      case FlowKind::flat_torus:
        h_rad = fpp[i];
        break;
      case FlowKind::shrinking_sphere: {
        const double cs = flow.sphere_scale(c.s);
        ric = (n - 1.0) / cs;
        h_rad = fpp[i] / cs;
        h_tan = fp[i] / std::tan(grid.nodes[i]) / cs;
        break;
      }
      case FlowKind::cigar: {
        // comoving arclength grid; R and the warp are time-independent here
        const double th = std::tanh(grid.nodes[i]);
        ric = 0.5 * cigar_R_comoving(grid.nodes[i]);
        h_rad = fpp[i];
        h_tan = sech2(grid.nodes[i]) / th * fp[i];
        break;
      }
      default:
        throw ConfigError("soliton deviation: unsupported variant");
    }
    const double dr = ric + h_rad - lam;
    const double dt = ric + h_tan - lam;
    dev[i] = dr * dr + (n - 1.0) * dt * dt;
  }
  return dev;
}

SliceContext context_for(const KernelField& field, double s) {
  const KernelSlice& sl = field.slice_at(s);
  SliceContext c;
  c.flow = &field.flow;
  c.grid = &field.grid;
  c.H = &sl.H;
  c.f = &sl.f;
  c.s = sl.s;
  c.t = field.base_time;
  c.truncation_error = field.meta.truncation_error;
  return c;
}

}  // namespace

ValueWithError entropy_W(const KernelField& field, double T) {
  return slice_entropy(context_for(field, T)).W;
}

ValueWithError nash_N(const KernelField& field, double T) {
  return slice_entropy(context_for(field, T)).N;
}

double nu_expectation(const KernelField& field, double s,
                      const std::function<double(double)>& observable) {
  const KernelSlice& sl = field.slice_at(s);
  double acc = 0.0;
  for (std::size_t i = 0; i < field.grid.size(); ++i)
    acc += field.grid.weights[i] * field.flow.reduced_measure(field.grid.nodes[i], sl.s) *
           sl.H[i] * observable(field.grid.nodes[i]);
  return acc;
}

std::vector<double> soliton_deviation_sq(const KernelField& field, double s) {
  return deviation_sq_impl(context_for(field, s));
}

ValueWithError perelman_production(const KernelField& field, double T) {
  const SliceContext c = context_for(field, T);
  const std::vector<double> dev = deviation_sq_impl(c);
  const double tau = c.t - c.s;
  QuadAccum q;
  for (std::size_t i = 0; i < c.grid->size(); ++i) {
    const double w = c.grid->weights[i] * measure_at(*c.flow, c.grid->nodes[i], c.s);
    q.add(i, w, dev[i] * (*c.H)[i]);
  }
  ValueWithError out;
  out.value = 2.0 * tau * q.full;
  out.error = 2.0 * tau * q.error();
  return out;
}

ValueWithError nash_deficit_integral(const KernelField& field, double T) {
  const double t = field.base_time;
  std::vector<const KernelSlice*> in;
  for (const KernelSlice& sl : field.slices)
    if (sl.s >= T - 1e-12 * std::max(1.0, std::abs(T))) in.push_back(&sl);
  if (in.size() < 6) throw ConfigError("nash_deficit_integral: too few slices covering [T, t)");
  std::sort(in.begin(), in.end(),
            [](const KernelSlice* a, const KernelSlice* b) { return a->s < b->s; });
  if (std::abs(in.front()->s - T) > 1e-9 * std::max(1.0, std::abs(T)))
    throw ConfigError("nash_deficit_integral: schedule must include the slice at T");
  const double smax = in.back()->s;
  if (t - smax > 0.05 * (t - T))
    throw ConfigError("nash_deficit_integral: slices do not reach close enough to t");

  // integrand g(s) = (1 - (t-s)/(t-T)) * production(s)
  std::vector<double> ss, gg, perr;
  for (const KernelSlice* sl : in) {
    const ValueWithError p = perelman_production(field, sl->s);
    const double wgt = 1.0 - (t - sl->s) / (t - T);
    ss.push_back(sl->s);
    gg.push_back(wgt * p.value);
    perr.push_back(std::abs(wgt) * p.error);
  }
  auto trap = [&](std::size_t stride) {
    double acc = 0.0;
    std::size_t prev = 0;
    for (std::size_t i = stride; i < ss.size(); i += stride) {
      acc += 0.5 * (gg[prev] + gg[i]) * (ss[i] - ss[prev]);
      prev = i;
    }
    if (prev + 1 <= ss.size() - 1)
      acc += 0.5 * (gg[prev] + gg.back()) * (ss.back() - ss[prev]);
    return acc;
  };
  const double full = trap(1);
  const double coarse = trap(2);
  const double tail = gg.back() / std::max(1e-300, 1.0) * (t - smax);  // weight ~ 1 near t
  double err = std::abs(full - coarse) + 0.5 * std::abs(tail);
  for (std::size_t i = 1; i < ss.size(); ++i)
    err += 0.5 * (perr[i - 1] + perr[i]) * (ss[i] - ss[i - 1]);
  ValueWithError out;
  out.value = -(full + tail);
  out.error = err;
  return out;
}

// ---- direct evaluators ----

namespace {

struct Axis {
  std::vector<double> nodes;   // coordinate values (fraction for torus axes)
  std::vector<double> weights; // includes measure factors
  bool torus_frac = false;
  int axis_index = 0;  // starting coordinate slot
};

EntropyPair flat_entropy_resolution(const ModelFlow& flow, const Point& x, double t, double T,
                                    int nodes, double tol) {
  const double tau = t - T;
  const int n = flow.dim();

  // Build quadrature axes per variant.
  std::vector<Axis> axes;
  int radial_dim = 0;  // euclidean factor dimension integrated radially
  double radial_offset = 0.0;
  const FlatTorus* torus = nullptr;
  int torus_k = 0;
  switch (flow.kind()) {
    case FlowKind::euclidean:
      radial_dim = n;
      break;
    case FlowKind::flat_torus:
      torus = &flow.as<FlatTorus>();
      torus_k = torus->dim;
      break;
    case FlowKind::flat_product: {
      const auto& p = flow.as<FlatProduct>();
      torus = &p.torus;
      torus_k = p.torus.dim;
      radial_dim = p.euclidean_dim;
      break;
    }
    case FlowKind::torus_quotient: {
      const auto& q = flow.as<TorusQuotient>();
      if (q.cover.dim != 1)
        throw ConfigError("flat_entropy: quotient entropy implemented for 1-D covers");
      for (const DeckMap& m : q.deck)
        if (std::abs(m.linear[0] - 1.0) > 1e-12)
          throw ConfigError("flat_entropy: quotient entropy implemented for translation decks");
      torus = &q.cover;
      torus_k = 1;
      break;
    }
    default:
      throw ConfigError("flat_entropy: flow variant is not flat");
  }

  if (torus) {
    double span = 1.0;
    if (flow.kind() == FlowKind::torus_quotient)
      span = 1.0 / static_cast<double>(flow.as<TorusQuotient>().deck.size());
    const double covol = lattice_covolume(*torus) * span;
    for (int a = 0; a < torus_k; ++a) {
      Axis ax;
      ax.torus_frac = true;
      ax.axis_index = a;
      const double cell = span / nodes;
      for (int i = 0; i < nodes; ++i) {
        ax.nodes.push_back((i + 0.5) * cell);
        ax.weights.push_back(cell);
      }
      // measure: covolume spread across fraction axes
      if (a == 0)
        for (double& w : ax.weights) w *= covol / std::pow(span, torus_k);
      axes.push_back(std::move(ax));
    }
  }
  if (radial_dim > 0) {
    Axis ax;
    ax.axis_index = torus_k;
    const double rmax = 13.0 * std::sqrt(tau);
    ReducedGrid g = gauss_legendre_grid(0.0, rmax, static_cast<std::size_t>(nodes));
    for (std::size_t i = 0; i < g.size(); ++i) {
      ax.nodes.push_back(g.nodes[i]);
      ax.weights.push_back(g.weights[i] * unit_sphere_volume(radial_dim - 1) *
                           std::pow(g.nodes[i], radial_dim - 1));
    }
    axes.push_back(std::move(ax));
  }

  // Tensor loop.
  QuadAccum qw, qn, qmass;
  std::vector<std::size_t> idx(axes.size(), 0);
  std::size_t flat_count = 0;
  while (true) {
    double wgt = 1.0;
    Point z(static_cast<std::size_t>(std::max(n, torus_k + (radial_dim > 0 ? 1 : 0))), 0.0);
    Point xz = x;
    xz.resize(z.size(), 0.0);
    for (std::size_t a = 0; a < axes.size(); ++a) {
      const Axis& ax = axes[a];
      wgt *= ax.weights[idx[a]];
      if (ax.torus_frac) {
        const double frac = ax.nodes[idx[a]];
        const std::size_t k = static_cast<std::size_t>(torus_k);
        for (std::size_t r = 0; r < k; ++r)
          z[r] += torus->basis[r * k + static_cast<std::size_t>(ax.axis_index)] * frac;
      } else {
        z[static_cast<std::size_t>(ax.axis_index)] =
            xz[static_cast<std::size_t>(ax.axis_index)] + ax.nodes[idx[a]];
      }
    }
    const double H = exact_flat_kernel(flow, z, T, xz, t, tol);
    const std::vector<double> gH = exact_flat_kernel_grad(flow, z, T, xz, t, tol);
    double grad2 = 0.0;
    for (double gv : gH) grad2 += gv * gv;
    grad2 /= H * H;
    const double f = potential_from_H(n, tau, H);
    const double bw = tau * grad2 + f - n;  // flat: R = 0
    qw.add(flat_count, wgt, bw * H);
    qn.add(flat_count, wgt, f * H);
    qmass.add(flat_count, wgt, H);
    ++flat_count;

    std::size_t a = 0;
    while (a < axes.size() && ++idx[a] >= axes[a].nodes.size()) idx[a++] = 0;
    if (a == axes.size()) break;
  }

  EntropyPair out;
  const double mass_defect = std::abs(qmass.full - 1.0);
  out.W.value = qw.full;
  out.N.value = qn.full - 0.5 * n;
  out.W.error = mass_defect * (std::abs(out.W.value) + n) + tol * 100.0;
  out.N.error = mass_defect * (std::abs(out.N.value) + n) + tol * 100.0;
  return out;
}

}  // namespace

EntropyPair flat_entropy(const ModelFlow& flow, const Point& x, double t, double T, int nodes,
                         double tol) {
  if (!(T < t)) throw DomainError("flat_entropy: need T < t");
  flow.check_time(t);
  EntropyPair fine = flat_entropy_resolution(flow, x, t, T, nodes, tol);
  EntropyPair coarse = flat_entropy_resolution(flow, x, t, T, std::max(16, nodes / 2), tol);
  fine.W.error += std::abs(fine.W.value - coarse.W.value);
  fine.N.error += std::abs(fine.N.value - coarse.N.value);
  return fine;
}

namespace {

EntropyPair sphere_entropy_resolution(const ModelFlow& flow, double t, double T, int nodes,
                                      double tol, ValueWithError* production) {
  const int n = flow.dim();
  const double tau = t - T;
  const double c = flow.sphere_scale(T);
  const double mu0 = std::pow(c, 0.5 * n) * unit_sphere_volume(n - 1);
  ReducedGrid g = gauss_legendre_grid(0.0, kPi, static_cast<std::size_t>(nodes));
  QuadAccum qw, qn, qmass, qp;
  double trunc = 0.0;
  const double R = n * (n - 1.0) / c;
  const double lam = 1.0 / (2.0 * tau);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const SphereEval ev = sphere_kernel_eval(flow, g.nodes[i], T, t, tol, -1, true);
    trunc = std::max(trunc, ev.remainder);
    const double H = ev.H;
    const double f = potential_from_H(n, tau, H);
    const double fth = -ev.dH / H;
    const double grad2 = fth * fth / c;
    const double mu = mu0 * std::pow(std::sin(g.nodes[i]), n - 1);
    const double w = g.weights[i] * mu;
    const double bw = tau * (grad2 + R) + f - n;
    qw.add(i, w, bw * H);
    qn.add(i, w, f * H);
    qmass.add(i, w, H);
    if (production) {
      const double fthth = -ev.d2H / H + fth * fth;
      const double ric = (n - 1.0) / c;
      const double h_rad = fthth / c;
      const double h_tan = fth / std::tan(g.nodes[i]) / c;
      const double dr = ric + h_rad - lam;
      const double dt = ric + h_tan - lam;
      qp.add(i, w, (dr * dr + (n - 1.0) * dt * dt) * H);
    }
  }
  EntropyPair out;
  const double mass_defect = std::abs(qmass.full - 1.0);
  out.W.value = qw.full;
  out.N.value = qn.full - 0.5 * n;
  out.W.error = mass_defect * (std::abs(out.W.value) + n) + trunc * 50.0;
  out.N.error = mass_defect * (std::abs(out.N.value) + n) + trunc * 50.0;
  if (production) {
    production->value = 2.0 * tau * qp.full;
    production->error = 2.0 * tau * qp.error();
  }
  return out;
}

}  // namespace

EntropyPair sphere_entropy(const ModelFlow& flow, double t, double T, int nodes, double tol) {
  if (!(T < t)) throw DomainError("sphere_entropy: need T < t");
  flow.check_time(t);
  EntropyPair fine = sphere_entropy_resolution(flow, t, T, nodes, tol, nullptr);
  EntropyPair coarse =
      sphere_entropy_resolution(flow, t, T, std::max(32, nodes / 2), tol, nullptr);
  fine.W.error += std::abs(fine.W.value - coarse.W.value);
  fine.N.error += std::abs(fine.N.value - coarse.N.value);
  return fine;
}

ValueWithError sphere_production(const ModelFlow& flow, double t, double T, int nodes,
                                 double tol) {
  ValueWithError p;
  sphere_entropy_resolution(flow, t, T, nodes, tol, &p);
  ValueWithError p2;
  sphere_entropy_resolution(flow, t, T, std::max(32, nodes / 2), tol, &p2);
  p.error += std::abs(p.value - p2.value);
  return p;
}

EntropyPair cigar_entropy(const ModelFlow& flow, const MovingSlice& slice, double t) {
  SliceContext c;
  c.flow = &flow;
  c.grid = &slice.grid;
  c.H = &slice.H;
  c.f = &slice.f;
  c.s = slice.s;
  c.t = t;
  const SliceEntropies se = slice_entropy(c);
  EntropyPair out;
  out.W = se.W;
  out.N = se.N;
  return out;
}

ValueWithError cigar_mode_nash_N(const CigarModeField& field, double T, int nphi) {
  std::size_t k = field.slice_times.size();
  bool found = false;
  std::size_t ks = 0;
  for (std::size_t i = 0; i < k; ++i)
    if (std::abs(field.slice_times[i] - T) <= 1e-12 * std::max(1.0, std::abs(T))) {
      ks = i;
      found = true;
    }
  if (!found) throw LookupError("cigar_mode_nash_N: no slice at requested time");
  const double tau = field.base_time - T;
  const ReducedGrid& g = field.grid;
  const std::size_t M = field.modes.size();

  QuadAccum qn, qmass;
  double peak = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i)
    peak = std::max(peak, field.modes[0][ks][i]);
  const double floor_v = std::max(peak, 1e-300) * 1e-270;
  std::size_t cnt = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double mu = 2.0 * kPi * std::tanh(g.nodes[i]) / nphi;  // phi cell measure folded in
    for (int j = 0; j < nphi; ++j) {
      const double phi = 2.0 * kPi * (j + 0.5) / nphi;
      double H = field.modes[0][ks][i];
      for (std::size_t m = 1; m < M; ++m)
        H += 2.0 * field.modes[m][ks][i] * std::cos(static_cast<double>(m) * phi);
      H = std::max(H, floor_v);
      const double f = potential_from_H(2, tau, H);
      const double w = g.weights[i] * mu;
      qn.add(cnt, w, f * H);
      qmass.add(cnt, w, H);
      ++cnt;
    }
  }
  ValueWithError out;
  out.value = qn.full - 1.0;
  out.error = qn.error() + std::abs(qmass.full - 1.0) * (std::abs(out.value) + 2.0);
  return out;
}

// ---- curves and asymptotics ----

void EntropyCurve::validate(double slack) const {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const EntropySample& s = samples[i];
    const double tol = slack + 3.0 * (s.W_err + s.N_err);
    if (s.W > s.N + tol) throw DataQualityError("entropy curve: W > N beyond tolerance");
    if (s.N > tol) throw DataQualityError("entropy curve: N > 0 beyond tolerance");
    if (i + 1 < samples.size()) {
      // samples are stored with T descending; W must be nondecreasing in T
      const EntropySample& older = samples[i + 1];
      const double tol2 = slack + 3.0 * (s.W_err + older.W_err);
      if (older.W > s.W + tol2)
        throw DataQualityError("entropy curve: W not monotone in T beyond tolerance");
    }
  }
}

ExtrapolationState asymptotic_limit(const std::vector<double>& Ts,
                                    const std::vector<double>& values,
                                    const AsymptoticOptions& opts) {
  if (Ts.size() != values.size() || Ts.size() < 3)
    throw ConfigError("asymptotic_limit: need at least 3 samples");
  for (std::size_t i = 0; i + 1 < Ts.size(); ++i)
    if (!(Ts[i] > Ts[i + 1]))
      throw ConfigError("asymptotic_limit: sample times must decrease toward -infinity");
  // monotone nonincreasing along the schedule (theorem); small violations
  // are quadrature noise, large ones a data-quality failure
  for (std::size_t i = 0; i + 1 < values.size(); ++i)
    if (values[i + 1] > values[i] + std::max(1e-7, 0.05 * opts.tol))
      throw DataQualityError("asymptotic_limit: samples increase toward -infinity");

  ExtrapolationState st;
  const std::size_t m = values.size();
  const double d_last = values[m - 1] - values[m - 2];
  const double d_prev = values[m - 2] - values[m - 3];
  st.last_diff = std::abs(d_last);

  const double floor_last =
      -(0.5 * opts.dim) * std::log(4.0 * kPi * (opts.base_time - Ts[m - 1])) + opts.floor_margin;
  const bool below_floor = values[m - 1] < floor_last;
  const bool flattening = std::abs(d_last) < 0.3 * std::abs(d_prev) + 10.0 * opts.tol;
  if (below_floor && !flattening && std::abs(d_last) > 10.0 * opts.tol) {
    st.diverging = true;
    st.estimate = -std::numeric_limits<double>::infinity();
    return st;
  }
  st.converged = std::abs(d_last) < opts.tol;
  // geometric tail extrapolation when the ratio is clean
  double est = values[m - 1];
  if (std::abs(d_prev) > 1e-300) {
    const double r = d_last / d_prev;
    if (r > 0.0 && r < 0.95) est = values[m - 1] + d_last * r / (1.0 - r);
  }
  st.estimate = est;
  return st;
}

std::vector<double> geometric_schedule(double first, double ratio, int count) {
  if (!(first > 0.0) || !(ratio > 1.0) || count < 1)
    throw ConfigError("geometric_schedule: need first > 0, ratio > 1, count >= 1");
  std::vector<double> Ts;
  double v = first;
  for (int i = 0; i < count; ++i) {
    Ts.push_back(-v);
    v *= ratio;
  }
  return Ts;
}

EntropyCurve build_entropy_curve(const ModelFlow& flow, const Point& x, double t,
                                 const std::vector<double>& schedule, CurveMethod method,
                                 const CurveOptions& opts) {
  if (schedule.size() < 1) throw ConfigError("build_entropy_curve: empty schedule");
  std::vector<double> Ts = schedule;
  std::sort(Ts.begin(), Ts.end(), std::greater<double>());  // toward -infinity
  for (double T : Ts)
    if (!(T < t)) throw DomainError("build_entropy_curve: schedule times must precede t");

  EntropyCurve curve;
  curve.base_point = x;
  curve.base_time = t;
  curve.dim = flow.dim();

  auto push = [&](double T, const EntropyPair& p) {
    EntropySample s;
    s.T = T;
    s.W = p.W.value;
    s.W_err = p.W.error;
    s.N = p.N.value;
    s.N_err = p.N.error;
    curve.samples.push_back(s);
  };

  switch (method) {
    case CurveMethod::exact:
      for (double T : Ts) push(T, flat_entropy(flow, x, t, T, opts.nodes, opts.tol));
      break;
    case CurveMethod::spectral:
      for (double T : Ts) push(T, sphere_entropy(flow, t, T, opts.nodes, opts.tol));
      break;
    case CurveMethod::pde: {
      std::vector<double> slices = Ts;
      KernelField field = solve_conjugate(flow, x, t, slices, opts.solver);
      for (double T : Ts) {
        EntropyPair p;
        p.W = entropy_W(field, T);
        p.N = nash_N(field, T);
        push(T, p);
      }
      break;
    }
    case CurveMethod::cigar_deep: {
      std::vector<double> slices = Ts;
      std::vector<MovingSlice> ms = solve_cigar_deep(flow, t, slices, opts.solver);
      for (const MovingSlice& sl : ms) push(sl.s, cigar_entropy(flow, sl, t));
      std::sort(curve.samples.begin(), curve.samples.end(),
                [](const EntropySample& a, const EntropySample& b) { return a.T > b.T; });
      break;
    }
  }

  if (curve.samples.size() >= 3) {
    std::vector<double> sT, sW, sN;
    for (const EntropySample& s : curve.samples) {
      sT.push_back(s.T);
      sW.push_back(s.W);
      sN.push_back(s.N);
    }
    AsymptoticOptions ao;
    ao.dim = flow.dim();
    ao.base_time = t;
    curve.w_state = asymptotic_limit(sT, sW, ao);
    curve.n_state = asymptotic_limit(sT, sN, ao);
  }
  return curve;
}

NashGradient nash_gradient(const ModelFlow& flow, const Point& x, double t, double T, double h,
                           int n_modes, const SolverOptions& solver) {
  if (!(T < t)) throw DomainError("nash_gradient: need T < t");
  NashGradient out;
  if (flow.kind() != FlowKind::cigar) {
    // homogeneous variants: N is base-point independent by symmetry
    out.grad_fd = 0.0;
    return out;
  }
  if (!(t - T > 1.0))
    throw ConfigError("nash_gradient: the gradient bound needs T < t - 1");
  const double xi_c = flow.cigar_xi(x[0], t);
  const double xi_p = xi_c + h, xi_m = std::max(0.0, xi_c - h);
  SolverOptions so = solver;
  const std::vector<double> slices = {T};
  CigarModeField fp = solve_cigar_modes(flow, flow.cigar_rho(xi_p, t), t, slices, n_modes, so);
  if (h < 2.0 * fp.grid.spacing())
    throw ConfigError("nash_gradient: offset h below grid resolution");
  CigarModeField fm = solve_cigar_modes(flow, flow.cigar_rho(xi_m, t), t, slices, n_modes, so);
  const ValueWithError Np = cigar_mode_nash_N(fp, T);
  const ValueWithError Nm = cigar_mode_nash_N(fm, T);
  out.grad_fd = std::abs(Np.value - Nm.value) / (xi_p - xi_m);
  out.N_value = 0.5 * (Np.value + Nm.value);
  out.sup_M = sup_kernel(flow, T, T + 1.0);
  const int n = flow.dim();
  const double rhs2 = 1.0 / (t - T - 1.0) *
                      ((out.N_value + 0.5 * n) * (out.N_value + 0.5 * n) + n) *
                      (std::log(out.sup_M) + 0.5 * n * std::log(4.0 * kPi * (t - T)) + 0.5 * n);
  out.bound_rhs = std::sqrt(std::max(0.0, rhs2));
  return out;
}

}  // namespace riccilab
