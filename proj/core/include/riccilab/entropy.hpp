#pragma once

#include <functional>
#include <string>
#include <vector>

#include "riccilab/kernels.hpp"
#include "riccilab/pdesolver.hpp"

namespace riccilab {

struct ValueWithError {
  double value = 0.0;
  double error = 0.0;  // quadrature + truncation budget
};

// ---- entropies on sampled kernel fields (1-D reduced domains) ----
//
//   W(T) = int [ (t-T)(|grad f|^2 + R) + f - n ] H dg_T
//   N(T) = int f H dg_T - n/2
//
// f-differentiation is 4th-order centered on the sampled grid with symmetry
// ghosts at poles; spectral fields use the series derivative instead (see
// sphere_entropy below).
ValueWithError entropy_W(const KernelField& field, double T);
ValueWithError nash_N(const KernelField& field, double T);

double nu_expectation(const KernelField& field, double s,
                      const std::function<double(double)>& observable);

// |Ric + Hess f - g/(2 tau)|^2 per node in an orthonormal frame, using the
// warped-product Hessian decomposition (radial second derivative, (n-1)
// equal tangential components from the warp factor).
std::vector<double> soliton_deviation_sq(const KernelField& field, double s);

// dW/dT = 2(t-T) int |Ric + Hess f - g/(2(t-T))|^2 H dg  (>= 0)
ValueWithError perelman_production(const KernelField& field, double T);

// N(T) reconstructed from the deficit double integral
//   N(T) = -int_T^t (1 - (t-s)/(t-T)) * production(s) ds,
// quadrature over the field's slice schedule. Throws ConfigError when the
// slices do not cover [T, t) densely enough.
ValueWithError nash_deficit_integral(const KernelField& field, double T);

// ---- direct evaluators (exact kernels, tensor quadrature) ----

struct EntropyPair {
  ValueWithError W, N;
};

// Any flat variant, honest tensor quadrature of the defining integrals
// (no use of product additivity or covering identities).
EntropyPair flat_entropy(const ModelFlow& flow, const Point& x, double t, double T,
                         int nodes = 192, double tol = 1e-12);

// Shrinking sphere via the spectral kernel with series differentiation.
EntropyPair sphere_entropy(const ModelFlow& flow, double t, double T, int nodes = 256,
                           double tol = 1e-10);
ValueWithError sphere_production(const ModelFlow& flow, double t, double T, int nodes = 256,
                                 double tol = 1e-10);

// Cigar; zonal moving-window slices and off-tip mode fields.
EntropyPair cigar_entropy(const ModelFlow& flow, const MovingSlice& slice, double t);
ValueWithError cigar_mode_nash_N(const CigarModeField& field, double T, int nphi = 256);

// ---- curves and asymptotics ----

struct EntropySample {
  double T = 0.0;
  double W = 0.0, W_err = 0.0;
  double N = 0.0, N_err = 0.0;
};

struct ExtrapolationState {
  double estimate = 0.0;
  bool converged = false;
  bool diverging = false;  // "-inf trend" verdict
  double last_diff = 0.0;
};

struct EntropyCurve {
  Point base_point;
  double base_time = 0.0;
  int dim = 0;
  std::vector<EntropySample> samples;  // T descending (toward -infinity)
  ExtrapolationState w_state, n_state;

  // W <= N <= 0 and monotonicity within tolerance; DataQualityError otherwise.
  void validate(double slack = 1e-6) const;
};

struct AsymptoticOptions {
  double tol = 1e-3;
  double floor_margin = 0.0;  // divergence floor: -(n/2) log(4 pi (t-T)) + margin
  int dim = 2;
  double base_time = 0.0;
};

// Monotone-sequence extrapolation along a geometric T-schedule. Values must
// be nonincreasing within tolerance (monotonicity is a theorem; violations
// signal quadrature failure -> DataQualityError).
ExtrapolationState asymptotic_limit(const std::vector<double>& Ts,
                                    const std::vector<double>& values,
                                    const AsymptoticOptions& opts);

enum class CurveMethod { exact, spectral, pde, cigar_deep };

struct CurveOptions {
  int nodes = 256;
  double tol = 1e-10;
  SolverOptions solver;
  std::string label;
};

EntropyCurve build_entropy_curve(const ModelFlow& flow, const Point& x, double t,
                                 const std::vector<double>& schedule, CurveMethod method,
                                 const CurveOptions& opts = {});

// Geometric schedule T = -first * ratio^k, k = 0..count-1 (times <= 0).
std::vector<double> geometric_schedule(double first, double ratio, int count);

// ---- Nash-entropy spatial gradient ----

struct NashGradient {
  double grad_fd = 0.0;    // centered difference |N(x+h) - N(x-h)| / (2h)
  double bound_rhs = 0.0;  // sqrt of the right-hand side of the L2-gradient bound
  double N_value = 0.0;
  double sup_M = 0.0;      // M_{T,T+1}
};

// Homogeneous variants short-circuit to zero. On the cigar the two base
// points are offset by +/- h in comoving arclength and each solve is an
// angular mode family.
NashGradient nash_gradient(const ModelFlow& flow, const Point& x, double t, double T, double h,
                           int n_modes = 12, const SolverOptions& solver = {});

}  // namespace riccilab
