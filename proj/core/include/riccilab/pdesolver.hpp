#pragma once

#include <vector>

#include "riccilab/geometry.hpp"
#include "riccilab/grid.hpp"
#include "riccilab/kernels.hpp"

namespace riccilab {

// Method-of-lines solver for the conjugate heat equation (backward in s)
// and the forward heat equation on 1-D symmetry-reduced domains with
// time-dependent metric coefficients. Spatial discretization is a
// cell-centered finite-volume flux form (second-order centered); pole
// regularity is encoded by vanishing face weights. Time stepping is
// TR-BDF2 (L-stable) with an embedded error estimate and adaptive steps;
// metric coefficients are evaluated at the implicit stage times.
//
// On the cigar the solve runs in the soliton-comoving arclength frame,
// where the conjugate equation is autonomous and in exact divergence form:
//   du/dtau = (1/m) d/dxi [ m (du/dxi - 2 tanh(xi) u) ],  m = tanh(xi).
// The kernel there travels down the cylinder at speed 2, so deep runs use
// a moving window instead of a fixed coordinate truncation.
struct SolverOptions {
  int nodes = 512;
  double rel_tol = 1e-6;
  double abs_tol = 1e-10;           // relative to the running solution peak
  double tau0 = -1.0;               // seed offset; < 0 selects the default rule
  double tau0_factor = 1e-3;        // default tau0 = factor * horizon
  double truncation_radius = 100.0; // euclid r_max; cigar coordinate rho_max at base time
  double mass_drift_tol = 1e-6;     // per unit flow time (conjugate solves)
  bool enforce_positivity = true;
  double safety = 0.9;
  long max_steps = 4000000;
  // cigar controls
  double cigar_base_xi = 0.0;       // seed location in comoving arclength
  int cigar_angular_mode = 0;       // adds an m^2/tanh^2(xi) potential
  double window_pad = 10.0;
  int window_nodes = 8192;          // moving-window resolution for deep runs
  bool seed_van_vleck = true;
};

struct SolverDiagnostics {
  long steps = 0;
  long rejected = 0;
  long regrids = 0;
  double tau0 = 0.0;
  double max_mass_drift_rate = 0.0;
  double final_mass_defect = 0.0;  // |mass + leakage - 1| at the last slice
  double boundary_leakage = 0.0;
  double min_value = 0.0;
  double sup_value = 0.0;  // J = observed sup (forward solves)
};

// Closed-form short-time Gaussian seed in the reduced metric at time
// t - tau0 (conjugate orientation), normalized to unit mass. Includes the
// leading Jacobian correction on curved variants. Throws ConfigError when
// the grid cannot resolve the seed width (sqrt(2 tau0) >= 3 spacings).
std::vector<double> delta_seed(const ModelFlow& flow, const Point& x, double t,
                               const ReducedGrid& grid, double tau0,
                               const SolverOptions& opts = {});

// Solver grid over the variant's reduced domain (cigar: comoving arclength
// window sized for the requested horizon).
ReducedGrid pde_grid(const ModelFlow& flow, const SolverOptions& opts, double tau_max);

// H_{(., s)}(x, t) on all requested slices (slice times < t). Mass is
// tracked, never renormalized; drift beyond tolerance raises
// ConvergenceError.
KernelField solve_conjugate(const ModelFlow& flow, const Point& x, double t,
                            const std::vector<double>& slice_times,
                            const SolverOptions& opts = {},
                            SolverDiagnostics* diag = nullptr);

// Forward solution u(., t) seeded near (z, T); reports J = sup u.
KernelField solve_forward(const ModelFlow& flow, const Point& z, double T, double t_end,
                          const std::vector<double>& slice_times,
                          const SolverOptions& opts = {},
                          SolverDiagnostics* diag = nullptr);

// Deep cigar runs: per-slice grids from the moving window.
struct MovingSlice {
  double s = 0.0;
  ReducedGrid grid;  // comoving arclength
  std::vector<double> H, f;
};
std::vector<MovingSlice> solve_cigar_deep(const ModelFlow& flow, double t,
                                          const std::vector<double>& slice_times,
                                          const SolverOptions& opts = {},
                                          SolverDiagnostics* diag = nullptr);

// Angular Fourier-mode family for off-tip cigar base points. Mode m solves
// the zonal equation with an extra m^2/tanh^2(xi) potential; the kernel is
// reassembled as H(xi, phi) = h_0 + 2 sum_m h_m cos(m phi).
struct CigarModeField {
  ReducedGrid grid;
  double base_xi = 0.0;
  double base_time = 0.0;
  std::vector<double> slice_times;
  // modes[m][slice][node]
  std::vector<std::vector<std::vector<double>>> modes;
  int dim() const { return 2; }
};
CigarModeField solve_cigar_modes(const ModelFlow& flow, double rho_base, double t,
                                 const std::vector<double>& slice_times, int n_modes,
                                 const SolverOptions& opts = {},
                                 SolverDiagnostics* diag = nullptr);

}  // namespace riccilab
