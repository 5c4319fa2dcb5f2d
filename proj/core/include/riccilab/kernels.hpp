#pragma once

#include <functional>
#include <vector>

#include "riccilab/geometry.hpp"
#include "riccilab/grid.hpp"

namespace riccilab {

enum class KernelMethod { exact, spectral, pde };

struct KernelMeta {
  KernelMethod method = KernelMethod::exact;
  double truncation_error = 0.0;  // bound on lattice/series truncation
  int terms = 0;                  // images or spectral modes used (max over evals)
  double mass_drift = 0.0;        // pde only: max |mass - 1| observed
  double boundary_leakage = 0.0;  // pde only: absorbing-boundary loss
};

struct KernelSlice {
  double s = 0.0;
  std::vector<double> H;
  std::vector<double> f;
};

// Sampled conjugate heat kernel based at (x, t), H > 0, with the potential
// f = -log((4 pi (t-s))^{n/2} H) per slice, on a 1-D reduced grid.
struct KernelField {
  ModelFlow flow;
  Point base_point;
  double base_time = 0.0;
  ReducedGrid grid;
  std::vector<KernelSlice> slices;  // ascending in s, all s < base_time
  KernelMeta meta;

  const KernelSlice& slice_at(double s) const;  // LookupError if absent
  double mass(const KernelSlice& sl) const;     // int H dg_s over the reduced grid
  void validate(double mass_tol) const;
};

double potential_from_H(int n, double tau, double H);

// ---- exact flat constructions ----

struct TruncationInfo {
  int terms = 0;
  double remainder = 0.0;
  bool dual = false;  // Fourier-mode representation was used
};

double euclidean_kernel(int n, double dist, double tau);

// Theta-sum heat kernel on a flat torus; image sum for small tau, dual
// Fourier sum for large tau, crossover at L_min^2 / (4 pi).
double torus_kernel(const FlatTorus& torus, std::vector<double> delta, double tau,
                    double abs_tol = 1e-12, TruncationInfo* info = nullptr);
std::vector<double> torus_kernel_grad(const FlatTorus& torus, std::vector<double> delta,
                                      double tau, double abs_tol = 1e-12);

// H_{(z,s)}(x,t) on any flat variant: Gaussians, lattice sums, factor
// products, deck-orbit sums.
double exact_flat_kernel(const ModelFlow& flow, const Point& z, double s, const Point& x,
                         double t, double abs_tol = 1e-12, TruncationInfo* info = nullptr);
// Gradient in the z coordinates.
std::vector<double> exact_flat_kernel_grad(const ModelFlow& flow, const Point& z, double s,
                                           const Point& x, double t, double abs_tol = 1e-12);

// Deck-orbit sum H(pi z, pi x) = sum_h cover(h(z)) over a finite deck group.
double quotient_kernel(const std::function<double(const Point&)>& cover_kernel,
                       const std::vector<DeckMap>& deck, const Point& z);

// ---- spectral sphere kernel ----

struct SphereEval {
  double H = 0.0;
  double dH = 0.0;   // d/d theta
  double d2H = 0.0;  // d^2/d theta^2
  int terms = 0;
  double remainder = 0.0;
};

// Zonal-harmonic expansion of the conjugate heat kernel on the shrinking
// sphere. Eigenvalues l(l+n-1)/c(sigma) plus the -R H term integrate in
// closed form to powers of (t_sing - sigma):
//   H(theta; s,t) = c(t)^{-n/2} / w_n * sum_l N_l Pbar_l(cos theta) rho^{q_l},
// rho = (t_sing - t)/(t_sing - s), q_l = n/2 + l(l+n-1)/(2(n-1)).
// The l=0 coefficient makes int H dg_s = 1 exactly.
SphereEval sphere_kernel_eval(const ModelFlow& flow, double theta, double s, double t,
                              double abs_tol = 1e-8, int l_max = -1,
                              bool with_derivatives = false);
double spectral_sphere_kernel(const ModelFlow& flow, double theta, double s, double t,
                              double abs_tol = 1e-8, int l_max = -1);

// ---- sup kernel M_{T1,T2} ----

struct SupKernelOptions {
  std::vector<Point> search_points;  // cigar base-point samples; default tip region
  int grid_nodes = 2048;
  double tol = 1e-8;
};

// M_{T1,T2} = sup_{x,y} H_{(x,T1)}(y,T2); diagonal closed forms on
// homogeneous variants, sampled forward solves on the cigar.
double sup_kernel(const ModelFlow& flow, double T1, double T2,
                  const SupKernelOptions& opts = {});

// ---- field builders ----

// Exact-kernel field (euclidean radial grid or 1-D torus coordinates).
KernelField make_exact_field(const ModelFlow& flow, const Point& x, double t,
                             const std::vector<double>& slice_times, const ReducedGrid& grid,
                             double abs_tol = 1e-12);
// Spectral field on the shrinking sphere; grid in the polar angle.
KernelField make_spectral_field(const ModelFlow& flow, double t,
                                const std::vector<double>& slice_times, const ReducedGrid& grid,
                                double abs_tol = 1e-8);

void write_kernel_csv(const KernelField& field, const std::string& path);

}  // namespace riccilab
