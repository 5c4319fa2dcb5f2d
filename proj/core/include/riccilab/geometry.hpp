#pragma once

#include <string>
#include <variant>
#include <vector>

#include "riccilab/grid.hpp"

namespace riccilab {

// Reduced coordinates of a point. Flat variants use full coordinates
// (k, or k+m for products); the sphere uses the polar angle {theta};
// the cigar uses the coordinate radius {rho}.
using Point = std::vector<double>;

struct EuclideanStatic {
  int dim = 1;
};

// R^k / Lambda with Lambda spanned by the columns of `basis` (row-major k x k).
struct FlatTorus {
  int dim = 1;
  std::vector<double> basis;
};

struct FlatProduct {
  FlatTorus torus;
  int euclidean_dim = 0;
};

// Affine isometry y -> Q y + b of a flat torus cover. Q must be orthogonal
// and map the lattice to itself.
struct DeckMap {
  std::vector<double> linear;  // row-major k x k
  Point shift;
};

struct TorusQuotient {
  FlatTorus cover;
  std::vector<DeckMap> deck;
};

// g(t) = 2(n-1)(t_sing - t) * g_unit on S^n, ancient for t <= 0 < t_sing.
struct ShrinkingSphere {
  int dim = 2;
  double t_sing = 1.0;
};

// g(t) = (dx^2 + dy^2) / (e^{4t} + x^2 + y^2); eternal steady soliton.
struct CigarSoliton {};

enum class FlowKind { euclidean, flat_torus, flat_product, torus_quotient, shrinking_sphere, cigar };

enum class DomainKind {
  euclid_radial,  // r in [0, truncation]
  flat_coords,    // full fundamental-domain coordinates (torus/product/quotient)
  sphere_polar,   // theta in [0, pi]
  cigar_radial,   // rho in [0, truncation] (solver works in comoving arclength)
};

struct MetricDescriptor {
  bool homogeneous = true;
  double scale = 1.0;    // g(t) = scale * g_reference for homogeneous variants
  double cigar_a = 0.0;  // e^{4t}
  double conformal(double rho) const { return 1.0 / (cigar_a + rho * rho); }
};

struct VolumeRatio {
  double ratio = 0.0;   // Vol(B_t(x,r)) / r^n
  bool admissible = false;  // max |sectional| <= r^{-2} sampled over B x [t-r^2, t]
  double max_curvature = 0.0;
  bool distance_approximate = false;  // cigar balls use the asymptotic-cylinder metric
};

// One of the closed-form ancient flows. All other modules operate on this
// type; every quantity (curvature, distances, volume forms) is exact, which
// is what makes the kernel and entropy computations independently checkable.
class ModelFlow {
 public:
  using Variant = std::variant<EuclideanStatic, FlatTorus, FlatProduct, TorusQuotient,
                               ShrinkingSphere, CigarSoliton>;

  static ModelFlow euclidean(int n);
  static ModelFlow flat_torus(int k, std::vector<double> basis);
  static ModelFlow cube_torus(int k, double side);  // axis-aligned lattice
  static ModelFlow flat_product(FlatTorus torus, int euclidean_dim);
  static ModelFlow torus_quotient(FlatTorus cover, std::vector<DeckMap> deck);
  static ModelFlow shrinking_sphere(int n, double t_sing);
  static ModelFlow cigar();

  FlowKind kind() const;
  const Variant& variant() const { return v_; }
  template <class T>
  const T& as() const { return std::get<T>(v_); }

  int dim() const;          // manifold dimension n
  bool is_static() const;
  bool is_flat() const;
  bool compact() const;
  DomainKind domain() const;
  std::string name() const;

  // Flow lives on (-infty, 0]; throws DomainError outside.
  void check_time(double t) const;

  MetricDescriptor metric_scale(double t) const;
  double scalar_curvature(const Point& x, double t) const;  // >= 0 on every variant
  // Orthonormal Ricci eigenvalues (radial, tangential) at a reduced point.
  void ricci_eigenvalues(const Point& x, double t, double& radial, double& tangential) const;
  double max_sectional(const Point& x, double t) const;

  double geodesic_distance(const Point& x, const Point& y, double t) const;

  // Reduced 1-D measure density at coordinate `u` and time `s`:
  //   euclid: omega_{n-1} r^{n-1};  torus k=1: 1;  sphere: c(s)^{n/2} w_{n-1} sin^{n-1};
  //   cigar (comoving arclength xi): 2 pi tanh(xi).
  double reduced_measure(double u, double s) const;

  double total_volume(double t) const;  // +inf on noncompact variants
  double ball_volume(const Point& x, double r, double t) const;
  VolumeRatio volume_ratio(const Point& x, double t, double r,
                           int curvature_samples = 32,
                           double truncation_radius = 0.0) const;

  // Sphere helpers.
  double sphere_scale(double t) const;  // c(t) = 2(n-1)(t_sing - t)

  // Cigar helpers: comoving radial coordinate w = rho e^{-2t}, arclength
  // xi = asinh(w). The comoving metric is the static cigar
  // d xi^2 + tanh^2(xi) d phi^2 at every time.
  double cigar_xi(double rho, double t) const;
  double cigar_rho(double xi, double t) const;

 private:
  explicit ModelFlow(Variant v);
  void validate() const;
  Variant v_;
};

// Volume of the unit n-sphere / unit n-ball.
double unit_sphere_volume(int n);
double unit_ball_volume(int n);

// Lattice utilities shared with the kernel module.
double lattice_min_norm(const FlatTorus& torus);
double lattice_covolume(const FlatTorus& torus);
// Wrap a displacement to the closest lattice representative.
std::vector<double> lattice_wrap(const FlatTorus& torus, std::vector<double> delta);
Point deck_apply(const DeckMap& m, const Point& y);

}  // namespace riccilab
