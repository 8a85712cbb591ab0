#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "conewave/core.hpp"

namespace conewave {

/// A finite complex measure in the rho variable: exact atoms plus a sparse
/// histogram on the global lattice rho = j * drho (mass carried at the
/// lattice point; arbitrary locations round to the nearest one). The lattice
/// is closed under addition, so Fourier transforms of histogram kernels stay
/// exactly multiplicative under composition. Compositions always land in the
/// histogram so repeated products stay linear in the inputs; first-generation
/// kernels keep exact atoms.
struct RhoMeasure {
  std::vector<std::pair<double, complexd>> atoms;       // sorted by location
  std::vector<std::pair<std::int64_t, complexd>> bins;  // sorted by bin index

  bool empty() const { return atoms.empty() && bins.empty(); }
  double total_variation() const;
  complexd signed_mass() const;
  complexd fourier(double lambda, double drho) const;  // sum w e^{-i rho lambda}
  double max_abs_location(double drho) const;

  void add_atom(double location, complexd weight);      // merges equal locations
  void add_bin(std::int64_t index, complexd mass);      // merges equal indices
  void add(const RhoMeasure& other);
  void scale(complexd c);
  RhoMeasure weighted(double drho) const;  // multiply by rho (atom location / bin center)
};

inline double bin_center(std::int64_t j, double drho) { return j * drho; }
inline std::int64_t bin_of(double rho, double drho) {
  return static_cast<std::int64_t>(std::llround(rho / drho));
}

/// Operator of the form identity_part * I + dense block supported on a sparse
/// set of rows (full-grid columns); entries embed the h^3 quadrature weight.
struct OperatorMatrix {
  Grid3D grid;
  complexd identity_part{0.0};
  std::vector<std::int64_t> rows;
  Eigen::MatrixXcd block;  // rows.size() x grid.count()

  std::vector<complexd> apply(const std::vector<complexd>& f) const;
  double max_abs_entry() const;
  double frobenius() const;
  double bl1_norm() const;   // |identity_part| + max column abs sum of the block
  double blinf_norm() const; // |identity_part| + max row abs sum

  static OperatorMatrix multiply(const OperatorMatrix& a, const OperatorMatrix& b);
  static OperatorMatrix add(const OperatorMatrix& a, const OperatorMatrix& b);
  OperatorMatrix scaled(complexd c) const;
};

/// Light-cone operator kernel: sparse rows (restricted to the support of the
/// generating potential), full-grid columns, a RhoMeasure per entry, plus a
/// scalar multiple of the identity.
struct ConeKernel {
  Grid3D grid;
  double drho = 0.0;
  complexd identity_part{0.0};
  std::vector<std::int64_t> rows;
  std::vector<std::vector<RhoMeasure>> entries;  // [row][column], dense columns

  static ConeKernel identity(const Grid3D& g, double drho);
  bool is_pure_identity() const { return rows.empty(); }
  int row_position(std::int64_t grid_index) const;  // -1 when absent
};

/// T^- of a potential: one atom per (x, y) with x in supp V, located at
/// rho = |x - y| with weight V(x) h^3 / (4 pi |x - y|); the x = y cell uses
/// the regularized cube integral.
ConeKernel t_minus(const ScalarField3D& V, double drho = 0.0);

ConeKernel kernel_add(const ConeKernel& a, const ConeKernel& b);
ConeKernel kernel_scale(const ConeKernel& a, complexd c);

/// Composition: matrix product over the middle spatial index combined with
/// rho-convolution of the measures. Atom x atom products are binned, so the
/// output is linear and deterministic in both factors.
ConeKernel compose(const ConeKernel& a, const ConeKernel& b);

/// Entrywise total variation over rho.
OperatorMatrix marginal(const ConeKernel& t);

enum class SpaceId { L1, Kato, KatoTheta, KatoStar, Linf };

/// Upper bound for the operator norm of marginal(t) on the chosen space
/// (exact for L1 and Linf when identity_part or the block vanishes).
double ux_norm(const ConeKernel& t, SpaceId x, double theta = 1.0);

/// Exact B(L^1 -> X) norm via the extreme-point (delta) columns.
double ux_norm_l1_to(const ConeKernel& t, SpaceId target, double theta = 1.0);

/// T-hat(lambda): atoms contribute w e^{-i rho lambda} exactly, histogram
/// bins at their centers.
OperatorMatrix fourier(const ConeKernel& t, double lambda);

/// Multiplication by rho.
ConeKernel weighted(const ConeKernel& t);

enum class WienerMode { Neumann, FourierSide };

struct WienerOptions {
  int max_terms = 40;
  double tol = 1e-8;        // target residual bound for the Neumann tail
  double window = 0.0;      // fourier_side rho half-window P (0 = auto)
  bool taper = false;       // raised-cosine taper on the last 10% of the lambda band
  double singular_floor = 1e-10;
};

struct WienerDiagnostics {
  int terms_used = 0;
  double norm_ratio = 0.0;       // measured ux L1 norm of T
  double tail_bound = 0.0;       // geometric tail estimate of the truncation
  double min_singular = 0.0;     // over the lambda grid (fourier_side)
  double worst_lambda = 0.0;
  double tail_mass = 0.0;        // marginal mass beyond the window (diagnostic C2)
  double fourier_modulus = 0.0;  // modulus of continuity of T-hat on the grid (C1)
};

/// Inverse of (identity_part + T): returns S with compose(1 + T, S) ~ 1.
/// Neumann mode needs ux_norm(T, L1) < 1; fourier_side solves
/// (I + T-hat(lambda_m))^{-1} - I on the Nyquist-matched lambda grid and
/// transforms back to a rho histogram.
ConeKernel wiener_invert(const ConeKernel& t, WienerMode mode,
                         const WienerOptions& opts = {},
                         WienerDiagnostics* diag = nullptr);

/// Residual of d/dlambda (I + T-hat)^{-1} = -(I+T-hat)^{-1} T-hat' (I+T-hat)^{-1}
/// by central differences, normalized by the scale of the right-hand side.
double derivative_identity_check(const ConeKernel& t, double lambda,
                                 double dlambda = 1e-3);

void write_cone_kernel(const std::string& path, const ConeKernel& t);
ConeKernel read_cone_kernel(const std::string& path);

}  // namespace conewave
