#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace conewave {

using complexd = std::complex<double>;

/// Uniform Cartesian grid on the box [-L, L]^3 with an odd number of points
/// per axis, so the origin is always a grid point.
struct Grid3D {
  double half_width = 0.0;
  int points_per_axis = 0;

  Grid3D() = default;
  Grid3D(double L, int n);

  double spacing() const { return 2.0 * half_width / (points_per_axis - 1); }
  std::int64_t count() const {
    std::int64_t n = points_per_axis;
    return n * n * n;
  }
  double coord(int i) const { return -half_width + i * spacing(); }
  std::int64_t index(int ix, int iy, int iz) const {
    std::int64_t n = points_per_axis;
    return ix + n * (iy + n * iz);
  }
  std::array<int, 3> unpack(std::int64_t idx) const {
    int n = points_per_axis;
    int ix = static_cast<int>(idx % n);
    int iy = static_cast<int>((idx / n) % n);
    int iz = static_cast<int>(idx / (std::int64_t(n) * n));
    return {ix, iy, iz};
  }
  std::array<double, 3> point(std::int64_t idx) const {
    auto [ix, iy, iz] = unpack(idx);
    return {coord(ix), coord(iy), coord(iz)};
  }
  bool operator==(const Grid3D& o) const {
    return half_width == o.half_width && points_per_axis == o.points_per_axis;
  }
  bool operator!=(const Grid3D& o) const { return !(*this == o); }
};

/// Complex samples on a Grid3D, with optional declared compact support.
struct ScalarField3D {
  Grid3D grid;
  std::vector<complexd> values;
  std::optional<double> support_radius;

  ScalarField3D() = default;
  explicit ScalarField3D(const Grid3D& g)
      : grid(g), values(static_cast<std::size_t>(g.count()), complexd(0.0)) {}

  static ScalarField3D from_function(
      const Grid3D& g, const std::function<complexd(double, double, double)>& f,
      std::optional<double> support_radius = std::nullopt);

  complexd& at(int ix, int iy, int iz) {
    return values[static_cast<std::size_t>(grid.index(ix, iy, iz))];
  }
  complexd at(int ix, int iy, int iz) const {
    return values[static_cast<std::size_t>(grid.index(ix, iy, iz))];
  }

  bool is_finite() const;
  void check_support_invariant() const;

  double max_abs() const;
  double l2_norm() const;      // (sum |f|^2 h^3)^{1/2}
  double l1_norm() const;      // sum |f| h^3
  complexd inner(const ScalarField3D& other) const;  // <this, other> h^3

  /// Grid indices where |value| > tol * max_abs (tol = 0 keeps all nonzeros).
  std::vector<std::int64_t> support_indices(double tol = 0.0) const;
};

/// Radial samples v(r_k) with a declared parity for extending through r = 0.
struct RadialProfile {
  enum class Parity { Even, Odd };
  std::vector<double> r;        // strictly increasing, starting at 0
  std::vector<complexd> values;
  Parity parity = Parity::Even;

  void validate() const;
  /// Cubic interpolation of the parity-respecting extension to all real r.
  complexd eval(double radius) const;
};

double euclid_dist(const std::array<double, 3>& a, const std::array<double, 3>& b);

/// Spherical square well -depth * 1_{|x| <= radius}, with boundary cells
/// cell-averaged so the discretized well volume converges at second order.
ScalarField3D square_well(const Grid3D& g, double depth, double radius);

/// Exact integral of |x|^{-theta} over the cube [-h/2, h/2]^3, used to
/// regularize the x = y cell of kernels 1/|x-y|^theta.
double cube_inverse_power_integral(double theta, double h);

/// Smallest 2^a 3^b 5^c 7^d >= n.
int next_fast_size(int n);

/// Zero-padded discrete convolution on a Grid3D: out(x) = sum_y k(x-y) f(y).
/// The kernel is given per offset cell (dx,dy,dz in units of grid spacing),
/// with the zero offset passed explicitly (regularized diagonal).
class Conv3D {
 public:
  Conv3D(const Grid3D& grid,
         const std::function<complexd(double r)>& radial_kernel,
         complexd diagonal_value);
  std::vector<complexd> apply(const std::vector<complexd>& f) const;

 private:
  Grid3D grid_;
  int m_ = 0;  // padded size per axis
  std::vector<complexd> kernel_hat_;
};

/// Compensated (Kahan) accumulation, for long deterministic reductions.
struct KahanSum {
  double s = 0.0, c = 0.0;
  void add(double x) {
    double y = x - c;
    double t = s + y;
    c = (t - s) - y;
    s = t;
  }
  double value() const { return s; }
};

// Flat binary field format: magic "WCF1", half-width as 8-byte float,
// points-per-axis as 4-byte int, then n^3 little-endian complex pairs,
// x-fastest. A JSON sidecar <path>.json carries metadata.
void write_field(const std::string& path, const ScalarField3D& f);
ScalarField3D read_field(const std::string& path);

}  // namespace conewave
