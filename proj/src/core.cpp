#include "conewave/core.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "json.hpp"

namespace conewave {

Grid3D::Grid3D(double L, int n) : half_width(L), points_per_axis(n) {
  if (L <= 0.0) throw std::invalid_argument("Grid3D: half_width must be positive");
  if (n < 3 || n % 2 == 0)
    throw std::invalid_argument("Grid3D: points_per_axis must be odd and >= 3");
}

ScalarField3D ScalarField3D::from_function(
    const Grid3D& g, const std::function<complexd(double, double, double)>& f,
    std::optional<double> support_radius) {
  ScalarField3D out(g);
  int n = g.points_per_axis;
  std::size_t k = 0;
  for (int iz = 0; iz < n; ++iz)
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix, ++k) {
        double x = g.coord(ix), y = g.coord(iy), z = g.coord(iz);
        if (support_radius && x * x + y * y + z * z > (*support_radius) * (*support_radius)) {
          out.values[k] = 0.0;
        } else {
          out.values[k] = f(x, y, z);
        }
      }
  out.support_radius = support_radius;
  return out;
}

ScalarField3D square_well(const Grid3D& g, double depth, double radius) {
  ScalarField3D out(g);
  int n = g.points_per_axis;
  double h = g.spacing();
  double half_diag = 0.5 * std::sqrt(3.0) * h;
  const int sub = 8;  // midpoint subsamples per axis for boundary cells
  std::size_t k = 0;
  for (int iz = 0; iz < n; ++iz)
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix, ++k) {
        double x = g.coord(ix), y = g.coord(iy), z = g.coord(iz);
        double r = std::sqrt(x * x + y * y + z * z);
        if (r <= radius - half_diag) {
          out.values[k] = -depth;
        } else if (r < radius + half_diag) {
          int inside = 0;
          for (int az = 0; az < sub; ++az)
            for (int ay = 0; ay < sub; ++ay)
              for (int ax = 0; ax < sub; ++ax) {
                double sx = x + h * ((ax + 0.5) / sub - 0.5);
                double sy = y + h * ((ay + 0.5) / sub - 0.5);
                double sz = z + h * ((az + 0.5) / sub - 0.5);
                if (sx * sx + sy * sy + sz * sz <= radius * radius) ++inside;
              }
          out.values[k] = -depth * double(inside) / (sub * sub * sub);
        }
      }
  out.support_radius = radius + half_diag;
  return out;
}

bool ScalarField3D::is_finite() const {
  for (const auto& v : values)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  return true;
}

void ScalarField3D::check_support_invariant() const {
  if (!support_radius) return;
  double tol = 1e-14 * max_abs();
  double R2 = (*support_radius) * (*support_radius);
  std::int64_t N = grid.count();
  for (std::int64_t i = 0; i < N; ++i) {
    auto p = grid.point(i);
    if (p[0] * p[0] + p[1] * p[1] + p[2] * p[2] > R2 && std::abs(values[i]) > tol)
      throw std::runtime_error("ScalarField3D: values do not vanish outside declared support");
  }
}

double ScalarField3D::max_abs() const {
  double m = 0.0;
  for (const auto& v : values) m = std::max(m, std::abs(v));
  return m;
}

double ScalarField3D::l2_norm() const {
  KahanSum s;
  for (const auto& v : values) s.add(std::norm(v));
  double h = grid.spacing();
  return std::sqrt(s.value() * h * h * h);
}

double ScalarField3D::l1_norm() const {
  KahanSum s;
  for (const auto& v : values) s.add(std::abs(v));
  double h = grid.spacing();
  return s.value() * h * h * h;
}

complexd ScalarField3D::inner(const ScalarField3D& other) const {
  if (grid != other.grid) throw std::invalid_argument("inner: grid mismatch");
  KahanSum re, im;
  for (std::size_t i = 0; i < values.size(); ++i) {
    complexd t = std::conj(values[i]) * other.values[i];
    re.add(t.real());
    im.add(t.imag());
  }
  double h3 = std::pow(grid.spacing(), 3);
  return complexd(re.value(), im.value()) * h3;
}

std::vector<std::int64_t> ScalarField3D::support_indices(double tol) const {
  double cut = tol * max_abs();
  std::vector<std::int64_t> out;
  std::int64_t N = grid.count();
  for (std::int64_t i = 0; i < N; ++i)
    if (std::abs(values[i]) > cut) out.push_back(i);
  return out;
}

void RadialProfile::validate() const {
  if (r.empty() || r.front() != 0.0)
    throw std::invalid_argument("RadialProfile: samples must start at r = 0");
  for (std::size_t i = 1; i < r.size(); ++i)
    if (r[i] <= r[i - 1])
      throw std::invalid_argument("RadialProfile: r samples must be strictly increasing");
  if (r.size() != values.size())
    throw std::invalid_argument("RadialProfile: size mismatch");
}

complexd RadialProfile::eval(double radius) const {
  double a = std::abs(radius);
  double sign = 1.0;
  if (radius < 0.0 && parity == Parity::Odd) sign = -1.0;
  // assume uniform spacing for the fast path; fall back to search otherwise
  double rmax = r.back();
  if (a >= rmax) return sign * values.back() * std::exp(-(a - rmax));  // decayed tail
  double dr = r[1] - r[0];
  int k = static_cast<int>(a / dr);
  if (k >= static_cast<int>(r.size()) - 1) k = static_cast<int>(r.size()) - 2;
  // Catmull-Rom through samples k-1..k+2 with parity extension below r=0
  auto sample = [&](int j) -> complexd {
    if (j >= 0) {
      if (j < static_cast<int>(values.size())) return values[j];
      return values.back();
    }
    complexd v = values[-j];
    return parity == Parity::Odd ? -v : v;
  };
  double t = (a - k * dr) / dr;
  complexd p0 = sample(k - 1), p1 = sample(k), p2 = sample(k + 1), p3 = sample(k + 2);
  complexd v = 0.5 * ((2.0 * p1) + (-p0 + p2) * t + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * (t * t) +
                      (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * (t * t * t));
  return sign * v;
}

double euclid_dist(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

namespace {
// Gauss-Legendre nodes/weights on [0,1] via Newton iteration.
void gauss_legendre01(int n, std::vector<double>& x, std::vector<double>& w) {
  x.resize(n);
  w.resize(n);
  for (int i = 0; i < n; ++i) {
    double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2 * j + 1) * t * p1 - j * p2) / (j + 1);
      }
      double dp = n * (t * p0 - p1) / (t * t - 1.0);
      double dt = p0 / dp;
      t -= dt;
      if (std::abs(dt) < 1e-15) break;
    }
    double p0 = 1.0, p1 = 0.0;
    for (int j = 0; j < n; ++j) {
      double p2 = p1;
      p1 = p0;
      p0 = ((2 * j + 1) * t * p1 - j * p2) / (j + 1);
    }
    double dp = n * (t * p0 - p1) / (t * t - 1.0);
    x[i] = 0.5 * (1.0 + t);
    w[i] = 1.0 / ((1.0 - t * t) * dp * dp);
  }
}
}  // namespace

double cube_inverse_power_integral(double theta, double h) {
  if (theta < 0.0 || theta >= 3.0)
    throw std::invalid_argument("cube_inverse_power_integral: need 0 <= theta < 3");
  if (h <= 0.0) throw std::invalid_argument("cube_inverse_power_integral: h > 0 required");
  if (theta == 0.0) return h * h * h;
  // Split [0,a]^3 (a = h/2) into three pyramids by dominant coordinate; on the
  // z-dominant pyramid substitute x = z t, y = z u, leaving a smooth integrand.
  double a = 0.5 * h;
  static thread_local std::vector<double> gx, gw;
  if (gx.size() != 24) gauss_legendre01(24, gx, gw);
  KahanSum J;
  for (std::size_t i = 0; i < gx.size(); ++i)
    for (std::size_t j = 0; j < gx.size(); ++j) {
      double t = gx[i], u = gx[j];
      J.add(gw[i] * gw[j] * std::pow(1.0 + t * t + u * u, -0.5 * theta));
    }
  // 8 octants x 3 pyramids; z-integral gives a^{3-theta}/(3-theta)
  return 24.0 * std::pow(a, 3.0 - theta) / (3.0 - theta) * J.value();
}

int next_fast_size(int n) {
  for (int m = n;; ++m) {
    int r = m;
    for (int p : {2, 3, 5, 7})
      while (r % p == 0) r /= p;
    if (r == 1) return m;
  }
}

Conv3D::Conv3D(const Grid3D& grid, const std::function<complexd(double r)>& radial_kernel,
               complexd diagonal_value)
    : grid_(grid) {
  int n = grid.points_per_axis;
  m_ = next_fast_size(2 * n - 1);
  double h = grid.spacing();
  std::vector<complexd> k(static_cast<std::size_t>(m_) * m_ * m_, complexd(0.0));
  auto wrap = [&](int d) { return d >= 0 ? d : d + m_; };
  for (int dz = -(n - 1); dz <= n - 1; ++dz)
    for (int dy = -(n - 1); dy <= n - 1; ++dy)
      for (int dx = -(n - 1); dx <= n - 1; ++dx) {
        std::size_t idx = static_cast<std::size_t>(wrap(dx)) +
                          static_cast<std::size_t>(m_) * (wrap(dy) + static_cast<std::size_t>(m_) * wrap(dz));
        if (dx == 0 && dy == 0 && dz == 0) {
          k[idx] = diagonal_value;
        } else {
          double r = h * std::sqrt(double(dx) * dx + double(dy) * dy + double(dz) * dz);
          k[idx] = radial_kernel(r);
        }
      }
  kernel_hat_.resize(k.size());
  fftw_plan plan = fftw_plan_dft_3d(m_, m_, m_, reinterpret_cast<fftw_complex*>(k.data()),
                                    reinterpret_cast<fftw_complex*>(kernel_hat_.data()),
                                    FFTW_FORWARD, FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);
}

std::vector<complexd> Conv3D::apply(const std::vector<complexd>& f) const {
  int n = grid_.points_per_axis;
  std::size_t M = static_cast<std::size_t>(m_) * m_ * m_;
  std::vector<complexd> buf(M, complexd(0.0));
  for (int iz = 0; iz < n; ++iz)
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix)
        buf[ix + static_cast<std::size_t>(m_) * (iy + static_cast<std::size_t>(m_) * iz)] =
            f[static_cast<std::size_t>(grid_.index(ix, iy, iz))];
  std::vector<complexd> spec(M);
  fftw_plan fwd = fftw_plan_dft_3d(m_, m_, m_, reinterpret_cast<fftw_complex*>(buf.data()),
                                   reinterpret_cast<fftw_complex*>(spec.data()),
                                   FFTW_FORWARD, FFTW_ESTIMATE);
  fftw_execute(fwd);
  fftw_destroy_plan(fwd);
  for (std::size_t i = 0; i < M; ++i) spec[i] *= kernel_hat_[i];
  fftw_plan bwd = fftw_plan_dft_3d(m_, m_, m_, reinterpret_cast<fftw_complex*>(spec.data()),
                                   reinterpret_cast<fftw_complex*>(buf.data()),
                                   FFTW_BACKWARD, FFTW_ESTIMATE);
  fftw_execute(bwd);
  fftw_destroy_plan(bwd);
  std::vector<complexd> out(static_cast<std::size_t>(grid_.count()));
  double scale = 1.0 / double(M);
  for (int iz = 0; iz < n; ++iz)
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix)
        out[static_cast<std::size_t>(grid_.index(ix, iy, iz))] =
            buf[ix + static_cast<std::size_t>(m_) * (iy + static_cast<std::size_t>(m_) * iz)] * scale;
  return out;
}

void write_field(const std::string& path, const ScalarField3D& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("write_field: cannot open " + path);
  os.write("WCF1", 4);
  double L = f.grid.half_width;
  std::int32_t n = f.grid.points_per_axis;
  os.write(reinterpret_cast<const char*>(&L), 8);
  os.write(reinterpret_cast<const char*>(&n), 4);
  for (const auto& v : f.values) {
    double re = v.real(), im = v.imag();
    os.write(reinterpret_cast<const char*>(&re), 8);
    os.write(reinterpret_cast<const char*>(&im), 8);
  }
  nlohmann::json meta;
  meta["half_width"] = L;
  meta["points_per_axis"] = n;
  if (f.support_radius) meta["support_radius"] = *f.support_radius;
  std::ofstream js(path + ".json");
  js << meta.dump(2) << "\n";
}

ScalarField3D read_field(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("read_field: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (std::memcmp(magic, "WCF1", 4) != 0)
    throw std::runtime_error("read_field: bad magic in " + path);
  double L;
  std::int32_t n;
  is.read(reinterpret_cast<char*>(&L), 8);
  is.read(reinterpret_cast<char*>(&n), 4);
  ScalarField3D f(Grid3D(L, n));
  for (auto& v : f.values) {
    double re, im;
    is.read(reinterpret_cast<char*>(&re), 8);
    is.read(reinterpret_cast<char*>(&im), 8);
    v = complexd(re, im);
  }
  if (!is) throw std::runtime_error("read_field: truncated file " + path);
  std::ifstream js(path + ".json");
  if (js) {
    nlohmann::json meta = nlohmann::json::parse(js, nullptr, false);
    if (!meta.is_discarded() && meta.contains("support_radius"))
      f.support_radius = meta["support_radius"].get<double>();
  }
  return f;
}

}  // namespace conewave
