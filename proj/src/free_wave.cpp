#include "conewave/free_wave.hpp"

#include <cmath>
#include <limits>

namespace conewave {

namespace {
inline void catmull_weights(double t, double w[4]) {
  double t2 = t * t, t3 = t2 * t;
  w[0] = 0.5 * (-t3 + 2.0 * t2 - t);
  w[1] = 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0);
  w[2] = 0.5 * (-3.0 * t3 + 4.0 * t2 + t);
  w[3] = 0.5 * (t3 - t2);
}
}  // namespace

complexd FieldSampler::operator()(double x, double y, double z) const {
  const Grid3D& g = f_->grid;
  double L = g.half_width, h = g.spacing();
  int n = g.points_per_axis;
  if (x < -L || x > L || y < -L || y > L || z < -L || z > L) return complexd(0.0);
  if (f_->support_radius) {
    const double pad = *f_->support_radius + 2.0 * h;  // stencil reach
    if (x * x + y * y + z * z > pad * pad) return complexd(0.0);
  }
  double fx = (x + L) / h, fy = (y + L) / h, fz = (z + L) / h;
  int ix = std::min(static_cast<int>(fx), n - 2);
  int iy = std::min(static_cast<int>(fy), n - 2);
  int iz = std::min(static_cast<int>(fz), n - 2);
  double wx[4], wy[4], wz[4];
  catmull_weights(fx - ix, wx);
  catmull_weights(fy - iy, wy);
  catmull_weights(fz - iz, wz);
  auto clamp = [n](int i) { return i < 0 ? 0 : (i >= n ? n - 1 : i); };
  complexd acc(0.0);
  for (int c = 0; c < 4; ++c) {
    int kz = clamp(iz - 1 + c);
    complexd accy(0.0);
    for (int b = 0; b < 4; ++b) {
      int ky = clamp(iy - 1 + b);
      complexd accx(0.0);
      for (int a = 0; a < 4; ++a) accx += wx[a] * f_->at(clamp(ix - 1 + a), ky, kz);
      accy += wy[b] * accx;
    }
    acc += wz[c] * accy;
  }
  return acc;
}

ScalarField3D gradient4(const ScalarField3D& f, int axis) {
  const Grid3D& g = f.grid;
  int n = g.points_per_axis;
  double h = g.spacing();
  ScalarField3D out(g);
  for (int iz = 0; iz < n; ++iz)
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix) {
        int idx[3] = {ix, iy, iz};
        auto sample = [&](int d) {
          int j[3] = {ix, iy, iz};
          j[axis] += d;
          return f.at(j[0], j[1], j[2]);
        };
        int i = idx[axis];
        complexd v;
        if (i >= 2 && i <= n - 3) {
          v = (-sample(2) + 8.0 * sample(1) - 8.0 * sample(-1) + sample(-2)) / (12.0 * h);
        } else if (i == 0) {
          v = (-3.0 * sample(0) + 4.0 * sample(1) - sample(2)) / (2.0 * h);
        } else if (i == n - 1) {
          v = (3.0 * sample(0) - 4.0 * sample(-1) + sample(-2)) / (2.0 * h);
        } else {
          v = (sample(1) - sample(-1)) / (2.0 * h);
        }
        out.at(ix, iy, iz) = v;
      }
  if (f.support_radius) out.support_radius = *f.support_radius + 2.0 * h;
  return out;
}

complexd spherical_mean(const FieldSampler& f, const std::array<double, 3>& x,
                        double r, const SphereRule& rule) {
  KahanSum re, im;
  for (std::size_t k = 0; k < rule.size(); ++k) {
    const auto& w = rule.nodes[k];
    complexd v = f(x[0] + r * w[0], x[1] + r * w[1], x[2] + r * w[2]);
    re.add(rule.weights[k] * v.real());
    im.add(rule.weights[k] * v.imag());
  }
  return complexd(re.value(), im.value()) / (4.0 * M_PI);
}

ScalarField3D sine_free(const ScalarField3D& f1, double t, const SphereRule& rule) {
  const Grid3D& g = f1.grid;
  ScalarField3D out(g);
  FieldSampler s(f1);
  double r = std::abs(t);
  std::int64_t N = g.count();
  // Finite speed: x further than (data support) + |t| cannot be reached.
  double reach = f1.support_radius
                     ? *f1.support_radius + r + 4.0 * g.spacing()
                     : std::numeric_limits<double>::infinity();
  for (std::int64_t i = 0; i < N; ++i) {
    auto x = g.point(i);
    if (x[0] * x[0] + x[1] * x[1] + x[2] * x[2] > reach * reach) continue;
    out.values[static_cast<std::size_t>(i)] = t * spherical_mean(s, x, r, rule);
  }
  if (f1.support_radius) out.support_radius = *f1.support_radius + r;
  return out;
}

ScalarField3D cosine_free(const ScalarField3D& f0, double t, const SphereRule& rule) {
  const Grid3D& g = f0.grid;
  ScalarField3D out(g);
  FieldSampler s0(f0);
  ScalarField3D gx = gradient4(f0, 0), gy = gradient4(f0, 1), gz = gradient4(f0, 2);
  FieldSampler sx(gx), sy(gy), sz(gz);
  double r = std::abs(t);
  std::int64_t N = g.count();
  double reach = f0.support_radius
                     ? *f0.support_radius + r + 4.0 * g.spacing()
                     : std::numeric_limits<double>::infinity();
  for (std::int64_t i = 0; i < N; ++i) {
    auto x = g.point(i);
    if (x[0] * x[0] + x[1] * x[1] + x[2] * x[2] > reach * reach) continue;
    KahanSum re, im;
    for (std::size_t k = 0; k < rule.size(); ++k) {
      const auto& w = rule.nodes[k];
      double px = x[0] + r * w[0], py = x[1] + r * w[1], pz = x[2] + r * w[2];
      complexd v = s0(px, py, pz) +
                   r * (w[0] * sx(px, py, pz) + w[1] * sy(px, py, pz) + w[2] * sz(px, py, pz));
      re.add(rule.weights[k] * v.real());
      im.add(rule.weights[k] * v.imag());
    }
    out.values[static_cast<std::size_t>(i)] = complexd(re.value(), im.value()) / (4.0 * M_PI);
  }
  if (f0.support_radius) out.support_radius = *f0.support_radius + r;
  return out;
}

RadialProfile radial_oracle(const RadialProfile& profile, double t, WaveKind kind) {
  profile.validate();
  double rmax = profile.r.back();
  double need = profile.r.back();  // output extent matches input extent
  if (rmax < std::abs(t))
    throw std::invalid_argument("radial_oracle: profile does not resolve the |t| shift");
  (void)need;

  auto w = [&](double rho) -> complexd { return rho * profile.eval(rho); };

  RadialProfile out;
  out.r = profile.r;
  out.values.resize(profile.values.size());
  out.parity = RadialProfile::Parity::Even;

  if (kind == WaveKind::Cosine) {
    double dr = profile.r.size() > 1 ? profile.r[1] - profile.r[0] : 1e-3;
    for (std::size_t k = 0; k < out.r.size(); ++k) {
      double r = out.r[k];
      if (r < 0.25 * dr) {
        // u(0,t) = w'(t), central difference
        out.values[k] = (w(t + 0.5 * dr) - w(t - 0.5 * dr)) / dr;
      } else {
        out.values[k] = (w(r + t) + w(r - t)) / (2.0 * r);
      }
    }
    return out;
  }

  // sine: W(rho) = int_0^rho sigma * psi(sigma) d sigma, even in rho.
  double dr = profile.r.size() > 1 ? profile.r[1] - profile.r[0] : 1e-3;
  double extent = rmax + std::abs(t);
  double hfine = dr / 4.0;
  int m = static_cast<int>(std::ceil(extent / hfine)) + 2;
  if (m % 2 == 1) ++m;  // even interval count for Simpson
  hfine = extent > 0 ? (m > 0 ? extent / m : hfine) : hfine;
  std::vector<complexd> W(m + 1, complexd(0.0));
  // composite Simpson cumulative: integrate pairwise over [2j, 2j+2]
  for (int j = 0; j + 2 <= m; j += 2) {
    double a = j * hfine;
    complexd seg = hfine / 3.0 * (w(a) + 4.0 * w(a + hfine) + w(a + 2.0 * hfine));
    W[j + 2] = W[j] + seg;
    // midpoint value by half-Simpson over [a, a+h]
    W[j + 1] = W[j] + hfine / 6.0 * (w(a) + 4.0 * w(a + 0.5 * hfine) + w(a + hfine));
  }
  auto Weval = [&](double rho) -> complexd {
    double a = std::abs(rho);
    if (a >= extent) return W[m];
    double f = a / hfine;
    int k = std::min(static_cast<int>(f), m - 1);
    double tt = f - k;
    return (1.0 - tt) * W[k] + tt * W[k + 1];
  };
  for (std::size_t k = 0; k < out.r.size(); ++k) {
    double r = out.r[k];
    if (r < 0.25 * dr) {
      out.values[k] = t * profile.eval(t);  // u(0,t) = t psi(t)
    } else {
      out.values[k] = (Weval(r + t) - Weval(r - t)) / (2.0 * r);
    }
  }
  return out;
}

namespace {
ScalarField3D resolvent_conv(const ScalarField3D& f, complexd sqrtz) {
  const Grid3D& g = f.grid;
  double h = g.spacing();
  double h3 = h * h * h;
  complexd i_unit(0.0, 1.0);
  Conv3D conv(
      g,
      [sqrtz, h3, i_unit](double r) {
        return std::exp(i_unit * sqrtz * r) / (4.0 * M_PI * r) * h3;
      },
      // diagonal cell: cell integral for the singular 1/r part plus the
      // midpoint sample i sqrtz h^3 of the smooth remainder, which keeps the
      // sampled smooth kernel consistent with the midpoint rule
      (cube_inverse_power_integral(1.0, h) + i_unit * sqrtz * h3) / (4.0 * M_PI));
  ScalarField3D out(g);
  out.values = conv.apply(f.values);
  return out;
}
}  // namespace

ScalarField3D free_resolvent_apply(const ScalarField3D& f, complexd z) {
  if (z.imag() == 0.0 && z.real() >= 0.0)
    throw std::invalid_argument(
        "free_resolvent_apply: z on [0,inf); use free_resolvent_boundary");
  complexd s = std::sqrt(z);
  if (s.imag() < 0.0) s = -s;
  return resolvent_conv(f, s);
}

ScalarField3D free_resolvent_boundary(const ScalarField3D& f, double lambda, int sign) {
  if (sign != 1 && sign != -1)
    throw std::invalid_argument("free_resolvent_boundary: sign must be +1 or -1");
  return resolvent_conv(f, complexd(sign * lambda, 0.0));
}

double ks_constant(double s) {
  // C_s chosen so the s -> 1 limit reproduces the sharp-cone kernel
  // chi_{t<r}/(4 pi r); the closed form is 0 * inf at s = 1, where the limit
  // of Gamma(2-2s) sin(pi(1-s)) is pi/2.
  if (s == 1.0) return -1.0 / (8.0 * M_PI);
  return -std::tgamma(2.0 - 2.0 * s) * std::sin(M_PI * (1.0 - s)) / (4.0 * M_PI * M_PI);
}

double ks_kernel(double r, double t, double s) {
  if (r <= 0.0) throw std::invalid_argument("ks_kernel: r > 0 required");
  if (s == 1.0) return (std::abs(t) < r ? 1.0 : 0.0) / (4.0 * M_PI * r);
  if (s <= 0.5 || s >= 1.5)
    throw std::invalid_argument("ks_kernel: s in (1/2,3/2) required");
  if (t == r) throw std::domain_error("ks_kernel: non-integrable point t = r");
  double e = 2.0 - 2.0 * s;
  double sgn = t > r ? 1.0 : -1.0;
  return ks_constant(s) / r *
         (sgn / std::pow(std::abs(r - t), e) - 1.0 / std::pow(r + t, e));
}

}  // namespace conewave
