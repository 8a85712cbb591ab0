#include "conewave/norms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"

namespace conewave {

std::string NormReport::to_json() const {
  static const char* names[] = {"L1", "Lp", "LorentzPQ", "Kato", "KatoTheta",
                                "WeakL3", "W11", "SupWeighted2"};
  nlohmann::json j;
  j["norm_id"] = names[static_cast<int>(norm_id)];
  j["value"] = value;
  if (attained_at) j["attained_at"] = {(*attained_at)[0], (*attained_at)[1], (*attained_at)[2]};
  if (coarse_grid_warning) j["coarse_grid_warning"] = true;
  if (norm_id == NormId::KatoTheta) j["theta"] = theta;
  if (norm_id == NormId::LorentzPQ) {
    j["p"] = p;
    j["q"] = q;
  }
  return j.dump(2);
}

namespace {

void require_finite(const ScalarField3D& f, const char* who) {
  if (!f.is_finite()) throw std::invalid_argument(std::string(who) + ": non-finite values");
}

// sum_x |V(x)| / |x-y|^theta h^3 at an arbitrary (off-grid) center y.
// Direct sum; only used during the refinement pass around the argmax.
double theta_sum_at(const ScalarField3D& V, double theta,
                    const std::array<double, 3>& y, double diag_cell) {
  double h = V.grid.spacing();
  double h3 = h * h * h;
  KahanSum s;
  std::int64_t N = V.grid.count();
  for (std::int64_t i = 0; i < N; ++i) {
    double a = std::abs(V.values[i]);
    if (a == 0.0) continue;
    double r = euclid_dist(V.grid.point(i), y);
    if (r < 0.5 * h) {
      // inside the self-cell: use the exact cube integral as the local weight
      s.add(a * diag_cell / h3 * h3);
    } else {
      s.add(a * std::pow(r, -theta) * h3);
    }
  }
  return s.value();
}

// Golden-section maximization of g over [a,b].
template <typename F>
double golden_max(F&& g, double a, double b, double& best_x) {
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = g(c), fd = g(d);
  for (int it = 0; it < 40; ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = g(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = g(d);
    }
  }
  best_x = 0.5 * (a + b);
  return std::max(fc, fd);
}

NormReport theta_norm_impl(const ScalarField3D& f, double theta, NormId id) {
  require_finite(f, "kato_norm");
  const Grid3D& g = f.grid;
  double h = g.spacing();
  double h3 = h * h * h;
  double diag = cube_inverse_power_integral(theta, h);

  // All centers at once: convolution of |f| against the radial weight.
  std::vector<complexd> absf(f.values.size());
  for (std::size_t i = 0; i < absf.size(); ++i) absf[i] = std::abs(f.values[i]);
  Conv3D conv(g, [theta, h3](double r) { return complexd(std::pow(r, -theta) * h3); },
              complexd(diag));
  std::vector<complexd> s = conv.apply(absf);

  std::int64_t best = 0;
  double best_val = -1.0;
  for (std::int64_t i = 0; i < g.count(); ++i) {
    double v = s[static_cast<std::size_t>(i)].real();
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  std::array<double, 3> y = g.point(best);

  // One golden-section pass per axis around the grid argmax.
  if (theta > 0.0) {
    for (int ax = 0; ax < 3; ++ax) {
      auto probe = [&](double c) {
        auto yy = y;
        yy[ax] = c;
        return theta_sum_at(f, theta, yy, diag);
      };
      double xb;
      double v = golden_max(probe, y[ax] - h, y[ax] + h, xb);
      if (v > best_val) {
        best_val = v;
        y[ax] = xb;
      }
    }
  }

  NormReport rep;
  rep.norm_id = id;
  rep.theta = theta;
  rep.value = best_val;
  rep.attained_at = y;
  if (f.support_radius && *f.support_radius / h < 4.0) rep.coarse_grid_warning = true;
  return rep;
}

}  // namespace

NormReport kato_norm(const ScalarField3D& V) {
  return theta_norm_impl(V, 1.0, NormId::Kato);
}

NormReport kato_theta_norm(const ScalarField3D& f, double theta) {
  if (theta < 0.0 || theta > 1.0)
    throw std::invalid_argument("kato_theta_norm: theta must lie in [0,1]");
  if (theta == 0.0) {
    NormReport rep;
    rep.norm_id = NormId::KatoTheta;
    rep.theta = 0.0;
    rep.value = f.l1_norm();
    return rep;
  }
  return theta_norm_impl(f, theta, NormId::KatoTheta);
}

NormReport lorentz_norm(const ScalarField3D& f, double p, double q) {
  require_finite(f, "lorentz_norm");
  if (p <= 1.0) throw std::invalid_argument("lorentz_norm: p > 1 required");
  if (q < 1.0) throw std::invalid_argument("lorentz_norm: q >= 1 required");

  std::vector<double> a(f.values.size());
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = std::abs(f.values[i]);
  std::sort(a.begin(), a.end(), std::greater<double>());
  double h = f.grid.spacing();
  double h3 = h * h * h;

  NormReport rep;
  rep.norm_id = NormId::LorentzPQ;
  rep.p = p;
  rep.q = q;

  if (std::isinf(q)) {
    // weak-L^p: sup_k t^{1/p} f*(t) on the step rearrangement, attained at
    // right endpoints of steps
    double best = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      if (a[k] == 0.0) break;
      best = std::max(best, std::pow((k + 1) * h3, 1.0 / p) * a[k]);
    }
    rep.value = best;
    return rep;
  }

  // f* is piecewise constant: value a[k] on ((k)h3, (k+1)h3].
  // ||f||_{p,q}^q = (q/p)? Standard: ( int_0^inf (t^{1/p} f*(t))^q dt/t )^{1/q}
  // On a constant piece, int_{t0}^{t1} t^{q/p - 1} dt = (p/q)(t1^{q/p} - t0^{q/p}).
  KahanSum acc;
  double qp = q / p;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k] == 0.0) break;
    double t0 = k * h3, t1 = (k + 1) * h3;
    acc.add(std::pow(a[k], q) * (std::pow(t1, qp) - std::pow(t0, qp)) / qp);
  }
  rep.value = std::pow(acc.value(), 1.0 / q);
  return rep;
}

std::vector<KatoModulus> kato_moduli(const ScalarField3D& V,
                                     const std::vector<double>& radii) {
  require_finite(V, "kato_moduli");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (radii[i] <= 0.0 || (i > 0 && radii[i] <= radii[i - 1]))
      throw std::invalid_argument("kato_moduli: radii must be positive increasing");
  }
  const Grid3D& g = V.grid;
  double h = g.spacing();
  double h3 = h * h * h;
  double diag = cube_inverse_power_integral(1.0, h);

  std::vector<KatoModulus> out;
  for (double R : radii) {
    std::vector<complexd> absV(V.values.size());
    for (std::size_t i = 0; i < absV.size(); ++i) absV[i] = std::abs(V.values[i]);
    Conv3D local(g,
                 [R, h3](double r) { return complexd(r < R ? h3 / r : 0.0); },
                 complexd(R > 0.5 * h ? diag : 0.0));
    Conv3D distal(g,
                  [R, h3](double r) { return complexd(r > R ? h3 / r : 0.0); },
                  complexd(R > 0.5 * h ? 0.0 : diag));
    auto lv = local.apply(absV);
    auto dv = distal.apply(absV);
    double lmax = 0.0, dmax = 0.0;
    for (std::size_t i = 0; i < lv.size(); ++i) {
      lmax = std::max(lmax, lv[i].real());
      dmax = std::max(dmax, dv[i].real());
    }
    out.push_back({R, lmax, dmax});
  }
  return out;
}

std::array<ScalarField3D, 3> gradient(const ScalarField3D& f) {
  const Grid3D& g = f.grid;
  int n = g.points_per_axis;
  double h = g.spacing();
  std::array<ScalarField3D, 3> out = {ScalarField3D(g), ScalarField3D(g), ScalarField3D(g)};
  auto diff = [&](int ix, int iy, int iz, int ax) -> complexd {
    int idx[3] = {ix, iy, iz};
    auto shifted = [&](int d) {
      int jdx[3] = {ix, iy, iz};
      jdx[ax] += d;
      return f.at(jdx[0], jdx[1], jdx[2]);
    };
    int i = idx[ax];
    if (i == 0) return (-3.0 * shifted(0) + 4.0 * shifted(1) - shifted(2)) / (2.0 * h);
    if (i == n - 1) return (3.0 * shifted(0) - 4.0 * shifted(-1) + shifted(-2)) / (2.0 * h);
    return (shifted(1) - shifted(-1)) / (2.0 * h);
  };
  for (int iz = 0; iz < n; ++iz)
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix)
        for (int ax = 0; ax < 3; ++ax)
          out[ax].at(ix, iy, iz) = diff(ix, iy, iz, ax);
  return out;
}

double l1_of_gradient(const ScalarField3D& f) {
  auto gr = gradient(f);
  KahanSum s;
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    double gx = std::abs(gr[0].values[i]);
    double gy = std::abs(gr[1].values[i]);
    double gz = std::abs(gr[2].values[i]);
    s.add(std::sqrt(gx * gx + gy * gy + gz * gz));
  }
  double h = f.grid.spacing();
  return s.value() * h * h * h;
}

std::vector<SobolevCheck> sobolev_checks(const ScalarField3D& f) {
  require_finite(f, "sobolev_checks");
  // support must stay >= 2h away from the boundary
  {
    const Grid3D& g = f.grid;
    int n = g.points_per_axis;
    double cut = 1e-13 * std::max(f.max_abs(), 1e-300);
    for (std::int64_t i = 0; i < g.count(); ++i) {
      auto [ix, iy, iz] = g.unpack(i);
      bool margin = ix < 2 || iy < 2 || iz < 2 || ix >= n - 2 || iy >= n - 2 || iz >= n - 2;
      if (margin && std::abs(f.values[i]) > cut)
        throw std::invalid_argument("sobolev_checks: support touches the box boundary");
    }
  }

  std::vector<SobolevCheck> out;
  const double four_pi = 4.0 * M_PI;

  // ||f||_K <= 1 * ||grad f||_1
  {
    SobolevCheck c;
    c.inequality_id = "kato-le-grad-l1";
    c.lhs = kato_norm(f).value;
    c.rhs = l1_of_gradient(f);
    c.constant = 1.0;
    c.holds = c.lhs <= c.constant * c.rhs * (1.0 + 1e-10);
    out.push_back(c);
  }
  // ||f||_inf <= (4pi)^{-1} ||D^2 f||_K with the Frobenius Hessian modulus
  {
    auto gr = gradient(f);
    ScalarField3D hess(f.grid);
    auto g0 = gradient(gr[0]);
    auto g1 = gradient(gr[1]);
    auto g2 = gradient(gr[2]);
    for (std::size_t i = 0; i < hess.values.size(); ++i) {
      double s = std::norm(g0[0].values[i]) + std::norm(g0[1].values[i]) +
                 std::norm(g0[2].values[i]) + std::norm(g1[0].values[i]) +
                 std::norm(g1[1].values[i]) + std::norm(g1[2].values[i]) +
                 std::norm(g2[0].values[i]) + std::norm(g2[1].values[i]) +
                 std::norm(g2[2].values[i]);
      hess.values[i] = std::sqrt(s);
    }
    SobolevCheck c;
    c.inequality_id = "linf-le-hessian-kato";
    c.lhs = f.max_abs();
    c.rhs = kato_norm(hess).value;
    c.constant = 1.0 / four_pi;
    c.holds = c.lhs <= c.constant * c.rhs * (1.0 + 1e-10);
    out.push_back(c);
  }
  // sup_x sum |f(y)|/|x-y|^2 <= 1 * ||grad f||_K
  {
    const Grid3D& g = f.grid;
    double h = g.spacing();
    double h3 = h * h * h;
    std::vector<complexd> absf(f.values.size());
    for (std::size_t i = 0; i < absf.size(); ++i) absf[i] = std::abs(f.values[i]);
    Conv3D conv(g, [h3](double r) { return complexd(h3 / (r * r)); },
                complexd(cube_inverse_power_integral(2.0, h)));
    auto s = conv.apply(absf);
    double sup2 = 0.0;
    for (const auto& v : s) sup2 = std::max(sup2, v.real());

    auto gr = gradient(f);
    ScalarField3D gmod(g);
    for (std::size_t i = 0; i < gmod.values.size(); ++i) {
      double m = std::sqrt(std::norm(gr[0].values[i]) + std::norm(gr[1].values[i]) +
                           std::norm(gr[2].values[i]));
      gmod.values[i] = m;
    }
    SobolevCheck c;
    c.inequality_id = "supweighted2-le-grad-kato";
    c.lhs = sup2;
    c.rhs = kato_norm(gmod).value;
    c.constant = 1.0;
    c.holds = c.lhs <= c.constant * c.rhs * (1.0 + 1e-10);
    out.push_back(c);
  }
  return out;
}

}  // namespace conewave
