#include "conewave/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "conewave/free_wave.hpp"
#include "conewave/norms.hpp"
#include "json.hpp"

namespace conewave {

OperatorMatrix vr0_matrix(const ScalarField3D& V, double lambda, int sign) {
  if (sign != 1 && sign != -1) throw std::invalid_argument("vr0_matrix: sign must be +-1");
  const Grid3D& g = V.grid;
  double h = g.spacing();
  double h3 = h * h * h;
  double diag = cube_inverse_power_integral(1.0, h);
  const complexd iu(0.0, 1.0);

  OperatorMatrix m;
  m.grid = g;
  m.identity_part = complexd(0.0);
  m.rows = V.support_indices(0.0);
  std::int64_t N = g.count();
  m.block = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(m.rows.size()),
                                   static_cast<Eigen::Index>(N));
  for (std::size_t r = 0; r < m.rows.size(); ++r) {
    auto x = g.point(m.rows[r]);
    complexd vx = V.values[static_cast<std::size_t>(m.rows[r])];
    for (std::int64_t c = 0; c < N; ++c) {
      complexd e;
      if (c == m.rows[r]) {
        e = vx * diag * std::exp(iu * (sign * lambda * (h3 / diag))) / (4.0 * M_PI);
      } else {
        double d = euclid_dist(x, g.point(c));
        e = vx * std::exp(iu * (sign * lambda * d)) * h3 / (4.0 * M_PI * d);
      }
      m.block(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = e;
    }
  }
  return m;
}

namespace {
// s x s compression of I + V R0^+(lambda^2) onto supp V; invertibility of the
// full operator I + (rank-structured block) is equivalent to that of the
// compression.
Eigen::MatrixXcd compression(const ScalarField3D& V, double lambda, int sign) {
  const Grid3D& g = V.grid;
  double h = g.spacing();
  double h3 = h * h * h;
  double diag = cube_inverse_power_integral(1.0, h);
  const complexd iu(0.0, 1.0);
  auto rows = V.support_indices(0.0);
  std::size_t s = rows.size();
  Eigen::MatrixXcd A = Eigen::MatrixXcd::Identity(static_cast<Eigen::Index>(s),
                                                  static_cast<Eigen::Index>(s));
  for (std::size_t i = 0; i < s; ++i) {
    auto x = g.point(rows[i]);
    complexd vx = V.values[static_cast<std::size_t>(rows[i])];
    for (std::size_t j = 0; j < s; ++j) {
      complexd e;
      if (i == j) {
        e = vx * diag * std::exp(iu * (sign * lambda * (h3 / diag))) / (4.0 * M_PI);
      } else {
        double d = euclid_dist(x, g.point(rows[j]));
        e = vx * std::exp(iu * (sign * lambda * d)) * h3 / (4.0 * M_PI * d);
      }
      A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += e;
    }
  }
  return A;
}
}  // namespace

std::string SpectralScan::to_json() const {
  nlohmann::json j;
  j["lambdas"] = lambdas;
  j["min_singular"] = min_singular;
  j["condition"] = condition;
  j["zero_resonance_flag"] = zero_resonance_flag;
  j["threshold"] = threshold;
  j["resonance_candidates"] = resonance_candidates;
  return j.dump(2);
}

SpectralScan resonance_scan(const ScalarField3D& V, double lambda_max, int m,
                            double threshold_scale) {
  if (m < 2) throw std::invalid_argument("resonance_scan: m >= 2 required");
  SpectralScan scan;
  bool empty = V.support_indices(0.0).empty();
  for (int k = 0; k < m; ++k) {
    double lambda = lambda_max * k / (m - 1);
    scan.lambdas.push_back(lambda);
    if (empty) {
      scan.min_singular.push_back(1.0);
      scan.condition.push_back(1.0);
      continue;
    }
    Eigen::MatrixXcd A = compression(V, lambda, +1);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(A);
    double smin = svd.singularValues().minCoeff();
    double smax = svd.singularValues().maxCoeff();
    scan.min_singular.push_back(smin);
    scan.condition.push_back(smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity());
    if (k == 0) {
      scan.threshold = threshold_scale * smax;
      scan.zero_resonance_flag = smin < scan.threshold;
    }
    if (smin < threshold_scale * smax) scan.resonance_candidates.push_back(lambda);
  }
  return scan;
}

double well_zero_energy_indicator(const ScalarField3D& chi, double c) {
  // A(c) = I - c K with K(x,x') = chi(x) G0(x,x') h^3 symmetric positive on
  // supp chi; returns the minimum eigenvalue of the symmetrized compression.
  const Grid3D& g = chi.grid;
  double h = g.spacing();
  double h3 = h * h * h;
  double diag = cube_inverse_power_integral(1.0, h);
  auto rows = chi.support_indices(0.0);
  std::size_t s = rows.size();
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(s),
                                                static_cast<Eigen::Index>(s));
  for (std::size_t i = 0; i < s; ++i) {
    auto x = g.point(rows[i]);
    for (std::size_t j = 0; j < s; ++j) {
      double k;
      if (i == j) {
        k = diag / (4.0 * M_PI);
      } else {
        k = h3 / (4.0 * M_PI * euclid_dist(x, g.point(rows[j])));
      }
      A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) -= c * k;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double well_critical_depth(const ScalarField3D& chi, double c_lo, double c_hi,
                           double tol) {
  double f_lo = well_zero_energy_indicator(chi, c_lo);
  double f_hi = well_zero_energy_indicator(chi, c_hi);
  if (f_lo <= 0.0 || f_hi >= 0.0)
    throw std::runtime_error("well_critical_depth: bracket does not straddle the crossing");
  while (c_hi - c_lo > tol) {
    double c = 0.5 * (c_lo + c_hi);
    double f = well_zero_energy_indicator(chi, c);
    if (f > 0.0)
      c_lo = c;
    else
      c_hi = c;
  }
  return 0.5 * (c_lo + c_hi);
}

// ----------------------------------------------------------- point spectrum

namespace {

// Dirichlet Laplacian solver (-Laplace_h - sigma)^{-1} via the 3D discrete
// sine transform on the interior points; exact on the grid.
class DirichletPoissonSolver {
 public:
  DirichletPoissonSolver(const Grid3D& g, double sigma) : g_(g), sigma_(sigma) {
    int m = g.points_per_axis - 2;
    m_ = m;
    buf_.resize(static_cast<std::size_t>(m) * m * m);
    plan_ = fftw_plan_r2r_3d(m, m, m, buf_.data(), buf_.data(), FFTW_RODFT00,
                             FFTW_RODFT00, FFTW_RODFT00, FFTW_ESTIMATE);
    double h = g.spacing();
    eig_.resize(m);
    for (int k = 0; k < m; ++k)
      eig_[k] = (2.0 - 2.0 * std::cos(M_PI * (k + 1) / (m + 1))) / (h * h);
  }
  ~DirichletPoissonSolver() { fftw_destroy_plan(plan_); }

  // x = (-Laplace_h - sigma)^{-1} b, interior-only vectors of length m^3
  void solve(std::vector<double>& x) {
    std::copy(x.begin(), x.end(), buf_.begin());
    fftw_execute(plan_);
    std::size_t idx = 0;
    for (int kz = 0; kz < m_; ++kz)
      for (int ky = 0; ky < m_; ++ky)
        for (int kx = 0; kx < m_; ++kx, ++idx)
          buf_[idx] /= (eig_[kx] + eig_[ky] + eig_[kz] - sigma_);
    fftw_execute(plan_);
    double norm = 1.0 / std::pow(2.0 * (m_ + 1), 3);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = buf_[i] * norm;
  }

 private:
  Grid3D g_;
  double sigma_;
  int m_ = 0;
  std::vector<double> buf_;
  std::vector<double> eig_;
  fftw_plan plan_;
};

struct InteriorOps {
  const Grid3D& g;
  const std::vector<complexd>& V;  // full-grid values (real used)
  int m;

  explicit InteriorOps(const Grid3D& grid, const std::vector<complexd>& v)
      : g(grid), V(v), m(grid.points_per_axis - 2) {}

  std::size_t size() const { return static_cast<std::size_t>(m) * m * m; }

  double vat(int ix, int iy, int iz) const {  // interior index -> potential
    return V[static_cast<std::size_t>(g.index(ix + 1, iy + 1, iz + 1))].real();
  }

  // y = (-Laplace_h + V) x on the interior (zero boundary)
  void apply_h(const std::vector<double>& x, std::vector<double>& y) const {
    double h2 = g.spacing() * g.spacing();
    auto at = [&](int ix, int iy, int iz) -> double {
      if (ix < 0 || iy < 0 || iz < 0 || ix >= m || iy >= m || iz >= m) return 0.0;
      return x[static_cast<std::size_t>(ix) + static_cast<std::size_t>(m) * (iy + static_cast<std::size_t>(m) * iz)];
    };
    std::size_t idx = 0;
    for (int iz = 0; iz < m; ++iz)
      for (int iy = 0; iy < m; ++iy)
        for (int ix = 0; ix < m; ++ix, ++idx) {
          double c = x[idx];
          double lap = (at(ix - 1, iy, iz) + at(ix + 1, iy, iz) + at(ix, iy - 1, iz) +
                        at(ix, iy + 1, iz) + at(ix, iy, iz - 1) + at(ix, iy, iz + 1) -
                        6.0 * c) / h2;
          y[idx] = -lap + vat(ix, iy, iz) * c;
        }
  }
};

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  KahanSum s;
  for (std::size_t i = 0; i < a.size(); ++i) s.add(a[i] * b[i]);
  return s.value();
}

// Preconditioned CG for (H - sigma) x = b; returns false on breakdown
// (indefiniteness), which callers treat as "sigma too high".
bool pcg_solve(const InteriorOps& ops, DirichletPoissonSolver& prec, double sigma,
               const std::vector<double>& b, std::vector<double>& x, double tol,
               int max_iter) {
  std::size_t n = b.size();
  x.assign(n, 0.0);
  std::vector<double> r = b, z(n), p(n), Ap(n);
  double bnorm = std::sqrt(dot(b, b));
  if (bnorm == 0.0) return true;
  z = r;
  prec.solve(z);
  p = z;
  double rz = dot(r, z);
  for (int it = 0; it < max_iter; ++it) {
    ops.apply_h(p, Ap);
    for (std::size_t i = 0; i < n; ++i) Ap[i] -= sigma * p[i];
    double pAp = dot(p, Ap);
    if (pAp <= 0.0) return false;
    double alpha = rz / pAp;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * Ap[i];
    }
    if (std::sqrt(dot(r, r)) < tol * bnorm) return true;
    z = r;
    prec.solve(z);
    double rz2 = dot(r, z);
    double beta = rz2 / rz;
    rz = rz2;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  return true;  // reached max_iter; caller checks residual via Rayleigh history
}

}  // namespace

PointSpectrum point_spectrum_single_box(const ScalarField3D& V) {
  const Grid3D& g = V.grid;
  InteriorOps ops(g, V.values);
  std::size_t n = ops.size();
  double h = g.spacing();
  double h3 = h * h * h;

  double vmin = 0.0;
  for (const auto& v : V.values) vmin = std::min(vmin, v.real());

  PointSpectrum spec;
  std::vector<std::vector<double>> found;  // interior eigenvectors, normalized

  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);

  auto project_out = [&](std::vector<double>& v) {
    for (const auto& w : found) {
      double c = dot(w, v);
      for (std::size_t i = 0; i < n; ++i) v[i] -= c * w[i];
    }
  };
  auto normalize = [&](std::vector<double>& v) {
    double s = std::sqrt(dot(v, v));
    if (s > 0.0)
      for (auto& x : v) x /= s;
  };

  for (int which = 0; which < 8; ++which) {
    double sigma = vmin - 0.5;
    DirichletPoissonSolver prec(g, sigma);
    std::vector<double> v(n), w(n), Hv(n);
    for (auto& x : v) x = uni(rng);
    project_out(v);
    normalize(v);
    double E = 0.0, E_prev = 1e300;
    bool sigma_dirty = false;
    std::unique_ptr<DirichletPoissonSolver> prec2;
    DirichletPoissonSolver* pc = &prec;
    for (int it = 0; it < 60; ++it) {
      double tol = it < 5 ? 1e-6 : 1e-11;
      if (!pcg_solve(ops, *pc, sigma, v, w, tol, 400)) {
        // sigma crossed the lowest remaining eigenvalue: back off
        sigma -= 0.5 * std::max(1.0, std::abs(sigma));
        prec2 = std::make_unique<DirichletPoissonSolver>(g, sigma);
        pc = prec2.get();
        continue;
      }
      project_out(w);
      normalize(w);
      v = w;
      ops.apply_h(v, Hv);
      E = dot(v, Hv);
      if (std::abs(E - E_prev) < 1e-10 * std::max(1.0, std::abs(E))) break;
      E_prev = E;
      // one adaptive shift update once the estimate settles
      if (it == 6 && !sigma_dirty) {
        double cand = E - 0.1 * std::abs(E) - 0.05;
        if (cand > sigma) {
          sigma = cand;
          prec2 = std::make_unique<DirichletPoissonSolver>(g, sigma);
          pc = prec2.get();
          sigma_dirty = true;
        }
      }
    }
    if (E >= -1e-8) break;  // continuum / box modes reached
    double resid = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double r = Hv[i] - E * v[i];
      resid += r * r;
    }
    resid = std::sqrt(resid);
    if (resid > 1e-5 * std::abs(E)) break;  // not converged to a bound state
    found.push_back(v);
    spec.eigenvalues.push_back(E);
    // embed into a full-grid, L2(h^3)-normalized field
    ScalarField3D psi(g);
    double scale = 1.0 / std::sqrt(h3);
    int m = ops.m;
    std::size_t idx = 0;
    for (int iz = 0; iz < m; ++iz)
      for (int iy = 0; iy < m; ++iy)
        for (int ix = 0; ix < m; ++ix, ++idx)
          psi.at(ix + 1, iy + 1, iz + 1) = v[idx] * scale;
    spec.eigenfunctions.push_back(std::move(psi));
  }
  // sort increasing
  std::vector<std::size_t> order(spec.eigenvalues.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return spec.eigenvalues[a] < spec.eigenvalues[b];
  });
  PointSpectrum sorted;
  for (std::size_t i : order) {
    sorted.eigenvalues.push_back(spec.eigenvalues[i]);
    sorted.eigenfunctions.push_back(std::move(spec.eigenfunctions[i]));
  }
  return sorted;
}

PointSpectrum point_spectrum(const ScalarField3D& V, double stability_rel) {
  PointSpectrum base = point_spectrum_single_box(V);
  if (base.eigenvalues.empty()) return base;

  // enlarge the box by ~25% at the same spacing and re-solve
  const Grid3D& g = V.grid;
  int extra = std::max(2, g.points_per_axis / 8);
  int n2 = g.points_per_axis + 2 * extra;
  Grid3D g2(g.half_width + extra * g.spacing(), n2);
  ScalarField3D V2(g2);
  for (int iz = 0; iz < g.points_per_axis; ++iz)
    for (int iy = 0; iy < g.points_per_axis; ++iy)
      for (int ix = 0; ix < g.points_per_axis; ++ix)
        V2.at(ix + extra, iy + extra, iz + extra) = V.at(ix, iy, iz);
  V2.support_radius = V.support_radius;
  PointSpectrum big = point_spectrum_single_box(V2);

  PointSpectrum stable;
  for (std::size_t i = 0; i < base.eigenvalues.size(); ++i) {
    double e = base.eigenvalues[i];
    bool ok = false;
    for (double e2 : big.eigenvalues)
      if (std::abs(e2 - e) < stability_rel * std::abs(e)) ok = true;
    if (ok) {
      stable.eigenvalues.push_back(e);
      stable.eigenfunctions.push_back(std::move(base.eigenfunctions[i]));
    }
  }
  return stable;
}

std::string PointSpectrum::to_json() const {
  nlohmann::json j;
  j["eigenvalues"] = eigenvalues;
  j["count"] = eigenvalues.size();
  return j.dump(2);
}

ScalarField3D pc_project(const ScalarField3D& f, const PointSpectrum& spec) {
  ScalarField3D out = f;
  for (const auto& psi : spec.eigenfunctions) {
    complexd c = psi.inner(f);
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] -= c * psi.values[i];
  }
  return out;
}

// ------------------------------------------------------------- Stone formula

namespace {

// phi_m(z) = int_0^1 u^m e^{z u} du, stable for small z via the power series.
complexd phi_m(int m, complexd z) {
  if (std::abs(z) < 0.75) {
    complexd term(1.0), sum(0.0);
    double jfact = 1.0;
    for (int j = 0; j < 24; ++j) {
      if (j > 0) {
        jfact *= j;
        term = std::pow(z, j) / jfact;
      } else {
        term = complexd(1.0);
      }
      sum += term / double(j + m + 1);
    }
    return sum;
  }
  complexd ez = std::exp(z);
  if (m == 0) return (ez - 1.0) / z;
  if (m == 1) return (ez * (z - 1.0) + 1.0) / (z * z);
  return (ez * (z * z - 2.0 * z + 2.0) - 2.0) / (z * z * z);
}

// Filon-trapezoid weights for int_0^Lmax w(lambda) g(lambda) dlambda with g
// piecewise linear on the uniform node grid and w(lambda) = e^{i t lambda}
// (weight_pow = 0) or lambda e^{i t lambda} (weight_pow = 1).
std::vector<complexd> filon_weights(int nodes, double dl, double t, int weight_pow) {
  std::vector<complexd> wts(static_cast<std::size_t>(nodes), complexd(0.0));
  const complexd iu(0.0, 1.0);
  complexd z = iu * t * dl;
  for (int k = 0; k + 1 < nodes; ++k) {
    double a = k * dl, b = a + dl;
    complexd eia = std::exp(iu * (t * a));
    complexd K0 = eia * dl * phi_m(0, z);
    complexd K1 = eia * dl * phi_m(1, z);
    complexd left, right;
    if (weight_pow == 0) {
      left = K0 - K1;
      right = K1;
    } else {
      complexd K2 = eia * dl * phi_m(2, z);
      left = a * (K0 - K1) + dl * (K1 - K2);
      right = a * K1 + dl * K2;
      (void)b;
    }
    wts[static_cast<std::size_t>(k)] += left;
    wts[static_cast<std::size_t>(k + 1)] += right;
  }
  return wts;
}

}  // namespace

StonePlan::StonePlan(const ScalarField3D& f, const ScalarField3D& V,
                     double lambda_max, double dlambda)
    : grid_(f.grid), lambda_max_(lambda_max), dlambda_(dlambda) {
  if (f.grid != V.grid) throw std::invalid_argument("StonePlan: grid mismatch");
  for (const auto& v : f.values)
    if (v.imag() != 0.0)
      throw std::invalid_argument("StonePlan: real data required");
  for (const auto& v : V.values)
    if (v.imag() != 0.0)
      throw std::invalid_argument("StonePlan: real potential required");

  const Grid3D& g = f.grid;
  double h = g.spacing();
  double h3 = h * h * h;
  double diag = cube_inverse_power_integral(1.0, h);
  auto rows = V.support_indices(0.0);
  std::size_t s = rows.size();
  std::int64_t N = g.count();
  int nodes = static_cast<int>(std::round(lambda_max / dlambda)) + 1;
  const complexd iu(0.0, 1.0);

  g_.resize(static_cast<std::size_t>(nodes));
  for (int k = 0; k < nodes; ++k) {
    double lambda = k * dlambda;
    // e = R_V^+(lambda^2) f = R0 f - R0 s_v with (I + B) s_v = V * (R0 f)|supp
    ScalarField3D r0f = free_resolvent_boundary(f, lambda, +1);
    ScalarField3D e = r0f;
    if (s > 0) {
      Eigen::VectorXcd rhs(static_cast<Eigen::Index>(s));
      for (std::size_t i = 0; i < s; ++i)
        rhs(static_cast<Eigen::Index>(i)) =
            V.values[static_cast<std::size_t>(rows[i])] *
            r0f.values[static_cast<std::size_t>(rows[i])];
      Eigen::MatrixXcd B(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s));
      for (std::size_t i = 0; i < s; ++i) {
        auto x = g.point(rows[i]);
        complexd vx = V.values[static_cast<std::size_t>(rows[i])];
        for (std::size_t j = 0; j < s; ++j) {
          complexd b;
          if (i == j) {
            b = vx * (diag + iu * lambda * h3) / (4.0 * M_PI);
          } else {
            double d = euclid_dist(x, g.point(rows[j]));
            b = vx * std::exp(iu * (lambda * d)) * h3 / (4.0 * M_PI * d);
          }
          B(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = b;
        }
        B(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) += 1.0;
      }
      Eigen::VectorXcd sv = B.partialPivLu().solve(rhs);
      ScalarField3D svf(g);
      for (std::size_t i = 0; i < s; ++i)
        svf.values[static_cast<std::size_t>(rows[i])] = sv(static_cast<Eigen::Index>(i));
      svf.support_radius = V.support_radius;
      ScalarField3D r0s = free_resolvent_boundary(svf, lambda, +1);
      for (std::int64_t i = 0; i < N; ++i)
        e.values[static_cast<std::size_t>(i)] -= r0s.values[static_cast<std::size_t>(i)];
    }
    std::vector<complexd> gk(static_cast<std::size_t>(N));
    for (std::int64_t i = 0; i < N; ++i)
      gk[static_cast<std::size_t>(i)] = complexd(e.values[static_cast<std::size_t>(i)].imag(), 0.0);
    g_[static_cast<std::size_t>(k)] = std::move(gk);
  }
}

ScalarField3D StonePlan::evaluate(double t, PropagatorKind kind) const {
  int nodes = static_cast<int>(g_.size());
  int wp = (kind == PropagatorKind::Sine) ? 0 : 1;
  std::vector<complexd> wts = filon_weights(nodes, dlambda_, t, wp);
  // sine family uses Im e^{i t lambda}, cosine Re, Exp keeps the complex value
  ScalarField3D out(grid_);
  std::size_t N = out.values.size();
  for (int k = 0; k < nodes; ++k) {
    complexd w = wts[static_cast<std::size_t>(k)];
    complexd c;
    switch (kind) {
      case PropagatorKind::Sine:
      case PropagatorKind::SqrtHSine:
        c = complexd(w.imag(), 0.0);
        break;
      case PropagatorKind::Cosine:
        c = complexd(w.real(), 0.0);
        break;
      case PropagatorKind::Exp:
        c = w;
        break;
    }
    c *= 2.0 / M_PI;
    if (c == complexd(0.0)) continue;
    const auto& gk = g_[static_cast<std::size_t>(k)];
    for (std::size_t i = 0; i < N; ++i) out.values[i] += c * gk[i];
  }
  return out;
}

ScalarField3D perturbed_propagator(const ScalarField3D& f, double t,
                                   PropagatorKind kind, const ScalarField3D& V,
                                   double lambda_max, double dlambda) {
  StonePlan plan(f, V, lambda_max, dlambda);
  return plan.evaluate(t, kind);
}

// --------------------------------------------------------------------- FDTD

SpacetimeField fdtd_evolve(const ScalarField3D& f0, const ScalarField3D& f1,
                           const ForcingFn& F, const ScalarField3D& V,
                           const std::vector<double>& record_times, double dt,
                           int quintic_sign) {
  const Grid3D& g = f0.grid;
  if (f1.grid != g || V.grid != g) throw std::invalid_argument("fdtd_evolve: grid mismatch");
  double h = g.spacing();
  if (dt > 0.9 * h / std::sqrt(3.0) + 1e-12)
    throw std::invalid_argument("fdtd_evolve: CFL violation, need dt <= 0.9 h / sqrt(3)");
  if (record_times.empty()) throw std::invalid_argument("fdtd_evolve: no record times");
  double t_end = record_times.back();

  int n = g.points_per_axis;
  std::size_t N = static_cast<std::size_t>(g.count());
  auto laplace = [&](const std::vector<complexd>& u, std::vector<complexd>& lap) {
    double h2 = h * h;
    for (int iz = 0; iz < n; ++iz)
      for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix) {
          std::size_t i = static_cast<std::size_t>(g.index(ix, iy, iz));
          if (ix == 0 || iy == 0 || iz == 0 || ix == n - 1 || iy == n - 1 || iz == n - 1) {
            lap[i] = complexd(0.0);
            continue;
          }
          lap[i] = (u[i - 1] + u[i + 1] + u[i - static_cast<std::size_t>(n)] +
                    u[i + static_cast<std::size_t>(n)] +
                    u[i - static_cast<std::size_t>(n) * n] +
                    u[i + static_cast<std::size_t>(n) * n] - 6.0 * u[i]) / h2;
        }
  };
  auto rhs = [&](const std::vector<complexd>& u, double t, std::vector<complexd>& out) {
    laplace(u, out);
    for (std::size_t i = 0; i < N; ++i) {
      out[i] -= V.values[i] * u[i];
      if (quintic_sign != 0) {
        complexd u2 = u[i] * u[i];
        out[i] -= double(quintic_sign) * u2 * u2 * u[i];
      }
    }
    if (F) F(t, out);
  };

  int steps = static_cast<int>(std::round(t_end / dt));
  SpacetimeField result(g, record_times);
  std::vector<int> record_step(record_times.size());
  for (std::size_t k = 0; k < record_times.size(); ++k) {
    record_step[k] = static_cast<int>(std::round(record_times[k] / dt));
    if (std::abs(record_step[k] * dt - record_times[k]) > 1e-9)
      throw std::invalid_argument("fdtd_evolve: record times must be multiples of dt");
  }

  std::vector<complexd> u_prev = f0.values, u_cur(N), acc(N);
  // u^1 = f0 + dt f1 + dt^2/2 * rhs(f0, 0)
  rhs(u_prev, 0.0, acc);
  for (std::size_t i = 0; i < N; ++i)
    u_cur[i] = u_prev[i] + dt * f1.values[i] + 0.5 * dt * dt * acc[i];

  auto record_if = [&](int step, const std::vector<complexd>& u) {
    for (std::size_t k = 0; k < record_step.size(); ++k)
      if (record_step[k] == step) result.frames[k] = u;
  };
  record_if(0, u_prev);
  record_if(1, u_cur);

  for (int sstep = 1; sstep < steps; ++sstep) {
    rhs(u_cur, sstep * dt, acc);
    for (std::size_t i = 0; i < N; ++i) {
      complexd u_next = 2.0 * u_cur[i] - u_prev[i] + dt * dt * acc[i];
      u_prev[i] = u_cur[i];
      u_cur[i] = u_next;
    }
    record_if(sstep + 1, u_cur);
  }
  return result;
}

double fdtd_energy(const ScalarField3D& u_prev, const ScalarField3D& u_next,
                   double dt, const ScalarField3D& V, int quintic_sign) {
  const Grid3D& g = u_prev.grid;
  double h = g.spacing();
  double h3 = h * h * h;
  int n = g.points_per_axis;
  KahanSum e;
  // u at the half step, u_t by the centered difference
  for (int iz = 0; iz < n - 1; ++iz)
    for (int iy = 0; iy < n - 1; ++iy)
      for (int ix = 0; ix < n - 1; ++ix) {
        auto mid = [&](int jx, int jy, int jz) {
          return 0.5 * (u_prev.at(jx, jy, jz) + u_next.at(jx, jy, jz));
        };
        complexd c = mid(ix, iy, iz);
        complexd gx = (mid(ix + 1, iy, iz) - c) / h;
        complexd gy = (mid(ix, iy + 1, iz) - c) / h;
        complexd gz = (mid(ix, iy, iz + 1) - c) / h;
        complexd ut = (u_next.at(ix, iy, iz) - u_prev.at(ix, iy, iz)) / dt;
        double dens = std::norm(gx) + std::norm(gy) + std::norm(gz) + std::norm(ut) +
                      V.at(ix, iy, iz).real() * std::norm(c);
        if (quintic_sign != 0)
          dens += double(quintic_sign) / 3.0 * std::pow(std::abs(c), 6.0);
        e.add(dens);
      }
  return e.value() * h3;
}

ScalarField3D discrete_laplacian(const ScalarField3D& f) {
  const Grid3D& g = f.grid;
  int n = g.points_per_axis;
  double h2 = g.spacing() * g.spacing();
  ScalarField3D out(g);
  for (int iz = 1; iz < n - 1; ++iz)
    for (int iy = 1; iy < n - 1; ++iy)
      for (int ix = 1; ix < n - 1; ++ix)
        out.at(ix, iy, iz) =
            (f.at(ix - 1, iy, iz) + f.at(ix + 1, iy, iz) + f.at(ix, iy - 1, iz) +
             f.at(ix, iy + 1, iz) + f.at(ix, iy, iz - 1) + f.at(ix, iy, iz + 1) -
             6.0 * f.at(ix, iy, iz)) / h2;
  return out;
}

NormEquivalenceReport norm_equivalence_check(const ScalarField3D& V,
                                             const std::vector<ScalarField3D>& family) {
  NormEquivalenceReport rep;
  bool first = true;
  for (const auto& f : family) {
    ScalarField3D lap = discrete_laplacian(f);
    ScalarField3D hf = lap;
    for (std::size_t i = 0; i < hf.values.size(); ++i)
      hf.values[i] = -lap.values[i] + V.values[i] * f.values[i];
    ScalarField3D neg_lap = lap;
    for (auto& v : neg_lap.values) v = -v;
    double l1 = hf.l1_norm() / neg_lap.l1_norm();
    double ka = kato_norm(hf).value / kato_norm(neg_lap).value;
    if (first) {
      rep.min_l1_ratio = rep.max_l1_ratio = l1;
      rep.min_kato_ratio = rep.max_kato_ratio = ka;
      first = false;
    } else {
      rep.min_l1_ratio = std::min(rep.min_l1_ratio, l1);
      rep.max_l1_ratio = std::max(rep.max_l1_ratio, l1);
      rep.min_kato_ratio = std::min(rep.min_kato_ratio, ka);
      rep.max_kato_ratio = std::max(rep.max_kato_ratio, ka);
    }
  }
  return rep;
}

}  // namespace conewave
