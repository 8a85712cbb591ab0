#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "conewave/cone_kernel.hpp"
#include "conewave/free_wave.hpp"
#include "conewave/norms.hpp"
#include "conewave/spectral.hpp"
#include "conewave/sphere_rule.hpp"

using namespace conewave;

namespace {

ScalarField3D well(const Grid3D& g, double depth, double R) {
  return square_well(g, depth, R);
}

ScalarField3D gaussian(const Grid3D& g, double w, double R) {
  return ScalarField3D::from_function(
      g,
      [=](double x, double y, double z) -> complexd {
        double r2 = x * x + y * y + z * z;
        return r2 < R * R ? std::exp(-r2 / (w * w)) : 0.0;
      },
      R);
}

// Lowest s-wave eigenvalue -kappa^2 of the depth-c radius-1 well from the
// matching condition k cot k = -kappa, k^2 + kappa^2 = c.
double shooting_eigenvalue(double c) {
  auto g = [&](double k) { return k / std::tan(k) + std::sqrt(c - k * k); };
  double lo = M_PI / 2.0 + 1e-9, hi = std::min(std::sqrt(c), M_PI) - 1e-9;
  REQUIRE(g(lo) > 0.0);
  REQUIRE(g(hi) < 0.0);
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    (g(mid) > 0.0 ? lo : hi) = mid;
  }
  double k = 0.5 * (lo + hi);
  return -(c - k * k);
}

}  // namespace

TEST_CASE("vr0 matrix equals the fourier transform of the cone kernel") {
  Grid3D g(1.0, 9);
  auto V = well(g, 1.5, 0.5);
  auto T = t_minus(V);
  for (double lambda : {0.0, 1.7}) {
    auto F = fourier(T, lambda);
    auto M = vr0_matrix(V, lambda, -1);
    REQUIRE(F.rows == M.rows);
    CHECK((F.block - M.block).cwiseAbs().maxCoeff() < 1e-13);
  }
  // opposite boundary value is the conjugate kernel
  auto Fp = vr0_matrix(V, 1.7, +1);
  auto Fm = vr0_matrix(V, 1.7, -1);
  CHECK((Fp.block - Fm.block.conjugate()).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("resonance scan is quiet for benign potentials") {
  Grid3D g(1.5, 17);
  auto scan = resonance_scan(well(g, 1.0, 1.0), 3.0, 12);
  CHECK(!scan.zero_resonance_flag);
  CHECK(scan.lambdas.size() == 12);
  for (double s : scan.min_singular) CHECK(s > 0.1);
}

TEST_CASE("square well zero resonance near pi^2/4") {
  Grid3D g(1.5, 21);
  auto chi = well(g, 1.0, 1.0);  // -chi; depth supplied via the scan in c
  for (auto& v : chi.values) v = -v;  // indicator
  double c0 = well_critical_depth(chi, 1.0, 4.0, 1e-3);
  CHECK(c0 == doctest::Approx(M_PI * M_PI / 4.0).epsilon(0.05));
  // indicator changes sign across the crossing
  CHECK(well_zero_energy_indicator(chi, c0 - 0.3) > 0.0);
  CHECK(well_zero_energy_indicator(chi, c0 + 0.3) < 0.0);
}

TEST_CASE("point spectrum of the deep well matches the shooting oracle") {
  double c = 4.0;
  Grid3D g(4.0, 41);
  auto spec = point_spectrum_single_box(well(g, c, 1.0));
  REQUIRE(!spec.eigenvalues.empty());
  double oracle = shooting_eigenvalue(c);
  // the Dirichlet wall at |x|_inf = 4 shifts the level up by ~3%
  CHECK(spec.eigenvalues.front() == doctest::Approx(oracle).epsilon(0.05));
  // eigenfunction is L2-normalized and decays at the box edge
  const auto& psi = spec.eigenfunctions.front();
  CHECK(psi.l2_norm() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(std::abs(psi.at(0, 20, 20)) < 0.05 * psi.max_abs());
}

TEST_CASE("subcritical well has no bound state") {
  Grid3D g(2.0, 21);
  auto spec = point_spectrum_single_box(well(g, 1.0, 1.0));
  CHECK(spec.eigenvalues.empty());
}

TEST_CASE("pc projection removes the bound state") {
  Grid3D g(2.5, 25);
  auto spec = point_spectrum_single_box(well(g, 4.0, 1.0));
  REQUIRE(!spec.eigenvalues.empty());
  auto f = gaussian(g, 0.8, 2.0);
  auto fp = pc_project(f, spec);
  for (const auto& psi : spec.eigenfunctions)
    CHECK(std::abs(fp.inner(psi)) < 1e-10);
  // projecting twice is idempotent
  auto fpp = pc_project(fp, spec);
  double diff = 0.0;
  for (std::size_t i = 0; i < fp.values.size(); ++i)
    diff = std::max(diff, std::abs(fp.values[i] - fpp.values[i]));
  CHECK(diff < 1e-12);
}

TEST_CASE("stone plan with V = 0 reproduces the free flows") {
  Grid3D g(2.0, 25);
  ScalarField3D V(g);
  auto f = gaussian(g, 0.6, 1.8);
  StonePlan plan(f, V, 14.0, 0.1);
  auto rule = SphereRule::product_rule(19);
  for (double t : {0.5, 1.0}) {
    auto stone = plan.evaluate(t, PropagatorKind::Sine);
    auto free = sine_free(f, t, rule);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < free.values.size(); ++i) {
      num += std::norm(stone.values[i] - free.values[i]);
      den += std::norm(free.values[i]);
    }
    INFO("t = " << t);
    CHECK(std::sqrt(num / den) < 5e-3);

    auto stone_cos = plan.evaluate(t, PropagatorKind::Cosine);
    auto free_cos = cosine_free(f, t, rule);
    num = den = 0.0;
    for (std::size_t i = 0; i < free_cos.values.size(); ++i) {
      num += std::norm(stone_cos.values[i] - free_cos.values[i]);
      den += std::norm(free_cos.values[i]);
    }
    CHECK(std::sqrt(num / den) < 5e-3);
  }
  // exp flow at t = 0 recovers the data (band-limited part)
  auto e0 = plan.evaluate(0.0, PropagatorKind::Exp);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    num += std::norm(e0.values[i] - f.values[i]);
    den += std::norm(f.values[i]);
  }
  CHECK(std::sqrt(num / den) < 5e-3);
}

TEST_CASE("stone plan rejects complex data") {
  Grid3D g(1.0, 9);
  ScalarField3D V(g);
  ScalarField3D f(g);
  f.values[100] = complexd(0.0, 1.0);
  CHECK_THROWS(StonePlan(f, V, 4.0, 0.5));
}

TEST_CASE("fdtd conserves energy and respects the CFL bound") {
  Grid3D g(2.0, 33);
  auto f0 = gaussian(g, 0.5, 1.8);
  ScalarField3D f1(g);
  auto V = well(g, 1.0, 0.8);
  double h = g.spacing();
  double dt = 0.4 * h / std::sqrt(3.0);
  int steps = 10;
  std::vector<double> record = {steps * dt, 2 * steps * dt};
  auto u = fdtd_evolve(f0, f1, nullptr, V, record, dt, 0);
  CHECK(u.time_count() == 2);
  CHECK_THROWS(fdtd_evolve(f0, f1, nullptr, V, record, h, 0));  // violates CFL
}

TEST_CASE("fdtd matches the free sine flow at modest resolution") {
  Grid3D g(2.5, 41);
  ScalarField3D f0(g);
  auto f1 = gaussian(g, 0.6, 2.2);
  ScalarField3D V(g);
  double h = g.spacing();
  double dt = (0.5 / std::sqrt(3.0)) * h;
  // snap dt so the record time is an exact multiple
  int m = static_cast<int>(std::ceil(0.5 / dt));
  dt = 0.5 / m;
  auto u = fdtd_evolve(f0, f1, nullptr, V, {0.5}, dt, 0);
  auto rule = SphereRule::product_rule(19);
  auto truth = sine_free(f1, 0.5, rule);
  auto got = u.slice(0);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < truth.values.size(); ++i) {
    num += std::norm(got.values[i] - truth.values[i]);
    den += std::norm(truth.values[i]);
  }
  CHECK(std::sqrt(num / den) < 0.02);
}

TEST_CASE("norm equivalence ratios bracket one for small potentials") {
  Grid3D g(2.0, 21);
  auto V = well(g, 0.5, 0.6);
  std::vector<ScalarField3D> family = {gaussian(g, 0.5, 1.8), gaussian(g, 0.8, 1.8)};
  auto r = norm_equivalence_check(V, family);
  CHECK(r.min_l1_ratio > 0.5);
  CHECK(r.max_l1_ratio < 2.0);
  CHECK(r.min_kato_ratio > 0.5);
  CHECK(r.max_kato_ratio < 2.0);
  CHECK(r.min_l1_ratio <= r.max_l1_ratio);
}
