#include "conewave/cone_kernel.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "json.hpp"

namespace conewave {

// ---------------------------------------------------------------- RhoMeasure

double RhoMeasure::total_variation() const {
  KahanSum s;
  for (const auto& [loc, w] : atoms) s.add(std::abs(w));
  for (const auto& [j, w] : bins) s.add(std::abs(w));
  return s.value();
}

complexd RhoMeasure::signed_mass() const {
  complexd s(0.0);
  for (const auto& [loc, w] : atoms) s += w;
  for (const auto& [j, w] : bins) s += w;
  return s;
}

complexd RhoMeasure::fourier(double lambda, double drho) const {
  const complexd mi(0.0, -1.0);
  complexd s(0.0);
  for (const auto& [loc, w] : atoms) s += w * std::exp(mi * lambda * loc);
  for (const auto& [j, w] : bins) s += w * std::exp(mi * lambda * bin_center(j, drho));
  return s;
}

double RhoMeasure::max_abs_location(double drho) const {
  double m = 0.0;
  for (const auto& [loc, w] : atoms) m = std::max(m, std::abs(loc));
  for (const auto& [j, w] : bins)
    m = std::max(m, std::abs(bin_center(j, drho)));
  return m;
}

void RhoMeasure::add_atom(double location, complexd weight) {
  auto it = std::lower_bound(atoms.begin(), atoms.end(), location,
                             [](const auto& a, double l) { return a.first < l; });
  if (it != atoms.end() && it->first == location) {
    it->second += weight;
    if (it->second == complexd(0.0)) atoms.erase(it);
  } else {
    atoms.insert(it, {location, weight});
  }
}

void RhoMeasure::add_bin(std::int64_t index, complexd mass) {
  auto it = std::lower_bound(bins.begin(), bins.end(), index,
                             [](const auto& a, std::int64_t j) { return a.first < j; });
  if (it != bins.end() && it->first == index) {
    it->second += mass;
    if (it->second == complexd(0.0)) bins.erase(it);
  } else {
    bins.insert(it, {index, mass});
  }
}

void RhoMeasure::add(const RhoMeasure& other) {
  for (const auto& [loc, w] : other.atoms) add_atom(loc, w);
  for (const auto& [j, w] : other.bins) add_bin(j, w);
}

void RhoMeasure::scale(complexd c) {
  for (auto& [loc, w] : atoms) w *= c;
  for (auto& [j, w] : bins) w *= c;
}

RhoMeasure RhoMeasure::weighted(double drho) const {
  RhoMeasure out;
  for (const auto& [loc, w] : atoms)
    if (loc != 0.0 && w != complexd(0.0)) out.atoms.push_back({loc, loc * w});
  for (const auto& [j, w] : bins) {
    complexd m = bin_center(j, drho) * w;
    if (m != complexd(0.0)) out.bins.push_back({j, m});
  }
  return out;
}

// ------------------------------------------------------------ OperatorMatrix

std::vector<complexd> OperatorMatrix::apply(const std::vector<complexd>& f) const {
  std::vector<complexd> out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = identity_part * f[i];
  if (rows.empty()) return out;
  Eigen::Map<const Eigen::VectorXcd> fv(f.data(), static_cast<Eigen::Index>(f.size()));
  Eigen::VectorXcd r = block * fv;
  for (std::size_t k = 0; k < rows.size(); ++k)
    out[static_cast<std::size_t>(rows[k])] += r(static_cast<Eigen::Index>(k));
  return out;
}

double OperatorMatrix::max_abs_entry() const {
  double m = std::abs(identity_part);
  if (block.size() > 0) m = std::max(m, block.cwiseAbs().maxCoeff());
  return m;
}

double OperatorMatrix::frobenius() const {
  double b = block.size() > 0 ? block.norm() : 0.0;
  double a = std::abs(identity_part) * std::sqrt(static_cast<double>(grid.count()));
  return std::sqrt(a * a + b * b);
}

double OperatorMatrix::bl1_norm() const {
  double m = 0.0;
  if (block.size() > 0) m = block.cwiseAbs().colwise().sum().maxCoeff();
  return std::abs(identity_part) + m;
}

double OperatorMatrix::blinf_norm() const {
  double m = 0.0;
  if (block.size() > 0) m = block.cwiseAbs().rowwise().sum().maxCoeff();
  return std::abs(identity_part) + m;
}

namespace {
std::vector<std::int64_t> row_union(const std::vector<std::int64_t>& a,
                                    const std::vector<std::int64_t>& b) {
  std::vector<std::int64_t> u;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(u));
  return u;
}
}  // namespace

OperatorMatrix OperatorMatrix::add(const OperatorMatrix& a, const OperatorMatrix& b) {
  if (a.grid != b.grid) throw std::invalid_argument("OperatorMatrix::add: grid mismatch");
  OperatorMatrix out;
  out.grid = a.grid;
  out.identity_part = a.identity_part + b.identity_part;
  out.rows = row_union(a.rows, b.rows);
  out.block = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(out.rows.size()),
                                     static_cast<Eigen::Index>(a.grid.count()));
  for (std::size_t k = 0; k < a.rows.size(); ++k) {
    auto pos = std::lower_bound(out.rows.begin(), out.rows.end(), a.rows[k]) - out.rows.begin();
    out.block.row(pos) += a.block.row(static_cast<Eigen::Index>(k));
  }
  for (std::size_t k = 0; k < b.rows.size(); ++k) {
    auto pos = std::lower_bound(out.rows.begin(), out.rows.end(), b.rows[k]) - out.rows.begin();
    out.block.row(pos) += b.block.row(static_cast<Eigen::Index>(k));
  }
  return out;
}

OperatorMatrix OperatorMatrix::scaled(complexd c) const {
  OperatorMatrix out = *this;
  out.identity_part *= c;
  out.block *= c;
  return out;
}

OperatorMatrix OperatorMatrix::multiply(const OperatorMatrix& a, const OperatorMatrix& b) {
  if (a.grid != b.grid) throw std::invalid_argument("OperatorMatrix::multiply: grid mismatch");
  // (aI + A)(bI + B) = ab I + a B + b A + A B
  OperatorMatrix out;
  out.grid = a.grid;
  out.identity_part = a.identity_part * b.identity_part;
  out.rows = row_union(a.rows, b.rows);
  out.block = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(out.rows.size()),
                                     static_cast<Eigen::Index>(a.grid.count()));
  auto pos_of = [&](std::int64_t r) {
    return std::lower_bound(out.rows.begin(), out.rows.end(), r) - out.rows.begin();
  };
  if (a.identity_part != complexd(0.0))
    for (std::size_t k = 0; k < b.rows.size(); ++k)
      out.block.row(pos_of(b.rows[k])) += a.identity_part * b.block.row(static_cast<Eigen::Index>(k));
  if (b.identity_part != complexd(0.0))
    for (std::size_t k = 0; k < a.rows.size(); ++k)
      out.block.row(pos_of(a.rows[k])) += b.identity_part * a.block.row(static_cast<Eigen::Index>(k));
  if (!a.rows.empty() && !b.rows.empty()) {
    // A[:, rows(B)] * block(B)
    Eigen::MatrixXcd mid(static_cast<Eigen::Index>(a.rows.size()),
                         static_cast<Eigen::Index>(b.rows.size()));
    for (std::size_t k = 0; k < b.rows.size(); ++k)
      mid.col(static_cast<Eigen::Index>(k)) = a.block.col(static_cast<Eigen::Index>(b.rows[k]));
    Eigen::MatrixXcd prod = mid * b.block;
    for (std::size_t k = 0; k < a.rows.size(); ++k)
      out.block.row(pos_of(a.rows[k])) += prod.row(static_cast<Eigen::Index>(k));
  }
  return out;
}

// ------------------------------------------------------------------ ConeKernel

ConeKernel ConeKernel::identity(const Grid3D& g, double drho) {
  ConeKernel t;
  t.grid = g;
  t.drho = drho;
  t.identity_part = complexd(1.0);
  return t;
}

int ConeKernel::row_position(std::int64_t grid_index) const {
  auto it = std::lower_bound(rows.begin(), rows.end(), grid_index);
  if (it == rows.end() || *it != grid_index) return -1;
  return static_cast<int>(it - rows.begin());
}

ConeKernel t_minus(const ScalarField3D& V, double drho) {
  if (!V.is_finite()) throw std::invalid_argument("t_minus: non-finite potential");
  const Grid3D& g = V.grid;
  double h = g.spacing();
  double h3 = h * h * h;
  double diag = cube_inverse_power_integral(1.0, h);
  // the diagonal cell integral of 1/|x-y| sits at its 1/r-centroid, so the
  // lambda-Fourier transform reproduces the cell integral of e^{i lambda r}/r
  // to second order
  double rho_diag = h3 / diag;

  ConeKernel t;
  t.grid = g;
  t.drho = drho > 0.0 ? drho : 0.5 * h;
  t.identity_part = complexd(0.0);
  t.rows = V.support_indices(0.0);
  t.entries.resize(t.rows.size());
  std::int64_t N = g.count();
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    auto x = g.point(t.rows[r]);
    complexd vx = V.values[static_cast<std::size_t>(t.rows[r])];
    t.entries[r].resize(static_cast<std::size_t>(N));
    for (std::int64_t c = 0; c < N; ++c) {
      if (c == t.rows[r]) {
        t.entries[r][static_cast<std::size_t>(c)].atoms.push_back(
            {rho_diag, vx * diag / (4.0 * M_PI)});
      } else {
        double d = euclid_dist(x, g.point(c));
        t.entries[r][static_cast<std::size_t>(c)].atoms.push_back(
            {d, vx * h3 / (4.0 * M_PI * d)});
      }
    }
  }
  return t;
}

ConeKernel kernel_scale(const ConeKernel& a, complexd c) {
  ConeKernel out = a;
  out.identity_part *= c;
  for (auto& row : out.entries)
    for (auto& m : row) m.scale(c);
  return out;
}

ConeKernel kernel_add(const ConeKernel& a, const ConeKernel& b) {
  if (a.grid != b.grid) throw std::invalid_argument("kernel_add: grid mismatch");
  if (a.drho != b.drho) throw std::invalid_argument("kernel_add: bin width mismatch");
  ConeKernel out;
  out.grid = a.grid;
  out.drho = a.drho;
  out.identity_part = a.identity_part + b.identity_part;
  out.rows = row_union(a.rows, b.rows);
  std::size_t N = static_cast<std::size_t>(a.grid.count());
  out.entries.assign(out.rows.size(), std::vector<RhoMeasure>(N));
  for (std::size_t k = 0; k < a.rows.size(); ++k) {
    std::size_t pos = static_cast<std::size_t>(out.row_position(a.rows[k]));
    for (std::size_t c = 0; c < N; ++c) out.entries[pos][c].add(a.entries[k][c]);
  }
  for (std::size_t k = 0; k < b.rows.size(); ++k) {
    std::size_t pos = static_cast<std::size_t>(out.row_position(b.rows[k]));
    for (std::size_t c = 0; c < N; ++c) out.entries[pos][c].add(b.entries[k][c]);
  }
  return out;
}

ConeKernel compose(const ConeKernel& a, const ConeKernel& b) {
  if (a.grid != b.grid) throw std::invalid_argument("compose: grid mismatch");
  if (a.drho != b.drho) throw std::invalid_argument("compose: bin width mismatch");
  const double drho = a.drho;
  std::size_t N = static_cast<std::size_t>(a.grid.count());

  // (aI + A)(bI + B) = ab I + a B + b A + A o B
  ConeKernel out;
  out.grid = a.grid;
  out.drho = drho;
  out.identity_part = a.identity_part * b.identity_part;
  out.rows = row_union(a.rows, b.rows);
  out.entries.assign(out.rows.size(), std::vector<RhoMeasure>(N));

  if (a.identity_part != complexd(0.0)) {
    for (std::size_t k = 0; k < b.rows.size(); ++k) {
      std::size_t pos = static_cast<std::size_t>(out.row_position(b.rows[k]));
      for (std::size_t c = 0; c < N; ++c)
        if (!b.entries[k][c].empty()) {
          RhoMeasure m = b.entries[k][c];
          m.scale(a.identity_part);
          out.entries[pos][c].add(m);
        }
    }
  }
  if (b.identity_part != complexd(0.0)) {
    for (std::size_t k = 0; k < a.rows.size(); ++k) {
      std::size_t pos = static_cast<std::size_t>(out.row_position(a.rows[k]));
      for (std::size_t c = 0; c < N; ++c)
        if (!a.entries[k][c].empty()) {
          RhoMeasure m = a.entries[k][c];
          m.scale(b.identity_part);
          out.entries[pos][c].add(m);
        }
    }
  }
  if (a.rows.empty() || b.rows.empty()) return out;

  // A o B: rho-convolution over the middle spatial index; every product term
  // is binned so the map stays linear in both factors.
  double maxA = 0.0, maxB = 0.0;
  for (const auto& row : a.entries)
    for (const auto& m : row) maxA = std::max(maxA, m.max_abs_location(drho));
  for (const auto& row : b.entries)
    for (const auto& m : row) maxB = std::max(maxB, m.max_abs_location(drho));
  std::int64_t jmin = bin_of(-(maxA + maxB), drho) - 2;
  std::int64_t jmax = bin_of(maxA + maxB, drho) + 2;
  std::size_t span = static_cast<std::size_t>(jmax - jmin + 1);
  std::vector<complexd> acc(span, complexd(0.0));
  std::vector<std::int64_t> touched;
  touched.reserve(span);

  for (std::size_t ra = 0; ra < a.rows.size(); ++ra) {
    std::size_t pos = static_cast<std::size_t>(out.row_position(a.rows[ra]));
    for (std::size_t c = 0; c < N; ++c) {
      touched.clear();
      auto deposit = [&](double loc, complexd w) {
        std::int64_t j = bin_of(loc, drho);
        std::size_t o = static_cast<std::size_t>(j - jmin);
        if (acc[o] == complexd(0.0)) touched.push_back(j);
        acc[o] += w;
      };
      for (std::size_t rb = 0; rb < b.rows.size(); ++rb) {
        const RhoMeasure& am = a.entries[ra][static_cast<std::size_t>(b.rows[rb])];
        if (am.empty()) continue;
        const RhoMeasure& bm = b.entries[rb][c];
        if (bm.empty()) continue;
        for (const auto& [la, wa] : am.atoms) {
          for (const auto& [lb, wb] : bm.atoms) deposit(la + lb, wa * wb);
          for (const auto& [jb, wb] : bm.bins) deposit(la + bin_center(jb, drho), wa * wb);
        }
        for (const auto& [ja, wa] : am.bins) {
          double ca = bin_center(ja, drho);
          for (const auto& [lb, wb] : bm.atoms) deposit(ca + lb, wa * wb);
          for (const auto& [jb, wb] : bm.bins) deposit(ca + bin_center(jb, drho), wa * wb);
        }
      }
      if (!touched.empty()) {
        std::sort(touched.begin(), touched.end());
        RhoMeasure& dst = out.entries[pos][c];
        for (std::int64_t j : touched) {
          std::size_t o = static_cast<std::size_t>(j - jmin);
          if (acc[o] != complexd(0.0)) dst.add_bin(j, acc[o]);
          acc[o] = complexd(0.0);
        }
      }
    }
  }
  // Drop rows that ended up with no mass (e.g. rows of b not reachable when
  // a.identity_part vanishes) so kernels stay structurally minimal.
  std::vector<std::int64_t> keep_rows;
  std::vector<std::vector<RhoMeasure>> keep_entries;
  for (std::size_t r = 0; r < out.rows.size(); ++r) {
    bool any = false;
    for (const auto& m : out.entries[r])
      if (!m.empty()) {
        any = true;
        break;
      }
    if (any) {
      keep_rows.push_back(out.rows[r]);
      keep_entries.push_back(std::move(out.entries[r]));
    }
  }
  out.rows = std::move(keep_rows);
  out.entries = std::move(keep_entries);
  return out;
}

OperatorMatrix marginal(const ConeKernel& t) {
  OperatorMatrix m;
  m.grid = t.grid;
  m.identity_part = complexd(std::abs(t.identity_part));
  m.rows = t.rows;
  m.block = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(t.rows.size()),
                                   static_cast<Eigen::Index>(t.grid.count()));
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    for (std::size_t c = 0; c < t.entries[r].size(); ++c)
      m.block(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          t.entries[r][c].total_variation();
  return m;
}

OperatorMatrix fourier(const ConeKernel& t, double lambda) {
  OperatorMatrix m;
  m.grid = t.grid;
  m.identity_part = t.identity_part;
  m.rows = t.rows;
  m.block = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(t.rows.size()),
                                   static_cast<Eigen::Index>(t.grid.count()));
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    for (std::size_t c = 0; c < t.entries[r].size(); ++c)
      if (!t.entries[r][c].empty())
        m.block(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            t.entries[r][c].fourier(lambda, t.drho);
  return m;
}

ConeKernel weighted(const ConeKernel& t) {
  ConeKernel out;
  out.grid = t.grid;
  out.drho = t.drho;
  out.identity_part = complexd(0.0);  // rho * (c delta_0) vanishes
  out.rows = t.rows;
  out.entries.resize(t.entries.size());
  for (std::size_t r = 0; r < t.entries.size(); ++r) {
    out.entries[r].resize(t.entries[r].size());
    for (std::size_t c = 0; c < t.entries[r].size(); ++c)
      out.entries[r][c] = t.entries[r][c].weighted(t.drho);
  }
  return out;
}

namespace {

double kato_weight(double theta, double dist, double diag) {
  return dist == 0.0 ? diag : std::pow(dist, -theta);
}

// Upper bound for the operator norm of the (nonnegative) marginal on the
// weighted-sup space with weight |z-x|^{-theta}: uses the pointwise bound
// |f(y)| <= ||f|| / w_max(y) with w_max = the diagonal weight.
double kato_bound(const OperatorMatrix& m, double theta, bool transpose) {
  const Grid3D& g = m.grid;
  double h = g.spacing();
  double h3 = h * h * h;
  double diag = cube_inverse_power_integral(theta, h) / h3;  // weight at dist 0
  std::int64_t N = g.count();

  // row/column sums of the block (over the y index after optional transpose)
  std::vector<double> sums(static_cast<std::size_t>(N), 0.0);
  std::vector<std::int64_t> sites;  // x sites carrying mass
  if (!transpose) {
    sites = m.rows;
    for (std::size_t r = 0; r < m.rows.size(); ++r)
      sums[static_cast<std::size_t>(m.rows[r])] =
          m.block.row(static_cast<Eigen::Index>(r)).cwiseAbs().sum();
  } else {
    Eigen::VectorXd cs = m.block.cwiseAbs().colwise().sum();
    for (std::int64_t c = 0; c < N; ++c) {
      double v = cs(static_cast<Eigen::Index>(c));
      if (v != 0.0) {
        sites.push_back(c);
        sums[static_cast<std::size_t>(c)] = v;
      }
    }
  }
  double best = 0.0;
  for (std::int64_t z = 0; z < N; ++z) {
    auto pz = g.point(z);
    KahanSum s;
    for (std::int64_t x : sites) {
      double d = z == x ? 0.0 : euclid_dist(pz, g.point(x));
      s.add(kato_weight(theta, d, diag) * sums[static_cast<std::size_t>(x)]);
    }
    best = std::max(best, s.value());
  }
  // h^3 factors cancel between the weights and the pointwise bound
  return best / diag;
}

}  // namespace

double ux_norm(const ConeKernel& t, SpaceId x, double theta) {
  OperatorMatrix m = marginal(t);
  double id = std::abs(t.identity_part);
  if (t.rows.empty()) return id;
  switch (x) {
    case SpaceId::L1:
      return id + m.block.cwiseAbs().colwise().sum().maxCoeff();
    case SpaceId::Linf:
      return id + m.block.cwiseAbs().rowwise().sum().maxCoeff();
    case SpaceId::Kato:
      return id + kato_bound(m, 1.0, false);
    case SpaceId::KatoTheta:
      return id + kato_bound(m, theta, false);
    case SpaceId::KatoStar:
      return id + kato_bound(m, 1.0, true);
  }
  throw std::invalid_argument("ux_norm: unsupported space");
}

double ux_norm_l1_to(const ConeKernel& t, SpaceId target, double theta) {
  OperatorMatrix m = marginal(t);
  const Grid3D& g = t.grid;
  double h = g.spacing();
  double h3 = h * h * h;
  std::int64_t N = g.count();
  double id = std::abs(t.identity_part);
  if (t.rows.empty()) {
    // identity as a map L1 -> X on a unit-mass delta column
    if (target == SpaceId::L1) return id;
    if (target == SpaceId::Linf) return id / h3;
    double th = target == SpaceId::KatoTheta ? theta : 1.0;
    return id * cube_inverse_power_integral(th, h) / h3;
  }
  double th = 1.0;
  switch (target) {
    case SpaceId::L1: {
      return id + m.block.cwiseAbs().colwise().sum().maxCoeff();
    }
    case SpaceId::Linf: {
      return id / h3 + m.block.cwiseAbs().maxCoeff() / h3;
    }
    case SpaceId::KatoTheta:
      th = theta;
      [[fallthrough]];
    case SpaceId::Kato: {
      // max over delta columns y of || M(., y)/h^3 ||_{K^th}
      double diag = cube_inverse_power_integral(th, h) / h3;
      double best = 0.0;
      Eigen::MatrixXd absb = m.block.cwiseAbs();
      for (std::int64_t z = 0; z < N; ++z) {
        auto pz = g.point(z);
        Eigen::VectorXd w(static_cast<Eigen::Index>(t.rows.size()));
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
          std::int64_t x = t.rows[r];
          double d = z == x ? 0.0 : euclid_dist(pz, g.point(x));
          w(static_cast<Eigen::Index>(r)) = kato_weight(th, d, diag);
        }
        Eigen::VectorXd per_col = absb.transpose() * w;  // sum_x w(z,x)M(x,y)
        best = std::max(best, per_col.maxCoeff());
      }
      double id_term = id == 0.0 ? 0.0 : id * diag;
      return id_term + best;  // both per unit L1 mass (h^3 cancels)
    }
    case SpaceId::KatoStar:
      throw std::invalid_argument("ux_norm_l1_to: KatoStar target unsupported");
  }
  throw std::invalid_argument("ux_norm_l1_to: unsupported space");
}

double derivative_identity_check(const ConeKernel& t, double lambda, double dlambda) {
  auto resolvent = [&](double l) {
    OperatorMatrix th = fourier(t, l);
    // (I + T)^{-1} = I - X with A X = T restricted to the row block
    OperatorMatrix out;
    out.grid = t.grid;
    out.identity_part = complexd(1.0);
    out.rows = t.rows;
    if (t.rows.empty()) return out;  // T-hat = 0, inverse is the identity
    std::size_t s = t.rows.size();
    Eigen::MatrixXcd A = Eigen::MatrixXcd::Identity(static_cast<Eigen::Index>(s),
                                                    static_cast<Eigen::Index>(s));
    for (std::size_t i = 0; i < s; ++i)
      for (std::size_t j = 0; j < s; ++j)
        A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) +=
            th.block(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t.rows[j]));
    out.block = -A.partialPivLu().solve(th.block);
    return out;
  };
  OperatorMatrix Fm = resolvent(lambda - dlambda);
  OperatorMatrix F0 = resolvent(lambda);
  OperatorMatrix Fp = resolvent(lambda + dlambda);
  OperatorMatrix D = OperatorMatrix::add(Fp, Fm.scaled(complexd(-1.0)))
                         .scaled(complexd(1.0 / (2.0 * dlambda)));
  OperatorMatrix Tp = fourier(t, lambda + dlambda);
  OperatorMatrix Tm = fourier(t, lambda - dlambda);
  OperatorMatrix Td = OperatorMatrix::add(Tp, Tm.scaled(complexd(-1.0)))
                          .scaled(complexd(1.0 / (2.0 * dlambda)));
  Td.identity_part = complexd(0.0);
  OperatorMatrix rhs = OperatorMatrix::multiply(OperatorMatrix::multiply(F0, Td), F0);
  OperatorMatrix resid = OperatorMatrix::add(D, rhs);
  double scale = rhs.frobenius();
  if (scale == 0.0) scale = 1.0;
  return resid.frobenius() / scale;
}

ConeKernel wiener_invert(const ConeKernel& t, WienerMode mode,
                         const WienerOptions& opts, WienerDiagnostics* diag) {
  if (t.identity_part != complexd(0.0))
    throw std::invalid_argument("wiener_invert: pass the non-identity part only");
  WienerDiagnostics local;
  WienerDiagnostics& d = diag ? *diag : local;

  if (mode == WienerMode::Neumann) {
    double q = ux_norm(t, SpaceId::L1);
    d.norm_ratio = q;
    if (q >= 1.0)
      throw std::runtime_error("wiener_invert: Neumann series requires ux_norm < 1, got " +
                               std::to_string(q));
    ConeKernel S = ConeKernel::identity(t.grid, t.drho);
    ConeKernel negT = kernel_scale(t, complexd(-1.0));
    ConeKernel P = negT;  // (-T)^k
    for (int k = 1; k <= opts.max_terms; ++k) {
      S = kernel_add(S, P);
      d.terms_used = k;
      d.tail_bound = std::pow(q, k + 1) / (1.0 - q);
      if (d.tail_bound < opts.tol) break;
      if (k < opts.max_terms) P = compose(negT, P);
    }
    return S;
  }

  // fourier_side: Nyquist-matched lambda grid for the rho histogram window.
  double drho = t.drho;
  double maxloc = 0.0;
  for (const auto& row : t.entries)
    for (const auto& m : row) maxloc = std::max(maxloc, m.max_abs_location(drho));
  double q = ux_norm(t, SpaceId::L1);
  d.norm_ratio = q;
  double window = opts.window;
  if (window <= 0.0) {
    double terms = q < 1.0 ? std::max(4.0, std::ceil(std::log(opts.tol) / std::log(std::max(q, 1e-6)))) : 24.0;
    window = maxloc * (terms + 1.0);
  }
  std::int64_t B = static_cast<std::int64_t>(std::ceil(window / drho));
  if (B < 4) B = 4;
  std::int64_t N2 = 2 * B;
  double P = B * drho;  // actual half-window
  double dl = M_PI / P;

  std::size_t s = t.rows.size();
  std::int64_t N = t.grid.count();
  // Per-lambda solves, stored as S-hat(lambda_m) = (I + T-hat)^{-1} - I.
  std::vector<Eigen::MatrixXcd> shat(static_cast<std::size_t>(N2));
  d.min_singular = std::numeric_limits<double>::infinity();
  double prev_norm = 0.0;
  d.fourier_modulus = 0.0;
  for (std::int64_t mm = 0; mm < N2; ++mm) {
    double lambda = (mm - B) * dl;
    OperatorMatrix th = fourier(t, lambda);
    Eigen::MatrixXcd A = Eigen::MatrixXcd::Identity(static_cast<Eigen::Index>(s),
                                                    static_cast<Eigen::Index>(s));
    for (std::size_t i = 0; i < s; ++i)
      for (std::size_t j = 0; j < s; ++j)
        A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) +=
            th.block(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t.rows[j]));
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(A);
    double ms = svd.singularValues().minCoeff();
    if (ms < d.min_singular) {
      d.min_singular = ms;
      d.worst_lambda = lambda;
    }
    if (ms < opts.singular_floor)
      throw std::runtime_error("wiener_invert: I + T-hat nearly singular at lambda = " +
                               std::to_string(lambda));
    shat[static_cast<std::size_t>(mm)] = -A.partialPivLu().solve(th.block);
    double cur = th.block.norm();
    if (mm > 0) d.fourier_modulus = std::max(d.fourier_modulus, std::abs(cur - prev_norm));
    prev_norm = cur;
    if (opts.taper) {
      double frac = std::abs(lambda) / (B * dl);
      if (frac > 0.9) {
        double w = 0.5 * (1.0 + std::cos(M_PI * (frac - 0.9) / 0.1));
        shat[static_cast<std::size_t>(mm)] *= w;
      }
    }
  }

  // Inverse transform per (row, column) entry:
  // w_j = (1/N2) sum_m Shat_m e^{i rho_j lambda_m}, rho_j = j drho,
  // lambda_m = (m - B) pi / P. With the lattice-point bins this is a plain
  // length-N2 inverse DFT times (-1)^j from the lambda-grid offset.
  ConeKernel S = ConeKernel::identity(t.grid, drho);
  S.rows = t.rows;
  S.entries.assign(s, std::vector<RhoMeasure>(static_cast<std::size_t>(N)));

  std::vector<complexd> buf(static_cast<std::size_t>(N2));
  fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(N2),
                                    reinterpret_cast<fftw_complex*>(buf.data()),
                                    reinterpret_cast<fftw_complex*>(buf.data()),
                                    FFTW_BACKWARD, FFTW_ESTIMATE);
  double global_max = 0.0;
  for (const auto& m : shat) global_max = std::max(global_max, m.cwiseAbs().maxCoeff());
  double drop = 1e-16 * global_max;

  for (std::size_t r = 0; r < s; ++r) {
    for (std::int64_t c = 0; c < N; ++c) {
      bool any = false;
      for (std::int64_t mm = 0; mm < N2; ++mm) {
        complexd v = shat[static_cast<std::size_t>(mm)](static_cast<Eigen::Index>(r),
                                                        static_cast<Eigen::Index>(c));
        buf[static_cast<std::size_t>(mm)] = v;
        if (v != complexd(0.0)) any = true;
      }
      if (!any) continue;
      fftw_execute(plan);
      RhoMeasure& dst = S.entries[r][static_cast<std::size_t>(c)];
      for (std::int64_t js = -B; js < B; ++js) {
        std::int64_t j = js >= 0 ? js : js + N2;
        complexd w = buf[static_cast<std::size_t>(j)] / double(N2);
        if (js % 2 != 0) w = -w;
        if (std::abs(w) > drop) dst.bins.push_back({js, w});
      }
    }
  }
  fftw_destroy_plan(plan);

  // tail-mass diagnostic: marginal mass in the outer 10% of the window
  double tail = 0.0, total = 0.0;
  for (const auto& row : S.entries)
    for (const auto& m : row)
      for (const auto& [j, w] : m.bins) {
        double a = std::abs(w);
        total += a;
        if (std::abs(bin_center(j, drho)) > 0.9 * P) tail += a;
      }
  d.tail_mass = total > 0.0 ? tail / total : 0.0;
  return S;
}

// ------------------------------------------------------------- serialization

void write_cone_kernel(const std::string& path, const ConeKernel& t) {
  nlohmann::json j;
  j["half_width"] = t.grid.half_width;
  j["points_per_axis"] = t.grid.points_per_axis;
  j["drho"] = t.drho;
  j["identity_part"] = {t.identity_part.real(), t.identity_part.imag()};
  nlohmann::json triples = nlohmann::json::array();
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    for (std::size_t c = 0; c < t.entries[r].size(); ++c) {
      const RhoMeasure& m = t.entries[r][c];
      if (m.empty()) continue;
      nlohmann::json e;
      e["x"] = t.rows[r];
      e["y"] = static_cast<std::int64_t>(c);
      nlohmann::json atoms = nlohmann::json::array();
      for (const auto& [loc, w] : m.atoms) atoms.push_back({loc, w.real(), w.imag()});
      nlohmann::json bins = nlohmann::json::array();
      for (const auto& [idx, w] : m.bins) bins.push_back({idx, w.real(), w.imag()});
      if (!atoms.empty()) e["atoms"] = atoms;
      if (!bins.empty()) e["bins"] = bins;
      triples.push_back(e);
    }
  j["entries"] = triples;
  std::ofstream(path) << j.dump() << "\n";
}

ConeKernel read_cone_kernel(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("read_cone_kernel: cannot open " + path);
  nlohmann::json j = nlohmann::json::parse(is);
  ConeKernel t;
  t.grid = Grid3D(j["half_width"].get<double>(), j["points_per_axis"].get<int>());
  t.drho = j["drho"].get<double>();
  auto ip = j["identity_part"];
  t.identity_part = complexd(ip[0].get<double>(), ip[1].get<double>());
  std::vector<std::int64_t> rows;
  for (const auto& e : j["entries"]) rows.push_back(e["x"].get<std::int64_t>());
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  t.rows = rows;
  t.entries.assign(rows.size(),
                   std::vector<RhoMeasure>(static_cast<std::size_t>(t.grid.count())));
  for (const auto& e : j["entries"]) {
    int r = t.row_position(e["x"].get<std::int64_t>());
    std::size_t c = e["y"].get<std::size_t>();
    RhoMeasure& m = t.entries[static_cast<std::size_t>(r)][c];
    if (e.contains("atoms"))
      for (const auto& a : e["atoms"])
        m.atoms.push_back({a[0].get<double>(),
                           complexd(a[1].get<double>(), a[2].get<double>())});
    if (e.contains("bins"))
      for (const auto& b : e["bins"])
        m.bins.push_back({b[0].get<std::int64_t>(),
                          complexd(b[1].get<double>(), b[2].get<double>())});
  }
  return t;
}

}  // namespace conewave
