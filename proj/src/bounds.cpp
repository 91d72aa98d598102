#include "toda/bounds.hpp"

#include "toda/errors.hpp"
#include "toda/geometry.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace toda {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr int kCoarseMax = 64;
constexpr int kRefineCandidates = 4;

double bound_constant() { return -8.0 * M_PI - 8.0 * M_PI * std::log(M_PI); }

double floor_of(const TrigPoly &h, const TorusGrid &grid) {
  return kHFloor * eval_h(h, grid).max();
}

// objective as a function of (p1, p2) packed in a 4-vector
struct PairObjective {
  const TrigPoly &h1, &h2;
  double floor1, floor2;

  double operator()(const Eigen::Vector4d &v) const {
    const Point p1{v[0], v[1]}, p2{v[2], v[3]};
    const double a = h1(p1), b = h2(p2);
    if (!(a >= floor1) || !(b >= floor2) || torus_dist(p1, p2) < 1e-3)
      return kNegInf;
    return pair_objective(h1, h2, p1, p2);
  }

  Eigen::Vector4d gradient(const Eigen::Vector4d &v) const {
    const Point p1{v[0], v[1]}, p2{v[2], v[3]};
    const TrigPoly::Jet j1 = h1.jet(p1), j2 = h2.jet(p2);
    const TorusGreen &g = standard_green();
    const Point d = torus_delta(p1, p2);
    const double t = 1e-5;
    const double gx = (g.value({d.x + t, d.y}) - g.value({d.x - t, d.y})) / (2 * t);
    const double gy = (g.value({d.x, d.y + t}) - g.value({d.x, d.y - t})) / (2 * t);
    Eigen::Vector4d out;
    out << 2 * j1.hx / j1.h - 8 * M_PI * gx, 2 * j1.hy / j1.h - 8 * M_PI * gy,
        2 * j2.hx / j2.h + 8 * M_PI * gx, 2 * j2.hy / j2.h + 8 * M_PI * gy;
    return out;
  }
};

// damped Newton ascent with a finite difference Hessian
Eigen::Vector4d refine(const PairObjective &f, Eigen::Vector4d v) {
  double fv = f(v);
  double mu = 1e-3;
  for (int it = 0; it < 100; ++it) {
    const Eigen::Vector4d g = f.gradient(v);
    if (g.norm() < 1e-11)
      break;
    Eigen::Matrix4d H;
    const double t = 1e-4;
    for (int c = 0; c < 4; ++c) {
      Eigen::Vector4d e = Eigen::Vector4d::Zero();
      e[c] = t;
      H.col(c) = (f.gradient(v + e) - f.gradient(v - e)) / (2 * t);
    }
    H = 0.5 * (H + H.transpose());
    bool moved = false;
    for (int k = 0; k < 30; ++k) {
      const Eigen::Matrix4d A = -H + mu * Eigen::Matrix4d::Identity();
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(A);
      if (es.eigenvalues().minCoeff() <= 0.0) {
        mu = std::max(mu * 10, 1e-12 - es.eigenvalues().minCoeff() * 2);
        continue;
      }
      Eigen::Vector4d step = A.ldlt().solve(g);
      if (step.norm() > 0.05)
        step *= 0.05 / step.norm();
      const double fn = f(v + step);
      if (fn >= fv) {
        v += step;
        fv = fn;
        mu = std::max(mu * 0.3, 1e-12);
        moved = true;
        break;
      }
      mu *= 10;
    }
    if (!moved)
      break;
  }
  return v;
}

} // namespace

double pair_objective(const TrigPoly &h1, const TrigPoly &h2, Point p1, Point p2) {
  return 2.0 * std::log(h1(p1)) + 2.0 * std::log(h2(p2)) + toda_constant(p1, p2) +
         toda_constant(p2, p1);
}

LowerBound lower_bound(const TrigPoly &h1, const TrigPoly &h2, const TorusGrid &grid) {
  const TorusGrid coarse = TorusGrid(std::min(grid.n(), kCoarseMax));
  const ScalarField v1 = eval_h(h1, coarse), v2 = eval_h(h2, coarse);
  const double f1 = kHFloor * v1.max(), f2 = kHFloor * v2.max();
  if (!(v1.max() > 0.0) || !(v2.max() > 0.0))
    throw EmptyPositiveSet("lower_bound: h has no positive nodes");
  const double fine1 = floor_of(h1, grid), fine2 = floor_of(h2, grid);

  const int n = coarse.n();
  const std::size_t size = coarse.size();
  std::vector<double> a(size, kNegInf), b(size, kNegInf);
  for (std::size_t k = 0; k < size; ++k) {
    if (v1[k] > 0.0 && v1[k] >= f1)
      a[k] = 2.0 * std::log(v1[k]);
    if (v2[k] > 0.0 && v2[k] >= f2)
      b[k] = 2.0 * std::log(v2[k]);
  }
  // -8 pi g on node offsets
  const ScalarField g = standard_green().sample(coarse, {0.0, 0.0});

  struct Cand {
    double value;
    std::size_t k1, k2;
  };
  std::vector<Cand> best;
  for (std::size_t k1 = 0; k1 < size; ++k1) {
    if (a[k1] == kNegInf)
      continue;
    const int i1 = static_cast<int>(k1) / n, j1 = static_cast<int>(k1) % n;
    double bv = kNegInf;
    std::size_t bk = 0;
    for (std::size_t k2 = 0; k2 < size; ++k2) {
      if (k2 == k1 || b[k2] == kNegInf)
        continue;
      const int i2 = static_cast<int>(k2) / n, j2 = static_cast<int>(k2) % n;
      const int di = ((i1 - i2) % n + n) % n, dj = ((j1 - j2) % n + n) % n;
      const double val = b[k2] - 8.0 * M_PI * g[coarse.index(di, dj)];
      if (val > bv) {
        bv = val;
        bk = k2;
      }
    }
    if (bv == kNegInf)
      continue;
    best.push_back({a[k1] + bv, k1, bk});
  }
  if (best.empty())
    throw EmptyPositiveSet("lower_bound: no admissible pair");
  std::stable_sort(best.begin(), best.end(),
                   [](const Cand &x, const Cand &y) { return x.value > y.value; });

  PairObjective f{h1, h2, fine1, fine2};
  LowerBound out;
  out.objective = kNegInf;
  const int count = std::min<int>(kRefineCandidates, static_cast<int>(best.size()));
  for (int c = 0; c < count; ++c) {
    const Point q1 = coarse.node(best[c].k1), q2 = coarse.node(best[c].k2);
    Eigen::Vector4d v(q1.x, q1.y, q2.x, q2.y);
    // start from the coarse value; refinement only moves uphill
    if (!(f(v) > kNegInf))
      continue;
    v = refine(f, v);
    const double val = f(v);
    if (val > out.objective + 1e-12) {
      out.objective = val;
      out.p1 = wrap({v[0], v[1]});
      out.p2 = wrap({v[2], v[3]});
    }
  }
  if (out.objective == kNegInf)
    throw EmptyPositiveSet("lower_bound: no admissible pair above the floor");
  out.A1 = toda_constant(out.p1, out.p2);
  out.A2 = toda_constant(out.p2, out.p1);
  out.value = bound_constant() - 2.0 * M_PI * out.objective;
  return out;
}

void TestFamilyParams::validate() const {
  if (!(L > 0.0))
    throw InvalidArgument("test family: L must be positive");
  if (torus_dist(p1, p2) == 0.0)
    throw InvalidArgument("test family: p1 and p2 coincide");
  for (double e : eps_list)
    if (!(e > 0.0) || e * L > 0.25)
      throw InvalidArgument("test family: eps outside (0, 0.25 / L]");
}

std::vector<double> default_eps_list(double L) {
  std::vector<double> out;
  for (int k = 0; k <= 6; ++k) {
    const double e = 0.1 * std::ldexp(1.0, -k);
    if (e * L <= 0.25)
      out.push_back(e);
  }
  return out;
}

TestFamilyParams default_family(const LowerBound &lb, double L) {
  return TestFamilyParams{lb.p1, lb.p2, L, default_eps_list(L)};
}

int test_grid_size(int n, double eps) {
  if (!(eps > 0.0))
    throw InvalidArgument("test_grid_size: eps must be positive");
  const double want = std::max<double>(n, 6.4 / eps);
  int m = 32;
  while (m < want)
    m *= 2;
  if (m > 4096)
    throw InvalidArgument("test_grid_size: eps too small for the evaluation grid");
  return m;
}

FieldPair build_test_functions(const TrigPoly &h1, const TrigPoly &h2,
                               const TestFamilyParams &params, double eps,
                               const TorusGrid &grid) {
  const Point p[2] = {wrap(params.p1), wrap(params.p2)};
  const double L = params.L;
  if (!(eps > 0.0) || eps * L > 0.25)
    throw InvalidArgument("build_test_functions: eps outside (0, 0.25 / L]");
  if (torus_dist(p[0], p[1]) < 2.0 * L * eps)
    throw InvalidArgument("build_test_functions: balls around p1, p2 overlap");
  const double a[2] = {h1(p[0]), h2(p[1])};
  if (!(a[0] > 0.0) || !(a[1] > 0.0))
    throw InvalidArgument("build_test_functions: h_i(p_i) must be positive");

  const TorusGreen &green = standard_green();
  const ScalarField g[2] = {green.sample(grid, p[0]), green.sample(grid, p[1])};
  const ScalarField greg[2] = {green.sample(grid, p[0], true),
                               green.sample(grid, p[1], true)};
  const double R = L * eps, e2 = eps * eps;
  FieldPair out{ScalarField(grid), ScalarField(grid)};
  for (int c = 0; c < 2; ++c) {
    const int o = 1 - c;
    // matching constants: inner and outer definitions agree at r = L eps
    const double own_const = 2.0 * std::log(e2 * (1.0 + M_PI * a[c] * L * L)) - 4.0 * std::log(R);
    const double other_const = -std::log(e2 * (1.0 + M_PI * a[o] * L * L)) + 2.0 * std::log(R);
    ScalarField &u = out[c];
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const Point x = grid.node(k);
      const double rc = torus_dist2(x, p[c]), ro = torus_dist2(x, p[o]);
      if (rc < R * R)
        u[k] = 8.0 * M_PI * greg[c][k] - 4.0 * M_PI * g[o][k] -
               2.0 * std::log(e2 + M_PI * a[c] * rc) + own_const;
      else if (ro < R * R)
        u[k] = 8.0 * M_PI * g[c][k] - 4.0 * M_PI * greg[o][k] +
               std::log(e2 + M_PI * a[o] * ro) + other_const;
      else
        u[k] = 8.0 * M_PI * g[c][k] - 4.0 * M_PI * g[o][k];
    }
  }
  const ScalarField hv1 = eval_h(h1, grid), hv2 = eval_h(h2, grid);
  try {
    return normalize(out, hv1, hv2);
  } catch (const InfeasibleState &) {
    throw InfeasibleTestFunction("build_test_functions: int h e^phi is not positive");
  }
}

std::vector<FamilySample> family_energies(const TrigPoly &h1, const TrigPoly &h2,
                                          const TestFamilyParams &params, int n) {
  params.validate();
  std::vector<FamilySample> out;
  for (double eps : params.eps_list) {
    const TorusGrid grid(test_grid_size(n, eps));
    const FieldPair s = build_test_functions(h1, h2, params, eps, grid);
    const double j = J(s, eval_h(h1, grid), eval_h(h2, grid), RhoPair{});
    out.push_back({eps, grid.n(), j});
  }
  return out;
}

ExpansionFit fit_samples(const std::vector<FamilySample> &samples) {
  const int m = static_cast<int>(samples.size());
  if (m < 5)
    throw InvalidArgument("fit_expansion: at least 5 eps samples are required");
  double lo = samples[0].eps, hi = lo;
  for (const auto &s : samples) {
    lo = std::min(lo, s.eps);
    hi = std::max(hi, s.eps);
  }
  Eigen::MatrixXd A(m, 3);
  Eigen::VectorXd y(m);
  for (int r = 0; r < m; ++r) {
    const double e2 = samples[r].eps * samples[r].eps;
    A(r, 0) = 1.0;
    A(r, 1) = -e2 * std::log(e2);
    A(r, 2) = e2;
    y[r] = samples[r].J;
  }
  // condition number with unit columns
  Eigen::VectorXd scale = A.colwise().norm().transpose();
  Eigen::MatrixXd An = A * scale.cwiseInverse().asDiagonal();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(An, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd sv = svd.singularValues();
  const double cond = sv[0] / sv[sv.size() - 1];
  if (!(cond <= kFitConditionMax) || hi < 10.0 * lo)
    throw IllConditionedFit("fit_expansion: eps range too narrow");
  const Eigen::VectorXd cn = svd.solve(y);
  const Eigen::VectorXd coef = cn.cwiseQuotient(scale);
  ExpansionFit f;
  f.c0 = coef[0];
  f.c1 = coef[1];
  f.c2 = coef[2];
  f.fit_residual = (A * coef - y).norm();
  f.condition = cond;
  f.samples = samples;
  return f;
}

ExpansionFit fit_expansion(const TrigPoly &h1, const TrigPoly &h2,
                           const TestFamilyParams &params, int n) {
  if (params.eps_list.size() < 5)
    throw InvalidArgument("fit_expansion: at least 5 eps samples are required");
  return fit_samples(family_energies(h1, h2, params, n));
}

namespace {

double c1_term(const TrigPoly &h, Point p, bool scaled) {
  const TrigPoly::Jet j = h.jet(p);
  const double lap_log = j.lap / j.h - (j.hx * j.hx + j.hy * j.hy) / (j.h * j.h);
  return -(lap_log + 4.0 * M_PI) / (scaled ? j.h : 1.0);
}

} // namespace

double predicted_c1(const TrigPoly &h1, const TrigPoly &h2, Point p1, Point p2) {
  return c1_term(h1, p1, false) + c1_term(h2, p2, false);
}

double predicted_c1_scaled(const TrigPoly &h1, const TrigPoly &h2, Point p1, Point p2) {
  return c1_term(h1, p1, true) + c1_term(h2, p2, true);
}

ExistenceVerdict verdict(const TrigPoly &h1, const TrigPoly &h2, const TorusGrid &grid) {
  ExistenceVerdict v;
  const ConditionReport c1 = toda_condition(h1, grid), c2 = toda_condition(h2, grid);
  v.condition_holds = {c1.holds, c2.holds};
  v.min_margin = {c1.min_margin, c2.min_margin};
  v.bound = lower_bound(h1, h2, grid);
  const TestFamilyParams params = default_family(v.bound);
  const std::vector<FamilySample> samples = family_energies(h1, h2, params, grid.n());
  v.min_J = samples.front().J;
  for (const auto &s : samples)
    v.min_J = std::min(v.min_J, s.J);
  v.fit = fit_samples(samples);
  v.strict_gap = v.bound.value - v.min_J;
  v.predicts_minimizer = c1.holds && c2.holds && v.strict_gap > 0.0;
  return v;
}

} // namespace toda
