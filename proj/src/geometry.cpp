#include "toda/geometry.hpp"
#include "toda/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace toda {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;
constexpr double kFourPi2 = 4.0 * M_PI * M_PI;
constexpr double kEulerGamma = 0.57721566490153286061;

void require_finite(const ScalarField &f, const char *what) {
  if (!f.all_finite())
    throw InvalidArgument(std::string(what) + ": non-finite input values");
}

double lambda(int k1, int k2) { return kFourPi2 * double(k1 * k1 + k2 * k2); }

// Ein(s) = int_0^s (1 - e^{-t})/t dt = E1(s) + log s + gamma
double ein(double s) {
  if (s < 1.0) {
    double term = s, acc = s;
    for (int k = 2; k < 40; ++k) {
      term *= -s / k;
      acc += term / k;
      if (std::abs(term) < 1e-18)
        break;
    }
    return acc;
  }
  return -std::expint(-s) + std::log(s) + kEulerGamma;
}

} // namespace

ScalarField laplacian(const ScalarField &f) {
  require_finite(f, "laplacian");
  Spectrum s = forward(f);
  for (int i = 0; i < s.n(); ++i)
    for (int j = 0; j < s.cols(); ++j)
      s.at(i, j) *= -lambda(s.k1(i), j);
  return inverse(s, f.grid());
}

std::array<ScalarField, 2> gradient(const ScalarField &f) {
  require_finite(f, "gradient");
  Spectrum s = forward(f);
  drop_nyquist(s);
  Spectrum d1 = s, d2 = s;
  for (int i = 0; i < s.n(); ++i)
    for (int j = 0; j < s.cols(); ++j) {
      d1.at(i, j) *= cplx(0.0, kTwoPi * s.k1(i));
      d2.at(i, j) *= cplx(0.0, kTwoPi * j);
    }
  return {inverse(d1, f.grid()), inverse(d2, f.grid())};
}

double integrate(const ScalarField &f) {
  return compensated_mean(f.values().data(), f.size());
}

double dirichlet_energy(const ScalarField &f) {
  require_finite(f, "dirichlet_energy");
  Spectrum s = forward(f);
  return spectral_inner(s, s, lambda);
}

double dirichlet_energy_pair(const ScalarField &u1, const ScalarField &u2) {
  require_same_grid(u1, u2);
  require_finite(u1, "dirichlet_energy_pair");
  require_finite(u2, "dirichlet_energy_pair");
  Spectrum a = forward(u1), b = forward(u2);
  double e = spectral_inner(a, a, lambda) + spectral_inner(a, b, lambda) +
             spectral_inner(b, b, lambda);
  return std::max(e, 0.0);
}

ScalarField solve_poisson(const ScalarField &f) {
  require_finite(f, "solve_poisson");
  Spectrum s = forward(f);
  double scale = 1.0;
  for (double v : f.values())
    scale = std::max(scale, std::abs(v));
  if (std::abs(s.at(0, 0).real()) > 1e-10 * scale)
    throw InvalidArgument("solve_poisson: right-hand side must have zero mean");
  for (int i = 0; i < s.n(); ++i)
    for (int j = 0; j < s.cols(); ++j) {
      const double l = lambda(s.k1(i), j);
      s.at(i, j) = l > 0.0 ? s.at(i, j) / l : cplx(0.0);
    }
  return inverse(s, f.grid());
}

ScalarField screened_inverse(const ScalarField &f) {
  Spectrum s = forward(f);
  for (int i = 0; i < s.n(); ++i)
    for (int j = 0; j < s.cols(); ++j)
      s.at(i, j) /= 1.0 + lambda(s.k1(i), j);
  return inverse(s, f.grid());
}

int padded_size(int n) { return 3 * n / 2; }

namespace {

struct Padded {
  ScalarField u, h;
};

Padded pad_pair(const ScalarField &u, const ScalarField &h) {
  require_same_grid(u, h);
  const int m = padded_size(u.n());
  return {interpolate(u, m), interpolate(h, m)};
}
} // namespace

ExpIntegral exp_integral(const ScalarField &u, const ScalarField &h) {
  require_finite(u, "exp_integral");
  Padded p = pad_pair(u, h);
  ExpIntegral out;
  out.shift = p.u.max();
  std::vector<double> w(p.u.size());
  for (std::size_t k = 0; k < w.size(); ++k)
    w[k] = p.h[k] * std::exp(p.u[k] - out.shift);
  out.scaled = compensated_mean(w.data(), w.size());
  return out;
}

double exp_integral_log_ratio(const ScalarField &u, const ScalarField &s,
                              const ScalarField &h) {
  require_same_grid(u, s);
  Padded p = pad_pair(u, h);
  ScalarField ps = interpolate(s, padded_size(s.n()));
  const double shift = p.u.max();
  std::vector<double> base(p.u.size()), change(p.u.size());
  for (std::size_t k = 0; k < base.size(); ++k) {
    base[k] = p.h[k] * std::exp(p.u[k] - shift);
    change[k] = base[k] * std::expm1(ps[k]);
  }
  const double den = compensated_mean(base.data(), base.size());
  const double num = compensated_mean(change.data(), change.size());
  if (!(den > 0.0) || !(den + num > 0.0))
    return std::numeric_limits<double>::quiet_NaN();
  return std::log1p(num / den);
}

ScalarField exp_density(const ScalarField &u, const ScalarField &h,
                        ExpIntegral *integral) {
  require_finite(u, "exp_density");
  Padded p = pad_pair(u, h);
  const double shift = p.u.max();
  std::vector<double> w(p.u.size());
  for (std::size_t k = 0; k < w.size(); ++k)
    w[k] = p.h[k] * std::exp(p.u[k] - shift);
  if (integral) {
    integral->shift = shift;
    integral->scaled = compensated_mean(w.data(), w.size());
  }
  ScalarField wf(p.u.grid(), std::move(w));
  return project(wf, u.grid());
}

GreenData green_scalar(const TorusGrid &grid, Point y) {
  y = wrap(y);
  const int n = grid.n();
  Spectrum s(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < s.cols(); ++j) {
      if (s.is_nyquist(i, j) || (i == 0 && j == 0))
        continue;
      const int k1 = s.k1(i);
      s.at(i, j) = std::polar(1.0 / lambda(k1, j), -kTwoPi * (k1 * y.x + j * y.y));
    }
  GreenData g{y, inverse(s, grid), 0.0};
  g.robin = robin_heat_kernel(g.field, y);
  return g;
}

double robin_heat_kernel(const ScalarField &g, Point y) {
  const int n = g.n();
  // modes beyond N/2 are damped below e^{-40}, images below e^{-60}
  const double t = 40.0 / (M_PI * M_PI * double(n) * n);
  Spectrum s = forward(g);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < s.cols(); ++j)
      s.at(i, j) *= std::exp(-lambda(s.k1(i), j) * t);
  return evaluate_at(s, y) - t + (std::log(4.0 * t) - kEulerGamma) / (4.0 * M_PI);
}

double robin_ring_average(const ScalarField &g, Point y) {
  const TorusGrid &grid = g.grid();
  const double rmin = 4.0 / grid.n(), rmax = 8.0 / grid.n();
  double acc = 0.0;
  int count = 0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double r = torus_dist(grid.node(k), y);
    if (r < rmin || r > rmax)
      continue;
    acc += g[k] + std::log(r) / kTwoPi;
    ++count;
  }
  return acc / count;
}

TorusGreen::TorusGreen(double t) : t_(t) {
  kmax_ = int(std::ceil(std::sqrt(45.0 / (kFourPi2 * t))));
  // half plane: k1 > 0, or k1 == 0 and k2 > 0; weight doubles for conjugates
  for (int k1 = 0; k1 <= kmax_; ++k1)
    for (int k2 = -kmax_; k2 <= kmax_; ++k2) {
      if (k1 == 0 && k2 <= 0)
        continue;
      if (k1 * k1 + k2 * k2 > kmax_ * kmax_)
        continue;
      const double l = lambda(k1, k2);
      modes_.push_back({double(k1), double(k2), 2.0 * std::exp(-l * t_) / l});
    }
}

double TorusGreen::smooth(Point x) const {
  double acc = 0.0;
  for (const auto &m : modes_)
    acc += m[2] * std::cos(kTwoPi * (m[0] * x.x + m[1] * x.y));
  return acc - t_;
}

double TorusGreen::local(Point x, bool regular) const {
  Point d = torus_delta(x, {0.0, 0.0});
  const double r2 = d.x * d.x + d.y * d.y;
  const double s = r2 / (4.0 * t_);
  if (s > 45.0)
    return regular ? std::log(r2) / (2.0 * kTwoPi) : 0.0;
  if (regular)
    return (ein(s) - kEulerGamma + std::log(4.0 * t_)) / (4.0 * M_PI);
  return -std::expint(-s) / (4.0 * M_PI);
}

double TorusGreen::value(Point x) const {
  if (torus_dist2(x, {0.0, 0.0}) == 0.0)
    return HUGE_VAL;
  return smooth(x) + local(x, false);
}

double TorusGreen::regular(Point x) const { return smooth(x) + local(x, true); }

ScalarField TorusGreen::sample(const TorusGrid &grid, Point src,
                               bool regular) const {
  const int n = grid.n();
  int m = n;
  while (m / 2 <= kmax_)
    m *= 2;
  Spectrum s(m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < s.cols(); ++j) {
      const int k1 = s.k1(i);
      if ((i == 0 && j == 0) || k1 * k1 + j * j > kmax_ * kmax_)
        continue;
      const double l = lambda(k1, j);
      s.at(i, j) = std::polar(std::exp(-l * t_) / l,
                              -kTwoPi * (k1 * src.x + j * src.y));
    }
  ScalarField fine = inverse(s, TorusGrid(m));
  const int stride = m / n;
  ScalarField out(grid);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const std::size_t k = grid.index(i, j);
      out[k] = fine.at(i * stride, j * stride) - t_;
      const Point x = grid.node(i, j);
      const Point d{x.x - src.x, x.y - src.y};
      if (!regular && torus_dist2(x, src) == 0.0)
        out[k] = HUGE_VAL;
      else
        out[k] += local(d, regular);
    }
  return out;
}

const TorusGreen &standard_green() {
  static const TorusGreen g;
  return g;
}

double robin_constant() {
  static const double r = standard_green().robin();
  return r;
}

double toda_constant(Point own, Point other) {
  const double g = standard_green().value(torus_delta(own, other));
  return 8.0 * M_PI * robin_constant() - 4.0 * M_PI * g;
}

TodaGreenPair green_pair(const TorusGrid &grid, Point x1, Point x2) {
  x1 = wrap(x1);
  x2 = wrap(x2);
  if (torus_dist(x1, x2) < 2.0 * grid.spacing())
    throw InvalidArgument("green_pair: points closer than two grid spacings");
  GreenData g1 = green_scalar(grid, x1), g2 = green_scalar(grid, x2);
  TodaGreenPair p{x1, x2, 8.0 * M_PI * g1.field - 4.0 * M_PI * g2.field,
                  8.0 * M_PI * g2.field - 4.0 * M_PI * g1.field, 0.0, 0.0};
  p.A1 = toda_constant(x1, x2);
  p.A2 = toda_constant(x2, x1);
  return p;
}

} // namespace toda
