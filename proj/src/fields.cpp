#include "toda/fields.hpp"
#include "toda/errors.hpp"
#include "toda/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace toda {

namespace {
constexpr double kTwoPi = 2.0 * M_PI;
}

TrigPoly::TrigPoly(double c0, std::vector<TrigTerm> terms) : c0_(c0) {
  if (!std::isfinite(c0))
    throw InvalidArgument("TrigPoly: non-finite constant term");
  for (const auto &t : terms) {
    if (!std::isfinite(t.a) || !std::isfinite(t.b))
      throw InvalidArgument("TrigPoly: non-finite coefficient");
    if (t.k1 == 0 && t.k2 == 0) {
      c0_ += t.a;
      continue;
    }
    kmax_ = std::max({kmax_, std::abs(t.k1), std::abs(t.k2)});
    terms_.push_back(t);
  }
}

TrigPoly TrigPoly::project(const ScalarField &f, int kmax, double drop_below) {
  Spectrum s = forward(f);
  const int n = f.n();
  if (kmax >= n / 2)
    throw InvalidArgument("TrigPoly::project: kmax must be below N/2");
  std::vector<TrigTerm> terms;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= kmax; ++j) {
      const int k1 = s.k1(i);
      if (std::abs(k1) > kmax || (j == 0 && k1 <= 0))
        continue;
      // c e^{i phi} + conj = 2 Re(c) cos phi - 2 Im(c) sin phi
      const cplx c = s.at(i, j);
      TrigTerm t{k1, j, 2.0 * c.real(), -2.0 * c.imag()};
      if (std::abs(t.a) < drop_below && std::abs(t.b) < drop_below)
        continue;
      terms.push_back(t);
    }
  return TrigPoly(s.at(0, 0).real(), std::move(terms));
}

double TrigPoly::operator()(Point p) const {
  double acc = c0_;
  for (const auto &t : terms_) {
    const double ph = kTwoPi * (t.k1 * p.x + t.k2 * p.y);
    acc += t.a * std::cos(ph) + t.b * std::sin(ph);
  }
  return acc;
}

TrigPoly::Jet TrigPoly::jet(Point p) const {
  Jet j{c0_, 0.0, 0.0, 0.0};
  for (const auto &t : terms_) {
    const double ph = kTwoPi * (t.k1 * p.x + t.k2 * p.y);
    const double c = std::cos(ph), s = std::sin(ph);
    const double v = t.a * c + t.b * s;
    const double d = -t.a * s + t.b * c;
    j.h += v;
    j.hx += kTwoPi * t.k1 * d;
    j.hy += kTwoPi * t.k2 * d;
    j.lap -= kTwoPi * kTwoPi * double(t.k1 * t.k1 + t.k2 * t.k2) * v;
  }
  return j;
}

TrigPoly TrigPoly::translated(Point shift) const {
  std::vector<TrigTerm> out;
  for (const auto &t : terms_) {
    // cos(phi - psi) = cos phi cos psi + sin phi sin psi
    const double psi = kTwoPi * (t.k1 * shift.x + t.k2 * shift.y);
    const double c = std::cos(psi), s = std::sin(psi);
    out.push_back({t.k1, t.k2, t.a * c - t.b * s, t.a * s + t.b * c});
  }
  return TrigPoly(c0_, std::move(out));
}

TrigPoly TrigPoly::scaled(double c) const {
  std::vector<TrigTerm> out = terms_;
  for (auto &t : out) {
    t.a *= c;
    t.b *= c;
  }
  return TrigPoly(c0_ * c, std::move(out));
}

namespace {

// cos/sin tables of 2 pi k i/N for k in [-kmax, kmax]
struct Tables {
  int kmax, n;
  std::vector<double> c, s;
  Tables(int kmax_, int n_) : kmax(kmax_), n(n_) {
    const std::size_t w = 2 * kmax + 1;
    c.resize(w * n);
    s.resize(w * n);
    for (int k = -kmax; k <= kmax; ++k)
      for (int i = 0; i < n; ++i) {
        // reduce the argument exactly before scaling
        const long r = ((long(k) * i) % n + n) % n;
        const double ph = kTwoPi * double(r) / n;
        c[(k + kmax) * n + i] = std::cos(ph);
        s[(k + kmax) * n + i] = std::sin(ph);
      }
  }
  double cos(int k, int i) const { return c[(k + kmax) * n + i]; }
  double sin(int k, int i) const { return s[(k + kmax) * n + i]; }
};

} // namespace

HJet eval_h_jet(const TrigPoly &h, const TorusGrid &grid) {
  const int n = grid.n();
  HJet out{ScalarField(grid, h.c0()), ScalarField(grid), ScalarField(grid),
           ScalarField(grid)};
  Tables tab(h.kmax(), n);
  for (const auto &t : h.terms()) {
    const double l = kTwoPi * kTwoPi * double(t.k1 * t.k1 + t.k2 * t.k2);
    for (int i = 0; i < n; ++i) {
      const double c1 = tab.cos(t.k1, i), s1 = tab.sin(t.k1, i);
      for (int j = 0; j < n; ++j) {
        const double c2 = tab.cos(t.k2, j), s2 = tab.sin(t.k2, j);
        const double c = c1 * c2 - s1 * s2, s = s1 * c2 + c1 * s2;
        const double v = t.a * c + t.b * s;
        const double d = -t.a * s + t.b * c;
        const std::size_t k = grid.index(i, j);
        out.h[k] += v;
        out.hx[k] += kTwoPi * t.k1 * d;
        out.hy[k] += kTwoPi * t.k2 * d;
        out.lap[k] -= l * v;
      }
    }
  }
  return out;
}

ScalarField eval_h(const TrigPoly &h, const TorusGrid &grid) {
  const int n = grid.n();
  ScalarField out(grid, h.c0());
  Tables tab(h.kmax(), n);
  for (const auto &t : h.terms())
    for (int i = 0; i < n; ++i) {
      const double c1 = tab.cos(t.k1, i), s1 = tab.sin(t.k1, i);
      for (int j = 0; j < n; ++j) {
        const double c2 = tab.cos(t.k2, j), s2 = tab.sin(t.k2, j);
        out[grid.index(i, j)] +=
            t.a * (c1 * c2 - s1 * s2) + t.b * (s1 * c2 + c1 * s2);
      }
    }
  return out;
}

PositivityMask positive_set(const ScalarField &h) {
  PositivityMask m;
  m.mask.resize(h.size());
  std::size_t count = 0;
  for (std::size_t k = 0; k < h.size(); ++k) {
    m.mask[k] = h[k] > 0.0;
    count += m.mask[k];
  }
  if (count == 0)
    throw EmptyPositiveSet("h has no positive grid node");
  m.fraction_positive = double(count) / double(h.size());
  return m;
}

ConditionReport log_laplacian_condition(const TrigPoly &h, double constant,
                                        const TorusGrid &grid) {
  HJet j = eval_h_jet(h, grid);
  PositivityMask m = positive_set(j.h);
  const double floor = kHFloor * j.h.max();
  ConditionReport r;
  r.margin = ScalarField(grid, std::numeric_limits<double>::quiet_NaN());
  r.min_margin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!m.mask[k])
      continue;
    const double hv = j.h[k];
    const double g2 = j.hx[k] * j.hx[k] + j.hy[k] * j.hy[k];
    r.margin[k] = j.lap[k] / hv - g2 / (hv * hv) + constant;
    if (hv < floor) {
      ++r.excluded;
      continue;
    }
    ++r.evaluated;
    if (r.margin[k] < r.min_margin) {
      r.min_margin = r.margin[k];
      r.argmin = k;
    }
  }
  r.holds = r.evaluated > 0 && r.min_margin > 0.0;
  return r;
}

ConditionReport toda_condition(const TrigPoly &h, const TorusGrid &grid) {
  return log_laplacian_condition(h, 4.0 * M_PI, grid);
}

ConditionReport scalar_condition(const TrigPoly &h, double rho2,
                                 const TorusGrid &grid) {
  return log_laplacian_condition(h, 8.0 * M_PI - rho2, grid);
}

} // namespace toda
