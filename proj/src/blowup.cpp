#include "toda/blowup.hpp"
#include "toda/errors.hpp"
#include "toda/geometry.hpp"
#include "toda/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <random>

namespace toda {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// quadratic least-squares fit of w = exp(-(u - u0)/2) on the 3x3 stencil;
// exact for the bubble profile
bool refine(const ScalarField &u, int i, int j, Point &loc, double &height) {
  const int n = u.n();
  const double u0 = u.at(i, j);
  double w[3][3];
  for (int a = -1; a <= 1; ++a)
    for (int b = -1; b <= 1; ++b)
      w[a + 1][b + 1] =
          std::exp(-(u.at((i + a + n) % n, (j + b + n) % n) - u0) / 2.0);
  double gx = 0, gy = 0, hxx = 0, hyy = 0, c = 0;
  for (int b = 0; b < 3; ++b) {
    gx += (w[2][b] - w[0][b]) / 6.0;
    hxx += (w[2][b] - 2.0 * w[1][b] + w[0][b]) / 3.0;
  }
  for (int a = 0; a < 3; ++a) {
    gy += (w[a][2] - w[a][0]) / 6.0;
    hyy += (w[a][2] - 2.0 * w[a][1] + w[a][0]) / 3.0;
  }
  const double hxy = (w[2][2] - w[2][0] - w[0][2] + w[0][0]) / 4.0;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      c += w[a][b];
  // constant term of the least-squares quadratic
  c = c / 9.0 - (hxx + hyy) / 3.0;
  const double det = hxx * hyy - hxy * hxy;
  if (!(hxx > 0.0 && det > 0.0))
    return false;
  const double dx = -(hyy * gx - hxy * gy) / det;
  const double dy = -(hxx * gy - hxy * gx) / det;
  if (std::abs(dx) > 1.0 || std::abs(dy) > 1.0)
    return false;
  const double wmin = c + 0.5 * (gx * dx + gy * dy);
  if (!(wmin > 0.0))
    return false;
  loc = wrap({(i + dx) / n, (j + dy) / n});
  height = u0 - 2.0 * std::log(wmin);
  return true;
}

} // namespace

std::vector<Peak> detect_peaks(const ScalarField &u, int component) {
  const int n = u.n();
  const double top = u.max();
  struct Cand {
    double v;
    int i, j;
  };
  std::vector<Cand> cand;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double v = u.at(i, j);
      if (v < top - 2.0)
        continue;
      bool is_max = true;
      const std::size_t self = u.grid().index(i, j);
      for (int a = -1; a <= 1 && is_max; ++a)
        for (int b = -1; b <= 1; ++b) {
          if (a == 0 && b == 0)
            continue;
          const int ii = (i + a + n) % n, jj = (j + b + n) % n;
          const double nv = u.at(ii, jj);
          // plateaus resolve to the first node in row-major order
          if (nv > v || (nv == v && u.grid().index(ii, jj) < self)) {
            is_max = false;
            break;
          }
        }
      if (is_max)
        cand.push_back({v, i, j});
    }
  std::stable_sort(cand.begin(), cand.end(),
                   [](const Cand &a, const Cand &b) { return a.v > b.v; });
  std::vector<Peak> peaks;
  const double merge = 8.0 / n;
  for (const auto &c : cand) {
    const Point p = u.grid().node(c.i, c.j);
    bool close = false;
    for (const auto &q : peaks)
      close = close || torus_dist(p, q.location) < merge;
    if (close)
      continue;
    Peak pk;
    pk.component = component;
    pk.location = p;
    pk.height = c.v;
    Point loc;
    double h;
    if (refine(u, c.i, c.j, loc, h)) {
      pk.location = loc;
      pk.height = h;
    }
    pk.scale = std::exp(-pk.height / 2.0);
    peaks.push_back(pk);
  }
  return peaks;
}

std::vector<Peak> detect_peaks(const FieldPair &state) {
  std::vector<Peak> a = detect_peaks(state.u1, 1);
  std::vector<Peak> b = detect_peaks(state.u2, 2);
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

double pohozaev_residual(double s1, double s2) {
  return s1 * s1 + s2 * s2 - s1 * s2 - s1 - s2;
}

BallMasses ball_masses(const FieldPair &state, const ScalarField &h1,
                       const ScalarField &h2, const std::vector<Peak> &peaks,
                       double r) {
  const int n = state.grid().n();
  if (r < 4.0 / n)
    throw InvalidArgument("ball radius must be at least 4 grid spacings");
  BallMasses out;
  out.radius = r;
  const double merge = 8.0 / n;
  for (std::size_t k = 0; k < peaks.size(); ++k) {
    bool placed = false;
    for (auto &s : out.sites)
      if (torus_dist(s.location, peaks[k].location) < merge) {
        s.peaks.push_back(int(k));
        placed = true;
        break;
      }
    if (!placed) {
      SiteMass s;
      s.location = peaks[k].location;
      s.peaks.push_back(int(k));
      out.sites.push_back(s);
    }
  }
  for (std::size_t a = 0; a < out.sites.size(); ++a)
    for (std::size_t b = a + 1; b < out.sites.size(); ++b)
      if (torus_dist(out.sites[a].location, out.sites[b].location) < 2.0 * r)
        throw BallOverlap("balls of radius " + std::to_string(r) +
                          " around distinct peaks overlap");
  const int m = padded_size(n);
  const TorusGrid pg = TorusGrid::any(m);
  for (int comp = 0; comp < 2; ++comp) {
    ScalarField u = interpolate(state[comp], m);
    ScalarField h = interpolate(comp == 0 ? h1 : h2, m);
    const double shift = u.max();
    std::vector<double> dens(u.size()), rest(u.size(), 0.0);
    std::vector<std::vector<double>> ball(out.sites.size(),
                                          std::vector<double>(u.size(), 0.0));
    for (std::size_t k = 0; k < u.size(); ++k) {
      dens[k] = h[k] * std::exp(u[k] - shift);
      const Point x = pg.node(k);
      bool inside = false;
      for (std::size_t s = 0; s < out.sites.size(); ++s)
        if (torus_dist2(x, out.sites[s].location) <= r * r) {
          ball[s][k] = dens[k];
          inside = true;
          break;
        }
      if (!inside)
        rest[k] = dens[k];
    }
    const double total = compensated_mean(dens.data(), dens.size());
    for (std::size_t s = 0; s < out.sites.size(); ++s) {
      const double v = compensated_mean(ball[s].data(), ball[s].size()) / total;
      (comp == 0 ? out.sites[s].sigma1 : out.sites[s].sigma2) = v;
    }
    (comp == 0 ? out.remainder1 : out.remainder2) =
        compensated_mean(rest.data(), rest.size()) / total;
  }
  for (auto &s : out.sites) {
    s.gamma1 = 8.0 * M_PI * s.sigma1 - 4.0 * M_PI * s.sigma2;
    s.gamma2 = 8.0 * M_PI * s.sigma2 - 4.0 * M_PI * s.sigma1;
    s.pohozaev = pohozaev_residual(s.sigma1, s.sigma2);
  }
  return out;
}

double bubble_fit(const FieldPair &state, const Peak &peak, const ScalarField &h,
                  double L, double coeff) {
  const ScalarField &u = state[peak.component - 1];
  const double hv = evaluate_at(h, peak.location);
  if (!(hv > 0.0))
    throw NegativeHeightDensity("h is not positive at the peak");
  const double window = L * peak.scale;
  if (window > 0.25)
    throw InvalidArgument("bubble fit window leaves the torus chart");
  // on grid nodes the bilinear interpolant equals the nodal values
  double worst = 0.0;
  const TorusGrid &g = u.grid();
  for (std::size_t k = 0; k < u.size(); ++k) {
    const Point d = torus_delta(g.node(k), peak.location);
    const double y2 = (d.x * d.x + d.y * d.y) / (peak.scale * peak.scale);
    if (y2 > L * L)
      continue;
    const double model = -2.0 * std::log(1.0 + coeff * hv * y2);
    worst = std::max(worst, std::abs(u[k] - peak.height - model));
  }
  return worst;
}

ConcentrationReport analyze_concentration(const FieldPair &state,
                                          const ScalarField &h1,
                                          const ScalarField &h2, double radius,
                                          double L) {
  ConcentrationReport rep;
  rep.peaks = detect_peaks(state);
  rep.ball_radius = radius;
  rep.masses = ball_masses(state, h1, h2, rep.peaks, radius);
  for (const auto &p : rep.peaks) {
    double err = kNaN;
    bool negative = false;
    try {
      err = bubble_fit(state, p, p.component == 1 ? h1 : h2, L);
    } catch (const NegativeHeightDensity &) {
      negative = true;
    } catch (const InvalidArgument &) {
    }
    rep.bubble_fit_errors.push_back(err);
    rep.negative_height_density.push_back(negative);
  }
  for (double r : {0.05, 0.1, 0.15}) {
    try {
      rep.sweep.push_back(ball_masses(state, h1, h2, rep.peaks, r));
    } catch (const Error &) {
    }
  }
  return rep;
}

bool split_concentration(const FieldPair &state) {
  const TorusGrid &g = state.grid();
  const int n = g.n();
  // fraction of the mass of e^{u_i} in the ball of radius kSplitRadius around
  // every node, by FFT convolution with the ball indicator
  ScalarField ball = ScalarField::sample(g, [](Point x) {
    return torus_dist2(x, {0.0, 0.0}) <= kSplitRadius * kSplitRadius ? 1.0 : 0.0;
  });
  Spectrum bs = forward(ball);
  for (int comp = 0; comp < 2; ++comp) {
    const ScalarField &u = state[comp];
    const double top = u.max();
    ScalarField w(g);
    for (std::size_t k = 0; k < w.size(); ++k)
      w[k] = std::exp(u[k] - top);
    const double total = integrate(w);
    Spectrum ws = forward(w);
    for (std::size_t k = 0; k < ws.data().size(); ++k)
      ws.data()[k] *= std::conj(bs.data()[k]);
    // correlation: frac(c) = sum_x w(x) ball(x - c) / (N^2 total)
    ScalarField frac = inverse(ws, g);
    frac *= double(n) * n / (double(n) * n * total);
    std::vector<std::size_t> heavy;
    for (std::size_t k = 0; k < frac.size(); ++k)
      if (frac[k] >= kSplitFraction)
        heavy.push_back(k);
    bool split = false;
    for (std::size_t a = 0; a < heavy.size() && !split; ++a)
      for (std::size_t b = a + 1; b < heavy.size(); ++b)
        if (torus_dist(g.node(heavy[a]), g.node(heavy[b])) >= kSplitSeparation) {
          split = true;
          break;
        }
    if (!split)
      return false;
  }
  return true;
}

namespace {

double mt_excess(const FieldPair &state, double eps_prime) {
  ScalarField one(state.grid(), 1.0);
  const double lhs = exp_integral(state.u1, one).log_value() +
                     exp_integral(state.u2, one).log_value();
  return lhs -
         (1.0 + eps_prime) / (24.0 * M_PI) *
             dirichlet_energy_pair(state.u1, state.u2) -
         integrate(state.u1) - integrate(state.u2);
}

} // namespace

double calibrated_mt_constant(double eps_prime) {
  static std::mutex mu;
  static std::map<double, double> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(eps_prime);
  if (it != cache.end())
    return it->second;
  const TorusGrid grid(kMTCorpusGrid);
  // the zero state satisfies the split hypothesis and anchors C at 0
  double c = mt_excess(FieldPair(ScalarField(grid), ScalarField(grid)), eps_prime);
  for (const auto &spec : two_site_corpus(kMTCorpusSeed, kMTCorpusSize))
    c = std::max(c, mt_excess(two_site_state(grid, spec), eps_prime));
  cache[eps_prime] = c;
  return c;
}

MTProbe improved_mt_probe(const FieldPair &state, double eps_prime,
                          std::optional<double> c_probe) {
  const double c = c_probe ? *c_probe : calibrated_mt_constant(eps_prime);
  MTProbe p;
  ScalarField one(state.grid(), 1.0);
  p.lhs = exp_integral(state.u1, one).log_value() +
          exp_integral(state.u2, one).log_value();
  p.excess = mt_excess(state, eps_prime);
  p.rhs = p.lhs - p.excess + c;
  p.hypothesis_violated = !split_concentration(state);
  p.satisfied = !p.hypothesis_violated && p.lhs <= p.rhs;
  return p;
}

ScalarField bubble_profile(const TorusGrid &grid, Point c, double eps,
                           double a) {
  return ScalarField::sample(grid, [&](Point x) {
    return -2.0 * std::log(eps * eps + M_PI * a * torus_dist2(x, c));
  });
}

FieldPair toda_bubble_pair(const TorusGrid &grid, Point x1, Point x2,
                           double eps, double a1, double a2) {
  ScalarField b1 = bubble_profile(grid, x1, eps, a1);
  ScalarField b2 = bubble_profile(grid, x2, eps, a2);
  return {b1 - 0.5 * b2, b2 - 0.5 * b1};
}

FieldPair two_site_state(const TorusGrid &grid, const TwoSiteSpec &s) {
  auto comp = [&](double eps, double w) {
    return ScalarField::sample(grid, [&](Point x) {
      auto dens = [&](Point c) {
        const double q = eps * eps + M_PI * torus_dist2(x, c);
        return eps * eps / (q * q);
      };
      return std::log(w * dens(s.a) + (1.0 - w) * dens(s.b));
    });
  };
  return {comp(s.eps1, s.w1), comp(s.eps2, s.w2)};
}

std::vector<TwoSiteSpec> two_site_corpus(std::uint64_t seed, int count) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<TwoSiteSpec> out;
  for (int k = 0; k < count; ++k) {
    TwoSiteSpec s;
    s.a = {unit(rng), unit(rng)};
    do {
      s.b = {unit(rng), unit(rng)};
    } while (torus_dist(s.a, s.b) < 0.35);
    s.eps1 = 0.06 + 0.09 * unit(rng);
    s.eps2 = 0.06 + 0.09 * unit(rng);
    s.w1 = 0.35 + 0.3 * unit(rng);
    s.w2 = 0.35 + 0.3 * unit(rng);
    out.push_back(s);
  }
  return out;
}

} // namespace toda
