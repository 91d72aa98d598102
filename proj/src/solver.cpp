#include "toda/solver.hpp"
#include "toda/errors.hpp"
#include "toda/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>
#include <sstream>

namespace toda {

void SolveOptions::validate() const {
  if (!(grad_tol > 0.0))
    throw InvalidArgument("grad_tol must be positive");
  if (max_iters < 1)
    throw InvalidArgument("max_iters must be at least 1");
  if (history < 1)
    throw InvalidArgument("history must be at least 1");
  if (!(armijo_c1 > 0.0 && armijo_c1 < 1.0))
    throw InvalidArgument("armijo_c1 must lie in (0, 1)");
  if (!(backtrack > 0.0 && backtrack < 1.0))
    throw InvalidArgument("backtrack factor must lie in (0, 1)");
  if (max_backtracks < 1)
    throw InvalidArgument("max_backtracks must be at least 1");
}

namespace {

using Vec = std::vector<ScalarField>;

struct Eval {
  bool ok = false;
  double f = 0.0;
  Vec g;
};

struct Objective {
  std::function<Eval(const Vec &)> eval;
  // f(x + s) - f(x) evaluated without cancellation, NaN if infeasible
  std::function<double(const Vec &, const Vec &)> delta;
};

double dot(const Vec &a, const Vec &b) {
  std::vector<double> p(a[0].size(), 0.0);
  for (std::size_t c = 0; c < a.size(); ++c)
    for (std::size_t k = 0; k < p.size(); ++k)
      p[k] += a[c][k] * b[c][k];
  return compensated_mean(p.data(), p.size());
}

Vec axpy(const Vec &x, double a, const Vec &d) {
  Vec out = x;
  for (std::size_t c = 0; c < x.size(); ++c)
    for (std::size_t k = 0; k < out[c].size(); ++k)
      out[c][k] += a * d[c][k];
  return out;
}

Vec diff(const Vec &a, const Vec &b) { return axpy(a, -1.0, b); }

void scale_in_place(Vec &v, double s) {
  for (auto &f : v)
    f *= s;
}

Vec precondition(const Vec &g) {
  Vec out;
  for (const auto &f : g)
    out.push_back(screened_inverse(f));
  return out;
}

struct LbfgsResult {
  Vec x;
  double f = 0.0;
  double gnorm = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> f_history, g_history;
};

LbfgsResult lbfgs(const Objective &obj, Vec x, const SolveOptions &opts) {
  Eval e = obj.eval(x);
  if (!e.ok)
    throw InitInfeasible("initial state is infeasible");
  struct Pair {
    Vec s, y;
    double rho;
  };
  std::deque<Pair> mem;
  LbfgsResult r;
  double f = e.f;
  Vec g = std::move(e.g);
  double gnorm = std::sqrt(dot(g, g));
  r.f_history.push_back(f);
  r.g_history.push_back(gnorm);
  int iter = 0;
  while (true) {
    if (gnorm <= opts.grad_tol) {
      r.converged = true;
      break;
    }
    if (iter >= opts.max_iters)
      break;
    // two-loop recursion with the screened preconditioner as initial matrix
    Vec q = g;
    std::vector<double> alpha(mem.size());
    for (int i = int(mem.size()) - 1; i >= 0; --i) {
      alpha[i] = mem[i].rho * dot(mem[i].s, q);
      q = axpy(q, -alpha[i], mem[i].y);
    }
    Vec d = precondition(q);
    if (!mem.empty()) {
      const Pair &p = mem.back();
      Vec py = precondition(p.y);
      scale_in_place(d, 1.0 / (p.rho * dot(p.y, py)));
    }
    for (std::size_t i = 0; i < mem.size(); ++i) {
      const double beta = mem[i].rho * dot(mem[i].y, d);
      d = axpy(d, alpha[i] - beta, mem[i].s);
    }
    scale_in_place(d, -1.0);
    double gd = dot(g, d);
    if (!(gd < 0.0)) {
      mem.clear();
      d = precondition(g);
      scale_in_place(d, -1.0);
      gd = dot(g, d);
    }
    double step = 1.0;
    if (mem.empty()) {
      double dmax = 0.0;
      for (const auto &c : d)
        dmax = std::max({dmax, c.max(), -c.min()});
      step = std::min(1.0, 1.0 / std::max(dmax, 1e-300));
    }
    bool accepted = false;
    Eval trial;
    Vec xt, s;
    double df = 0.0;
    for (int bt = 0; bt < opts.max_backtracks; ++bt, step *= opts.backtrack) {
      s = d;
      scale_in_place(s, step);
      df = obj.delta(x, s);
      if (!std::isfinite(df) || df > opts.armijo_c1 * step * gd)
        continue;
      xt = axpy(x, 1.0, s);
      trial = obj.eval(xt);
      if (!trial.ok)
        continue;
      accepted = true;
      break;
    }
    if (!accepted) {
      if (!mem.empty()) {
        mem.clear();
        continue;
      }
      break;
    }
    Vec y = diff(trial.g, g);
    const double sy = dot(s, y);
    if (sy > 1e-14 * std::sqrt(dot(s, s) * dot(y, y))) {
      mem.push_back({std::move(s), std::move(y), 1.0 / sy});
      if (int(mem.size()) > opts.history)
        mem.pop_front();
    }
    x = std::move(xt);
    // accumulate the exact differences so the recorded values are monotone
    f += df;
    g = std::move(trial.g);
    gnorm = std::sqrt(dot(g, g));
    ++iter;
    r.f_history.push_back(f);
    r.g_history.push_back(gnorm);
  }
  r.x = std::move(x);
  r.f = f;
  r.gnorm = gnorm;
  r.iterations = iter;
  return r;
}

// smooth periodic squared distance, equal to |x - c|^2 to leading order
double smooth_dist2(Point x, Point c) {
  const double a = std::sin(M_PI * (x.x - c.x)), b = std::sin(M_PI * (x.y - c.y));
  return (a * a + b * b) / (M_PI * M_PI);
}

} // namespace

ScalarField random_smooth_field(const TorusGrid &grid, std::uint64_t seed,
                                double amplitude) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<TrigTerm> terms;
  for (int k1 = -4; k1 <= 4; ++k1)
    for (int k2 = 0; k2 <= 4; ++k2) {
      if ((k2 == 0 && k1 <= 0))
        continue;
      const double decay = 1.0 / (1.0 + k1 * k1 + k2 * k2);
      terms.push_back({k1, k2, amplitude * decay * u(rng), amplitude * decay * u(rng)});
    }
  return eval_h(TrigPoly(0.0, terms), grid);
}

FieldPair default_init(const ScalarField &h1, const ScalarField &h2) {
  require_same_grid(h1, h2);
  const TorusGrid &grid = h1.grid();
  auto bump = [&](const ScalarField &h) {
    const Point c = grid.node(h.argmax());
    return ScalarField::sample(grid, [&](Point x) {
      return -2.0 * std::log(1.0 + smooth_dist2(x, c) / 0.01);
    });
  };
  FieldPair b(bump(h1), bump(h2));
  ConstraintStatus c = constraint_values(b, h1, h2);
  if (c.feasible)
    return normalize(b, h1, h2);
  FieldPair z{ScalarField(grid), ScalarField(grid)};
  if (constraint_values(z, h1, h2).feasible)
    return normalize(z, h1, h2);
  throw InitInfeasible("neither the log-bump nor the zero field is feasible");
}

SolveResult minimize_subcritical(const ScalarField &h1, const ScalarField &h2,
                                 double eps, const FieldPair &init,
                                 const SolveOptions &opts) {
  opts.validate();
  if (!(eps > 0.0 && eps < 4.0 * M_PI))
    throw InvalidArgument("eps must lie in (0, 4 pi)");
  require_same_grid(h1, init.u1);
  require_same_grid(h2, init.u2);
  if (!constraint_values(init, h1, h2).feasible)
    throw InitInfeasible("no constant shift makes the initial state feasible");
  const RhoPair rho = RhoPair::subcritical(eps);
  Objective obj;
  obj.delta = [&](const Vec &x, const Vec &s) {
    return F_free_delta(FieldPair(x[0], x[1]), FieldPair(s[0], s[1]), h1, h2, rho);
  };
  obj.eval = [&](const Vec &x) {
    Eval e;
    try {
      ValueGradient vg = F_free_with_gradient(FieldPair(x[0], x[1]), h1, h2, rho);
      e.ok = std::isfinite(vg.value);
      e.f = vg.value;
      e.g = {std::move(vg.gradient.u1), std::move(vg.gradient.u2)};
    } catch (const InfeasibleState &) {
      e.ok = false;
    }
    return e;
  };
  LbfgsResult lr = lbfgs(obj, {init.u1, init.u2}, opts);
  SolveResult out;
  out.state = normalize(FieldPair(lr.x[0], lr.x[1]), h1, h2);
  out.F_value = F_free(out.state, h1, h2, rho);
  out.el_residual = el_residual(out.state, h1, h2, eps);
  out.grad_norm = lr.gnorm;
  out.iterations = lr.iterations;
  out.converged = lr.converged;
  out.F_history = std::move(lr.f_history);
  out.grad_history = std::move(lr.g_history);
  return out;
}

ScalarSolveResult solve_scalar_kw(const ScalarField &h, double rho,
                                  const ScalarField &init,
                                  const SolveOptions &opts) {
  opts.validate();
  if (!(rho > 0.0 && rho < 8.0 * M_PI))
    throw InvalidArgument("rho must lie in (0, 8 pi)");
  require_same_grid(h, init);
  positive_set(h);
  if (!exp_integral(init, h).positive())
    throw InitInfeasible("no constant shift makes the initial state feasible");
  Objective obj;
  obj.delta = [&](const Vec &x, const Vec &s) {
    return F_kw_delta(x[0], s[0], h, rho);
  };
  obj.eval = [&](const Vec &x) {
    Eval e;
    try {
      ScalarValueGradient vg = F_kw_with_gradient(x[0], h, rho);
      e.ok = std::isfinite(vg.value);
      e.f = vg.value;
      e.g = {std::move(vg.gradient)};
    } catch (const InfeasibleState &) {
      e.ok = false;
    }
    return e;
  };
  LbfgsResult lr = lbfgs(obj, {init}, opts);
  ScalarSolveResult out;
  out.state = normalize_kw(lr.x[0], h);
  out.F_value = F_kw(out.state, h, rho);
  out.el_residual = el_residual_kw(out.state, h, rho);
  out.grad_norm = lr.gnorm;
  out.iterations = lr.iterations;
  out.converged = lr.converged;
  out.F_history = std::move(lr.f_history);
  return out;
}

std::vector<double> default_schedule() {
  std::vector<double> s;
  for (int k = 1; k <= 14; ++k)
    s.push_back(4.0 * M_PI * std::ldexp(1.0, -k));
  return s;
}

ContinuationRecord make_record(const FieldPair &state, const ScalarField &h1,
                               const ScalarField &h2, double eps) {
  ContinuationRecord r;
  r.eps = eps;
  const RhoPair rho = RhoPair::subcritical(eps);
  r.F_value = F_free(state, h1, h2, rho);
  r.mean1 = integrate(state.u1);
  r.mean2 = integrate(state.u2);
  r.max1 = state.u1.max();
  r.max2 = state.u2.max();
  r.argmax1 = state.grid().node(state.u1.argmax());
  r.argmax2 = state.grid().node(state.u2.argmax());
  r.energy = dirichlet_energy_pair(state.u1, state.u2);
  ScalarField one(state.grid(), 1.0);
  r.mass1 = exp_integral(state.u1, one).value();
  r.mass2 = exp_integral(state.u2, one).value();
  r.el_residual = el_residual(state, h1, h2, eps);
  return r;
}

ContinuationResult continuation(const ScalarField &h1, const ScalarField &h2,
                                const std::vector<double> &schedule,
                                const SolveOptions &opts,
                                const BlowupThresholds &thr,
                                std::optional<FieldPair> init) {
  if (schedule.empty())
    throw InvalidArgument("empty continuation schedule");
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    if (!(schedule[k] > 0.0 && schedule[k] < 4.0 * M_PI))
      throw InvalidArgument("schedule entries must lie in (0, 4 pi)");
    if (k > 0 && !(schedule[k] < schedule[k - 1]))
      throw InvalidArgument("schedule must be strictly decreasing");
  }
  ContinuationResult out;
  FieldPair current = init ? *init : default_init(h1, h2);
  const FieldPair cold = default_init(h1, h2);
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    const double eps = schedule[k];
    try {
      SolveResult sr = minimize_subcritical(h1, h2, eps, current, opts);
      bool restarted = false;
      if (k > 0 && !out.records.back().blowup_flag &&
          std::abs(schedule[k - 1] - eps) <= 0.1) {
        const double jump = std::max(max_abs_diff(sr.state.u1, current.u1),
                                     max_abs_diff(sr.state.u2, current.u2));
        if (jump > 1.0) {
          std::ostringstream msg;
          msg << "eps=" << eps << ": warm start moved " << jump
              << " in sup norm, cold restart";
          out.log.push_back(msg.str());
          sr = minimize_subcritical(h1, h2, eps, cold, opts);
          restarted = true;
        }
      }
      ContinuationRecord r = make_record(sr.state, h1, h2, eps);
      r.F_value = sr.F_value;
      r.converged = sr.converged;
      r.iterations = sr.iterations;
      r.cold_restart = restarted;
      r.blowup_flag = crosses(blowup_indicators(r), thr);
      if (!sr.converged) {
        std::ostringstream msg;
        msg << "eps=" << eps << ": not converged, gradient norm "
            << sr.grad_norm;
        out.log.push_back(msg.str());
      }
      out.records.push_back(r);
      current = std::move(sr.state);
    } catch (const Error &e) {
      out.partial = true;
      out.failure = e.what();
      out.log.push_back(std::string("eps=") + std::to_string(eps) +
                        ": step failed: " + e.what());
      break;
    }
  }
  out.final_state = current;
  if (!out.records.empty()) {
    out.C1 = out.C2 = out.records[0].mass1;
    for (const auto &r : out.records) {
      out.C1 = std::min({out.C1, r.mass1, r.mass2});
      out.C2 = std::max({out.C2, r.mass1, r.mass2});
    }
  }
  return out;
}

Indicators blowup_indicators(const ContinuationRecord &r) {
  return {r.max1 + r.max2, r.energy, r.mean1 + r.mean2};
}

bool crosses(const Indicators &i, const BlowupThresholds &thr) {
  return i.max_sum >= thr.max_sum || i.energy >= thr.energy ||
         i.mean_sum <= thr.mean_sum;
}

const char *to_string(BlowupCase c) {
  switch (c) {
  case BlowupCase::Case1:
    return "Case1";
  case BlowupCase::Case2:
    return "Case2";
  case BlowupCase::Case3:
    return "Case3";
  default:
    return "None";
  }
}

BlowupVerdict classify_case(const std::vector<ContinuationRecord> &records,
                            const BlowupThresholds &thr) {
  if (records.size() < 3)
    throw InvalidArgument("classify_case needs at least 3 records");
  BlowupVerdict v;
  for (const auto &r : records) {
    v.series.push_back(blowup_indicators(r));
    v.blew_up = v.blew_up || crosses(v.series.back(), thr);
  }
  if (!v.blew_up)
    return v;
  const std::size_t w =
      std::min<std::size_t>(records.size(), std::max(2, thr.tail_window));
  const std::size_t start = records.size() - w;
  auto tail = [&](auto get, bool &bounded, bool &diverging) {
    double tv = 0.0;
    for (std::size_t k = start + 1; k < records.size(); ++k)
      tv += std::abs(get(records[k]) - get(records[k - 1]));
    const double drop = get(records[start]) - get(records.back());
    bounded = tv <= thr.bounded_variation;
    diverging = drop >= thr.divergence_drop;
  };
  bool b1, d1, b2, d2;
  tail([](const ContinuationRecord &r) { return r.mean1; }, b1, d1);
  tail([](const ContinuationRecord &r) { return r.mean2; }, b2, d2);
  if (d1 && d2)
    v.which = BlowupCase::Case3;
  else if (d1 && b2)
    v.which = BlowupCase::Case1;
  else if (b1 && d2)
    v.which = BlowupCase::Case2;
  else
    throw Inconclusive("blow-up detected but the tails of the means are "
                       "neither bounded nor divergent");
  return v;
}

} // namespace toda
