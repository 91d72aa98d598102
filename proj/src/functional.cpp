#include "toda/functional.hpp"
#include "toda/errors.hpp"
#include "toda/spectral.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace toda {

namespace {

constexpr double kFourPi2 = 4.0 * M_PI * M_PI;

double lambda(int k1, int k2) { return kFourPi2 * double(k1 * k1 + k2 * k2); }

void require_feasible(const ConstraintStatus &c, const char *what) {
  if (!c.feasible)
    throw InfeasibleState(std::string(what) +
                          ": some constraint integral is not positive (I1 = " +
                          std::to_string(c.I1.value()) +
                          ", I2 = " + std::to_string(c.I2.value()) + ")");
}

// mean of u, pair energy and -(1/3) Laplace(2 u_i + u_j) from one transform each
struct QuadraticPart {
  double energy = 0.0;
  double mean1 = 0.0, mean2 = 0.0;
  ScalarField d1, d2;
};

QuadraticPart quadratic_part(const FieldPair &s, bool with_gradient) {
  Spectrum a = forward(s.u1), b = forward(s.u2);
  QuadraticPart q;
  q.energy = spectral_inner(a, a, lambda) + spectral_inner(a, b, lambda) +
             spectral_inner(b, b, lambda);
  q.mean1 = integrate(s.u1);
  q.mean2 = integrate(s.u2);
  if (with_gradient) {
    Spectrum g1(a.n()), g2(a.n());
    for (int i = 0; i < a.n(); ++i)
      for (int j = 0; j < a.cols(); ++j) {
        const double l = lambda(a.k1(i), j) / 3.0;
        g1.at(i, j) = l * (2.0 * a.at(i, j) + b.at(i, j));
        g2.at(i, j) = l * (2.0 * b.at(i, j) + a.at(i, j));
      }
    q.d1 = inverse(g1, s.grid());
    q.d2 = inverse(g2, s.grid());
  }
  return q;
}

} // namespace

FieldPair::FieldPair(ScalarField a, ScalarField b)
    : u1(std::move(a)), u2(std::move(b)) {
  require_same_grid(u1, u2);
}

RhoPair RhoPair::subcritical(double eps) {
  return {4.0 * M_PI - eps, 4.0 * M_PI - eps};
}

bool RhoPair::in_minimal_range() const {
  return rho1 > 0 && rho2 > 0 && rho1 <= 4.0 * M_PI && rho2 <= 4.0 * M_PI;
}

ConstraintStatus constraint_values(const FieldPair &state, const ScalarField &h1,
                                   const ScalarField &h2) {
  ConstraintStatus c;
  c.I1 = exp_integral(state.u1, h1);
  c.I2 = exp_integral(state.u2, h2);
  c.feasible = c.I1.positive() && c.I2.positive();
  return c;
}

FieldPair normalize(const FieldPair &state, const ScalarField &h1,
                    const ScalarField &h2) {
  ConstraintStatus c = constraint_values(state, h1, h2);
  require_feasible(c, "normalize");
  return {state.u1 + (-c.I1.log_value()), state.u2 + (-c.I2.log_value())};
}

double constraint_defect(const FieldPair &state, const ScalarField &h1,
                         const ScalarField &h2) {
  ConstraintStatus c = constraint_values(state, h1, h2);
  return std::max(std::abs(c.value(0) - 1.0), std::abs(c.value(1) - 1.0));
}

namespace {
void require_on_constraint(const FieldPair &state, const ScalarField &h1,
                           const ScalarField &h2, const char *what) {
  const double d = constraint_defect(state, h1, h2);
  if (!(d <= kConstraintTol))
    throw NotOnConstraint(std::string(what) +
                          ": state is not normalized (defect " +
                          std::to_string(d) + ")");
}
} // namespace

double J(const FieldPair &state, const ScalarField &h1, const ScalarField &h2,
         RhoPair rho) {
  require_on_constraint(state, h1, h2, "J");
  QuadraticPart q = quadratic_part(state, false);
  return q.energy / 3.0 + rho.rho1 * q.mean1 + rho.rho2 * q.mean2;
}

double F_free(const FieldPair &state, const ScalarField &h1,
              const ScalarField &h2, RhoPair rho) {
  ConstraintStatus c = constraint_values(state, h1, h2);
  require_feasible(c, "F_free");
  QuadraticPart q = quadratic_part(state, false);
  return q.energy / 3.0 + rho.rho1 * (q.mean1 - c.I1.log_value()) +
         rho.rho2 * (q.mean2 - c.I2.log_value());
}

ValueGradient F_free_with_gradient(const FieldPair &state, const ScalarField &h1,
                                   const ScalarField &h2, RhoPair rho) {
  ExpIntegral i1, i2;
  ScalarField e1 = exp_density(state.u1, h1, &i1);
  ScalarField e2 = exp_density(state.u2, h2, &i2);
  if (!i1.positive() || !i2.positive())
    throw InfeasibleState("F_free: some constraint integral is not positive");
  QuadraticPart q = quadratic_part(state, true);
  ValueGradient out;
  out.value = q.energy / 3.0 + rho.rho1 * (q.mean1 - i1.log_value()) +
              rho.rho2 * (q.mean2 - i2.log_value());
  // h e^u / I equals the projected scaled density divided by the scaled integral
  ScalarField g1 = q.d1, g2 = q.d2;
  for (std::size_t k = 0; k < g1.size(); ++k) {
    g1[k] += rho.rho1 * (1.0 - e1[k] / i1.scaled);
    g2[k] += rho.rho2 * (1.0 - e2[k] / i2.scaled);
  }
  out.gradient = FieldPair(std::move(g1), std::move(g2));
  return out;
}

double F_free_delta(const FieldPair &state, const FieldPair &step,
                    const ScalarField &h1, const ScalarField &h2, RhoPair rho) {
  const double l1 = exp_integral_log_ratio(state.u1, step.u1, h1);
  const double l2 = exp_integral_log_ratio(state.u2, step.u2, h2);
  if (std::isnan(l1) || std::isnan(l2))
    return std::numeric_limits<double>::quiet_NaN();
  Spectrum a = forward(state.u1), b = forward(state.u2);
  Spectrum sa = forward(step.u1), sb = forward(step.u2);
  auto ip = [](const Spectrum &x, const Spectrum &y) {
    return spectral_inner(x, y, lambda);
  };
  // E(x + s) - E(x) expanded so no large terms cancel
  const double de = 2.0 * ip(a, sa) + ip(a, sb) + ip(sa, b) + 2.0 * ip(b, sb) +
                    ip(sa, sa) + ip(sa, sb) + ip(sb, sb);
  return de / 3.0 + rho.rho1 * (integrate(step.u1) - l1) +
         rho.rho2 * (integrate(step.u2) - l2);
}

FieldPair gradient_F(const FieldPair &state, const ScalarField &h1,
                     const ScalarField &h2, RhoPair rho) {
  return F_free_with_gradient(state, h1, h2, rho).gradient;
}

FieldPair el_residual_fields(const FieldPair &state, const ScalarField &h1,
                             const ScalarField &h2, double eps) {
  require_on_constraint(state, h1, h2, "el_residual");
  ExpIntegral i1, i2;
  ScalarField e1 = exp_density(state.u1, h1, &i1);
  ScalarField e2 = exp_density(state.u2, h2, &i2);
  e1 *= std::exp(i1.shift);
  e2 *= std::exp(i2.shift);
  ScalarField r1 = -1.0 * laplacian(state.u1), r2 = -1.0 * laplacian(state.u2);
  const double a = 8.0 * M_PI - 2.0 * eps, b = 4.0 * M_PI - eps;
  for (std::size_t k = 0; k < r1.size(); ++k) {
    const double f1 = e1[k] - 1.0, f2 = e2[k] - 1.0;
    r1[k] -= a * f1 - b * f2;
    r2[k] -= a * f2 - b * f1;
  }
  return {std::move(r1), std::move(r2)};
}

double el_residual(const FieldPair &state, const ScalarField &h1,
                   const ScalarField &h2, double eps) {
  return l2_norm(el_residual_fields(state, h1, h2, eps));
}

double l2_norm(const ScalarField &f) {
  std::vector<double> sq(f.size());
  for (std::size_t k = 0; k < f.size(); ++k)
    sq[k] = f[k] * f[k];
  return std::sqrt(compensated_mean(sq.data(), sq.size()));
}

double l2_norm(const FieldPair &f) { return std::sqrt(inner(f, f)); }

double inner(const FieldPair &a, const FieldPair &b) {
  std::vector<double> p(a.u1.size());
  for (std::size_t k = 0; k < p.size(); ++k)
    p[k] = a.u1[k] * b.u1[k] + a.u2[k] * b.u2[k];
  return compensated_mean(p.data(), p.size());
}

double I_kw(const ScalarField &u, const ScalarField &h, double rho) {
  ExpIntegral e = exp_integral(u, h);
  if (!e.positive() || std::abs(e.value() - 1.0) > kConstraintTol)
    throw NotOnConstraint("I_kw: state is not normalized");
  return 0.5 * dirichlet_energy(u) + rho * integrate(u);
}

double F_kw(const ScalarField &u, const ScalarField &h, double rho) {
  ExpIntegral e = exp_integral(u, h);
  if (!e.positive())
    throw InfeasibleState("F_kw: constraint integral is not positive");
  return 0.5 * dirichlet_energy(u) + rho * (integrate(u) - e.log_value());
}

ScalarValueGradient F_kw_with_gradient(const ScalarField &u, const ScalarField &h,
                                       double rho) {
  ExpIntegral e;
  ScalarField d = exp_density(u, h, &e);
  if (!e.positive())
    throw InfeasibleState("F_kw: constraint integral is not positive");
  ScalarValueGradient out;
  out.value = 0.5 * dirichlet_energy(u) + rho * (integrate(u) - e.log_value());
  out.gradient = -1.0 * laplacian(u);
  for (std::size_t k = 0; k < d.size(); ++k)
    out.gradient[k] += rho * (1.0 - d[k] / e.scaled);
  return out;
}

double F_kw_delta(const ScalarField &u, const ScalarField &step,
                  const ScalarField &h, double rho) {
  const double l = exp_integral_log_ratio(u, step, h);
  if (std::isnan(l))
    return std::numeric_limits<double>::quiet_NaN();
  Spectrum a = forward(u), s = forward(step);
  const double de =
      2.0 * spectral_inner(a, s, lambda) + spectral_inner(s, s, lambda);
  return 0.5 * de + rho * (integrate(step) - l);
}

ScalarField normalize_kw(const ScalarField &u, const ScalarField &h) {
  ExpIntegral e = exp_integral(u, h);
  if (!e.positive())
    throw InfeasibleState("normalize: constraint integral is not positive");
  return u + (-e.log_value());
}

ScalarField el_residual_kw_field(const ScalarField &u, const ScalarField &h,
                                 double rho) {
  ExpIntegral e;
  ScalarField d = exp_density(u, h, &e);
  if (!e.positive() || std::abs(e.value() - 1.0) > kConstraintTol)
    throw NotOnConstraint("el_residual: state is not normalized");
  ScalarField r = -1.0 * laplacian(u);
  const double s = std::exp(e.shift);
  for (std::size_t k = 0; k < r.size(); ++k)
    r[k] -= rho * (d[k] * s - 1.0);
  return r;
}

double el_residual_kw(const ScalarField &u, const ScalarField &h, double rho) {
  return l2_norm(el_residual_kw_field(u, h, rho));
}

} // namespace toda
