#pragma once

#include "toda/geometry.hpp"
#include "toda/grid.hpp"

namespace toda {

struct FieldPair {
  ScalarField u1, u2;

  FieldPair() = default;
  FieldPair(ScalarField a, ScalarField b);
  const TorusGrid &grid() const { return u1.grid(); }
  const ScalarField &operator[](int i) const { return i == 0 ? u1 : u2; }
  ScalarField &operator[](int i) { return i == 0 ? u1 : u2; }
};

struct RhoPair {
  double rho1 = 4.0 * M_PI;
  double rho2 = 4.0 * M_PI;

  static RhoPair subcritical(double eps);
  double operator[](int i) const { return i == 0 ? rho1 : rho2; }
  // the minimization range 0 < rho_i <= 4 pi
  bool in_minimal_range() const;
};

struct ConstraintStatus {
  ExpIntegral I1, I2;
  bool feasible = false;
  double value(int i) const { return (i == 0 ? I1 : I2).value(); }
};

ConstraintStatus constraint_values(const FieldPair &state, const ScalarField &h1,
                                   const ScalarField &h2);
// u_i - log I_i
FieldPair normalize(const FieldPair &state, const ScalarField &h1,
                    const ScalarField &h2);
// distance of the constraint values from (1, 1)
double constraint_defect(const FieldPair &state, const ScalarField &h1,
                         const ScalarField &h2);

inline constexpr double kConstraintTol = 1e-8;

// (1/3) E(u1, u2) + rho1 mean(u1) + rho2 mean(u2) on the constraint set
double J(const FieldPair &state, const ScalarField &h1, const ScalarField &h2,
         RhoPair rho);
// shift-invariant free energy, equal to J of the normalized state
double F_free(const FieldPair &state, const ScalarField &h1,
              const ScalarField &h2, RhoPair rho);

struct ValueGradient {
  double value = 0.0;
  FieldPair gradient;
};
// L2 gradient of F_free together with its value
ValueGradient F_free_with_gradient(const FieldPair &state, const ScalarField &h1,
                                   const ScalarField &h2, RhoPair rho);
// F_free(state + step) - F_free(state) without cancellation; NaN when the
// shifted state is infeasible
double F_free_delta(const FieldPair &state, const FieldPair &step,
                    const ScalarField &h1, const ScalarField &h2, RhoPair rho);
FieldPair gradient_F(const FieldPair &state, const ScalarField &h1,
                     const ScalarField &h2, RhoPair rho);

// residuals of -Laplace u_i = (8 pi - 2 eps)(h_i e^{u_i} - 1) - (4 pi - eps)(h_j e^{u_j} - 1)
FieldPair el_residual_fields(const FieldPair &state, const ScalarField &h1,
                             const ScalarField &h2, double eps);
double el_residual(const FieldPair &state, const ScalarField &h1,
                   const ScalarField &h2, double eps);

// L2 norm over the torus
double l2_norm(const ScalarField &f);
double l2_norm(const FieldPair &f);
// L2 inner product
double inner(const FieldPair &a, const FieldPair &b);

// scalar mean-field functional (1/2) E(u) + rho mean(u) on {int h e^u = 1}
double I_kw(const ScalarField &u, const ScalarField &h, double rho);
double F_kw(const ScalarField &u, const ScalarField &h, double rho);
struct ScalarValueGradient {
  double value = 0.0;
  ScalarField gradient;
};
ScalarValueGradient F_kw_with_gradient(const ScalarField &u, const ScalarField &h,
                                       double rho);
double F_kw_delta(const ScalarField &u, const ScalarField &step,
                  const ScalarField &h, double rho);
ScalarField normalize_kw(const ScalarField &u, const ScalarField &h);
// residual of -Laplace u = rho (h e^u - 1)
ScalarField el_residual_kw_field(const ScalarField &u, const ScalarField &h, double rho);
double el_residual_kw(const ScalarField &u, const ScalarField &h, double rho);

} // namespace toda
