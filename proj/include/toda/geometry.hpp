#pragma once

#include "toda/grid.hpp"
#include "toda/spectral.hpp"

#include <array>
#include <vector>

namespace toda {

ScalarField laplacian(const ScalarField &f);
// spectral partial derivatives, Nyquist modes zeroed
std::array<ScalarField, 2> gradient(const ScalarField &f);
// mean of nodal values, equal to the integral over the unit torus
double integrate(const ScalarField &f);
// integral of |grad f|^2
double dirichlet_energy(const ScalarField &f);
// integral of |grad u1|^2 + grad u1 . grad u2 + |grad u2|^2
double dirichlet_energy_pair(const ScalarField &u1, const ScalarField &u2);
// zero-mean solution of -Laplace(psi) = f; f must have zero mean
ScalarField solve_poisson(const ScalarField &f);
// (1 - Laplace)^{-1} f
ScalarField screened_inverse(const ScalarField &f);

// anti-aliased integral of h exp(u) on the 3/2 padded grid
struct ExpIntegral {
  double shift = 0.0;  // max of the padded u
  double scaled = 0.0; // mean of h exp(u - shift) on the padded grid
  double value() const { return scaled * std::exp(shift); }
  bool positive() const { return scaled > 0.0; }
  double log_value() const { return shift + std::log(scaled); }
};

int padded_size(int n);
// log of int h e^{u+s} / int h e^u computed with expm1/log1p; NaN when the
// shifted integral is not positive
double exp_integral_log_ratio(const ScalarField &u, const ScalarField &s,
                              const ScalarField &h);
ExpIntegral exp_integral(const ScalarField &u, const ScalarField &h);
// projection of h exp(u - shift) back to the grid of u; the derivative of
// the integral in the L2 sense is exp(shift) times this field
ScalarField exp_density(const ScalarField &u, const ScalarField &h,
                        ExpIntegral *integral = nullptr);

struct GreenData {
  Point source;
  ScalarField field;
  double robin = 0.0;
};

// band-limited Green function of -Laplace with source y, zero mean
GreenData green_scalar(const TorusGrid &grid, Point y);
// regular part at the source by heat-kernel subtraction
double robin_heat_kernel(const ScalarField &g, Point y);
// ring average of G + log(r)/(2 pi) over 4/N <= r <= 8/N
double robin_ring_average(const ScalarField &g, Point y);

// exact torus Green function by Ewald splitting; g has zero mean and
// g(x) = -log|x|/(2 pi) + robin + o(1) near 0
class TorusGreen {
public:
  explicit TorusGreen(double t = 2.5e-4);

  double value(Point x) const;
  // g(x) + log|x|/(2 pi), smooth near 0
  double regular(Point x) const;
  double robin() const { return regular({0.0, 0.0}); }
  // g(x - src) (or its regular part) sampled on the grid
  ScalarField sample(const TorusGrid &grid, Point src, bool regular = false) const;

private:
  double smooth(Point x) const;
  double local(Point x, bool regular) const;
  double t_;
  int kmax_;
  std::vector<std::array<double, 3>> modes_; // k1, k2, weight
};

const TorusGreen &standard_green();
double robin_constant();

struct TodaGreenPair {
  Point x1, x2;
  ScalarField G1, G2;
  double A1 = 0.0, A2 = 0.0;
};

TodaGreenPair green_pair(const TorusGrid &grid, Point x1, Point x2);
// constants of the Toda Green pair as functions of the two points
double toda_constant(Point own, Point other);

} // namespace toda
