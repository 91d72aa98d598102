#pragma once

#include "toda/grid.hpp"

#include <cstdint>
#include <vector>

namespace toda {

// one Fourier record a*cos(2 pi k.x) + b*sin(2 pi k.x)
struct TrigTerm {
  int k1 = 0, k2 = 0;
  double a = 0.0, b = 0.0;
};

// real trigonometric polynomial h(x) = c0 + sum of terms
class TrigPoly {
public:
  TrigPoly() = default;
  explicit TrigPoly(double c0, std::vector<TrigTerm> terms = {});

  static TrigPoly constant(double c) { return TrigPoly(c); }
  // band-limited projection of sampled values onto |k|_inf <= kmax
  static TrigPoly project(const ScalarField &f, int kmax, double drop_below = 1e-15);

  double c0() const { return c0_; }
  const std::vector<TrigTerm> &terms() const { return terms_; }
  int kmax() const { return kmax_; }

  double operator()(Point p) const;
  // value, gradient and Laplacian at a point
  struct Jet {
    double h, hx, hy, lap;
  };
  Jet jet(Point p) const;

  // h(x - shift)
  TrigPoly translated(Point shift) const;
  TrigPoly scaled(double c) const;

private:
  double c0_ = 0.0;
  std::vector<TrigTerm> terms_;
  int kmax_ = 0;
};

ScalarField eval_h(const TrigPoly &h, const TorusGrid &grid);
// value, gradient and Laplacian sampled at every node
struct HJet {
  ScalarField h, hx, hy, lap;
};
HJet eval_h_jet(const TrigPoly &h, const TorusGrid &grid);

struct PositivityMask {
  std::vector<std::uint8_t> mask;
  double fraction_positive = 0.0;
};

PositivityMask positive_set(const ScalarField &h);

// fraction of max h below which nodes of the positive set are excluded
inline constexpr double kHFloor = 1e-3;

struct ConditionReport {
  bool holds = false;
  // Laplace(log h) + constant on the positive set, NaN elsewhere
  ScalarField margin;
  double min_margin = 0.0;
  std::size_t argmin = 0;
  std::size_t evaluated = 0; // positive nodes with h >= floor
  std::size_t excluded = 0;  // positive nodes below the floor
};

// Laplace(log h) + 4 pi > 0 on the positive set (flat torus, K = 0)
ConditionReport toda_condition(const TrigPoly &h, const TorusGrid &grid);
// Laplace(log h) + (8 pi - rho2) > 0; rho2 = 0 gives the scalar mean-field condition
ConditionReport scalar_condition(const TrigPoly &h, double rho2, const TorusGrid &grid);
ConditionReport log_laplacian_condition(const TrigPoly &h, double constant,
                                        const TorusGrid &grid);

} // namespace toda
