#pragma once

#include "toda/fields.hpp"
#include "toda/functional.hpp"
#include "toda/grid.hpp"

#include <array>
#include <vector>

namespace toda {

struct LowerBound {
  double value = 0.0;
  Point p1, p2;
  // 2 log h1(p1) + A1 + 2 log h2(p2) + A2 at the maximizing pair
  double objective = 0.0;
  double A1 = 0.0, A2 = 0.0;
};

// 2 log h1(p1) + 2 log h2(p2) + A1(p1, p2) + A2(p1, p2)
double pair_objective(const TrigPoly &h1, const TrigPoly &h2, Point p1, Point p2);

// -8 pi - 8 pi log pi - 2 pi max over p1 in M1+, p2 in M2+, p1 != p2 of the
// pair objective; coarse nodal search then Newton refinement
LowerBound lower_bound(const TrigPoly &h1, const TrigPoly &h2, const TorusGrid &grid);

struct TestFamilyParams {
  Point p1, p2;
  double L = 10.0;
  std::vector<double> eps_list;

  void validate() const;
};

// 0.1 * 2^-k, k = 0..6, restricted to eps * L <= 0.25
std::vector<double> default_eps_list(double L);
TestFamilyParams default_family(const LowerBound &lb, double L = 10.0);

// smallest power of two >= max(n, 6.4 / eps), at most 4096
int test_grid_size(int n, double eps);

// truncated bubbles glued to the Toda Green pair, normalized to the
// constraint set; sampled on the given grid
FieldPair build_test_functions(const TrigPoly &h1, const TrigPoly &h2,
                               const TestFamilyParams &params, double eps,
                               const TorusGrid &grid);

struct FamilySample {
  double eps = 0.0;
  int n_eval = 0;
  double J = 0.0;
};

// J at rho = (4 pi, 4 pi) on the adaptive grid for every eps of the family
std::vector<FamilySample> family_energies(const TrigPoly &h1, const TrigPoly &h2,
                                          const TestFamilyParams &params, int n);

struct ExpansionFit {
  double c0 = 0.0;
  double c1 = 0.0; // coefficient of eps^2 (-log eps^2)
  double c2 = 0.0; // coefficient of eps^2
  double fit_residual = 0.0;
  double condition = 0.0;
  std::vector<FamilySample> samples;
};

inline constexpr double kFitConditionMax = 1e8;

// least squares fit of J to c0 + c1 eps^2 (-log eps^2) + c2 eps^2
ExpansionFit fit_samples(const std::vector<FamilySample> &samples);
ExpansionFit fit_expansion(const TrigPoly &h1, const TrigPoly &h2,
                           const TestFamilyParams &params, int n);

// -(Laplace log h_i(p_i) + 4 pi) summed over both components
double predicted_c1(const TrigPoly &h1, const TrigPoly &h2, Point p1, Point p2);
// the same bracket divided by h_i(p_i), the coefficient produced by the
// bubble -2 log(eps^2 + pi h_i(p_i) r^2) when h_i(p_i) != 1
double predicted_c1_scaled(const TrigPoly &h1, const TrigPoly &h2, Point p1, Point p2);

struct ExistenceVerdict {
  std::array<bool, 2> condition_holds{false, false};
  std::array<double, 2> min_margin{0.0, 0.0};
  LowerBound bound;
  ExpansionFit fit;
  double min_J = 0.0;
  // lower bound minus the smallest test value
  double strict_gap = 0.0;
  bool predicts_minimizer = false;
};

ExistenceVerdict verdict(const TrigPoly &h1, const TrigPoly &h2, const TorusGrid &grid);

} // namespace toda
