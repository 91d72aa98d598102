#pragma once

#include "toda/functional.hpp"
#include "toda/grid.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace toda {

struct Peak {
  int component = 1; // 1 or 2
  Point location;
  double height = 0.0;
  double scale = 1.0; // exp(-height / 2)
};

// local maxima above (max - 2), merged within 8/N, refined on the 3x3 stencil
std::vector<Peak> detect_peaks(const ScalarField &u, int component);
std::vector<Peak> detect_peaks(const FieldPair &state);

struct SiteMass {
  Point location;
  std::vector<int> peaks; // indices into the peak list
  double sigma1 = 0.0, sigma2 = 0.0;
  double gamma1 = 0.0, gamma2 = 0.0;
  double pohozaev = 0.0;
};

struct BallMasses {
  double radius = 0.0;
  std::vector<SiteMass> sites;
  double remainder1 = 0.0, remainder2 = 0.0;
};

// peaks closer than the merge radius share one site; balls of distinct
// sites must be disjoint
BallMasses ball_masses(const FieldPair &state, const ScalarField &h1,
                       const ScalarField &h2, const std::vector<Peak> &peaks,
                       double r);

double pohozaev_residual(double sigma1, double sigma2);

// max deviation of u(x + r y) - m from -2 log(1 + coeff h(x) |y|^2) over the
// grid nodes with |y| <= L; coeff = pi is the standard bubble
double bubble_fit(const FieldPair &state, const Peak &peak, const ScalarField &h,
                  double L = 10.0, double coeff = M_PI);

struct ConcentrationReport {
  std::vector<Peak> peaks;
  double ball_radius = 0.1;
  BallMasses masses;
  // NaN when the fit window leaves the chart or h <= 0 at the peak
  std::vector<double> bubble_fit_errors;
  std::vector<bool> negative_height_density;
  // sigma sums per ball radius of the sensitivity sweep
  std::vector<BallMasses> sweep;
};

ConcentrationReport analyze_concentration(const FieldPair &state,
                                          const ScalarField &h1,
                                          const ScalarField &h2,
                                          double radius = 0.1, double L = 10.0);

struct MTProbe {
  double lhs = 0.0;
  double rhs = 0.0;
  double excess = 0.0; // lhs - rhs without the constant
  bool hypothesis_violated = false;
  bool satisfied = false;
};

// constant of the improved inequality calibrated on the seeded corpus
double calibrated_mt_constant(double eps_prime);
MTProbe improved_mt_probe(const FieldPair &state, double eps_prime,
                          std::optional<double> c_probe = std::nullopt);
// each component puts at least kSplitFraction of its mass e^{u_i} into each
// of two balls of radius kSplitRadius whose centres are kSplitSeparation apart
bool split_concentration(const FieldPair &state);
inline constexpr double kSplitRadius = 0.2;
inline constexpr double kSplitSeparation = 0.5;
inline constexpr double kSplitFraction = 0.1;

// synthetic states

// -2 log(eps^2 + pi a d^2) with the minimal-image distance d to c
ScalarField bubble_profile(const TorusGrid &grid, Point c, double eps,
                           double a = 1.0);
// two-component bubble pair: component 1 concentrates at x1, component 2 at x2
FieldPair toda_bubble_pair(const TorusGrid &grid, Point x1, Point x2,
                           double eps, double a1 = 1.0, double a2 = 1.0);

struct TwoSiteSpec {
  Point a, b;
  double eps1, eps2; // bubble widths per component
  double w1, w2;     // share of site a per component
};
// e^{u_i} is a mixture of two bubble densities
FieldPair two_site_state(const TorusGrid &grid, const TwoSiteSpec &spec);
std::vector<TwoSiteSpec> two_site_corpus(std::uint64_t seed, int count);

inline constexpr std::uint64_t kMTCorpusSeed = 20240611;
inline constexpr int kMTCorpusSize = 64;
inline constexpr int kMTCorpusGrid = 64;

} // namespace toda
