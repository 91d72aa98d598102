#pragma once

#include "toda/fields.hpp"
#include "toda/functional.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace toda {

struct SolveOptions {
  int max_iters = 2000;
  double grad_tol = 1e-8;
  int history = 10;
  double armijo_c1 = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 60;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SolveResult {
  FieldPair state; // normalized
  double F_value = 0.0;
  double el_residual = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  // F_free at every accepted iterate, starting with the initial state
  std::vector<double> F_history;
  std::vector<double> grad_history;
};

struct ScalarSolveResult {
  ScalarField state;
  double F_value = 0.0;
  double el_residual = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> F_history;
};

// log-bump at the argmax of h_i, normalized; zero field when that is infeasible
FieldPair default_init(const ScalarField &h1, const ScalarField &h2);
// smooth random perturbation of degree <= 4 with the given amplitude
ScalarField random_smooth_field(const TorusGrid &grid, std::uint64_t seed,
                                double amplitude);

SolveResult minimize_subcritical(const ScalarField &h1, const ScalarField &h2,
                                 double eps, const FieldPair &init,
                                 const SolveOptions &opts = {});

ScalarSolveResult solve_scalar_kw(const ScalarField &h, double rho,
                                  const ScalarField &init,
                                  const SolveOptions &opts = {});

struct ContinuationRecord {
  double eps = 0.0;
  double F_value = 0.0;
  double mean1 = 0.0, mean2 = 0.0;
  double max1 = 0.0, max2 = 0.0;
  Point argmax1, argmax2;
  double energy = 0.0;
  double mass1 = 0.0, mass2 = 0.0; // integral of e^{u_i}
  double el_residual = 0.0;
  bool converged = false;
  bool blowup_flag = false;
  bool cold_restart = false;
  int iterations = 0;
};

struct BlowupThresholds {
  double max_sum = 20.0;
  double energy = 1e3;
  double mean_sum = -20.0;
  int tail_window = 4;
  double bounded_variation = 1.0;
  double divergence_drop = 3.0;
};

struct ContinuationResult {
  std::vector<ContinuationRecord> records;
  FieldPair final_state;
  double C1 = 0.0, C2 = 0.0; // empirical mass bounds
  bool partial = false;
  std::string failure;
  std::vector<std::string> log;
};

std::vector<double> default_schedule();
ContinuationRecord make_record(const FieldPair &state, const ScalarField &h1,
                               const ScalarField &h2, double eps);
ContinuationResult continuation(const ScalarField &h1, const ScalarField &h2,
                                const std::vector<double> &schedule,
                                const SolveOptions &opts = {},
                                const BlowupThresholds &thr = {},
                                std::optional<FieldPair> init = std::nullopt);

struct Indicators {
  double max_sum = 0.0;
  double energy = 0.0;
  double mean_sum = 0.0;
};

Indicators blowup_indicators(const ContinuationRecord &r);
bool crosses(const Indicators &i, const BlowupThresholds &thr);

enum class BlowupCase { None, Case1, Case2, Case3 };
const char *to_string(BlowupCase c);

struct BlowupVerdict {
  bool blew_up = false;
  BlowupCase which = BlowupCase::None;
  std::vector<Indicators> series;
};

BlowupVerdict classify_case(const std::vector<ContinuationRecord> &records,
                            const BlowupThresholds &thr = {});

} // namespace toda
