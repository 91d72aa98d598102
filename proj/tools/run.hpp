#pragma once

#include "toda/fields.hpp"
#include "toda/grid.hpp"
#include "toda/solver.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace toda::cli {

enum class Mode { Solve, Continuation, Analyze, Bounds, Verdict, ScalarKW };

const char *to_string(Mode m);
// accepts the mode names and the verb "continue"
Mode parse_mode(const std::string &s);

struct RunConfig {
  int grid = 64;
  TrigPoly h1 = TrigPoly(1.0), h2 = TrigPoly(1.0);
  Mode mode = Mode::Solve;
  bool mode_given = false; // the file names a mode explicitly
  // solve: rho_i = 4 pi - eps; scalar-kw: rho
  double eps = 2.0 * M_PI;
  double rho = 4.0 * M_PI;
  std::vector<double> schedule; // empty means the default schedule
  SolveOptions solver;
  std::string init = "default"; // default | zero | random
  double init_amplitude = 0.5;
  std::string output = "out";
  std::uint64_t seed = 1;
  bool heatmaps = true;
  double ball_radius = 0.1;
  double bubble_L = 10.0;
  double family_L = 10.0;
  std::vector<double> eps_list; // empty means the default list
  nlohmann::json echo;          // normalized configuration written back
};

// exit codes
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitInfeasible = 4;

// parses and validates; throws ConfigError with "source:line:col" or
// "source: /field/path" diagnostics
RunConfig parse_config(const std::string &text, const std::string &source);
RunConfig load_config(const std::string &path);
// re-validates after command-line overrides
void validate(RunConfig &cfg);

struct RunOutcome {
  int exit_code = kExitOk;
  nlohmann::json summary;
};

// runs the pipeline and writes summary.json, the mode CSV, heatmaps and
// timing.txt into cfg.output
RunOutcome run(const RunConfig &cfg, bool quiet = true);

// 16-bit binary PGM with a "<path>.minmax.txt" sidecar
void export_heatmap(const ScalarField &f, const std::string &path);

// validates against the subset of JSON Schema used by the shipped schema
// (type, required, properties, additionalProperties, items, enum, minimum);
// returns the list of violations
std::vector<std::string> validate_schema(const nlohmann::json &doc,
                                         const nlohmann::json &schema);
const nlohmann::json &summary_schema();

} // namespace toda::cli
