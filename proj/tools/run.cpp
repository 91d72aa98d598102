#include "run.hpp"

#include "summary_schema.hpp"
#include "toda/blowup.hpp"
#include "toda/bounds.hpp"
#include "toda/errors.hpp"

#include <fftw3.h>
#include <Eigen/Core>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

namespace toda::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char *kVersion = "1.0.0";

// ---- configuration --------------------------------------------------------

struct Reader {
  const json &j;
  std::string path;
  std::string source;

  [[noreturn]] void fail(const std::string &field, const std::string &msg) const {
    throw ConfigError(source + ": " + path + "/" + field + ": " + msg);
  }
  bool has(const char *k) const { return j.contains(k); }
  double number(const char *k, double def) const {
    if (!j.contains(k))
      return def;
    if (!j[k].is_number())
      fail(k, "expected a number");
    return j[k].get<double>();
  }
  long long integer(const char *k, long long def) const {
    if (!j.contains(k))
      return def;
    if (!j[k].is_number_integer() && !j[k].is_number_unsigned())
      fail(k, "expected an integer");
    return j[k].get<long long>();
  }
  std::uint64_t u64(const char *k, std::uint64_t def) const {
    if (!j.contains(k))
      return def;
    if (!j[k].is_number_unsigned() && !(j[k].is_number_integer() && j[k].get<long long>() >= 0))
      fail(k, "expected a non-negative integer");
    return j[k].get<std::uint64_t>();
  }
  bool boolean(const char *k, bool def) const {
    if (!j.contains(k))
      return def;
    if (!j[k].is_boolean())
      fail(k, "expected true or false");
    return j[k].get<bool>();
  }
  std::string string(const char *k, const std::string &def) const {
    if (!j.contains(k))
      return def;
    if (!j[k].is_string())
      fail(k, "expected a string");
    return j[k].get<std::string>();
  }
  std::vector<double> numbers(const char *k) const {
    std::vector<double> out;
    if (!j.contains(k))
      return out;
    if (!j[k].is_array())
      fail(k, "expected an array of numbers");
    for (std::size_t i = 0; i < j[k].size(); ++i) {
      if (!j[k][i].is_number())
        fail(std::string(k) + "/" + std::to_string(i), "expected a number");
      out.push_back(j[k][i].get<double>());
    }
    return out;
  }
  Reader child(const char *k) const {
    if (!j[k].is_object())
      fail(k, "expected an object");
    return Reader{j[k], path + "/" + k, source};
  }
  void only(std::initializer_list<const char *> keys) const {
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (auto it = j.begin(); it != j.end(); ++it)
      if (!allowed.count(it.key()))
        fail(it.key(), "unknown key");
  }
};

TrigPoly read_trig(const Reader &parent, const char *k) {
  const json &v = parent.j[k];
  if (v.is_number())
    return TrigPoly(v.get<double>());
  Reader r = parent.child(k);
  r.only({"c0", "terms"});
  std::vector<TrigTerm> terms;
  if (r.has("terms")) {
    if (!v["terms"].is_array())
      r.fail("terms", "expected an array");
    for (std::size_t i = 0; i < v["terms"].size(); ++i) {
      const std::string name = "terms/" + std::to_string(i);
      if (!v["terms"][i].is_object())
        r.fail(name, "expected an object");
      Reader t{v["terms"][i], r.path + "/" + name, r.source};
      t.only({"k1", "k2", "a", "b"});
      const long long k1 = t.integer("k1", 0), k2 = t.integer("k2", 0);
      if (std::llabs(k1) > 64 || std::llabs(k2) > 64)
        r.fail(name, "wavenumbers must satisfy |k| <= 64");
      terms.push_back({static_cast<int>(k1), static_cast<int>(k2), t.number("a", 0.0),
                       t.number("b", 0.0)});
    }
  }
  return TrigPoly(r.number("c0", 0.0), terms);
}

json trig_json(const TrigPoly &h) {
  json terms = json::array();
  for (const auto &t : h.terms())
    terms.push_back({{"k1", t.k1}, {"k2", t.k2}, {"a", t.a}, {"b", t.b}});
  return {{"c0", h.c0()}, {"terms", terms}};
}

json point_json(Point p) { return json::array({p.x, p.y}); }

json echo_of(const RunConfig &c) {
  json s = {{"max_iters", c.solver.max_iters},
            {"grad_tol", c.solver.grad_tol},
            {"history", c.solver.history},
            {"armijo_c1", c.solver.armijo_c1},
            {"backtrack", c.solver.backtrack},
            {"max_backtracks", c.solver.max_backtracks}};
  return {{"grid", c.grid},
          {"mode", to_string(c.mode)},
          {"h1", trig_json(c.h1)},
          {"h2", trig_json(c.h2)},
          {"eps", c.eps},
          {"rho", c.rho},
          {"schedule", c.schedule},
          {"solver", s},
          {"init", c.init},
          {"init_amplitude", c.init_amplitude},
          {"seed", c.seed},
          {"heatmaps", c.heatmaps},
          {"analysis", {{"ball_radius", c.ball_radius}, {"bubble_L", c.bubble_L}}},
          {"bounds", {{"L", c.family_L}, {"eps_list", c.eps_list}}}};
}

// ---- output helpers -------------------------------------------------------

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const fs::path &p, const std::string &text) {
  std::ofstream f(p, std::ios::binary);
  if (!f)
    throw Error("cannot open " + p.string() + " for writing");
  f << text;
  if (!f)
    throw Error("write failed: " + p.string());
}

std::string continuation_csv(const std::vector<ContinuationRecord> &recs) {
  std::ostringstream o;
  o << "eps,F,mean1,mean2,max1,max2,argmax1_x,argmax1_y,argmax2_x,argmax2_y,"
       "energy,mass1,mass2,el_residual,blowup_flag\n";
  for (const auto &r : recs)
    o << num(r.eps) << ',' << num(r.F_value) << ',' << num(r.mean1) << ','
      << num(r.mean2) << ',' << num(r.max1) << ',' << num(r.max2) << ','
      << num(r.argmax1.x) << ',' << num(r.argmax1.y) << ',' << num(r.argmax2.x)
      << ',' << num(r.argmax2.y) << ',' << num(r.energy) << ',' << num(r.mass1)
      << ',' << num(r.mass2) << ',' << num(r.el_residual) << ','
      << (r.blowup_flag ? 1 : 0) << '\n';
  return o.str();
}

std::string history_csv(const std::vector<double> &F, const std::vector<double> &g) {
  std::ostringstream o;
  o << "iteration,F,grad_norm\n";
  for (std::size_t k = 0; k < F.size(); ++k)
    o << k << ',' << num(F[k]) << ',' << (k < g.size() ? num(g[k]) : std::string("nan"))
      << '\n';
  return o.str();
}

json record_json(const ContinuationRecord &r) {
  return {{"eps", r.eps},           {"F", r.F_value},
          {"mean1", r.mean1},       {"mean2", r.mean2},
          {"max1", r.max1},         {"max2", r.max2},
          {"argmax1", point_json(r.argmax1)},
          {"argmax2", point_json(r.argmax2)},
          {"energy", r.energy},     {"mass1", r.mass1},
          {"mass2", r.mass2},       {"el_residual", r.el_residual},
          {"converged", r.converged}, {"blowup_flag", r.blowup_flag},
          {"cold_restart", r.cold_restart}, {"iterations", r.iterations}};
}

json condition_json(const ConditionReport &c) {
  return {{"holds", c.holds},
          {"min_margin", c.min_margin},
          {"argmin", c.argmin},
          {"evaluated", c.evaluated},
          {"excluded", c.excluded}};
}

json lower_bound_json(const LowerBound &lb) {
  return {{"value", lb.value}, {"p1", point_json(lb.p1)}, {"p2", point_json(lb.p2)},
          {"objective", lb.objective}, {"A1", lb.A1}, {"A2", lb.A2}};
}

json fit_json(const ExpansionFit &f) {
  json s = json::array();
  for (const auto &x : f.samples)
    s.push_back({{"eps", x.eps}, {"n_eval", x.n_eval}, {"J", x.J}});
  return {{"c0", f.c0}, {"c1", f.c1}, {"c2", f.c2}, {"fit_residual", f.fit_residual},
          {"condition", f.condition}, {"samples", s}};
}

std::string family_csv(const std::vector<FamilySample> &s) {
  std::ostringstream o;
  o << "eps,n_eval,J\n";
  for (const auto &x : s)
    o << num(x.eps) << ',' << x.n_eval << ',' << num(x.J) << '\n';
  return o.str();
}

json masses_json(const BallMasses &m) {
  json sites = json::array();
  for (const auto &s : m.sites)
    sites.push_back({{"location", point_json(s.location)}, {"peaks", s.peaks},
                     {"sigma1", s.sigma1}, {"sigma2", s.sigma2},
                     {"gamma1", s.gamma1}, {"gamma2", s.gamma2},
                     {"pohozaev", s.pohozaev}});
  return {{"radius", m.radius}, {"sites", sites}, {"remainder1", m.remainder1},
          {"remainder2", m.remainder2}};
}

json concentration_json(const ConcentrationReport &r) {
  json peaks = json::array();
  for (std::size_t k = 0; k < r.peaks.size(); ++k) {
    const Peak &p = r.peaks[k];
    peaks.push_back({{"component", p.component}, {"location", point_json(p.location)},
                     {"height", p.height}, {"scale", p.scale},
                     {"bubble_fit", r.bubble_fit_errors[k]},
                     {"negative_height_density", static_cast<bool>(r.negative_height_density[k])}});
  }
  json sweep = json::array();
  for (const auto &m : r.sweep)
    sweep.push_back(masses_json(m));
  return {{"peaks", peaks}, {"masses", masses_json(r.masses)}, {"sweep", sweep}};
}

FieldPair initial_state(const RunConfig &c, const ScalarField &h1, const ScalarField &h2) {
  const TorusGrid &g = h1.grid();
  if (c.init == "zero")
    return FieldPair(ScalarField(g), ScalarField(g));
  FieldPair s = default_init(h1, h2);
  if (c.init == "random") {
    s.u1 += random_smooth_field(g, c.seed, c.init_amplitude);
    s.u2 += random_smooth_field(g, c.seed + 0x9e3779b97f4a7c15ULL, c.init_amplitude);
  }
  return s;
}

void heatmaps(const RunConfig &c, const fs::path &dir, const FieldPair &s) {
  if (!c.heatmaps)
    return;
  export_heatmap(s.u1, (dir / "u1.pgm").string());
  export_heatmap(s.u2, (dir / "u2.pgm").string());
}

int exit_code_for(const Error &e) {
  if (dynamic_cast<const ConfigError *>(&e))
    return kExitConfig;
  if (dynamic_cast<const EmptyPositiveSet *>(&e) || dynamic_cast<const InitInfeasible *>(&e) ||
      dynamic_cast<const InfeasibleState *>(&e) ||
      dynamic_cast<const InfeasibleTestFunction *>(&e) ||
      dynamic_cast<const NegativeHeightDensity *>(&e) || dynamic_cast<const BallOverlap *>(&e))
    return kExitInfeasible;
  return kExitNumerical;
}

// ---- mode pipelines -------------------------------------------------------

struct Context {
  const RunConfig &cfg;
  fs::path dir;
  TorusGrid grid;
  ScalarField h1, h2;
  bool quiet;

  void say(const std::string &s) const {
    if (!quiet)
      std::cerr << s << '\n';
  }
};

int run_solve(const Context &c, json &res) {
  const FieldPair init = initial_state(c.cfg, c.h1, c.h2);
  SolveResult r = minimize_subcritical(c.h1, c.h2, c.cfg.eps, init, c.cfg.solver);
  res = {{"eps", c.cfg.eps},
         {"rho", 4.0 * M_PI - c.cfg.eps},
         {"F", r.F_value},
         {"el_residual", r.el_residual},
         {"grad_norm", r.grad_norm},
         {"iterations", r.iterations},
         {"converged", r.converged},
         {"constraint_defect", constraint_defect(r.state, c.h1, c.h2)},
         {"mean1", integrate(r.state.u1)},
         {"mean2", integrate(r.state.u2)}};
  write_text(c.dir / "history.csv", history_csv(r.F_history, r.grad_history));
  heatmaps(c.cfg, c.dir, r.state);
  c.say("solve: F = " + num(r.F_value) + ", converged = " + (r.converged ? "true" : "false"));
  return r.converged ? kExitOk : kExitNumerical;
}

json continuation_json(const ContinuationResult &r, const BlowupThresholds &thr) {
  json recs = json::array();
  for (const auto &x : r.records)
    recs.push_back(record_json(x));
  json blow;
  try {
    BlowupVerdict v = classify_case(r.records, thr);
    blow = {{"blew_up", v.blew_up}, {"case", to_string(v.which)}, {"inconclusive", false}};
  } catch (const Inconclusive &e) {
    blow = {{"blew_up", true}, {"case", "inconclusive"}, {"inconclusive", true},
            {"reason", e.what()}};
  }
  return {{"records", recs},   {"C1", r.C1},
          {"C2", r.C2},        {"mass_ratio", r.C1 > 0.0 ? json(r.C2 / r.C1) : json(nullptr)},
          {"partial", r.partial}, {"failure", r.failure},
          {"blowup", blow}};
}

std::vector<double> schedule_of(const RunConfig &c) {
  return c.schedule.empty() ? default_schedule() : c.schedule;
}

int run_continuation(const Context &c, json &res, bool analyze) {
  const BlowupThresholds thr;
  ContinuationResult r = continuation(c.h1, c.h2, schedule_of(c.cfg), c.cfg.solver, thr,
                                      initial_state(c.cfg, c.h1, c.h2));
  res = continuation_json(r, thr);
  write_text(c.dir / "continuation.csv", continuation_csv(r.records));
  if (!r.records.empty())
    heatmaps(c.cfg, c.dir, r.final_state);
  if (analyze && !r.records.empty()) {
    json a;
    try {
      a = concentration_json(
          analyze_concentration(r.final_state, c.h1, c.h2, c.cfg.ball_radius, c.cfg.bubble_L));
    } catch (const Error &e) {
      a = {{"error", e.what()}};
    }
    const MTProbe p = improved_mt_probe(r.final_state, 1.0 / 3.0);
    a["mt_probe"] = {{"eps_prime", 1.0 / 3.0}, {"lhs", p.lhs}, {"rhs", p.rhs},
                     {"excess", p.excess}, {"hypothesis_violated", p.hypothesis_violated},
                     {"satisfied", p.satisfied}};
    res["analysis"] = a;
  }
  c.say("continuation: " + std::to_string(r.records.size()) + " records" +
        (r.partial ? " (partial: " + r.failure + ")" : ""));
  return r.partial ? kExitNumerical : kExitOk;
}

TestFamilyParams family_of(const RunConfig &c, const LowerBound &lb) {
  TestFamilyParams p = default_family(lb, c.family_L);
  if (!c.eps_list.empty())
    p.eps_list = c.eps_list;
  return p;
}

int run_bounds(const Context &c, json &res) {
  const LowerBound lb = lower_bound(c.cfg.h1, c.cfg.h2, c.grid);
  const TestFamilyParams p = family_of(c.cfg, lb);
  const std::vector<FamilySample> s = family_energies(c.cfg.h1, c.cfg.h2, p, c.grid.n());
  write_text(c.dir / "family.csv", family_csv(s));
  res = {{"lower_bound", lower_bound_json(lb)},
         {"L", p.L},
         {"predicted_c1", predicted_c1(c.cfg.h1, c.cfg.h2, lb.p1, lb.p2)},
         {"predicted_c1_scaled", predicted_c1_scaled(c.cfg.h1, c.cfg.h2, lb.p1, lb.p2)}};
  res["fit"] = fit_json(fit_samples(s));
  c.say("bounds: lower bound = " + num(lb.value));
  return kExitOk;
}

int run_verdict(const Context &c, json &res) {
  const ExistenceVerdict v = verdict(c.cfg.h1, c.cfg.h2, c.grid);
  res = {{"condition_holds", v.condition_holds},
         {"min_margin", v.min_margin},
         {"lower_bound", lower_bound_json(v.bound)},
         {"fit", fit_json(v.fit)},
         {"min_J", v.min_J},
         {"strict_gap", v.strict_gap},
         {"predicts_minimizer", v.predicts_minimizer}};
  write_text(c.dir / "family.csv", family_csv(v.fit.samples));
  c.say(std::string("verdict: predicts_minimizer = ") + (v.predicts_minimizer ? "true" : "false"));
  return kExitOk;
}

int run_scalar(const Context &c, json &res) {
  ScalarField init(c.grid);
  if (c.cfg.init == "random")
    init = random_smooth_field(c.grid, c.cfg.seed, c.cfg.init_amplitude);
  ScalarSolveResult r = solve_scalar_kw(c.h1, c.cfg.rho, init, c.cfg.solver);
  res = {{"rho", c.cfg.rho},
         {"F", r.F_value},
         {"el_residual", r.el_residual},
         {"grad_norm", r.grad_norm},
         {"iterations", r.iterations},
         {"converged", r.converged},
         {"condition", condition_json(scalar_condition(c.cfg.h1, 0.0, c.grid))}};
  write_text(c.dir / "history.csv", history_csv(r.F_history, {}));
  if (c.cfg.heatmaps)
    export_heatmap(r.state, (c.dir / "u.pgm").string());
  c.say("scalar-kw: F = " + num(r.F_value));
  return r.converged ? kExitOk : kExitNumerical;
}

json versions() {
  return {{"toda", kVersion},
          {"fftw", std::string(fftw_version)},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                        std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"compiler", __VERSION__}};
}

void check_type(const json &v, const std::string &type, const std::string &path,
                std::vector<std::string> &out) {
  bool ok = false;
  if (type == "object")
    ok = v.is_object();
  else if (type == "array")
    ok = v.is_array();
  else if (type == "string")
    ok = v.is_string();
  else if (type == "number")
    ok = v.is_number();
  else if (type == "integer")
    ok = v.is_number_integer() || v.is_number_unsigned();
  else if (type == "boolean")
    ok = v.is_boolean();
  else if (type == "null")
    ok = v.is_null();
  if (!ok)
    out.push_back(path + ": expected " + type);
}

void validate_node(const json &v, const json &s, const std::string &path,
                   std::vector<std::string> &out) {
  if (s.contains("type")) {
    if (s["type"].is_array()) {
      std::vector<std::string> tmp;
      bool any = false;
      for (const auto &t : s["type"]) {
        tmp.clear();
        check_type(v, t.get<std::string>(), path, tmp);
        any = any || tmp.empty();
      }
      if (!any) {
        out.push_back(path + ": expected one of " + s["type"].dump());
        return;
      }
    } else {
      const std::size_t before = out.size();
      check_type(v, s["type"].get<std::string>(), path, out);
      if (out.size() != before)
        return;
    }
  }
  if (s.contains("enum")) {
    bool found = false;
    for (const auto &e : s["enum"])
      found = found || e == v;
    if (!found)
      out.push_back(path + ": value not in enum");
  }
  if (s.contains("minimum") && v.is_number() && v.get<double>() < s["minimum"].get<double>())
    out.push_back(path + ": below minimum");
  if (v.is_object()) {
    if (s.contains("required"))
      for (const auto &r : s["required"])
        if (!v.contains(r.get<std::string>()))
          out.push_back(path + ": missing " + r.get<std::string>());
    const json props = s.value("properties", json::object());
    for (auto it = v.begin(); it != v.end(); ++it) {
      if (props.contains(it.key()))
        validate_node(it.value(), props[it.key()], path + "/" + it.key(), out);
      else if (s.contains("additionalProperties") && s["additionalProperties"].is_boolean() &&
               !s["additionalProperties"].get<bool>())
        out.push_back(path + ": unexpected key " + it.key());
    }
  }
  if (v.is_array() && s.contains("items"))
    for (std::size_t k = 0; k < v.size(); ++k)
      validate_node(v[k], s["items"], path + "/" + std::to_string(k), out);
}

} // namespace

const char *to_string(Mode m) {
  switch (m) {
  case Mode::Solve:
    return "solve";
  case Mode::Continuation:
    return "continuation";
  case Mode::Analyze:
    return "analyze";
  case Mode::Bounds:
    return "bounds";
  case Mode::Verdict:
    return "verdict";
  case Mode::ScalarKW:
    return "scalar-kw";
  }
  return "?";
}

Mode parse_mode(const std::string &s) {
  if (s == "solve")
    return Mode::Solve;
  if (s == "continuation" || s == "continue")
    return Mode::Continuation;
  if (s == "analyze")
    return Mode::Analyze;
  if (s == "bounds")
    return Mode::Bounds;
  if (s == "verdict")
    return Mode::Verdict;
  if (s == "scalar-kw")
    return Mode::ScalarKW;
  throw ConfigError("unknown mode '" + s + "'");
}

RunConfig parse_config(const std::string &text, const std::string &source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error &e) {
    // translate the byte offset into line and column
    std::size_t line = 1, col = 1;
    for (std::size_t k = 0; k + 1 < e.byte && k < text.size(); ++k) {
      if (text[k] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(col) +
                      ": " + e.what());
  }
  if (!j.is_object())
    throw ConfigError(source + ": top level must be an object");
  Reader r{j, "", source};
  r.only({"grid", "h1", "h2", "mode", "eps", "rho", "schedule", "solver", "init",
          "init_amplitude", "output", "seed", "heatmaps", "analysis", "bounds"});
  RunConfig c;
  c.grid = static_cast<int>(r.integer("grid", c.grid));
  if (r.has("h1"))
    c.h1 = read_trig(r, "h1");
  c.h2 = r.has("h2") ? read_trig(r, "h2") : c.h1;
  if (r.has("mode")) {
    c.mode_given = true;
    try {
      c.mode = parse_mode(r.string("mode", ""));
    } catch (const ConfigError &) {
      r.fail("mode", "expected one of solve, continuation, analyze, bounds, verdict, scalar-kw");
    }
  }
  if (r.has("eps") && r.has("rho") && c.mode == Mode::Solve)
    r.fail("rho", "give either eps or rho for solve");
  c.eps = r.number("eps", c.eps);
  c.rho = r.number("rho", c.rho);
  if (c.mode == Mode::Solve && r.has("rho"))
    c.eps = 4.0 * M_PI - c.rho;
  c.schedule = r.numbers("schedule");
  if (r.has("solver")) {
    Reader s = r.child("solver");
    s.only({"max_iters", "grad_tol", "history", "armijo_c1", "backtrack", "max_backtracks"});
    c.solver.max_iters = static_cast<int>(s.integer("max_iters", c.solver.max_iters));
    c.solver.grad_tol = s.number("grad_tol", c.solver.grad_tol);
    c.solver.history = static_cast<int>(s.integer("history", c.solver.history));
    c.solver.armijo_c1 = s.number("armijo_c1", c.solver.armijo_c1);
    c.solver.backtrack = s.number("backtrack", c.solver.backtrack);
    c.solver.max_backtracks = static_cast<int>(s.integer("max_backtracks", c.solver.max_backtracks));
  }
  c.init = r.string("init", c.init);
  c.init_amplitude = r.number("init_amplitude", c.init_amplitude);
  c.output = r.string("output", c.output);
  c.seed = r.u64("seed", c.seed);
  c.heatmaps = r.boolean("heatmaps", c.heatmaps);
  if (r.has("analysis")) {
    Reader a = r.child("analysis");
    a.only({"ball_radius", "bubble_L"});
    c.ball_radius = a.number("ball_radius", c.ball_radius);
    c.bubble_L = a.number("bubble_L", c.bubble_L);
  }
  if (r.has("bounds")) {
    Reader b = r.child("bounds");
    b.only({"L", "eps_list"});
    c.family_L = b.number("L", c.family_L);
    c.eps_list = b.numbers("eps_list");
  }
  try {
    validate(c);
  } catch (const ConfigError &e) {
    throw ConfigError(source + ": " + e.what());
  }
  return c;
}

RunConfig load_config(const std::string &path) {
  std::ifstream f(path, std::ios::binary);
  if (!f)
    throw ConfigError(path + ": cannot open config file");
  std::ostringstream o;
  o << f.rdbuf();
  return parse_config(o.str(), path);
}

void validate(RunConfig &c) {
  auto bad = [](const std::string &field, const std::string &msg) {
    throw ConfigError("/" + field + ": " + msg);
  };
  if (c.grid < 32 || c.grid > 512 || (c.grid & (c.grid - 1)) != 0)
    bad("grid", "must be a power of two in [32, 512]");
  if (c.mode == Mode::Solve && !(c.eps > 0.0 && c.eps < 4.0 * M_PI))
    bad("eps", "must lie in (0, 4 pi)");
  if (c.mode == Mode::ScalarKW && !(c.rho > 0.0))
    bad("rho", "must be positive");
  for (std::size_t k = 0; k < c.schedule.size(); ++k) {
    if (!(c.schedule[k] > 0.0 && c.schedule[k] < 4.0 * M_PI))
      bad("schedule/" + std::to_string(k), "must lie in (0, 4 pi)");
    if (k > 0 && !(c.schedule[k] < c.schedule[k - 1]))
      bad("schedule/" + std::to_string(k), "schedule must be strictly decreasing");
  }
  try {
    c.solver.validate();
  } catch (const Error &e) {
    bad("solver", e.what());
  }
  if (c.init != "default" && c.init != "zero" && c.init != "random")
    bad("init", "expected default, zero or random");
  if (!(c.init_amplitude >= 0.0))
    bad("init_amplitude", "must be non-negative");
  if (c.output.empty())
    bad("output", "must not be empty");
  if (!(c.ball_radius > 0.0 && c.ball_radius < 0.5))
    bad("analysis/ball_radius", "must lie in (0, 0.5)");
  if (!(c.bubble_L > 0.0))
    bad("analysis/bubble_L", "must be positive");
  if (!(c.family_L > 0.0))
    bad("bounds/L", "must be positive");
  for (std::size_t k = 0; k < c.eps_list.size(); ++k)
    if (!(c.eps_list[k] > 0.0) || c.eps_list[k] * c.family_L > 0.25)
      bad("bounds/eps_list/" + std::to_string(k), "must lie in (0, 0.25 / L]");
  if (!c.eps_list.empty() && c.eps_list.size() < 5)
    bad("bounds/eps_list", "needs at least 5 values");
  c.echo = echo_of(c);
}

RunOutcome run(const RunConfig &cfg, bool quiet) {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path dir(cfg.output);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    throw Error("cannot create output directory " + dir.string() + ": " + ec.message());

  RunOutcome out;
  json results = json::object();
  std::string status = "ok", error;
  try {
    const TorusGrid grid(cfg.grid);
    Context c{cfg, dir, grid, eval_h(cfg.h1, grid), eval_h(cfg.h2, grid), quiet};
    switch (cfg.mode) {
    case Mode::Solve:
      out.exit_code = run_solve(c, results);
      break;
    case Mode::Continuation:
      out.exit_code = run_continuation(c, results, false);
      break;
    case Mode::Analyze:
      out.exit_code = run_continuation(c, results, true);
      break;
    case Mode::Bounds:
      out.exit_code = run_bounds(c, results);
      break;
    case Mode::Verdict:
      out.exit_code = run_verdict(c, results);
      break;
    case Mode::ScalarKW:
      out.exit_code = run_scalar(c, results);
      break;
    }
    if (out.exit_code != kExitOk)
      status = "partial";
  } catch (const Error &e) {
    out.exit_code = exit_code_for(e);
    status = "error";
    error = e.what();
    if (!quiet)
      std::cerr << "error: " << error << '\n';
  }

  json summary = {{"schema_version", 1},
                  {"mode", to_string(cfg.mode)},
                  {"status", status},
                  {"exit_code", out.exit_code},
                  {"config", cfg.echo.is_null() ? echo_of(cfg) : cfg.echo},
                  {"versions", versions()},
                  {"results", results}};
  if (!error.empty())
    summary["error"] = error;
  const std::vector<std::string> problems = validate_schema(summary, summary_schema());
  if (!problems.empty()) {
    std::string msg = "summary does not match the schema:";
    for (const auto &p : problems)
      msg += "\n  " + p;
    throw Error(msg);
  }
  write_text(dir / "summary.json", summary.dump(2) + "\n");
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_text(dir / "timing.txt", "wall_clock_seconds " + num(secs) + "\n");
  out.summary = std::move(summary);
  return out;
}

void export_heatmap(const ScalarField &f, const std::string &path) {
  if (!f.all_finite())
    throw Error("export_heatmap: field has non-finite values (" + path + ")");
  const TorusGrid &g = f.grid();
  const double lo = f.min(), hi = f.max();
  std::string data;
  data.reserve(g.size() * 2 + 32);
  data += "P5\n" + std::to_string(g.n()) + " " + std::to_string(g.n()) + "\n65535\n";
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double t = hi > lo ? (f[k] - lo) / (hi - lo) : 0.0;
    const auto v = static_cast<unsigned>(std::lround(std::clamp(t, 0.0, 1.0) * 65535.0));
    data += static_cast<char>((v >> 8) & 0xff);
    data += static_cast<char>(v & 0xff);
  }
  try {
    write_text(path, data);
    write_text(path + ".minmax.txt", "min " + num(lo) + "\nmax " + num(hi) + "\n");
  } catch (const Error &e) {
    throw Error(std::string("export_heatmap: ") + e.what());
  }
}

std::vector<std::string> validate_schema(const json &doc, const json &schema) {
  std::vector<std::string> out;
  validate_node(doc, schema, "", out);
  return out;
}

const json &summary_schema() {
  static const json s = json::parse(kSummarySchemaText);
  return s;
}

} // namespace toda::cli
