#include "run.hpp"

#include "toda/errors.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char **argv) {
  using namespace toda::cli;
  CLI::App app{"variational solver and diagnostics for the mean-field Toda system on the unit torus"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  int grid = 0;
  bool quiet = false;
  app.add_flag("--quiet", quiet, "suppress progress messages");

  const std::vector<std::pair<std::string, std::string>> verbs = {
      {"solve", "minimize at rho = 4 pi - eps"},
      {"continue", "subcritical continuation with blow-up diagnostics"},
      {"analyze", "continuation followed by concentration analysis"},
      {"bounds", "lower bound and test-function expansion"},
      {"verdict", "existence verdict"},
      {"scalar-kw", "scalar mean-field solve"}};
  std::vector<CLI::App *> subs;
  for (const auto &[name, help] : verbs) {
    CLI::App *s = app.add_subcommand(name, help);
    s->add_option("--config", config_path, "JSON configuration file")->required();
    s->add_option("--out", out_dir, "output directory (overrides the config)");
    s->add_option("--seed", seed, "random seed (overrides the config)");
    s->add_option("--grid", grid, "grid size N (overrides the config)");
    s->add_flag("--quiet", quiet, "suppress progress messages");
    subs.push_back(s);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  std::string verb;
  for (auto *s : subs)
    if (s->parsed())
      verb = s->get_name();

  RunConfig cfg;
  try {
    cfg = load_config(config_path);
    const Mode m = parse_mode(verb);
    if (cfg.mode_given && m != cfg.mode)
      throw toda::ConfigError(config_path + ": /mode: '" + to_string(cfg.mode) +
                              "' does not match the verb '" + verb + "'");
    cfg.mode = m;
    if (!out_dir.empty())
      cfg.output = out_dir;
    if (app.get_subcommand(verb)->count("--seed"))
      cfg.seed = seed;
    if (app.get_subcommand(verb)->count("--grid"))
      cfg.grid = grid;
    validate(cfg);
  } catch (const toda::ConfigError &e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    return run(cfg, quiet).exit_code;
  } catch (const toda::Error &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
}
