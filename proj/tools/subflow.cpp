#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "subflow/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"subflow: doubly nonlinear gradient flows on grids"};
  app.require_subcommand(1);

  subflow::cli::Options opt;
  std::string config, out;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "JSON configuration file");
    sub->add_option("--set", opt.overrides, "override a config key, e.g. --set time.steps=400")->expected(1)->take_all();
    sub->add_option("--out", out, "output directory");
    sub->add_option("--seed", seed, "random seed for profiles and verify suites");
    sub->add_flag("--plot", opt.plot, "write norms.svg (evolve)");
  };

  CLI::App* res = app.add_subcommand("resolvent", "solve one implicit step for a datum");
  CLI::App* evo = app.add_subcommand("evolve", "run the implicit Euler scheme");
  CLI::App* ver = app.add_subcommand("verify", "run a verification suite");
  add_common(res);
  add_common(evo);
  add_common(ver);
  std::string suite;
  ver->add_option("suite", suite, "contraction, oracle, boundary, homogeneity, convexity, gradients, parabolic or all")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : subflow::cli::exit_config;
  }

  if (!config.empty()) opt.config_path = config;
  if (!out.empty()) opt.out_dir = out;
  for (CLI::App* sub : {res, evo, ver})
    if (sub->parsed() && sub->count("--seed")) opt.seed = seed;

  const std::string command = res->parsed() ? "resolvent" : evo->parsed() ? "evolve" : "verify";
  return subflow::cli::run(command, suite, opt, std::cout, std::cerr);
}
