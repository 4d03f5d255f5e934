#include "mglue/harness.hpp"
#include "mglue/parallel.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  using namespace mglue;
  CLI::App app{"Local gluing of Morse gradient flow lines"};
  app.require_subcommand(1);
  std::string config, out;
  std::uint64_t seed = 0;
  using Cmd = int (*)(const ExperimentConfig&, std::ostream&);
  const std::pair<const char*, Cmd> commands[] = {
      {"constants", cmd_constants}, {"glue", cmd_glue},   {"converge", cmd_converge},
      {"tangent", cmd_tangent},     {"decay", cmd_decay}, {"verify", cmd_verify}};
  for (const auto& [name, fn] : commands) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "experiment file (key = value)")->required();
    sub->add_option("--out", out, "output directory");
    sub->add_option("--seed", seed, "rng seed for randomized probes");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : exit_usage;
  }
  configure_threads();

  ExperimentConfig cfg;
  try {
    cfg = load_experiment(config);
  } catch (const std::exception& e) {
    std::cerr << "mglue: " << e.what() << "\n";
    return exit_usage;
  }
  if (!out.empty()) cfg.out = out;
  if (seed) cfg.rng_seed = seed;
  for (const auto& [name, fn] : commands)
    if (app.got_subcommand(name)) return fn(cfg, std::cout);
  return exit_usage;
}
