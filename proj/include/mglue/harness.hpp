#pragma once

#include "mglue/cutoff.hpp"
#include "mglue/gluing.hpp"
#include "mglue/kv_config.hpp"
#include "mglue/morse_model.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace mglue {

enum ExitCode { exit_ok = 0, exit_usage = 1, exit_verification = 2 };

// Flat key = value experiment file.  The model is either a `model` path
// (relative to the config) or given inline with the model-file keys.
struct ExperimentConfig {
  std::filesystem::path source;
  KvConfig model_keys;
  std::string cutoff = "quintic";
  Eigen::VectorXd x0, y0;  // seeds; default 0
  double seed_box = 0;     // half-width of the box used for C(K±); default max |seed|
  std::vector<double> T_list{3, 4, 5, 6, 7, 8};
  double h = 0.02;
  double tol_zero = 1e-12;
  double tol_flow = 1e-9;
  bool strict = true;
  std::filesystem::path out = "mglue_out";
  std::uint64_t rng_seed = 1;
  std::vector<int> tangent_orders{0, 1, 2};
  int certificate_samples = 40;
  double debug_q_scale = 1.0;  // multiplies the measured ‖Q‖; exercises the failure path
};

ExperimentConfig parse_experiment(const KvConfig& cfg, const std::filesystem::path& source);
ExperimentConfig load_experiment(const std::filesystem::path& file);

// Everything a command needs, built once from the config.
struct Experiment {
  ExperimentConfig cfg;
  ModelFile model;
  Cutoff beta;
  ModelConstants k;
  GlueSettings settings;
};

// With with_decay_constant the constant C(K±) is measured on the seed box and
// fed into T0.
Experiment build_experiment(const ExperimentConfig& cfg, bool with_decay_constant);

int cmd_constants(const ExperimentConfig& cfg, std::ostream& log);
int cmd_glue(const ExperimentConfig& cfg, std::ostream& log);
int cmd_converge(const ExperimentConfig& cfg, std::ostream& log);
int cmd_tangent(const ExperimentConfig& cfg, std::ostream& log);
int cmd_decay(const ExperimentConfig& cfg, std::ostream& log);
int cmd_verify(const ExperimentConfig& cfg, std::ostream& log);

struct CheckResult {
  std::string module;
  std::string name;
  std::string bound_name;  // the bound being tested, in words
  double measured = 0;
  double bound = 0;
  bool passed = false;
  std::string note;
};

// The runnable invariant suite over all modules.
std::vector<CheckResult> run_invariant_suite(const Experiment& e);
std::string format_check_matrix(const std::vector<CheckResult>& checks, double h);

}  // namespace mglue
