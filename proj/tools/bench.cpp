// bench: runs the sparse-recovery experiments and single instances.
//
// Exit codes: 0 success, 1 configuration error, 2 solver failure, 3 I/O error.

#include "ide/bench/config.hpp"
#include "ide/bench/experiments.hpp"
#include "ide/sdp_io.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace {

enum Exit { kOk = 0, kConfig = 1, kSolver = 2, kIo = 3 };

struct RunArgs {
  std::string experiment;
  std::optional<std::string> config;
  std::optional<double> scale;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> algorithms;
  std::optional<std::string> schedule;
  std::optional<int> threads;
  std::optional<std::string> problem;
  bool quiet = false;
};

struct GenerateArgs {
  long long n = 16;
  long long m = 64;
  std::uint64_t seed = 1;
  std::string source = "mog";
  long long num_active = 0;
  bool no_truth = false;
  std::string out;
};

ide::bench::ExperimentConfig build_config(const RunArgs& args) {
  using namespace ide::bench;
  ExperimentConfig c = ExperimentConfig::defaults(parse_experiment(args.experiment));
  if (args.config) {
    if (!std::filesystem::exists(*args.config))
      throw std::ios_base::failure("config file not found: " + *args.config);
    load_config_file(c, *args.config);
  }
  c.apply_scale(args.scale.value_or(c.scale));
  if (args.seed) c.seed = *args.seed;
  if (args.out) c.output_dir = *args.out;
  if (args.algorithms) apply_key(c, "algorithms", *args.algorithms);
  if (args.schedule) apply_key(c, "schedule", *args.schedule);
  if (args.threads) c.threads = *args.threads;
  if (args.problem) c.problem_path = *args.problem;
  if (c.problem_path && c.experiment != Experiment::single)
    throw ConfigError("--problem only applies to the single experiment");
  c.validate();
  return c;
}

int run(const RunArgs& args) {
  using namespace ide::bench;
  try {
    const ExperimentConfig c = build_config(args);
    const ExperimentOutcome out = run_experiment(c);
    if (!args.quiet) std::cout << out.summary;
    for (const auto& msg : out.messages) std::cerr << "warning: " << msg << '\n';
    if (!args.quiet)
      for (const auto& f : out.files) std::cout << "wrote " << f.string() << '\n';
    if (out.failures > 0) {
      std::cerr << out.failures << " solver run(s) failed\n";
      return kSolver;
    }
    return kOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const ide::Error& e) {
    // Malformed instance files and invalid parameters are input problems;
    // anything else escaping the runners is a solver failure.
    const auto code = e.code();
    const bool input = code == ide::ErrorCode::parse_error || code == ide::ErrorCode::invalid_params ||
                       code == ide::ErrorCode::invalid_dimensions ||
                       code == ide::ErrorCode::invalid_schedule || code == ide::ErrorCode::invalid_k;
    std::cerr << (input ? "config error: " : "solver failure: ") << e.what() << '\n';
    return input ? kConfig : kSolver;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIo;
  }
}

int generate(const GenerateArgs& args) {
  try {
    const auto dict = ide::gen_dictionary(args.n, args.m, ide::bench::stream_seed(args.seed, ide::bench::Stream::dictionary));
    const auto src_seed = ide::bench::stream_seed(args.seed, ide::bench::Stream::source);
    ide::SourceVector s;
    if (args.source == "mog") {
      s = ide::gen_source_mog(args.m, {}, src_seed);
    } else if (args.source == "exact_k") {
      ide::ExactKParams p;
      p.num_active = args.num_active > 0 ? args.num_active : std::max<long long>(1, args.n / 4);
      p.inactive_sigma = 0.0;
      s = ide::gen_source_exact_k(args.m, p, src_seed);
    } else {
      std::cerr << "config error: unknown source '" << args.source << "'\n";
      return kConfig;
    }
    auto problem = ide::make_problem(dict, std::move(s), args.seed);
    if (args.no_truth)
      problem = ide::SparseProblem(problem.dictionary(), problem.mixture(), std::nullopt, args.seed);
    ide::save_sdp(args.out, problem);
    std::cout << "wrote " << args.out << '\n';
    return kOk;
  } catch (const ide::Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIo;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse-recovery benchmark: iterative detection-estimation and baselines"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run_cmd = app.add_subcommand("run", "Run an experiment");
  run_cmd->footer(ide::bench::config_keys_help());
  run_cmd->add_option("--experiment", run_args.experiment, "exp1..exp5 or single")
      ->required()
      ->check(CLI::IsMember({"exp1", "exp2", "exp3", "exp4", "exp5", "single"}));
  run_cmd->add_option("--config", run_args.config, "INI configuration file");
  run_cmd->add_option("--scale", run_args.scale, "shrink sizes and trial counts by R in (0,1]");
  run_cmd->add_option("--seed", run_args.seed, "base seed");
  run_cmd->add_option("--out", run_args.out, "output directory");
  run_cmd->add_option("--algorithms", run_args.algorithms, "comma list of ide_s,ide_x,mof,mp,lp");
  run_cmd->add_option("--schedule", run_args.schedule, "preset name or comma list of thresholds");
  run_cmd->add_option("--threads", run_args.threads, "worker threads for independent trials");
  run_cmd->add_option("--problem", run_args.problem, "single: .sdp instance to solve");
  run_cmd->add_flag("--quiet", run_args.quiet, "do not print the summary table");

  GenerateArgs gen_args;
  auto* gen_cmd = app.add_subcommand("generate", "Write a random instance as a .sdp file");
  gen_cmd->add_option("--n", gen_args.n, "mixtures")->capture_default_str();
  gen_cmd->add_option("--m", gen_args.m, "atoms")->capture_default_str();
  gen_cmd->add_option("--seed", gen_args.seed, "seed")->capture_default_str();
  gen_cmd->add_option("--source", gen_args.source, "mog or exact_k")->capture_default_str();
  gen_cmd->add_option("--num-active", gen_args.num_active, "exact_k: active count (default n/4)");
  gen_cmd->add_flag("--no-truth", gen_args.no_truth, "omit the source line");
  gen_cmd->add_option("--out", gen_args.out, "output .sdp path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }
  if (*run_cmd) return run(run_args);
  return generate(gen_args);
}
