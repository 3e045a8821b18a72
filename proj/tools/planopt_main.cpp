#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "planopt/algorithms.hpp"
#include "planopt/bytes.hpp"
#include "planopt/checkpoint.hpp"
#include "planopt/domain.hpp"
#include "planopt/oracle_suite.hpp"

namespace {

using namespace planopt;

constexpr int kExitConfigError = 2;
constexpr int kExitVerificationFailure = 3;

Split parse_split(const std::string& name) {
  if (name == "train") return Split::train;
  if (name == "test") return Split::test;
  throw ConfigError("split must be 'train' or 'test', got '" + name + "'");
}

/// Content checksum of a checksummed artifact: the CRC32 the file stores in
/// its trailing four bytes (hashing the whole file would always produce the
/// CRC residue constant).
uint32_t file_crc32(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  std::vector<char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  const size_t content = bytes.size() >= 4 ? bytes.size() - 4 : bytes.size();
  return io::crc32_ieee({reinterpret_cast<const uint8_t*>(bytes.data()), content});
}

struct GenProblemsArgs {
  std::string domain;
  std::string split = "train";
  uint64_t seed = 0;
  int count = -1;
  std::string out;
};

int cmd_gen_problems(const GenProblemsArgs& args) {
  const DomainDefinition domain = make_domain(args.domain);
  const ProblemSet set = create_problem_set(domain, parse_split(args.split), args.seed, args.count);
  save_problem_set(set, args.out);
  std::printf("instances=%zu crc32=0x%08X path=%s\n", set.instances.size(),
              file_crc32(args.out), args.out.c_str());
  return 0;
}

struct TrainArgs {
  std::string domain;
  std::string algo = "gc";
  TrainConfig config;
  std::string out;
};

int cmd_train(const TrainArgs& args) {
  const DomainDefinition domain = make_domain(args.domain);
  TrainConfig config = args.config;
  config.out_dir = args.out;

  double final_report = 0.0;
  if (args.algo == "gc") {
    const GcTrainResult result = gc_train(domain, config);
    final_report = result.final_report;
    std::printf("planner_calls=%" PRId64 " skipped_steps=%" PRId64 "\n", result.planner_calls,
                result.skipped_steps);
  } else if (args.algo == "cem") {
    const CemTrainResult result = cem_train(domain, config);
    final_report = result.final_report;
    std::printf("planner_calls=%" PRId64 "\n", result.planner_calls);
  } else if (args.algo == "uniform") {
    // No training: evaluate the uniform-sampling reference and store it as a
    // checkpoint so it can participate in comparisons.
    validate_config(config);
    ThreadPool pool(config.workers);
    const ProblemSet test_set = create_problem_set(domain, Split::test, config.seed);
    const UniformGenerator generator(domain.space);
    const EvalResult ev = evaluate(domain, generator, test_set, config.eval_samples,
                                   derive_seed(config.seed, "eval"), pool);
    final_report = ev.mean;
    if (!args.out.empty()) {
      std::filesystem::create_directories(args.out);
      save_uniform_checkpoint(std::filesystem::path(args.out) / "checkpoint_final.popnn",
                              domain.spec_string(), domain.space);
      MetricsRow row;
      row.eval_objective_mean = ev.mean;
      row.eval_objective_std = ev.stddev;
      row.train_objective_mean = row.critic_loss = row.generator_loss =
          std::numeric_limits<double>::quiet_NaN();
      write_metrics_csv(std::filesystem::path(args.out) / "metrics.csv", {row});
      write_manifest(std::filesystem::path(args.out) / "manifest.txt", domain, "uniform", config);
    }
  } else {
    throw ConfigError("algo must be gc, cem, or uniform, got '" + args.algo + "'");
  }
  std::printf("final_report=%.17g\n", final_report);
  return 0;
}

struct EvaluateArgs {
  std::string checkpoint;
  std::string problems;
  uint64_t seed = 0;
  int samples = -1;  // -1: one per instance
  int workers = 0;
  std::string out;
};

int cmd_evaluate(const EvaluateArgs& args) {
  const ProblemSet set = load_problem_set(args.problems);
  const DomainDefinition domain = make_domain(set.family + "[" + std::to_string(set.size) + "]");
  const LoadedCheckpoint checkpoint = load_checkpoint(args.checkpoint);
  if (checkpoint.domain_spec != domain.spec_string()) {
    throw ConfigError("checkpoint was trained for " + checkpoint.domain_spec +
                      " but the problem set is " + domain.spec_string());
  }
  const int n = args.samples > 0 ? args.samples : static_cast<int>(set.instances.size());
  ThreadPool pool(args.workers);
  const std::vector<double> objectives =
      evaluate_samples(domain, *checkpoint.generator, set, n, args.seed, pool);

  double mean = 0.0;
  for (double y : objectives) mean += y;
  mean /= static_cast<double>(objectives.size());
  double var = 0.0;
  for (double y : objectives) var += (y - mean) * (y - mean);
  const double stddev = std::sqrt(var / static_cast<double>(objectives.size()));

  if (!args.out.empty()) {
    std::ofstream f(args.out, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + args.out);
    f << "sample,instance,objective\n";
    for (size_t i = 0; i < objectives.size(); ++i) {
      char line[80];
      std::snprintf(line, sizeof line, "%zu,%zu,%.17g\n", i, i % set.instances.size(),
                    objectives[i]);
      f << line;
    }
  }
  std::printf("mean=%.17g std=%.17g n=%d\n", mean, stddev, n);
  return 0;
}

struct OracleCheckArgs {
  std::string domain;
  uint64_t seed = 0;
  int mazes = 1000;
  int walk_pairs = 20;
  int64_t walk_samples = 100'000;
  int workers = 0;
  bool inject_tie_break_bug = false;
};

int cmd_oracle_check(const OracleCheckArgs& args) {
  OracleSuiteOptions options;
  options.seed = args.seed;
  options.mazes_per_size = args.mazes;
  options.walk_pairs = args.walk_pairs;
  options.walk_samples = args.walk_samples;
  if (args.inject_tie_break_bug) options.tie_break = grid2d::TieBreak::inverted_index;
  if (!args.domain.empty()) {
    const DomainDefinition domain = make_domain(args.domain);  // validates the spec
    options.family_filter = domain.family;
    options.sizes = {domain.size};
  }

  ThreadPool pool(args.workers);
  const std::vector<OracleCheck> report = run_oracle_suite(options, pool);
  bool all_passed = true;
  for (const OracleCheck& check : report) {
    all_passed = all_passed && check.passed;
    std::printf("[%s] %s (%.2fs) %s\n", check.passed ? "PASS" : "FAIL", check.name.c_str(),
                check.seconds, check.detail.c_str());
  }
  std::printf("%s\n", all_passed ? "oracle checks passed" : "oracle checks FAILED");
  return all_passed ? 0 : kExitVerificationFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Planner-parameter optimization on grid domains"};
  app.require_subcommand(1);

  GenProblemsArgs gen_args;
  CLI::App* gen = app.add_subcommand("gen-problems", "Generate a problem-set file");
  gen->add_option("--domain", gen_args.domain, "Domain spec, e.g. RandomWalk2D[5]")->required();
  gen->add_option("--split", gen_args.split, "train or test");
  gen->add_option("--seed", gen_args.seed, "Base seed");
  gen->add_option("--count", gen_args.count, "Instance count (default: domain standard)");
  gen->add_option("--out", gen_args.out, "Output POPSET path")->required();

  TrainArgs train_args;
  CLI::App* train = app.add_subcommand("train", "Train a generator");
  train->add_option("--domain", train_args.domain, "Domain spec")->required();
  train->add_option("--algo", train_args.algo, "gc, cem, or uniform");
  train->add_option("--budget", train_args.config.budget, "Planner-call budget");
  train->add_option("--seed", train_args.config.seed, "Base seed");
  train->add_option("--workers", train_args.config.workers, "Worker threads (0 = auto)");
  train->add_option("--out", train_args.out, "Run directory for metrics/checkpoints");
  train->add_option("--eval-interval", train_args.config.eval_interval,
                    "Steps between evaluations");
  train->add_option("--eval-samples", train_args.config.eval_samples,
                    "Planner calls per evaluation");
  train->add_option("--population", train_args.config.population, "CEM population size");
  train->add_option("--elite-frac", train_args.config.elite_frac, "CEM elite fraction");
  train->add_option("--lr-gen", train_args.config.lr_generator, "Generator learning rate");
  train->add_option("--lr-critic", train_args.config.lr_critic, "Critic learning rate");
  train->add_option("--entropy-coeff", train_args.config.entropy_coeff,
                    "Generator entropy bonus");
  train->add_option("--buffer-cap", train_args.config.buffer_capacity, "Replay buffer capacity");

  EvaluateArgs eval_args;
  CLI::App* evaluate = app.add_subcommand("evaluate", "Evaluate a checkpoint on a problem set");
  evaluate->add_option("checkpoint", eval_args.checkpoint, "POPNN1 checkpoint file")->required();
  evaluate->add_option("problems", eval_args.problems, "POPSET problem-set file")->required();
  evaluate->add_option("--seed", eval_args.seed, "Evaluation seed");
  evaluate->add_option("--samples", eval_args.samples, "Planner calls (default: one per instance)");
  evaluate->add_option("--workers", eval_args.workers, "Worker threads (0 = auto)");
  evaluate->add_option("--out", eval_args.out, "Per-call objectives CSV");

  OracleCheckArgs oracle_args;
  CLI::App* oracle = app.add_subcommand("oracle-check", "Run the exact-oracle verification suite");
  oracle->add_option("--domain", oracle_args.domain, "Restrict to one domain spec");
  oracle->add_option("--seed", oracle_args.seed, "Base seed");
  oracle->add_option("--mazes", oracle_args.mazes, "Mazes per structural check");
  oracle->add_option("--walk-pairs", oracle_args.walk_pairs, "Walk (board, probs) pairs");
  oracle->add_option("--walk-samples", oracle_args.walk_samples, "Monte-Carlo rollouts per pair");
  oracle->add_option("--workers", oracle_args.workers, "Worker threads (0 = auto)");
  oracle->add_flag("--inject-tie-break-bug", oracle_args.inject_tie_break_bug)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the parser diagnostic
    return kExitConfigError;
  }

  try {
    if (gen->parsed()) return cmd_gen_problems(gen_args);
    if (train->parsed()) return cmd_train(train_args);
    if (evaluate->parsed()) return cmd_evaluate(eval_args);
    if (oracle->parsed()) return cmd_oracle_check(oracle_args);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfigError;
  } catch (const io::FormatError& e) {
    std::fprintf(stderr, "file error: %s\n", e.what());
    return kExitConfigError;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
