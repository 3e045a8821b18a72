#include <doctest.h>
#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "planopt/checkpoint.hpp"
#include "planopt/domain.hpp"
#include "planopt/oracles.hpp"

#ifndef PLANOPT_CLI_PATH
#error "PLANOPT_CLI_PATH must point at the planopt binary"
#endif

using namespace planopt;
namespace fs = std::filesystem;

namespace {

struct CmdResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CmdResult run_cli(const std::string& args) {
  static int counter = 0;
  const fs::path base = fs::temp_directory_path();
  const fs::path out_file = base / ("planopt_cli_out_" + std::to_string(counter) + ".txt");
  const fs::path err_file = base / ("planopt_cli_err_" + std::to_string(counter) + ".txt");
  ++counter;

  const std::string cmd = std::string(PLANOPT_CLI_PATH) + " " + args + " > " +
                          out_file.string() + " 2> " + err_file.string();
  const int status = std::system(cmd.c_str());

  CmdResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out_file);
  r.err = slurp(err_file);
  fs::remove(out_file);
  fs::remove(err_file);
  return r;
}

/// Extracts the value of a "key=value" token from tool output.
std::string token(const std::string& text, const std::string& key) {
  // Match only at a word boundary so "n=" does not hit the tail of "mean=".
  size_t pos = text.find(key + "=");
  while (pos != std::string::npos && pos > 0 &&
         !std::isspace(static_cast<unsigned char>(text[pos - 1]))) {
    pos = text.find(key + "=", pos + 1);
  }
  REQUIRE(pos != std::string::npos);
  const size_t start = pos + key.size() + 1;
  size_t end = start;
  while (end < text.size() && !std::isspace(static_cast<unsigned char>(text[end]))) ++end;
  return text.substr(start, end - start);
}

fs::path temp_dir(const char* name) {
  const fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  return p;
}

int csv_line_count(const fs::path& p) {
  std::ifstream in(p);
  int lines = 0;
  std::string line;
  while (std::getline(in, line)) ++lines;
  return lines;
}

}  // namespace

TEST_CASE("help exits zero, unknown flags exit two") {
  CHECK(run_cli("--help").exit_code == 0);
  CHECK(run_cli("train --help").exit_code == 0);
  CHECK(run_cli("--no-such-flag").exit_code == 2);
  CHECK(run_cli("train --domain RandomWalk2D[5] --frobnicate").exit_code == 2);
  CHECK(run_cli("gen-problems --domain RandomWalk2D[5]").exit_code == 2);  // missing --out
  CHECK(run_cli("no-such-subcommand").exit_code == 2);
}

TEST_CASE("gen-problems writes deterministic validated sets") {
  const fs::path a = fs::temp_directory_path() / "planopt_set_a.popset";
  const fs::path b = fs::temp_directory_path() / "planopt_set_b.popset";

  const CmdResult ra =
      run_cli("gen-problems --domain RandomWalk2D[5] --split test --seed 9 --count 40 --out " +
              a.string());
  REQUIRE(ra.exit_code == 0);
  CHECK(token(ra.out, "instances") == "40");

  const CmdResult rb =
      run_cli("gen-problems --domain RandomWalk2D[5] --split test --seed 9 --count 40 --out " +
              b.string());
  REQUIRE(rb.exit_code == 0);
  CHECK(token(ra.out, "crc32") == token(rb.out, "crc32"));
  CHECK(slurp(a) == slurp(b));  // byte-identical artifacts

  const ProblemSet set = load_problem_set(a);
  CHECK(set.instances.size() == 40);
  CHECK(set.split == Split::test);
  CHECK(set.seed == 9);

  CHECK(run_cli("gen-problems --domain Sokoban[5] --out /tmp/x.popset").exit_code == 2);
  CHECK(run_cli("gen-problems --domain Maze2D[4] --out /tmp/x.popset").exit_code == 2);
  CHECK(run_cli("gen-problems --domain RandomWalk2D[5] --split weird --out /tmp/x.popset")
            .exit_code == 2);

  fs::remove(a);
  fs::remove(b);
}

TEST_CASE("train gc consumes the budget and writes the run directory") {
  const fs::path dir = temp_dir("planopt_cli_gc");
  const std::string common =
      "train --domain RandomWalk2D[5] --budget 300 --eval-interval 100 --eval-samples 20 "
      "--workers 1 --seed 4 --out ";
  const CmdResult r = run_cli(common + dir.string());
  REQUIRE(r.exit_code == 0);
  CHECK(token(r.out, "planner_calls") == "300");
  CHECK(token(r.out, "skipped_steps") == "0");

  // header + rows at 0, 100, 200, 300
  CHECK(csv_line_count(dir / "metrics.csv") == 5);
  CHECK(fs::exists(dir / "manifest.txt"));
  CHECK(fs::exists(dir / "checkpoint_000000300.popnn"));
  const LoadedCheckpoint ckpt = load_checkpoint(dir / "checkpoint_000000300.popnn");
  CHECK(ckpt.kind == CheckpointKind::generator);
  CHECK(ckpt.domain_spec == "RandomWalk2D[5]");

  // Same seed, same budget: the reported objective is bit-identical.
  const fs::path dir2 = temp_dir("planopt_cli_gc2");
  const CmdResult r2 = run_cli(common + dir2.string());
  REQUIRE(r2.exit_code == 0);
  CHECK(token(r.out, "final_report") == token(r2.out, "final_report"));

  fs::remove_all(dir);
  fs::remove_all(dir2);
}

TEST_CASE("train cem consumes the budget and stores a fixed-assignment checkpoint") {
  const fs::path dir = temp_dir("planopt_cli_cem");
  const CmdResult r = run_cli(
      "train --domain RandomWalk2D[5] --algo cem --budget 1600 --eval-interval 800 "
      "--eval-samples 20 --workers 1 --out " +
      dir.string());
  REQUIRE(r.exit_code == 0);
  CHECK(token(r.out, "planner_calls") == "1600");

  const LoadedCheckpoint ckpt = load_checkpoint(dir / "checkpoint_final.popnn");
  CHECK(ckpt.kind == CheckpointKind::fixed_assignment);
  fs::remove_all(dir);
}

TEST_CASE("train uniform reports the no-learning reference") {
  const fs::path dir = temp_dir("planopt_cli_uniform");
  const CmdResult r = run_cli(
      "train --domain RandomWalk2D[5] --algo uniform --eval-samples 400 --workers 1 --out " +
      dir.string());
  REQUIRE(r.exit_code == 0);
  const double mean = std::stod(token(r.out, "final_report"));
  // Uniform simplex draws on 5x5 boards land around -0.65; anything outside
  // this generous band indicates a broken sampler or objective.
  CHECK(mean < -0.5);
  CHECK(mean > -0.8);
  const LoadedCheckpoint ckpt = load_checkpoint(dir / "checkpoint_final.popnn");
  CHECK(ckpt.kind == CheckpointKind::uniform_sampler);
  fs::remove_all(dir);

  CHECK(run_cli("train --domain RandomWalk2D[5] --algo sgd").exit_code == 2);
}

TEST_CASE("evaluate matches the exact chain oracle for a fixed assignment") {
  const DomainDefinition domain = make_domain("RandomWalk2D[5]");
  const fs::path set_path = fs::temp_directory_path() / "planopt_eval_set.popset";
  const fs::path ckpt_path = fs::temp_directory_path() / "planopt_eval_fixed.popnn";

  const ProblemSet set = create_problem_set(domain, Split::test, 0);
  save_problem_set(set, set_path);
  const Assignment quarter{{{0.25, 0.25, 0.25, 0.25}}};
  save_fixed_checkpoint(ckpt_path, "RandomWalk2D[5]", domain.space, quarter);

  // Exact expected objective, averaged over the same instances.
  double oracle = 0.0;
  for (const GridBoard& b : set.instances) {
    oracle += -oracles::expected_truncated_steps(b, quarter.values[0]) / 100.0;
  }
  oracle /= static_cast<double>(set.instances.size());

  const CmdResult r =
      run_cli("evaluate " + ckpt_path.string() + " " + set_path.string() + " --workers 2");
  REQUIRE(r.exit_code == 0);
  CHECK(token(r.out, "n") == "1000");
  const double mean = std::stod(token(r.out, "mean"));
  const double stddev = std::stod(token(r.out, "std"));
  // One walk per instance: the sample mean sits within 3 standard errors of
  // the exact per-instance expectation average.
  CHECK(std::abs(mean - oracle) <= 3.0 * stddev / std::sqrt(1000.0) + 1e-3);

  // Determinism: identical invocation, identical output bytes.
  const CmdResult r2 =
      run_cli("evaluate " + ckpt_path.string() + " " + set_path.string() + " --workers 1");
  CHECK(r.out == r2.out);

  // Per-sample CSV export.
  const fs::path csv = fs::temp_directory_path() / "planopt_eval_out.csv";
  const CmdResult r3 = run_cli("evaluate " + ckpt_path.string() + " " + set_path.string() +
                               " --samples 50 --out " + csv.string());
  REQUIRE(r3.exit_code == 0);
  CHECK(csv_line_count(csv) == 51);
  std::ifstream in(csv);
  std::string header;
  std::getline(in, header);
  CHECK(header == "sample,instance,objective");

  fs::remove(csv);
  fs::remove(set_path);
  fs::remove(ckpt_path);
}

TEST_CASE("evaluate rejects mismatched checkpoint and problem set") {
  const DomainDefinition walk = make_domain("RandomWalk2D[5]");
  const DomainDefinition maze = make_domain("Maze2D[5]");
  const fs::path set_path = fs::temp_directory_path() / "planopt_mismatch_set.popset";
  const fs::path ckpt_path = fs::temp_directory_path() / "planopt_mismatch.popnn";

  save_problem_set(create_problem_set(walk, Split::test, 0, 5), set_path);
  save_uniform_checkpoint(ckpt_path, "Maze2D[5]", maze.space);

  const CmdResult r = run_cli("evaluate " + ckpt_path.string() + " " + set_path.string());
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("Maze2D[5]") != std::string::npos);

  CHECK(run_cli("evaluate /nonexistent.popnn " + set_path.string()).exit_code == 2);

  fs::remove(set_path);
  fs::remove(ckpt_path);
}

TEST_CASE("oracle-check passes at reduced scale" * doctest::timeout(600)) {
  const CmdResult r =
      run_cli("oracle-check --mazes 40 --walk-pairs 4 --walk-samples 20000 --workers 2");
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("oracle checks passed") != std::string::npos);
  CHECK(r.out.find("[FAIL]") == std::string::npos);
  CHECK(r.out.find("[PASS]") != std::string::npos);
}

TEST_CASE("oracle-check detects an injected planner bug" * doctest::timeout(600)) {
  // The inverted tie-break reorders pops inside equal-(f, g) groups, which the
  // blind-search-vs-reference comparison catches on tie-heavy mazes.
  const CmdResult r = run_cli(
      "oracle-check --mazes 40 --walk-pairs 2 --walk-samples 5000 --inject-tie-break-bug "
      "--workers 2");
  CHECK(r.exit_code == 3);
  CHECK(r.out.find("[FAIL] search-equivalence") != std::string::npos);
  CHECK(r.out.find("oracle checks FAILED") != std::string::npos);
}
