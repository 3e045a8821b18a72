#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "planopt/domain.hpp"
#include "planopt/generator.hpp"
#include "planopt/nn.hpp"
#include "planopt/thread_pool.hpp"

namespace planopt {

/// Shared knob set for both trainers.  Defaults follow the recorded design
/// decisions; everything lands in the run manifest for reproducibility.
struct TrainConfig {
  int64_t budget = 50'000;       // total planner calls consumed by training
  int64_t eval_interval = 1'000;  // steps between evaluation rows / checkpoints
  int eval_samples = 1'000;      // planner calls per evaluation round
  double lr_generator = 1e-3;
  double lr_critic = 1e-3;
  int batch_size = 64;
  int buffer_capacity = 10'000;
  double entropy_coeff = 1e-3;
  // Planner calls spent fitting the critic on initial-policy data before the
  // first generator update.  A cold critic's slope is fit noise; following it
  // drives the generator into projection corners it cannot easily leave.
  int64_t generator_warmup = 2'000;
  int population = 16;        // population-based trainer only
  double elite_frac = 0.25;   // fraction of the population kept for refits
  int scoring_instances = 50;  // planner calls spent scoring one candidate
  int workers = 0;            // 0 = auto (logical cores, capped at 16)
  uint64_t seed = 0;
  std::filesystem::path out_dir;  // empty: keep results in memory only

  /// Test seam: when set, generator updates ask this for the predicted-mean
  /// column instead of the critic network (same graph, same batch layout).
  /// Receives the batch encodings (BxE), the reparameterized raw draws (BxF),
  /// and the projected features (BxF).
  std::function<ad::NodeId(ad::Graph&, ad::NodeId encodings, ad::NodeId raw,
                           ad::NodeId features)>
      surrogate_mu;
};

/// Throws ConfigError on out-of-range settings (budget < eval_interval,
/// non-positive rates, elite fraction outside (0, 1], ...).
void validate_config(const TrainConfig& config);

/// One line of the metrics CSV.  All objective statistics are means over the
/// window since the previous row; skipped_steps is cumulative.
struct MetricsRow {
  int64_t planner_calls = 0;
  double wall_seconds = 0.0;
  double train_objective_mean = 0.0;
  double eval_objective_mean = 0.0;
  double eval_objective_std = 0.0;
  double critic_loss = 0.0;
  double generator_loss = 0.0;
  int64_t skipped_steps = 0;
};

/// Renders rows with full round-trip precision; NaN cells print as "nan".
std::string metrics_to_csv(const std::vector<MetricsRow>& rows);
void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRow>& rows);

/// key=value run description, one pair per line.
void write_manifest(const std::filesystem::path& path, const DomainDefinition& domain,
                    const std::string& algo, const TrainConfig& config);

struct EvalResult {
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation across samples
};

/// Empirical objective of a generator over a problem set: n planner calls,
/// one generator sample each, cycling through instances in order.  Results
/// are a pure function of (generator, set, n, seed) — worker count only
/// affects timing.
EvalResult evaluate(const DomainDefinition& domain, const ParamGenerator& generator,
                    const ProblemSet& set, int n, uint64_t seed, ThreadPool& pool);

/// Per-call record of an evaluation round, for CSV export.
std::vector<double> evaluate_samples(const DomainDefinition& domain,
                                     const ParamGenerator& generator, const ProblemSet& set,
                                     int n, uint64_t seed, ThreadPool& pool);

/// Fixed-capacity replay of (encoding, raw draw, objective) triples.
class ReplayBuffer {
 public:
  struct Entry {
    std::vector<double> encoding;
    std::vector<double> raw;
    double objective = 0.0;
  };

  explicit ReplayBuffer(int capacity);

  void push(Entry e);
  const Entry& sample(RngState& rng) const;
  size_t size() const { return entries_.size(); }

 private:
  size_t capacity_;
  size_t next_ = 0;  // overwrite cursor once full
  std::vector<Entry> entries_;
};

/// Generator/critic training loop exposed step-by-step so tests can drive it
/// against synthetic domains or a surrogate critic.  Each step costs exactly
/// one planner call: probe, critic update, generator update.
class GcTrainer {
 public:
  GcTrainer(const DomainDefinition& domain, const ProblemSet& train_set, TrainConfig config);

  /// Returns the objective observed by this step's planner call.
  double step();

  int64_t planner_calls() const { return planner_calls_; }
  int64_t skipped_steps() const { return skipped_; }
  double last_critic_loss() const { return last_critic_loss_; }
  double last_generator_loss() const { return last_generator_loss_; }
  size_t buffer_size() const { return buffer_.size(); }
  PolicyGenerator& policy() { return policy_; }
  Critic& critic() { return critic_; }

 private:
  void critic_update(const std::vector<const ReplayBuffer::Entry*>& batch);
  void generator_update(const std::vector<const ReplayBuffer::Entry*>& batch);

  const DomainDefinition& domain_;
  const ProblemSet& train_set_;
  TrainConfig config_;
  RngState rng_;
  PolicyGenerator policy_;
  Critic critic_;
  ReplayBuffer buffer_;
  nn::Adam opt_generator_;
  nn::Adam opt_critic_;
  int64_t planner_calls_ = 0;
  int64_t skipped_ = 0;
  double last_critic_loss_ = 0.0;
  double last_generator_loss_ = 0.0;
};

struct GcTrainResult {
  double final_report = 0.0;  // mean of the last (up to) 5 checkpoint evaluations
  std::vector<MetricsRow> metrics;
  int64_t planner_calls = 0;
  int64_t skipped_steps = 0;
  std::unique_ptr<PolicyGenerator> policy;
};

/// Full conditional-generator run: trains for exactly config.budget planner
/// calls, evaluating (and checkpointing, when out_dir is set) every
/// eval_interval steps on the held-out test set.
GcTrainResult gc_train(const DomainDefinition& domain, const TrainConfig& config);

struct CemTrainResult {
  double final_report = 0.0;  // last test evaluation of the projected mean
  Assignment best;            // projected population mean
  std::vector<MetricsRow> metrics;
  int64_t planner_calls = 0;
};

/// Cross-entropy-method baseline: an unconditional diagonal Gaussian over raw
/// parameters, refit each iteration to the elite quarter of the population.
/// Every candidate is scored with scoring_instances planner calls on freshly
/// sampled train instances; a trailing partial iteration spends any budget
/// remainder without contributing to refits.
CemTrainResult cem_train(const DomainDefinition& domain, const TrainConfig& config);

}  // namespace planopt
