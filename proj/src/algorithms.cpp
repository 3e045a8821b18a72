#include "planopt/algorithms.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include "planopt/checkpoint.hpp"

#ifndef PLANOPT_GIT_DESCRIBE
#define PLANOPT_GIT_DESCRIBE "unknown"
#endif

namespace planopt {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double mean_of(std::span<const double> xs) {
  if (xs.empty()) return kNan;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double population_std(std::span<const double> xs, double mean) {
  if (xs.empty()) return kNan;
  double acc = 0.0;
  for (double x : xs) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(xs.size()));
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::filesystem::path checkpoint_path(const std::filesystem::path& dir, int64_t calls) {
  char name[64];
  std::snprintf(name, sizeof name, "checkpoint_%09lld.popnn", static_cast<long long>(calls));
  return dir / name;
}

PolicyGenerator make_policy(const DomainDefinition& domain, uint64_t seed) {
  RngState rng(derive_seed(seed, "policy-init"));
  return PolicyGenerator(domain.space, domain.instance_dim, rng);
}

Critic make_critic(const DomainDefinition& domain, uint64_t seed) {
  RngState rng(derive_seed(seed, "critic-init"));
  return Critic(domain.instance_dim, domain.space.flat_dim(), rng);
}

std::vector<ad::Param*> policy_params(PolicyGenerator& policy) {
  std::vector<ad::Param*> params = policy.encoder().params();
  params.push_back(&policy.log_sigma());
  return params;
}

/// Tracks per-window aggregates between metrics rows.
struct Window {
  double objective_sum = 0.0;
  double critic_loss_sum = 0.0;
  double generator_loss_sum = 0.0;
  int64_t count = 0;

  void add(double objective, double critic_loss, double generator_loss) {
    objective_sum += objective;
    critic_loss_sum += critic_loss;
    generator_loss_sum += generator_loss;
    ++count;
  }
  double objective_mean() const { return count ? objective_sum / count : kNan; }
  double critic_mean() const { return count ? critic_loss_sum / count : kNan; }
  double generator_mean() const { return count ? generator_loss_sum / count : kNan; }
  void reset() { *this = Window{}; }
};

}  // namespace

void validate_config(const TrainConfig& config) {
  if (config.budget < 1) throw ConfigError("budget must be >= 1");
  if (config.eval_interval < 1) throw ConfigError("eval interval must be >= 1");
  if (config.budget < config.eval_interval) {
    throw ConfigError("budget must be >= eval interval");
  }
  if (config.eval_samples < 1) throw ConfigError("eval samples must be >= 1");
  if (config.lr_generator <= 0 || config.lr_critic <= 0) {
    throw ConfigError("learning rates must be positive");
  }
  if (config.batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (config.buffer_capacity < 1) throw ConfigError("buffer capacity must be >= 1");
  if (config.entropy_coeff < 0) throw ConfigError("entropy coefficient must be >= 0");
  if (config.population < 2) throw ConfigError("population must be >= 2");
  if (config.elite_frac <= 0 || config.elite_frac > 1) {
    throw ConfigError("elite fraction must be in (0, 1]");
  }
  if (config.scoring_instances < 1) throw ConfigError("scoring instances must be >= 1");
  if (config.workers < 0) throw ConfigError("workers must be >= 0");
}

std::string metrics_to_csv(const std::vector<MetricsRow>& rows) {
  std::string out =
      "planner_calls,wall_seconds,train_objective_mean,eval_objective_mean,"
      "eval_objective_std,critic_loss,generator_loss,skipped_steps\n";
  for (const MetricsRow& r : rows) {
    out += std::to_string(r.planner_calls);
    out += ',';
    out += format_double(r.wall_seconds);
    out += ',';
    out += format_double(r.train_objective_mean);
    out += ',';
    out += format_double(r.eval_objective_mean);
    out += ',';
    out += format_double(r.eval_objective_std);
    out += ',';
    out += format_double(r.critic_loss);
    out += ',';
    out += format_double(r.generator_loss);
    out += ',';
    out += std::to_string(r.skipped_steps);
    out += '\n';
  }
  return out;
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRow>& rows) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << metrics_to_csv(rows);
}

void write_manifest(const std::filesystem::path& path, const DomainDefinition& domain,
                    const std::string& algo, const TrainConfig& config) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << "domain=" << domain.spec_string() << '\n';
  f << "algo=" << algo << '\n';
  f << "budget=" << config.budget << '\n';
  f << "seed=" << config.seed << '\n';
  f << "eval_interval=" << config.eval_interval << '\n';
  f << "eval_samples=" << config.eval_samples << '\n';
  f << "lr_generator=" << format_double(config.lr_generator) << '\n';
  f << "lr_critic=" << format_double(config.lr_critic) << '\n';
  f << "batch_size=" << config.batch_size << '\n';
  f << "buffer_capacity=" << config.buffer_capacity << '\n';
  f << "entropy_coeff=" << format_double(config.entropy_coeff) << '\n';
  f << "generator_warmup=" << config.generator_warmup << '\n';
  f << "population=" << config.population << '\n';
  f << "elite_frac=" << format_double(config.elite_frac) << '\n';
  f << "scoring_instances=" << config.scoring_instances << '\n';
  f << "workers=" << config.workers << '\n';
  f << "git_describe=" << PLANOPT_GIT_DESCRIBE << '\n';
}

std::vector<double> evaluate_samples(const DomainDefinition& domain,
                                     const ParamGenerator& generator, const ProblemSet& set,
                                     int n, uint64_t seed, ThreadPool& pool) {
  if (n < 1) throw ConfigError("evaluation needs n >= 1");
  if (set.instances.empty()) throw ConfigError("evaluation needs a non-empty problem set");
  std::vector<double> objectives(static_cast<size_t>(n));
  pool.parallel_for(n, [&](int64_t i) {
    const GridBoard& instance = set.instances[static_cast<size_t>(i) % set.instances.size()];
    const std::vector<double> encoding = encode_instance(domain, instance);
    RngState rng(derive_seed(seed, static_cast<uint64_t>(i)));
    const Assignment x = generator.sample(encoding, rng);
    objectives[static_cast<size_t>(i)] = planner_call(domain, instance, x, rng).objective;
  });
  return objectives;
}

EvalResult evaluate(const DomainDefinition& domain, const ParamGenerator& generator,
                    const ProblemSet& set, int n, uint64_t seed, ThreadPool& pool) {
  const std::vector<double> objectives = evaluate_samples(domain, generator, set, n, seed, pool);
  EvalResult r;
  r.mean = mean_of(objectives);
  r.stddev = population_std(objectives, r.mean);
  return r;
}

ReplayBuffer::ReplayBuffer(int capacity) : capacity_(static_cast<size_t>(capacity)) {
  if (capacity < 1) throw ConfigError("replay buffer capacity must be >= 1");
  entries_.reserve(std::min<size_t>(capacity_, 4096));
}

void ReplayBuffer::push(Entry e) {
  if (entries_.size() < capacity_) {
    entries_.push_back(std::move(e));
  } else {
    entries_[next_] = std::move(e);
    next_ = (next_ + 1) % capacity_;
  }
}

const ReplayBuffer::Entry& ReplayBuffer::sample(RngState& rng) const {
  return entries_[rng.uniform_below(entries_.size())];
}

GcTrainer::GcTrainer(const DomainDefinition& domain, const ProblemSet& train_set,
                     TrainConfig config)
    : domain_(domain),
      train_set_(train_set),
      config_(std::move(config)),
      rng_(derive_seed(config_.seed, "gc-train")),
      policy_(make_policy(domain, config_.seed)),
      critic_(make_critic(domain, config_.seed)),
      buffer_(config_.buffer_capacity),
      opt_generator_(policy_params(policy_), config_.lr_generator),
      opt_critic_(critic_.net().params(), config_.lr_critic) {
  if (train_set_.instances.empty()) throw ConfigError("training needs a non-empty problem set");
}

double GcTrainer::step() {
  // Probe the planner: one instance, one generator sample, one call.
  const size_t idx = rng_.uniform_below(train_set_.instances.size());
  const GridBoard& instance = train_set_.instances[idx];
  std::vector<double> encoding = encode_instance(domain_, instance);
  std::vector<double> raw = policy_.sample_raw(encoding, rng_);
  const Assignment x = project(policy_.space(), raw);
  const double y = planner_call(domain_, instance, x, rng_).objective;
  ++planner_calls_;
  buffer_.push({std::move(encoding), std::move(raw), y});

  // Warm-up: collect a full batch of real outcomes before any network update,
  // so the first critic fit is not an extrapolation from a handful of points.
  if (buffer_.size() < static_cast<size_t>(config_.batch_size)) return y;

  std::vector<const ReplayBuffer::Entry*> batch(static_cast<size_t>(config_.batch_size));
  for (auto& slot : batch) slot = &buffer_.sample(rng_);

  if (!config_.surrogate_mu) critic_update(batch);
  if (planner_calls_ > config_.generator_warmup || config_.surrogate_mu) {
    generator_update(batch);
  }
  return y;
}

void GcTrainer::critic_update(const std::vector<const ReplayBuffer::Entry*>& batch) {
  const int B = static_cast<int>(batch.size());
  const int E = domain_.instance_dim;
  const int F = domain_.space.flat_dim();
  ad::Tensor enc(B, E), raw(B, F), y(B, 1);
  for (int r = 0; r < B; ++r) {
    std::copy(batch[r]->encoding.begin(), batch[r]->encoding.end(), &enc.at(r, 0));
    std::copy(batch[r]->raw.begin(), batch[r]->raw.end(), &raw.at(r, 0));
    y.at(r, 0) = batch[r]->objective;
  }

  ad::Graph g;
  const ad::NodeId enc_n = g.input(std::move(enc));
  const ad::NodeId raw_n = g.input(std::move(raw));
  const ad::NodeId features = project_features(g, domain_.space, raw_n);
  const Critic::Heads heads = critic_.forward(g, enc_n, features, /*frozen=*/false);
  const ad::NodeId y_n = g.input(std::move(y));
  const ad::NodeId loss = g.reduce_mean(g.gaussian_nll(y_n, heads.mu, heads.log_sigma));

  last_critic_loss_ = g.value(loss).v[0];
  if (!std::isfinite(last_critic_loss_)) {
    ++skipped_;
    return;
  }
  g.backward(loss);
  if (!opt_critic_.step()) ++skipped_;
}

void GcTrainer::generator_update(const std::vector<const ReplayBuffer::Entry*>& batch) {
  const int B = static_cast<int>(batch.size());
  const int E = domain_.instance_dim;
  const int F = domain_.space.flat_dim();
  ad::Tensor enc(B, E), eps(B, F);
  for (int r = 0; r < B; ++r) {
    std::copy(batch[r]->encoding.begin(), batch[r]->encoding.end(), &enc.at(r, 0));
  }
  for (double& e : eps.v) e = rng_.normal();

  ad::Graph g;
  const ad::NodeId enc_n = g.input(std::move(enc));
  const ad::NodeId mu_raw = policy_.mean_graph(g, enc_n);
  const ad::NodeId log_sigma = g.clamp(g.param(policy_.log_sigma()), kLogSigmaLo, kLogSigmaHi);
  const ad::NodeId raw = g.gaussian_reparam(mu_raw, log_sigma, g.input(std::move(eps)));
  const ad::NodeId features = project_features(g, domain_.space, raw);
  const ad::NodeId predicted = config_.surrogate_mu
                                   ? config_.surrogate_mu(g, enc_n, raw, features)
                                   : critic_.forward(g, enc_n, features, /*frozen=*/true).mu;
  // Maximize predicted objective and entropy: loss = −mean(μ) − coeff·Σ log σ.
  const ad::NodeId loss = g.add(g.scale(g.reduce_mean(predicted), -1.0),
                                g.scale(g.reduce_sum(log_sigma), -config_.entropy_coeff));

  last_generator_loss_ = g.value(loss).v[0];
  if (!std::isfinite(last_generator_loss_)) {
    ++skipped_;
    return;
  }
  g.backward(loss);
  if (!opt_generator_.step()) ++skipped_;
  // Keep the stored log-sigma inside the range the clamp enforces downstream.
  // Momentum can carry the parameter past the bound, where the clamp's zero
  // gradient would freeze it (and exploration) permanently.
  for (double& v : policy_.log_sigma().value.v) {
    v = std::clamp(v, kLogSigmaLo, kLogSigmaHi);
  }
}

GcTrainResult gc_train(const DomainDefinition& domain, const TrainConfig& config) {
  validate_config(config);
  const bool persist = !config.out_dir.empty();
  if (persist) std::filesystem::create_directories(config.out_dir);

  ThreadPool pool(config.workers);
  const ProblemSet train_set = create_problem_set(domain, Split::train, config.seed);
  const ProblemSet test_set = create_problem_set(domain, Split::test, config.seed);
  const uint64_t eval_seed = derive_seed(config.seed, "eval");

  GcTrainer trainer(domain, train_set, config);
  const auto t0 = std::chrono::steady_clock::now();

  GcTrainResult result;
  std::deque<double> last_evals;
  Window window;

  const auto emit_row = [&](int64_t calls) {
    const EvalResult ev =
        evaluate(domain, trainer.policy(), test_set, config.eval_samples, eval_seed, pool);
    MetricsRow row;
    row.planner_calls = calls;
    row.wall_seconds = seconds_since(t0);
    row.train_objective_mean = window.objective_mean();
    row.eval_objective_mean = ev.mean;
    row.eval_objective_std = ev.stddev;
    row.critic_loss = window.critic_mean();
    row.generator_loss = window.generator_mean();
    row.skipped_steps = trainer.skipped_steps();
    result.metrics.push_back(row);
    window.reset();
    last_evals.push_back(ev.mean);
    if (last_evals.size() > 5) last_evals.pop_front();
    if (persist) {
      save_policy_checkpoint(checkpoint_path(config.out_dir, calls), domain.spec_string(),
                             trainer.policy());
    }
  };

  emit_row(0);
  for (int64_t step = 1; step <= config.budget; ++step) {
    const double y = trainer.step();
    window.add(y, trainer.last_critic_loss(), trainer.last_generator_loss());
    if (step % config.eval_interval == 0 || step == config.budget) emit_row(step);
  }

  result.planner_calls = trainer.planner_calls();
  result.skipped_steps = trainer.skipped_steps();
  result.final_report =
      std::accumulate(last_evals.begin(), last_evals.end(), 0.0) /
      static_cast<double>(last_evals.size());
  result.policy = std::make_unique<PolicyGenerator>(std::move(trainer.policy()));

  if (persist) {
    write_metrics_csv(config.out_dir / "metrics.csv", result.metrics);
    write_manifest(config.out_dir / "manifest.txt", domain, "gc", config);
  }
  return result;
}

CemTrainResult cem_train(const DomainDefinition& domain, const TrainConfig& config) {
  validate_config(config);
  const int64_t iteration_cost =
      static_cast<int64_t>(config.population) * config.scoring_instances;
  if (config.budget < iteration_cost) {
    throw ConfigError("budget must cover at least one full population iteration");
  }
  const bool persist = !config.out_dir.empty();
  if (persist) std::filesystem::create_directories(config.out_dir);

  ThreadPool pool(config.workers);
  const ProblemSet test_set = create_problem_set(domain, Split::test, config.seed);
  const uint64_t eval_seed = derive_seed(config.seed, "eval");

  const int flat = domain.space.flat_dim();
  std::vector<double> mean(static_cast<size_t>(flat), 0.0);
  std::vector<double> sigma(static_cast<size_t>(flat), 1.0);
  RngState rng(derive_seed(config.seed, "cem-train"));
  const int elite_count = std::max(
      1, static_cast<int>(std::llround(config.population * config.elite_frac)));

  const auto t0 = std::chrono::steady_clock::now();
  CemTrainResult result;
  Window window;
  int64_t calls = 0;
  int64_t next_row_at = 0;

  const auto emit_row = [&] {
    const FixedGenerator current(domain.space, project(domain.space, mean));
    const EvalResult ev = evaluate(domain, current, test_set, config.eval_samples, eval_seed, pool);
    MetricsRow row;
    row.planner_calls = calls;
    row.wall_seconds = seconds_since(t0);
    row.train_objective_mean = window.objective_mean();
    row.eval_objective_mean = ev.mean;
    row.eval_objective_std = ev.stddev;
    row.critic_loss = kNan;
    row.generator_loss = kNan;
    row.skipped_steps = 0;
    result.metrics.push_back(row);
    window.reset();
    result.final_report = ev.mean;
    while (next_row_at <= calls) next_row_at += config.eval_interval;
  };

  emit_row();  // calls = 0

  uint64_t iteration = 0;
  while (calls < config.budget) {
    const int64_t remaining = config.budget - calls;
    const int candidates = static_cast<int>(
        std::min<int64_t>(config.population, remaining / config.scoring_instances));
    const uint64_t iter_seed = derive_seed(derive_seed(config.seed, "cem-iter"), iteration);
    ++iteration;

    if (candidates == 0) {
      // Budget tail shorter than one candidate: spend it on a partial score
      // that cannot influence the fit, keeping the call count exact.
      std::vector<double> raw(mean);
      for (int d = 0; d < flat; ++d) raw[d] += sigma[d] * rng.normal();
      const Assignment x = project(domain.space, raw);
      pool.parallel_for(remaining, [&](int64_t k) {
        RngState r(derive_seed(iter_seed, static_cast<uint64_t>(k)));
        const GridBoard instance = domain.sample_instance(r);
        (void)planner_call(domain, instance, x, r);
      });
      calls += remaining;
      break;
    }

    // Sample candidates serially so the draw sequence is worker-independent.
    std::vector<std::vector<double>> raws(static_cast<size_t>(candidates));
    std::vector<Assignment> xs(static_cast<size_t>(candidates));
    for (int j = 0; j < candidates; ++j) {
      raws[j] = mean;
      for (int d = 0; d < flat; ++d) raws[j][d] += sigma[d] * rng.normal();
      xs[j] = project(domain.space, raws[j]);
    }

    const int64_t tasks = static_cast<int64_t>(candidates) * config.scoring_instances;
    std::vector<double> task_objective(static_cast<size_t>(tasks));
    pool.parallel_for(tasks, [&](int64_t t) {
      const int j = static_cast<int>(t / config.scoring_instances);
      RngState r(derive_seed(iter_seed, static_cast<uint64_t>(t)));
      const GridBoard instance = domain.sample_instance(r);
      task_objective[static_cast<size_t>(t)] = planner_call(domain, instance, xs[j], r).objective;
    });
    calls += tasks;

    std::vector<double> scores(static_cast<size_t>(candidates), 0.0);
    for (int64_t t = 0; t < tasks; ++t) {
      scores[static_cast<size_t>(t / config.scoring_instances)] += task_objective[t];
    }
    for (double& s : scores) s /= config.scoring_instances;
    for (double s : scores) window.add(s, kNan, kNan);

    if (candidates == config.population) {
      // Refit the sampling distribution to the elite candidates.
      std::vector<int> order(static_cast<size_t>(candidates));
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](int a, int b) { return scores[a] > scores[b]; });
      const int kept = std::min(elite_count, candidates);
      for (int d = 0; d < flat; ++d) {
        double m = 0.0;
        for (int e = 0; e < kept; ++e) m += raws[order[e]][d];
        m /= kept;
        double var = 0.0;
        for (int e = 0; e < kept; ++e) {
          const double diff = raws[order[e]][d] - m;
          var += diff * diff;
        }
        mean[d] = m;
        sigma[d] = std::max(std::sqrt(var / kept), 1e-3);
      }
    }

    if (calls >= next_row_at || calls >= config.budget) emit_row();
  }
  if (result.metrics.back().planner_calls != calls) emit_row();

  result.planner_calls = calls;
  result.best = project(domain.space, mean);

  if (persist) {
    save_fixed_checkpoint(config.out_dir / "checkpoint_final.popnn", domain.spec_string(),
                          domain.space, result.best);
    write_metrics_csv(config.out_dir / "metrics.csv", result.metrics);
    write_manifest(config.out_dir / "manifest.txt", domain, "cem", config);
  }
  return result;
}

}  // namespace planopt
