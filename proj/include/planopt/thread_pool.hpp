#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace planopt {

/// Picks a worker count: a positive request is taken as-is, zero means
/// hardware concurrency capped at 16 (and at least 1).
int resolve_workers(int requested);

/// Persistent worker pool exposing a blocking index-parallel loop.  Work is
/// handed out one index at a time through an atomic counter, so the mapping
/// from index to worker is unspecified — callers that need reproducible
/// results must make each index self-contained (e.g. derive per-index RNG
/// seeds) rather than rely on scheduling order.
class ThreadPool {
 public:
  /// `workers` as accepted by resolve_workers; a resolved count of 1 runs
  /// jobs inline on the calling thread without spawning anything.
  explicit ThreadPool(int workers = 0);
  ~ThreadPool();

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  int workers() const { return worker_count_; }

  /// Runs fn(i) for every i in [0, n) and blocks until all calls finished.
  /// The first exception thrown by any fn(i) is rethrown here; remaining
  /// unstarted indices are abandoned in that case.
  void parallel_for(int64_t n, const std::function<void(int64_t)>& fn);

 private:
  void worker_loop();

  int worker_count_ = 1;
  std::vector<std::thread> threads_;

  std::mutex mu_;
  std::condition_variable cv_work_;
  std::condition_variable cv_done_;
  const std::function<void(int64_t)>* job_ = nullptr;  // guarded by mu_
  int64_t job_n_ = 0;                                  // guarded by mu_
  uint64_t generation_ = 0;                            // guarded by mu_
  int retired_ = 0;                                    // guarded by mu_
  std::exception_ptr error_;                           // guarded by mu_
  bool stop_ = false;                                  // guarded by mu_
  std::atomic<int64_t> next_{0};
};

}  // namespace planopt
