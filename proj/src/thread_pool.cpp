#include "planopt/thread_pool.hpp"

#include <algorithm>

namespace planopt {

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  const int hw = static_cast<int>(std::thread::hardware_concurrency());
  return std::clamp(hw, 1, 16);
}

ThreadPool::ThreadPool(int workers) : worker_count_(resolve_workers(workers)) {
  if (worker_count_ < 2) return;
  threads_.reserve(static_cast<size_t>(worker_count_));
  for (int i = 0; i < worker_count_; ++i) {
    threads_.emplace_back([this] { worker_loop(); });
  }
}

ThreadPool::~ThreadPool() {
  {
    std::unique_lock lock(mu_);
    stop_ = true;
  }
  cv_work_.notify_all();
  for (std::thread& t : threads_) t.join();
}

void ThreadPool::parallel_for(int64_t n, const std::function<void(int64_t)>& fn) {
  if (n <= 0) return;
  if (threads_.empty()) {
    for (int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::unique_lock lock(mu_);
  job_ = &fn;
  job_n_ = n;
  retired_ = 0;
  error_ = nullptr;
  next_.store(0, std::memory_order_relaxed);
  ++generation_;
  cv_work_.notify_all();
  cv_done_.wait(lock, [&] { return retired_ == static_cast<int>(threads_.size()); });
  job_ = nullptr;
  if (error_) std::rethrow_exception(error_);
}

void ThreadPool::worker_loop() {
  uint64_t seen = 0;
  std::unique_lock lock(mu_);
  for (;;) {
    cv_work_.wait(lock, [&] { return stop_ || generation_ != seen; });
    if (stop_) return;
    seen = generation_;
    const auto* fn = job_;
    const int64_t n = job_n_;
    lock.unlock();

    for (;;) {
      const int64_t i = next_.fetch_add(1, std::memory_order_relaxed);
      if (i >= n) break;
      try {
        (*fn)(i);
      } catch (...) {
        std::unique_lock err_lock(mu_);
        if (!error_) error_ = std::current_exception();
        next_.store(n, std::memory_order_relaxed);  // abandon remaining work
      }
    }

    lock.lock();
    if (++retired_ == static_cast<int>(threads_.size())) cv_done_.notify_all();
  }
}

}  // namespace planopt
