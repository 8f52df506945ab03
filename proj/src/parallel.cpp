#include "gibbsmf/parallel.hpp"

#include <algorithm>

namespace gibbsmf {

ThreadPool::ThreadPool(std::size_t threads) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  workers_.reserve(threads - 1);
  for (std::size_t t = 1; t < threads; ++t) workers_.emplace_back([this] { worker_loop(); });
}

ThreadPool::~ThreadPool() {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    stop_ = true;
  }
  wake_.notify_all();
  for (auto& w : workers_) w.join();
}

void ThreadPool::run_blocks() {
  for (;;) {
    const std::size_t begin = next_.fetch_add(grain_);
    if (begin >= n_) return;
    const std::size_t end = std::min(n_, begin + grain_);
    for (std::size_t i = begin; i < end; ++i) {
      try {
        (*fn_)(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex_);
        if (!error_ || i < error_index_) {
          error_ = std::current_exception();
          error_index_ = i;
        }
      }
    }
  }
}

void ThreadPool::worker_loop() {
  std::size_t seen = 0;
  for (;;) {
    {
      std::unique_lock<std::mutex> lock(mutex_);
      wake_.wait(lock, [&] { return stop_ || generation_ != seen; });
      if (stop_) return;
      seen = generation_;
    }
    run_blocks();
    {
      std::lock_guard<std::mutex> lock(mutex_);
      if (--active_ == 0) done_.notify_one();
    }
  }
}

void ThreadPool::parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                              std::size_t grain) {
  if (n == 0) return;
  fn_ = &fn;
  n_ = n;
  grain_ = std::max<std::size_t>(1, grain);
  next_.store(0);
  error_ = nullptr;

  if (!workers_.empty() && n > grain_) {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      active_ = workers_.size();
      ++generation_;
    }
    wake_.notify_all();
    run_blocks();
    std::unique_lock<std::mutex> lock(mutex_);
    done_.wait(lock, [&] { return active_ == 0; });
  } else {
    run_blocks();
  }
  fn_ = nullptr;
  if (error_) std::rethrow_exception(error_);
}

}  // namespace gibbsmf
