#include "pmtg/worker_pool.hpp"

namespace pmtg {

WorkerPool::WorkerPool(std::size_t workers) {
  if (workers <= 1) return;
  threads_.reserve(workers);
  for (std::size_t i = 0; i < workers; ++i) threads_.emplace_back([this] { worker_loop(); });
}

WorkerPool::~WorkerPool() {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    stop_ = true;
  }
  work_cv_.notify_all();
  for (auto& t : threads_) t.join();
}

void WorkerPool::run(std::size_t n, const std::function<void(std::size_t)>& task) {
  if (n == 0) return;
  if (threads_.empty()) {
    for (std::size_t i = 0; i < n; ++i) task(i);
    return;
  }
  std::unique_lock<std::mutex> lock(mutex_);
  task_ = &task;
  errors_.assign(n, nullptr);
  next_ = 0;
  total_ = n;
  finished_ = 0;
  ++generation_;
  work_cv_.notify_all();
  done_cv_.wait(lock, [this] { return finished_ == total_; });
  task_ = nullptr;
  for (auto& e : errors_) {
    if (e) std::rethrow_exception(e);
  }
}

void WorkerPool::worker_loop() {
  std::size_t seen_generation = 0;
  std::unique_lock<std::mutex> lock(mutex_);
  while (true) {
    work_cv_.wait(lock, [&] { return stop_ || (generation_ != seen_generation && next_ < total_); });
    if (stop_) return;
    while (next_ < total_) {
      const std::size_t index = next_++;
      const auto* task = task_;
      lock.unlock();
      std::exception_ptr error;
      try {
        (*task)(index);
      } catch (...) {
        error = std::current_exception();
      }
      lock.lock();
      errors_[index] = error;
      if (++finished_ == total_) done_cv_.notify_all();
    }
    seen_generation = generation_;
  }
}

}  // namespace pmtg
