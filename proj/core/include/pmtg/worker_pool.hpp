#pragma once

#include <condition_variable>
#include <cstddef>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace pmtg {

// Fixed-size pool running index-addressed tasks. Results are written by the
// tasks into caller-owned slots, so completion order never matters.
class WorkerPool {
 public:
  explicit WorkerPool(std::size_t workers);
  ~WorkerPool();

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  std::size_t size() const { return threads_.empty() ? 1 : threads_.size(); }

  // Runs task(0) ... task(n - 1) and blocks until all finish. The first
  // exception, by task index, is rethrown.
  void run(std::size_t n, const std::function<void(std::size_t)>& task);

 private:
  void worker_loop();

  std::vector<std::thread> threads_;
  std::mutex mutex_;
  std::condition_variable work_cv_;
  std::condition_variable done_cv_;
  const std::function<void(std::size_t)>* task_ = nullptr;
  std::vector<std::exception_ptr> errors_;
  std::size_t next_ = 0;
  std::size_t total_ = 0;
  std::size_t finished_ = 0;
  std::size_t generation_ = 0;
  bool stop_ = false;
};

}  // namespace pmtg
