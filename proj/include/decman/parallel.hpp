#pragma once

#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace decman {

/// Fixed-size pool that runs index-parallel loops. Every index writes only
/// its own output slot, so results do not depend on the worker count.
class WorkerPool {
 public:
  /// workers <= 1 runs everything on the calling thread.
  explicit WorkerPool(std::size_t workers = 1);
  ~WorkerPool();

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  std::size_t workers() const { return threads_.size() + 1; }

  /// Calls body(i) for i in [0, count). Rethrows the exception raised by
  /// the smallest failing index.
  void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

  /// --workers / MC_WORKERS / hardware concurrency, in that order.
  static std::size_t resolve_workers(long requested);

 private:
  void worker_loop(std::size_t slot);
  void run_chunk(std::size_t slot);

  std::vector<std::thread> threads_;
  std::mutex mutex_;
  std::condition_variable wake_;
  std::condition_variable done_;
  const std::function<void(std::size_t)>* body_ = nullptr;
  std::size_t count_ = 0;
  std::size_t generation_ = 0;
  std::size_t pending_ = 0;
  bool stop_ = false;
  std::vector<std::exception_ptr> errors_;
};

}  // namespace decman
