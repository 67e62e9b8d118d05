#pragma once

#include <atomic>
#include <condition_variable>
#include <deque>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace sdsn::enactment {

// Serializes work per flow while letting distinct flows run in parallel: a
// flow label is hashed onto one of N strands, each strand is a worker thread
// draining its own FIFO queue. Two jobs posted with the same label therefore
// run in posting order, never concurrently.
class FlowExecutor {
 public:
  explicit FlowExecutor(std::size_t strands = 4);
  ~FlowExecutor();

  FlowExecutor(const FlowExecutor&) = delete;
  FlowExecutor& operator=(const FlowExecutor&) = delete;

  void post(const std::string& flowLabel, std::function<void()> job);

  // Blocks until every queue is empty and every worker is idle. Only sound
  // when no other thread keeps posting concurrently.
  void drain();

  std::size_t strandCount() const { return strands_.size(); }

 private:
  struct Strand {
    std::mutex mu;
    std::condition_variable cv;
    std::deque<std::function<void()>> queue;
    bool busy = false;
  };

  void workerLoop(Strand& s);

  std::vector<std::unique_ptr<Strand>> strands_;
  std::vector<std::thread> workers_;
  std::mutex drainMu_;
  std::condition_variable drainCv_;
  std::atomic<bool> stopping_{false};
};

}  // namespace sdsn::enactment
