#include "sdsn/enactment/flow_executor.hpp"

#include <chrono>

namespace sdsn::enactment {

FlowExecutor::FlowExecutor(std::size_t strands) {
  if (strands == 0) strands = 1;
  strands_.reserve(strands);
  for (std::size_t i = 0; i < strands; ++i) {
    strands_.push_back(std::make_unique<Strand>());
  }
  workers_.reserve(strands);
  for (std::size_t i = 0; i < strands; ++i) {
    workers_.emplace_back([this, i] { workerLoop(*strands_[i]); });
  }
}

FlowExecutor::~FlowExecutor() {
  stopping_.store(true);
  for (auto& s : strands_) {
    std::lock_guard<std::mutex> lock(s->mu);
    s->cv.notify_all();
  }
  for (auto& w : workers_) w.join();
}

void FlowExecutor::post(const std::string& flowLabel, std::function<void()> job) {
  Strand& s = *strands_[std::hash<std::string>{}(flowLabel) % strands_.size()];
  {
    std::lock_guard<std::mutex> lock(s.mu);
    s.queue.push_back(std::move(job));
  }
  s.cv.notify_one();
}

void FlowExecutor::drain() {
  for (;;) {
    bool idle = true;
    for (auto& s : strands_) {
      std::lock_guard<std::mutex> lock(s->mu);
      if (!s->queue.empty() || s->busy) {
        idle = false;
        break;
      }
    }
    if (idle) return;
    std::unique_lock<std::mutex> lock(drainMu_);
    drainCv_.wait_for(lock, std::chrono::milliseconds(1));
  }
}

void FlowExecutor::workerLoop(Strand& s) {
  for (;;) {
    std::function<void()> job;
    {
      std::unique_lock<std::mutex> lock(s.mu);
      s.cv.wait(lock, [&] { return !s.queue.empty() || stopping_.load(); });
      if (s.queue.empty()) return;  // stopping, queue drained
      job = std::move(s.queue.front());
      s.queue.pop_front();
      s.busy = true;
    }
    job();
    {
      std::lock_guard<std::mutex> lock(s.mu);
      s.busy = false;
    }
    drainCv_.notify_all();
  }
}

}  // namespace sdsn::enactment
