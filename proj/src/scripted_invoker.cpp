#include <algorithm>

#include "sdsn/enactment/service_invoker.hpp"

namespace sdsn::enactment {

ScriptedInvoker::ScriptedInvoker() : timer_([this] { timerLoop(); }) {}

ScriptedInvoker::~ScriptedInvoker() {
  {
    std::lock_guard<std::mutex> lock(mu_);
    stopping_ = true;
  }
  cv_.notify_all();
  timer_.join();
}

void ScriptedInvoker::bind(const std::string& endpoint, Handler handler, int latencyMs) {
  std::lock_guard<std::mutex> lock(mu_);
  handlers_[endpoint] = {std::move(handler), latencyMs};
}

void ScriptedInvoker::invoke(const model::ServiceBinding& binding,
                             const MessageEnvelope& request, ReplyHandler done) {
  calls_.fetch_add(1);
  Scripted scripted;
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = handlers_.find(binding.endpoint);
    if (it != handlers_.end()) {
      scripted = it->second;
    } else {
      scripted.latencyMs = defaultLatencyMs_.load();
    }
  }

  auto fire = [scripted = std::move(scripted), request, done = std::move(done)] {
    ServiceReply reply;
    if (scripted.handler) {
      reply = scripted.handler(request);
    } else {
      reply.ok = true;
    }
    done(std::move(reply));
  };

  auto at = std::chrono::steady_clock::now() + std::chrono::milliseconds(scripted.latencyMs);
  {
    std::lock_guard<std::mutex> lock(mu_);
    due_.push_back({at, std::move(fire)});
  }
  cv_.notify_all();
}

void ScriptedInvoker::timerLoop() {
  std::unique_lock<std::mutex> lock(mu_);
  for (;;) {
    if (due_.empty()) {
      if (stopping_) return;
      cv_.wait(lock, [&] { return stopping_ || !due_.empty(); });
      continue;
    }
    auto next = std::min_element(due_.begin(), due_.end(),
                                 [](const Due& a, const Due& b) { return a.at < b.at; });
    auto now = std::chrono::steady_clock::now();
    if (next->at > now) {
      cv_.wait_until(lock, next->at);
      continue;
    }
    auto job = std::move(next->fire);
    due_.erase(next);
    lock.unlock();
    job();
    lock.lock();
  }
}

}  // namespace sdsn::enactment
