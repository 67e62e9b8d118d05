#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "sdsn/core/value.hpp"
#include "sdsn/enactment/envelope.hpp"
#include "sdsn/model/design.hpp"

namespace sdsn::enactment {

struct ServiceReply {
  bool ok = false;
  FieldMap body;
  std::string error;  // set when !ok
};

using ReplyHandler = std::function<void(ServiceReply)>;

// Carries a synthesized request to the external service a role proxies and
// reports the reply back. Implementations must never block the caller: the
// handler runs later, possibly on another thread.
class ServiceInvoker {
 public:
  virtual ~ServiceInvoker() = default;
  virtual void invoke(const model::ServiceBinding& binding, const MessageEnvelope& request,
                      ReplyHandler done) = 0;
};

// In-process invoker for tests and closed-loop measurements: endpoints map to
// handler functions, optionally answering after a simulated latency. A single
// timer thread delivers due replies in deadline order.
class ScriptedInvoker : public ServiceInvoker {
 public:
  using Handler = std::function<ServiceReply(const MessageEnvelope&)>;

  ScriptedInvoker();
  ~ScriptedInvoker() override;

  void bind(const std::string& endpoint, Handler handler, int latencyMs = 0);

  // Endpoints nobody bound answer ok with an empty body after this latency.
  void setDefaultLatency(int latencyMs) { defaultLatencyMs_ = latencyMs; }

  void invoke(const model::ServiceBinding& binding, const MessageEnvelope& request,
              ReplyHandler done) override;

  std::uint64_t callCount() const { return calls_.load(); }

 private:
  struct Scripted {
    Handler handler;
    int latencyMs = 0;
  };
  struct Due {
    std::chrono::steady_clock::time_point at;
    std::function<void()> fire;
  };

  void timerLoop();

  std::mutex mu_;
  std::condition_variable cv_;
  std::map<std::string, Scripted> handlers_;
  std::vector<Due> due_;
  std::atomic<std::uint64_t> calls_{0};
  std::atomic<int> defaultLatencyMs_{0};
  bool stopping_ = false;
  std::thread timer_;
};

}  // namespace sdsn::enactment
