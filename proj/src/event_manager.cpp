#include "sdsn/eventstate/event_manager.hpp"

#include "sdsn/core/error.hpp"
#include "sdsn/core/id.hpp"

namespace sdsn::eventstate {

bool globMatch(const std::string& pattern, const std::string& name) {
  // Iterative glob with single wildcard kind '*'.
  size_t p = 0, n = 0, star = std::string::npos, backtrack = 0;
  while (n < name.size()) {
    if (p < pattern.size() && (pattern[p] == name[n])) {
      ++p;
      ++n;
    } else if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      backtrack = n;
    } else if (star != std::string::npos) {
      p = star + 1;
      n = ++backtrack;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

EventManager::EventManager(std::size_t capacity) : capacity_(capacity) {
  deliveryThread_ = std::thread([this] { deliveryLoop(); });
}

EventManager::~EventManager() {
  {
    std::lock_guard<std::mutex> lock(mu_);
    stopping_ = true;
  }
  cv_.notify_all();
  deliveryThread_.join();
}

std::uint64_t EventManager::publish(std::string name, regulation::FlowKey flow,
                                    FieldMap payload) {
  std::uint64_t seq;
  {
    std::lock_guard<std::mutex> lock(mu_);
    seq = nextSeq_++;
    Event e{std::move(name), std::move(flow), std::move(payload), seq, nowMs()};
    ring_.push_back(std::move(e));
    if (ring_.size() > capacity_) ring_.pop_front();
  }
  cv_.notify_all();
  return seq;
}

std::uint64_t EventManager::subscribe(std::string pattern, EventSink sink,
                                      regulation::FlowKey flowFilter) {
  std::lock_guard<std::mutex> lock(mu_);
  std::uint64_t id = nextSubscriptionId_++;
  subscriptions_[id] = Subscription{id, std::move(pattern), std::move(flowFilter),
                                    std::move(sink)};
  return id;
}

void EventManager::unsubscribe(std::uint64_t subscriptionId) {
  std::lock_guard<std::mutex> lock(mu_);
  if (subscriptions_.erase(subscriptionId) == 0) {
    throw err(ErrorCode::NotFound, "no event subscription " + std::to_string(subscriptionId));
  }
}

std::vector<Event> EventManager::readSince(std::uint64_t since, std::size_t maxCount) const {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<Event> out;
  for (const auto& e : ring_) {
    if (e.seq > since) {
      out.push_back(e);
      if (out.size() >= maxCount) break;
    }
  }
  return out;
}

std::uint64_t EventManager::lastSeq() const {
  std::lock_guard<std::mutex> lock(mu_);
  return nextSeq_ - 1;
}

std::uint64_t EventManager::droppedDeliveries() const {
  std::lock_guard<std::mutex> lock(mu_);
  return droppedDeliveries_;
}

void EventManager::drain() const {
  std::unique_lock<std::mutex> lock(mu_);
  cv_.wait(lock, [this] { return deliveredSeq_ + 1 >= nextSeq_; });
}

void EventManager::deliveryLoop() {
  std::unique_lock<std::mutex> lock(mu_);
  while (true) {
    cv_.wait(lock, [this] { return stopping_ || deliveredSeq_ + 1 < nextSeq_; });
    if (stopping_) return;

    // Find the next undelivered event still in the ring.
    const Event* next = nullptr;
    for (const auto& e : ring_) {
      if (e.seq > deliveredSeq_) {
        next = &e;
        break;
      }
    }
    if (!next) {  // everything pending was evicted
      deliveredSeq_ = nextSeq_ - 1;
      cv_.notify_all();
      continue;
    }

    Event event = *next;  // copy: sinks run without the lock
    std::vector<Subscription> targets;
    for (const auto& [id, sub] : subscriptions_) {
      (void)id;
      if (!globMatch(sub.pattern, event.name)) continue;
      if (!sub.flowFilter.vsn.empty() && !sub.flowFilter.covers(event.flow)) continue;
      targets.push_back(sub);
    }

    lock.unlock();
    std::uint64_t dropped = 0;
    for (const auto& sub : targets) {
      bool ok = false;
      for (int attempt = 0; attempt < kMaxDeliveryAttempts && !ok; ++attempt) {
        try {
          ok = sub.sink(event);
        } catch (...) {
          ok = false;
        }
      }
      if (!ok) ++dropped;
    }
    lock.lock();
    droppedDeliveries_ += dropped;
    deliveredSeq_ = event.seq;
    cv_.notify_all();
  }
}

}  // namespace sdsn::eventstate
