#ifndef SDSN_EVENTSTATE_EVENT_MANAGER_HPP
#define SDSN_EVENTSTATE_EVENT_MANAGER_HPP

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "sdsn/eventstate/event.hpp"

namespace sdsn::eventstate {

// Returns true when the event was accepted; a false return is retried up to
// `maxDeliveryAttempts - 1` more times before the delivery is dropped.
using EventSink = std::function<bool(const Event&)>;

// Publish-subscribe event log for one scope (a network's runtime events, or
// the engine's management events).
//
// publish() only appends under the lock and wakes the delivery thread, so
// publishers never wait on subscribers. The delivery thread walks the log in
// sequence order and offers each event to every matching subscription, which
// yields per-subscription delivery in publish order.
class EventManager {
 public:
  static constexpr std::size_t kDefaultCapacity = 100000;
  static constexpr int kMaxDeliveryAttempts = 4;  // 1 try + 3 retries

  explicit EventManager(std::size_t capacity = kDefaultCapacity);
  ~EventManager();

  EventManager(const EventManager&) = delete;
  EventManager& operator=(const EventManager&) = delete;

  // Appends the event (seq and `at` are assigned here) and returns its seq.
  std::uint64_t publish(std::string name, regulation::FlowKey flow, FieldMap payload);

  // flowFilter: subscription sees only events whose flow it covers
  // (empty vsn = all flows).
  std::uint64_t subscribe(std::string pattern, EventSink sink,
                          regulation::FlowKey flowFilter = {});
  void unsubscribe(std::uint64_t subscriptionId);  // NotFound on unknown/dup

  // Events with seq > since, oldest first, up to maxCount. Events already
  // evicted from the ring are gone.
  std::vector<Event> readSince(std::uint64_t since, std::size_t maxCount = 1000) const;

  std::uint64_t lastSeq() const;

  // Deliveries abandoned after repeated sink failures.
  std::uint64_t droppedDeliveries() const;

  // Blocks until the delivery cursor catches up with the last published
  // event (tests and graceful shutdown).
  void drain() const;

 private:
  void deliveryLoop();

  struct Subscription {
    std::uint64_t id;
    std::string pattern;
    regulation::FlowKey flowFilter;
    EventSink sink;
  };

  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  std::deque<Event> ring_;
  std::size_t capacity_;
  std::uint64_t nextSeq_ = 1;
  std::uint64_t deliveredSeq_ = 0;
  std::uint64_t droppedDeliveries_ = 0;
  std::map<std::uint64_t, Subscription> subscriptions_;
  std::uint64_t nextSubscriptionId_ = 1;
  bool stopping_ = false;
  std::thread deliveryThread_;
};

}  // namespace sdsn::eventstate

#endif  // SDSN_EVENTSTATE_EVENT_MANAGER_HPP
