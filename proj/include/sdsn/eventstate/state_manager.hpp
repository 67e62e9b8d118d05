#ifndef SDSN_EVENTSTATE_STATE_MANAGER_HPP
#define SDSN_EVENTSTATE_STATE_MANAGER_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "sdsn/core/value.hpp"

namespace sdsn::eventstate {

struct StateRecord {
  Scalar value = std::int64_t{0};
  std::int64_t updatedAt = 0;  // wall-clock ms; 0 = never written
  std::uint64_t version = 0;

  bool operator==(const StateRecord&) const = default;
};

// key, previous record, new record.
using StateSink = std::function<void(const std::string&, const StateRecord&, const StateRecord&)>;

// Keyed engine state. Every read/update of a single key is linearizable
// (one map-wide mutex — desk-scale engine). Unknown keys read as integer 0
// with updatedAt 0, so counters need no initialization.
class StateManager {
 public:
  StateRecord read(const std::string& key) const;

  // Overwrites the value, bumps version, stamps updatedAt.
  StateRecord set(const std::string& key, Scalar value);

  // Numeric read-modify-write: value' = value + delta. When `clampAtZero`,
  // negative results clamp to 0 (used-capacity accounting never goes
  // negative). Throws BadParams when the current value is non-numeric.
  StateRecord adjust(const std::string& key, double delta, bool clampAtZero = false);

  // All keys with the given prefix (snapshotting & reports).
  std::map<std::string, StateRecord> snapshot(const std::string& prefix = "") const;

  void erasePrefix(const std::string& prefix);

  // Sinks fire after the mutation, outside the lock, in subscription order.
  // keyPattern uses the same '*' glob as event subscriptions.
  std::uint64_t subscribe(std::string keyPattern, StateSink sink);
  void unsubscribe(std::uint64_t subscriptionId);  // NotFound on unknown

 private:
  struct Subscription {
    std::uint64_t id;
    std::string pattern;
    StateSink sink;
  };

  StateRecord applyLocked(const std::string& key, Scalar next);
  void notify(const std::string& key, const StateRecord& before, const StateRecord& after);

  mutable std::mutex mu_;
  std::map<std::string, StateRecord> values_;
  std::map<std::uint64_t, Subscription> subscriptions_;
  std::uint64_t nextSubscriptionId_ = 1;
};

}  // namespace sdsn::eventstate

#endif  // SDSN_EVENTSTATE_STATE_MANAGER_HPP
