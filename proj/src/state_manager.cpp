#include "sdsn/eventstate/state_manager.hpp"

#include <cmath>

#include "sdsn/core/error.hpp"
#include "sdsn/core/id.hpp"
#include "sdsn/eventstate/event.hpp"

namespace sdsn::eventstate {

StateRecord StateManager::read(const std::string& key) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = values_.find(key);
  if (it == values_.end()) return StateRecord{};
  return it->second;
}

StateRecord StateManager::applyLocked(const std::string& key, Scalar next) {
  auto& rec = values_[key];
  rec.value = std::move(next);
  rec.updatedAt = nowMs();
  rec.version += 1;
  return rec;
}

void StateManager::notify(const std::string& key, const StateRecord& before,
                          const StateRecord& after) {
  std::vector<Subscription> targets;
  {
    std::lock_guard<std::mutex> lock(mu_);
    for (const auto& [id, sub] : subscriptions_) {
      (void)id;
      if (globMatch(sub.pattern, key)) targets.push_back(sub);
    }
  }
  for (const auto& sub : targets) {
    sub.sink(key, before, after);
  }
}

StateRecord StateManager::set(const std::string& key, Scalar value) {
  StateRecord before, after;
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = values_.find(key);
    if (it != values_.end()) before = it->second;
    after = applyLocked(key, std::move(value));
  }
  notify(key, before, after);
  return after;
}

StateRecord StateManager::adjust(const std::string& key, double delta, bool clampAtZero) {
  StateRecord before, after;
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = values_.find(key);
    if (it != values_.end()) before = it->second;

    Scalar next;
    ScalarKind kind = kindOf(before.value);
    if (kind == ScalarKind::Integer) {
      // Keep integer keys integral for integral deltas.
      double exact = static_cast<double>(std::get<std::int64_t>(before.value)) + delta;
      if (std::nearbyint(delta) == delta) {
        std::int64_t v = std::get<std::int64_t>(before.value) + static_cast<std::int64_t>(delta);
        if (clampAtZero && v < 0) v = 0;
        next = v;
      } else {
        if (clampAtZero && exact < 0) exact = 0;
        next = exact;
      }
    } else if (kind == ScalarKind::Decimal) {
      double v = std::get<double>(before.value) + delta;
      if (clampAtZero && v < 0) v = 0;
      next = v;
    } else {
      throw err(ErrorCode::BadParams, "state key '" + key + "' is not numeric");
    }
    after = applyLocked(key, std::move(next));
  }
  notify(key, before, after);
  return after;
}

std::map<std::string, StateRecord> StateManager::snapshot(const std::string& prefix) const {
  std::lock_guard<std::mutex> lock(mu_);
  std::map<std::string, StateRecord> out;
  for (const auto& [key, rec] : values_) {
    if (key.rfind(prefix, 0) == 0) out[key] = rec;
  }
  return out;
}

void StateManager::erasePrefix(const std::string& prefix) {
  std::lock_guard<std::mutex> lock(mu_);
  for (auto it = values_.begin(); it != values_.end();) {
    if (it->first.rfind(prefix, 0) == 0) {
      it = values_.erase(it);
    } else {
      ++it;
    }
  }
}

std::uint64_t StateManager::subscribe(std::string keyPattern, StateSink sink) {
  std::lock_guard<std::mutex> lock(mu_);
  std::uint64_t id = nextSubscriptionId_++;
  subscriptions_[id] = Subscription{id, std::move(keyPattern), std::move(sink)};
  return id;
}

void StateManager::unsubscribe(std::uint64_t subscriptionId) {
  std::lock_guard<std::mutex> lock(mu_);
  if (subscriptions_.erase(subscriptionId) == 0) {
    throw err(ErrorCode::NotFound, "no state subscription " + std::to_string(subscriptionId));
  }
}

}  // namespace sdsn::eventstate
