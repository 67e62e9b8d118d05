#include "sdsn/regulation/table.hpp"

#include <algorithm>

#include "sdsn/core/error.hpp"

namespace sdsn::regulation {

void RegulationTable::addEntry(const FlowKey& key, const std::vector<Id>& ruleIds) {
  auto& entry = entries_[key];
  for (const auto& id : ruleIds) {
    if (std::find(entry.begin(), entry.end(), id) == entry.end()) {
      entry.push_back(id);
    }
  }
}

std::vector<Id> RegulationTable::removeEntry(const FlowKey& key, const std::vector<Id>& ruleIds) {
  std::vector<Id> removed;
  auto it = entries_.find(key);
  if (it == entries_.end()) {
    throw err(ErrorCode::NoEntry, "no table entry at " + key.str());
  }
  auto& entry = it->second;
  for (const auto& id : ruleIds) {
    auto pos = std::find(entry.begin(), entry.end(), id);
    if (pos != entry.end()) {
      entry.erase(pos);
      removed.push_back(id);
    }
  }
  if (entry.empty()) entries_.erase(it);
  return removed;
}

std::vector<Id> RegulationTable::replaceEntry(const FlowKey& key, const std::vector<Id>& ruleIds) {
  auto it = entries_.find(key);
  if (it == entries_.end()) {
    throw err(ErrorCode::NoEntry, "no table entry at " + key.str());
  }
  std::vector<Id> previous = it->second;
  std::vector<Id> next;
  for (const auto& id : ruleIds) {
    if (std::find(next.begin(), next.end(), id) == next.end()) next.push_back(id);
  }
  it->second = std::move(next);
  return previous;
}

const std::vector<Id>& RegulationTable::lookup(const FlowKey& flow) const {
  // Most specific level first; no merging across levels.
  if (!flow.instance.empty()) {
    auto it = entries_.find(flow);
    if (it != entries_.end()) return it->second;
  }
  if (!flow.process.empty()) {
    auto it = entries_.find(flow.processLevel());
    if (it != entries_.end()) return it->second;
  }
  auto it = entries_.find(flow.vsnLevel());
  if (it != entries_.end()) return it->second;
  throw err(ErrorCode::NoEntry, "no regulation-table entry matches flow " + flow.str());
}

bool RegulationTable::hasAnyEntryFor(const Id& vsn) const {
  for (const auto& [key, ids] : entries_) {
    (void)ids;
    if (key.vsn == vsn) return true;
  }
  return false;
}

void RegulationTable::dropVsn(const Id& vsn) {
  for (auto it = entries_.begin(); it != entries_.end();) {
    if (it->first.vsn == vsn) {
      it = entries_.erase(it);
    } else {
      ++it;
    }
  }
}

bool RegulationTable::referencesRule(const Id& ruleId) const {
  for (const auto& [key, ids] : entries_) {
    (void)key;
    if (std::find(ids.begin(), ids.end(), ruleId) != ids.end()) return true;
  }
  return false;
}

std::vector<Id> RegulationTable::vsnsReferencing(const Id& ruleId) const {
  std::vector<Id> out;
  for (const auto& [key, ids] : entries_) {
    if (std::find(ids.begin(), ids.end(), ruleId) != ids.end()) {
      if (std::find(out.begin(), out.end(), key.vsn) == out.end()) out.push_back(key.vsn);
    }
  }
  return out;
}

}  // namespace sdsn::regulation
