#ifndef SDSN_REGULATION_TABLE_HPP
#define SDSN_REGULATION_TABLE_HPP

#include <map>
#include <vector>

#include "sdsn/regulation/flow_key.hpp"

namespace sdsn::regulation {

// Maps flow keys to ordered rule-id lists for one REP. Lookup resolves at
// the most specific registered level only — levels never merge.
class RegulationTable {
 public:
  // Registers/extends the entry at exactly key's level. Duplicate ids within
  // one entry are ignored (first occurrence wins).
  void addEntry(const FlowKey& key, const std::vector<Id>& ruleIds);

  // Removes the given ids from the entry; drops the entry when it empties.
  // Returns the ids actually removed (for receipts).
  std::vector<Id> removeEntry(const FlowKey& key, const std::vector<Id>& ruleIds);

  // Replaces the entry's rule list wholesale. Returns the previous list.
  std::vector<Id> replaceEntry(const FlowKey& key, const std::vector<Id>& ruleIds);

  // Most-specific match for a concrete flow: instance level, then process,
  // then vsn. Throws NoEntry when nothing matches.
  const std::vector<Id>& lookup(const FlowKey& flow) const;

  bool hasAnyEntryFor(const Id& vsn) const;
  void dropVsn(const Id& vsn);  // removes all entries of one VSN

  // True when some entry (any level) references the rule id.
  bool referencesRule(const Id& ruleId) const;
  // VSN ids whose entries reference the rule.
  std::vector<Id> vsnsReferencing(const Id& ruleId) const;

  const std::map<FlowKey, std::vector<Id>>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }

  bool operator==(const RegulationTable&) const = default;

 private:
  std::map<FlowKey, std::vector<Id>> entries_;
};

}  // namespace sdsn::regulation

#endif  // SDSN_REGULATION_TABLE_HPP
