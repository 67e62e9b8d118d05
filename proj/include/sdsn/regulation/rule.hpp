#ifndef SDSN_REGULATION_RULE_HPP
#define SDSN_REGULATION_RULE_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sdsn/core/id.hpp"
#include "sdsn/model/management_state.hpp"
#include "sdsn/regulation/condition.hpp"

namespace sdsn::regulation {

// One action of a rule: a catalog function plus its named parameters.
struct FunctionInvocation {
  std::string fn;
  std::map<std::string, Scalar> params;

  bool operator==(const FunctionInvocation&) const = default;
  std::string text() const;  // canonical Fn(k=v, ...) rendering
};

// An event-condition-action regulation rule as deployed into a REP
// knowledgebase. Rules are shared: tables of several VSNs may point at the
// same rule id.
struct RegulationRule {
  Id id;
  int priority = 0;  // higher fires first; ties break by ascending id
  Condition condition;
  std::vector<FunctionInvocation> actions;

  // Change-management bookkeeping.
  int version = 1;                // bumped by every content/priority update
  model::ManagementState mgmtState = model::ManagementState::Active;
  std::uint64_t passiveSince = 0; // network change epoch of the passivation

  std::string text() const;  // canonical rule ... end rendering

  // Structural equality ignoring version/mgmt bookkeeping.
  bool sameContent(const RegulationRule& other) const;
};

// Parses a rule file (one or more rule blocks). Line numbers in errors are
// 1-based within `text`. Throws Parse / BadParams / UnknownFunction.
std::vector<RegulationRule> parseRules(const std::string& text);

// Parses exactly one rule block.
RegulationRule parseSingleRule(const std::string& text);

// Renders a vector of rules back to grammar text (used by serialization and
// change receipts).
std::string rulesToText(const std::vector<RegulationRule>& rules);

}  // namespace sdsn::regulation

#endif  // SDSN_REGULATION_RULE_HPP
