#ifndef SDSN_REGULATION_EXECUTOR_HPP
#define SDSN_REGULATION_EXECUTOR_HPP

#include <set>

#include "sdsn/regulation/effects.hpp"
#include "sdsn/regulation/rule.hpp"

namespace sdsn::regulation {

// Resolves catalog invocations of fired rules into effects. Implemented by
// the enactment engine, which knows the model (templates, paths, stores).
// Builders are per-stimulus: they carry the in-stimulus context (admission
// verdict, chosen process, body transforms) that later actions of the same
// rule set may depend on.
struct EffectBuilder {
  virtual ~EffectBuilder() = default;

  // Appends zero or more effects for one action. Throwing aborts the whole
  // stimulus with no effect applied (ActionFault and friends).
  virtual void build(const RegulationRule& rule, const FunctionInvocation& invocation,
                     std::vector<Effect>& out) = 0;
};

struct ExecOutcome {
  std::vector<Effect> effects;
  std::vector<Id> fired;          // every fired rule, in firing order
  std::vector<Id> firedEventRules;  // fired rules with event predicates (refraction marks)
  std::vector<std::string> diagnostics;
};

// Runs one rule set against one stimulus:
//   - orders candidates by priority (higher first), ties by ascending id;
//   - skips event-conditioned rules listed in `refracted` (they already
//     fired for this flow);
//   - evaluates each condition against `scope` (total evaluation);
//   - resolves actions of fired rules, in order, through `builder`.
//
// Pure given its inputs: repeated calls with equal inputs and a fresh
// equivalent builder produce identical outcomes. All mutation happens later,
// when the caller applies the returned effects.
ExecOutcome executeRuleSet(const std::vector<const RegulationRule*>& candidates,
                           const ConditionScope& scope, const std::set<Id>& refracted,
                           EffectBuilder& builder);

}  // namespace sdsn::regulation

#endif  // SDSN_REGULATION_EXECUTOR_HPP
