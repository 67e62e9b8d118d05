#ifndef SDSN_REGULATION_CATALOG_HPP
#define SDSN_REGULATION_CATALOG_HPP

#include <map>
#include <set>
#include <string>

#include "sdsn/regulation/rule.hpp"

namespace sdsn::regulation {

// Which action vocabulary a rule file may use. Runtime rules regulate
// message flows; management rules (policies) mutate the hosted model.
enum class RuleDialect { Runtime, Management };

// Parameter expectations for one catalog function.
struct FunctionSignature {
  std::set<std::string> required;
  std::set<std::string> optional;
  // At least one of these must be present (e.g. rules= or ruleFile=).
  std::set<std::string> oneOf;
};

// nullptr when the function does not exist in the dialect.
const FunctionSignature* findFunction(RuleDialect dialect, const std::string& name);

// Validates one invocation against the catalog. Throws UnknownFunction /
// BadParams with a message naming the rule id.
void checkInvocation(RuleDialect dialect, const Id& ruleId, const FunctionInvocation& inv);

// parseRules with an explicit dialect (management policies share the grammar
// but draw actions from the change-operation catalog).
std::vector<RegulationRule> parseRulesDialect(const std::string& text, RuleDialect dialect);

}  // namespace sdsn::regulation

#endif  // SDSN_REGULATION_CATALOG_HPP
