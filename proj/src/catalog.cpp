#include "sdsn/regulation/catalog.hpp"

#include "sdsn/core/error.hpp"

namespace sdsn::regulation {

namespace {

using SigMap = std::map<std::string, FunctionSignature>;

SigMap makeRuntimeCatalog() {
  SigMap m;
  m["AdmissionControl"] = {{"capacityKey", "limit"}, {"onReject", "queue", "queueKey"}, {}};
  m["LoadBalance"] = {{"strategy"}, {}, {}};
  m["Drop"] = {{}, {"reason"}, {}};
  m["Schedule"] = {{"queue", "stateKey"}, {}, {}};
  m["CreateInstance"] = {{}, {"process"}, {}};
  m["Route"] = {{"to"}, {"term"}, {}};
  m["Forward"] = {{}, {}, {}};
  m["PublishEvent"] = {{"name"}, {"withBody"}, {}};
  m["StoreMessage"] = {{}, {}, {}};
  m["SynthesizeAndInvoke"] = {{"task"}, {}, {}};
  m["Transform"] = {{"spec"}, {}, {}};
  m["AdjustState"] = {{"key", "delta"}, {}, {}};
  m["MonitorResponseTime"] = {{"key"}, {}, {}};
  m["MonitorThroughput"] = {{"key"}, {}, {}};
  m["TerminateInstance"] = {{}, {"outcome"}, {}};
  return m;
}

SigMap makeManagementCatalog() {
  SigMap m;
  // Topology operations.
  m["addRole"] = {{"rId"}, {"rName", "endpoint", "timeoutMs", "retries", "userRole"}, {}};
  m["removeRole"] = {{"rId"}, {}, {}};
  m["updateRole"] = {{"rId", "property", "value"}, {}, {}};
  m["addTask"] = {{"rId", "tId"}, {"inputs", "outputs", "request", "response"}, {}};
  m["removeTask"] = {{"rId", "tId"}, {}, {}};
  m["updateTask"] = {{"rId", "tId", "property", "value"}, {}, {}};
  m["addContract"] = {{"cId", "roleA", "roleB"}, {}, {}};
  m["removeContract"] = {{"cId"}, {}, {}};
  m["updateContract"] = {{"cId", "property", "value"}, {}, {}};
  m["addTerm"] = {{"cId", "tmId", "direction", "template"}, {}, {}};
  m["removeTerm"] = {{"cId", "tmId"}, {}, {}};
  m["updateTerm"] = {{"cId", "tmId", "property", "value"}, {}, {}};

  // Knowledgebase operations (rules= inline text or ruleFile= bundled path).
  m["addRoutingRules"] = {{"rId"}, {}, {"rules", "ruleFile"}};
  m["removeRoutingRules"] = {{"rId", "ruleIds"}, {}, {}};
  m["updateRoutingRule"] = {{"rId", "ruleId", "property", "value"}, {}, {}};
  m["addSynchronizationRules"] = {{"rId"}, {}, {"rules", "ruleFile"}};
  m["removeSynchronizationRules"] = {{"rId", "ruleIds"}, {}, {}};
  m["updateSynchronizationRule"] = {{"rId", "ruleId", "property", "value"}, {}, {}};
  m["addPassthroughRules"] = {{"cId"}, {}, {"rules", "ruleFile"}};
  m["removePassthroughRules"] = {{"cId", "ruleIds"}, {}, {}};
  m["updatePassthroughRule"] = {{"cId", "ruleId", "property", "value"}, {}, {}};
  m["addCoordinatedPassthroughRules"] = {{}, {}, {"rules", "ruleFile"}};
  m["removeCoordinatedPassthroughRules"] = {{"ruleIds"}, {}, {}};
  m["updateCoordinatedPassthroughRule"] = {{"ruleId", "property", "value"}, {}, {}};

  // Regulation-table operations. snfId names the VSN; process/instance make
  // the entry more specific.
  for (const char* verb : {"add", "remove", "update"}) {
    std::string v(verb);
    m[v + "RoutingTableEntries"] = {{"rId", "snfId", "ruleIds"}, {"process", "instance"}, {}};
    m[v + "SynchronizationTableEntries"] = {{"rId", "snfId", "ruleIds"}, {"process", "instance"}, {}};
    m[v + "PassthroughTableEntries"] = {{"cId", "snfId", "ruleIds"}, {"process", "instance"}, {}};
    m[v + "CoordinatedPassthroughTableEntries"] = {{"snfId", "ruleIds"}, {"process", "instance"}, {}};
  }

  // Monitoring subscriptions for external sinks.
  m["subscribeEvents"] = {{"pattern", "endpoint"}, {}, {}};
  m["unsubscribeEvents"] = {{"pattern", "endpoint"}, {}, {}};
  m["subscribeStates"] = {{"keys", "endpoint"}, {}, {}};
  m["unsubscribeStates"] = {{"keys", "endpoint"}, {}, {}};

  // Custom policy verbs.
  m["setManagementState"] = {{"element", "state"}, {}, {}};
  m["awaitQuiescence"] = {{"element"}, {"timeoutMs"}, {}};
  m["controlInstance"] = {{"instance", "action"}, {}, {}};
  m["deployVsn"] = {{}, {}, {"file", "text"}};
  m["undeployVsn"] = {{"vsnId"}, {}, {}};
  m["updateVsnProcess"] = {{"vsnId", "process"}, {}, {"file", "text"}};
  m["publishEvent"] = {{"name"}, {}, {}};
  return m;
}

const SigMap& catalogFor(RuleDialect dialect) {
  static const SigMap runtime = makeRuntimeCatalog();
  static const SigMap management = makeManagementCatalog();
  return dialect == RuleDialect::Runtime ? runtime : management;
}

}  // namespace

const FunctionSignature* findFunction(RuleDialect dialect, const std::string& name) {
  const auto& cat = catalogFor(dialect);
  auto it = cat.find(name);
  return it == cat.end() ? nullptr : &it->second;
}

void checkInvocation(RuleDialect dialect, const Id& ruleId, const FunctionInvocation& inv) {
  const FunctionSignature* sig = findFunction(dialect, inv.fn);
  if (!sig) {
    throw err(ErrorCode::UnknownFunction,
              "rule " + ruleId + ": no such function '" + inv.fn + "'");
  }
  for (const auto& need : sig->required) {
    if (!inv.params.count(need)) {
      throw err(ErrorCode::BadParams,
                "rule " + ruleId + ": " + inv.fn + " is missing parameter '" + need + "'");
    }
  }
  if (!sig->oneOf.empty()) {
    bool any = false;
    for (const auto& alt : sig->oneOf) any = any || inv.params.count(alt);
    if (!any) {
      std::string alts;
      for (const auto& alt : sig->oneOf) alts += (alts.empty() ? "" : "/") + alt;
      throw err(ErrorCode::BadParams,
                "rule " + ruleId + ": " + inv.fn + " needs one of " + alts);
    }
  }
  for (const auto& [key, value] : inv.params) {
    (void)value;
    if (!sig->required.count(key) && !sig->optional.count(key) && !sig->oneOf.count(key)) {
      throw err(ErrorCode::BadParams,
                "rule " + ruleId + ": " + inv.fn + " has no parameter '" + key + "'");
    }
  }
}

}  // namespace sdsn::regulation
