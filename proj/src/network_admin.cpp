#include <algorithm>
#include <chrono>
#include <sstream>

#include "sdsn/core/error.hpp"
#include "sdsn/enactment/network_runtime.hpp"
#include "sdsn/model/descriptor.hpp"

namespace sdsn::enactment {

using model::ManagementState;
using model::RepKind;
using model::RepLocation;
using regulation::FlowKey;

namespace {

// Element references: "network", "role:CM", "contract:CM_SC", "vsn:X",
// "task:CM.tNotify", "term:CM_SC.iAssist", "rule:<location>/<ruleId>".
struct ElementRef {
  std::string kind;  // network|role|contract|vsn|task|term|rule
  std::string rest;
};

ElementRef parseElementRef(const std::string& ref) {
  if (ref == "network") return {"network", ""};
  auto colon = ref.find(':');
  if (colon == std::string::npos) {
    throw err(ErrorCode::BadParams, "bad element reference '" + ref + "'");
  }
  ElementRef out{ref.substr(0, colon), ref.substr(colon + 1)};
  static const std::set<std::string> kKinds{"role", "contract", "vsn", "task", "term", "rule"};
  if (!kKinds.count(out.kind)) {
    throw err(ErrorCode::BadParams, "bad element kind in reference '" + ref + "'");
  }
  if (out.rest.empty()) {
    throw err(ErrorCode::BadParams, "empty element id in reference '" + ref + "'");
  }
  return out;
}

std::pair<RepLocation, Id> parseRuleRef(const std::string& rest) {
  auto slash = rest.rfind('/');
  if (slash == std::string::npos) {
    throw err(ErrorCode::BadParams, "rule reference needs <location>/<ruleId>: " + rest);
  }
  const std::string locText = rest.substr(0, slash);
  const Id ruleId = rest.substr(slash + 1);
  RepLocation loc;
  if (locText == "coord") {
    loc.kind = RepKind::Coordinated;
  } else {
    auto colon = locText.find(':');
    if (colon == std::string::npos ||
        !model::repKindFromName(locText.substr(0, colon), loc.kind)) {
      throw err(ErrorCode::BadParams, "bad location in rule reference: " + locText);
    }
    loc.element = locText.substr(colon + 1);
  }
  return {loc, ruleId};
}

}  // namespace

// ===========================================================================
// Structural change operations (exclusive model lock)
// ===========================================================================

void NetworkRuntime::addRole(const model::RoleSpec& role) {
  std::unique_lock<std::shared_mutex> lock(modelMu_);
  if (design_.roles.count(role.id)) {
    throw err(ErrorCode::DuplicateId, "role " + role.id + " already exists");
  }
  design_.roles[role.id] = role;
  reps_[RepLocation{RepKind::Routing, role.id}.str()].at = {RepKind::Routing, role.id};
  reps_[RepLocation{RepKind::Synchronization, role.id}.str()].at = {RepKind::Synchronization,
                                                                    role.id};
  // New elements always start Passive and serve nothing until activated.
  elementStates_["role:" + role.id] = {ManagementState::Passive, 0};
  for (const auto& [tid, task] : role.tasks) {
    elementStates_["task:" + role.id + "." + tid] = {ManagementState::Passive, 0};
  }
  bumpEpoch();
}

void NetworkRuntime::removeRole(const Id& roleId) {
  std::unique_lock<std::shared_mutex> lock(modelMu_);
  if (!design_.roles.count(roleId)) throw err(ErrorCode::NotFound, "no role " + roleId);
  requireQuiescence("role:" + roleId);
  for (const auto& [cid, contract] : design_.contracts) {
    if (contract.roleA == roleId || contract.roleB == roleId) {
      throw err(ErrorCode::Reference,
                "role " + roleId + " is still bound by contract " + cid);
    }
  }
  for (const auto& [tid, task] : design_.roles[roleId].tasks) {
    elementStates_.erase("task:" + roleId + "." + tid);
  }
  design_.roles.erase(roleId);
  reps_.erase(RepLocation{RepKind::Routing, roleId}.str());
  reps_.erase(RepLocation{RepKind::Synchronization, roleId}.str());
  elementStates_.erase("role:" + roleId);
  bumpEpoch();
}

void NetworkRuntime::updateRole(const Id& roleId, const std::string& property,
                                const std::string& value) {
  if (property == "mgmtState") {
    ManagementState target;
    if (!model::managementStateFromName(value, target)) {
      throw err(ErrorCode::BadParams, "bad management state " + value);
    }
    setManagementState("role:" + roleId, target);
    return;
  }
  std::unique_lock<std::shared_mutex> lock(modelMu_);
  auto it = design_.roles.find(roleId);
  if (it == design_.roles.end()) throw err(ErrorCode::NotFound, "no role " + roleId);
  requireNotInUse("role:" + roleId);
  if (property == "name") {
    it->second.name = value;
  } else if (property == "binding") {
    it->second.binding.endpoint = value;
  } else {
    throw err(ErrorCode::BadParams, "role property must be name|binding|mgmtState");
  }
  bumpEpoch();
}

void NetworkRuntime::addTask(const Id& roleId, const model::TaskSpec& task) {
  std::unique_lock<std::shared_mutex> lock(modelMu_);
  auto it = design_.roles.find(roleId);
  if (it == design_.roles.end()) throw err(ErrorCode::NotFound, "no role " + roleId);
  if (it->second.tasks.count(task.id)) {
    throw err(ErrorCode::DuplicateId, "task " + task.id + " already exists at role " + roleId);
  }
  for (const auto& ref : task.inputs) {
    if (!design_.findTerm(ref)) throw err(ErrorCode::Reference, "no term " + ref.str());
  }
  for (const auto& ref : task.outputs) {
    if (!design_.findTerm(ref)) throw err(ErrorCode::Reference, "no term " + ref.str());
  }
  it->second.tasks[task.id] = task;
  elementStates_["task:" + roleId + "." + task.id] = {ManagementState::Passive, 0};
  bumpEpoch();
}

void NetworkRuntime::removeTask(const Id& roleId, const Id& taskId) {
  std::unique_lock<std::shared_mutex> lock(modelMu_);
  auto it = design_.roles.find(roleId);
  if (it == design_.roles.end()) throw err(ErrorCode::NotFound, "no role " + roleId);
  if (!it->second.tasks.count(taskId)) {
    throw err(ErrorCode::NotFound, "no task " + taskId + " at role " + roleId);
  }
  requireQuiescence("task:" + roleId + "." + taskId);
  it->second.tasks.erase(taskId);
  elementStates_.erase("task:" + roleId + "." + taskId);
  bumpEpoch();
}

void NetworkRuntime::updateTask(const Id& roleId, const Id& taskId, const model::TaskSpec& task) {
  std::unique_lock<std::shared_mutex> lock(modelMu_);
  auto it = design_.roles.find(roleId);
  if (it == design_.roles.end()) throw err(ErrorCode::NotFound, "no role " + roleId);
  auto tit = it->second.tasks.find(taskId);
  if (tit == it->second.tasks.end()) {
    throw err(ErrorCode::NotFound, "no task " + taskId + " at role " + roleId);
  }
  requireNotInUse("task:" + roleId + "." + taskId);
  model::TaskSpec next = task;
  next.id = taskId;
  tit->second = next;
  bumpEpoch();
}

void NetworkRuntime::addContract(const model::ContractSpec& contract) {
  std::unique_lock<std::shared_mutex> lock(modelMu_);
  if (design_.contracts.count(contract.id)) {
    throw err(ErrorCode::DuplicateId, "contract " + contract.id + " already exists");
  }
  if (!design_.findRole(contract.roleA)) {
    throw err(ErrorCode::Reference, "no role " + contract.roleA);
  }
  if (!design_.findRole(contract.roleB)) {
    throw err(ErrorCode::Reference, "no role " + contract.roleB);
  }
  design_.contracts[contract.id] = contract;
  reps_[RepLocation{RepKind::PassThrough, contract.id}.str()].at = {RepKind::PassThrough,
                                                                    contract.id};
  elementStates_["contract:" + contract.id] = {ManagementState::Passive, 0};
  for (const auto& [tid, term] : contract.terms) {
    elementStates_["term:" + contract.id + "." + tid] = {ManagementState::Passive, 0};
  }
  bumpEpoch();
}

void NetworkRuntime::removeContract(const Id& contractId) {
  std::unique_lock<std::shared_mutex> lock(modelMu_);
  if (!design_.contracts.count(contractId)) {
    throw err(ErrorCode::NotFound, "no contract " + contractId);
  }
  requireQuiescence("contract:" + contractId);
  for (const auto& [rid, role] : design_.roles) {
    for (const auto& [tid, task] : role.tasks) {
      auto uses = [&](const std::vector<model::TermRef>& refs) {
        return std::any_of(refs.begin(), refs.end(),
                           [&](const model::TermRef& r) { return r.contract == contractId; });
      };
      if (uses(task.inputs) || uses(task.outputs)) {
        throw err(ErrorCode::Reference,
                  "contract " + contractId + " is still used by task " + rid + "." + tid);
      }
    }
  }
  for (const auto& [tid, term] : design_.contracts[contractId].terms) {
    elementStates_.erase("term:" + contractId + "." + tid);
  }
  design_.contracts.erase(contractId);
  reps_.erase(RepLocation{RepKind::PassThrough, contractId}.str());
  elementStates_.erase("contract:" + contractId);
  bumpEpoch();
}

void NetworkRuntime::updateContract(const Id& contractId, const std::string& property,
                                    const std::string& value) {
  if (property != "mgmtState") {
    throw err(ErrorCode::BadParams, "contract property must be mgmtState");
  }
  ManagementState target;
  if (!model::managementStateFromName(value, target)) {
    throw err(ErrorCode::BadParams, "bad management state " + value);
  }
  {
    std::shared_lock<std::shared_mutex> lock(modelMu_);
    if (!design_.contracts.count(contractId)) {
      throw err(ErrorCode::NotFound, "no contract " + contractId);
    }
  }
  setManagementState("contract:" + contractId, target);
}

void NetworkRuntime::addTerm(const Id& contractId, const model::TermSpec& term) {
  std::unique_lock<std::shared_mutex> lock(modelMu_);
  auto it = design_.contracts.find(contractId);
  if (it == design_.contracts.end()) throw err(ErrorCode::NotFound, "no contract " + contractId);
  if (it->second.terms.count(term.id)) {
    throw err(ErrorCode::DuplicateId,
              "term " + term.id + " already exists on contract " + contractId);
  }
  it->second.terms[term.id] = term;
  elementStates_["term:" + contractId + "." + term.id] = {ManagementState::Passive, 0};
  bumpEpoch();
}

void NetworkRuntime::removeTerm(const Id& contractId, const Id& termId) {
  std::unique_lock<std::shared_mutex> lock(modelMu_);
  auto it = design_.contracts.find(contractId);
  if (it == design_.contracts.end()) throw err(ErrorCode::NotFound, "no contract " + contractId);
  if (!it->second.terms.count(termId)) {
    throw err(ErrorCode::NotFound, "no term " + termId + " on contract " + contractId);
  }
  requireQuiescence("term:" + contractId + "." + termId);
  const model::TermRef ref{contractId, termId};
  for (const auto& [rid, role] : design_.roles) {
    for (const auto& [tid, task] : role.tasks) {
      if (std::count(task.inputs.begin(), task.inputs.end(), ref) ||
          std::count(task.outputs.begin(), task.outputs.end(), ref)) {
        throw err(ErrorCode::Reference,
                  "term " + ref.str() + " is still used by task " + rid + "." + tid);
      }
    }
  }
  it->second.terms.erase(termId);
  elementStates_.erase("term:" + contractId + "." + termId);
  bumpEpoch();
}

void NetworkRuntime::updateTerm(const Id& contractId, const Id& termId,
                                const model::MessageTemplate& tmplate) {
  std::unique_lock<std::shared_mutex> lock(modelMu_);
  auto it = design_.contracts.find(contractId);
  if (it == design_.contracts.end()) throw err(ErrorCode::NotFound, "no contract " + contractId);
  auto tit = it->second.terms.find(termId);
  if (tit == it->second.terms.end()) {
    throw err(ErrorCode::NotFound, "no term " + termId + " on contract " + contractId);
  }
  requireNotInUse("term:" + contractId + "." + termId);
  tit->second.tmplate = tmplate;
  bumpEpoch();
}

// ===========================================================================
// Rule and table operations
// ===========================================================================

void NetworkRuntime::addRules(const RepLocation& at, const std::string& rulesText) {
  auto parsed = regulation::parseRules(rulesText);
  std::unique_lock<std::shared_mutex> lock(modelMu_);
  RepRuntime& rep = repOrThrow(at);
  for (const auto& rule : parsed) {
    if (rep.knowledgebase.count(rule.id)) {
      throw err(ErrorCode::DuplicateId, "rule " + rule.id + " already exists at " + at.str());
    }
  }
  for (auto& rule : parsed) {
    rule.mgmtState = ManagementState::Passive;  // new elements start Passive
    rep.knowledgebase.emplace(rule.id, std::move(rule));
  }
  bumpEpoch();
}

void NetworkRuntime::removeRules(const RepLocation& at, const std::vector<Id>& ruleIds) {
  std::unique_lock<std::shared_mutex> lock(modelMu_);
  RepRuntime& rep = repOrThrow(at);
  for (const Id& id : ruleIds) {
    auto it = rep.knowledgebase.find(id);
    if (it == rep.knowledgebase.end()) {
      throw err(ErrorCode::NotFound, "no rule " + id + " at " + at.str());
    }
    if (it->second.mgmtState != ManagementState::Quiescence) {
      throw err(ErrorCode::QuiescenceRequired,
                "rule " + id + " at " + at.str() + " must reach quiescence before removal");
    }
    if (rep.table.referencesRule(id)) {
      throw err(ErrorCode::Reference,
                "rule " + id + " at " + at.str() + " is still referenced by table entries");
    }
  }
  for (const Id& id : ruleIds) rep.knowledgebase.erase(id);
  bumpEpoch();
}

void NetworkRuntime::updateRule(const RepLocation& at, const Id& ruleId,
                                const std::string& property, const std::string& value) {
  if (property == "mgmtState") {
    ManagementState target;
    if (!model::managementStateFromName(value, target)) {
      throw err(ErrorCode::BadParams, "bad management state " + value);
    }
    setManagementState("rule:" + at.str() + "/" + ruleId, target);
    return;
  }
  std::unique_lock<std::shared_mutex> lock(modelMu_);
  RepRuntime& rep = repOrThrow(at);
  auto it = rep.knowledgebase.find(ruleId);
  if (it == rep.knowledgebase.end()) {
    throw err(ErrorCode::NotFound, "no rule " + ruleId + " at " + at.str());
  }
  requireNotInUse("rule:" + at.str() + "/" + ruleId);
  if (property == "content") {
    auto parsed = regulation::parseSingleRule(value);
    if (parsed.id != ruleId) {
      throw err(ErrorCode::BadParams, "updated content renames rule " + ruleId + " to " +
                                          parsed.id + "; remove and add instead");
    }
    parsed.version = it->second.version + 1;
    parsed.mgmtState = it->second.mgmtState;
    parsed.passiveSince = it->second.passiveSince;
    it->second = std::move(parsed);
  } else if (property == "priority") {
    try {
      it->second.priority = std::stoi(value);
    } catch (...) {
      throw err(ErrorCode::BadParams, "priority must be an integer, got " + value);
    }
    ++it->second.version;
  } else {
    throw err(ErrorCode::BadParams, "rule property must be content|priority|mgmtState");
  }
  bumpEpoch();
}

void NetworkRuntime::addTableEntry(const RepLocation& at, const FlowKey& flow,
                                   const std::vector<Id>& ruleIds) {
  std::unique_lock<std::shared_mutex> lock(modelMu_);
  RepRuntime& rep = repOrThrow(at);
  for (const Id& id : ruleIds) {
    if (!rep.knowledgebase.count(id)) {
      throw err(ErrorCode::Reference, "no rule " + id + " at " + at.str());
    }
  }
  rep.table.addEntry(flow, ruleIds);
  bumpEpoch();
}

std::vector<Id> NetworkRuntime::removeTableEntry(const RepLocation& at, const FlowKey& flow) {
  std::unique_lock<std::shared_mutex> lock(modelMu_);
  RepRuntime& rep = repOrThrow(at);
  auto it = rep.table.entries().find(flow);
  if (it == rep.table.entries().end()) {
    throw err(ErrorCode::NoEntry, "no table entry at " + flow.str());
  }
  auto removed = rep.table.removeEntry(flow, it->second);
  bumpEpoch();
  return removed;
}

std::vector<Id> NetworkRuntime::removeTableEntryRules(const RepLocation& at, const FlowKey& flow,
                                                      const std::vector<Id>& ruleIds) {
  std::unique_lock<std::shared_mutex> lock(modelMu_);
  RepRuntime& rep = repOrThrow(at);
  if (!rep.table.entries().count(flow)) {
    throw err(ErrorCode::NoEntry, "no table entry at " + flow.str());
  }
  auto removed = rep.table.removeEntry(flow, ruleIds);
  bumpEpoch();
  return removed;
}

std::vector<Id> NetworkRuntime::replaceTableEntry(const RepLocation& at, const FlowKey& flow,
                                                  const std::vector<Id>& ruleIds) {
  std::unique_lock<std::shared_mutex> lock(modelMu_);
  RepRuntime& rep = repOrThrow(at);
  for (const Id& id : ruleIds) {
    if (!rep.knowledgebase.count(id)) {
      throw err(ErrorCode::Reference, "no rule " + id + " at " + at.str());
    }
  }
  auto previous = rep.table.replaceEntry(flow, ruleIds);
  bumpEpoch();
  return previous;
}

std::map<FlowKey, std::vector<Id>> NetworkRuntime::tableEntries(const RepLocation& at) const {
  std::shared_lock<std::shared_mutex> lock(modelMu_);
  const RepRuntime* rep = findRep(at);
  if (!rep) {
    throw err(ErrorCode::NotFound, "no enactment point at " + at.str());
  }
  return rep->table.entries();
}

// ===========================================================================
// VSN lifecycle
// ===========================================================================

void NetworkRuntime::deployVsnLocked(const model::VsnSpec& vsn) {
  if (findVsn(vsn.id)) throw err(ErrorCode::DuplicateVsn, "vsn " + vsn.id + " already deployed");

  for (const auto& [pid, process] : vsn.processes) {
    for (const auto& rid : process.path.roles) {
      if (!design_.findRole(rid)) {
        throw err(ErrorCode::Reference, "vsn " + vsn.id + ": no role " + rid);
      }
    }
    for (const auto& cid : process.path.contracts) {
      if (!design_.findContract(cid)) {
        throw err(ErrorCode::Reference, "vsn " + vsn.id + ": no contract " + cid);
      }
    }
    for (const auto& step : process.steps) {
      if (!design_.findTask(step.task)) {
        throw err(ErrorCode::Reference, "vsn " + vsn.id + ": no task " + step.task.str());
      }
    }
  }
  for (const auto& binding : vsn.policy) {
    const RepRuntime* rep = findRep(binding.at);
    if (!rep) throw err(ErrorCode::Reference, "vsn " + vsn.id + ": no point at " + binding.at.str());
    for (const Id& rid : binding.rules) {
      if (!rep->knowledgebase.count(rid)) {
        throw err(ErrorCode::Reference,
                  "vsn " + vsn.id + ": no rule " + rid + " at " + binding.at.str());
      }
    }
  }

  design_.vsns.push_back(vsn);
  elementStates_["vsn:" + vsn.id] = {};
  for (const auto& binding : vsn.policy) {
    repOrThrow(binding.at).table.addEntry(FlowKey{vsn.id, "", ""}, binding.rules);
  }
  bumpEpoch();
}

void NetworkRuntime::deployVsn(const model::VsnSpec& vsn) {
  std::unique_lock<std::shared_mutex> lock(modelMu_);
  deployVsnLocked(vsn);
}

model::VsnSpec NetworkRuntime::undeployVsn(const Id& vsnId, bool force) {
  std::vector<std::shared_ptr<ProcessInstance>> toTerminate;
  model::VsnSpec removed;
  {
    std::unique_lock<std::shared_mutex> lock(modelMu_);
    model::VsnSpec* vsn = findVsnMutable(vsnId);
    if (!vsn) throw err(ErrorCode::NotFound, "no vsn " + vsnId);

    {
      std::lock_guard<std::mutex> ilock(instMu_);
      for (const auto& [id, inst] : instances_) {
        if (inst->vsn == vsnId && isActive(inst->lifecycle)) toTerminate.push_back(inst);
      }
    }
    if (!toTerminate.empty() && !force) {
      throw err(ErrorCode::ActiveInstances,
                "vsn " + vsnId + " has " + std::to_string(toTerminate.size()) +
                    " active instances");
    }

    removed = *vsn;
    for (auto& [key, rep] : reps_) rep.table.dropVsn(vsnId);
    design_.vsns.erase(std::remove_if(design_.vsns.begin(), design_.vsns.end(),
                                      [&](const model::VsnSpec& v) { return v.id == vsnId; }),
                       design_.vsns.end());
    elementStates_.erase("vsn:" + vsnId);
    bumpEpoch();
  }
  for (auto& inst : toTerminate) {
    endInstance(inst, InstanceLifecycle::Terminated, "vsn undeployed");
  }
  afterStage();
  return removed;
}

model::ProcessDefinition NetworkRuntime::updateVsnProcess(const Id& vsnId,
                                                          const model::ProcessDefinition& p) {
  std::unique_lock<std::shared_mutex> lock(modelMu_);
  model::VsnSpec* vsn = findVsnMutable(vsnId);
  if (!vsn) throw err(ErrorCode::NotFound, "no vsn " + vsnId);
  for (const auto& rid : p.path.roles) {
    if (!design_.findRole(rid)) throw err(ErrorCode::Reference, "no role " + rid);
  }
  for (const auto& cid : p.path.contracts) {
    if (!design_.findContract(cid)) throw err(ErrorCode::Reference, "no contract " + cid);
  }
  for (const auto& step : p.steps) {
    if (!design_.findTask(step.task)) {
      throw err(ErrorCode::Reference, "no task " + step.task.str());
    }
  }
  model::ProcessDefinition previous;
  auto it = vsn->processes.find(p.id);
  if (it != vsn->processes.end()) previous = it->second;
  vsn->processes[p.id] = p;  // running instances keep their snapshot
  bumpEpoch();
  return previous;
}

// ===========================================================================
// Management states and quiescence
// ===========================================================================

void NetworkRuntime::publishMgmtState(const std::string& elementRef, ManagementState s) {
  mgmtEvents_.publish("sys.mgmt.state", {},
                      {{"element", elementRef}, {"state", std::string(managementStateName(s))}});
}

void NetworkRuntime::setManagementState(const std::string& elementRef, ManagementState target) {
  ElementRef ref = parseElementRef(elementRef);
  bool startedDraining = false;
  {
    std::unique_lock<std::shared_mutex> lock(modelMu_);
    ManagementState previous;
    if (ref.kind == "rule") {
      auto [loc, ruleId] = parseRuleRef(ref.rest);
      RepRuntime& rep = repOrThrow(loc);
      auto it = rep.knowledgebase.find(ruleId);
      if (it == rep.knowledgebase.end()) {
        throw err(ErrorCode::NotFound, "no rule " + ruleId + " at " + loc.str());
      }
      previous = it->second.mgmtState;
      if (!model::isAdminTransitionAllowed(previous, target)) {
        throw err(ErrorCode::IllegalTransition,
                  std::string(managementStateName(previous)) + " → " +
                      managementStateName(target) + " is not an admin transition");
      }
      it->second.mgmtState = target;
      if (target == ManagementState::Passive) {
        it->second.passiveSince = bumpEpoch();
      } else {
        it->second.passiveSince = 0;
        bumpEpoch();
      }
    } else {
      auto it = elementStates_.find(elementRef);
      if (it == elementStates_.end()) {
        throw err(ErrorCode::NotFound, "no element " + elementRef);
      }
      previous = it->second.state;
      if (!model::isAdminTransitionAllowed(previous, target)) {
        throw err(ErrorCode::IllegalTransition,
                  std::string(managementStateName(previous)) + " → " +
                      managementStateName(target) + " is not an admin transition");
      }
      it->second.state = target;
      if (target == ManagementState::Passive) {
        it->second.passiveSince = bumpEpoch();
      } else {
        it->second.passiveSince = 0;
        bumpEpoch();
      }
    }
    // Active→Passive begins a drain; Quiescence→Passive is the way back to
    // Active and must not be auto-reverted, so it clears the drain mark.
    if (previous == ManagementState::Active && target == ManagementState::Passive) {
      draining_.insert(elementRef);
      startedDraining = true;
    } else {
      draining_.erase(elementRef);
    }
  }
  publishMgmtState(elementRef, target);
  if (startedDraining) maybeEnterQuiescence(elementRef);
  quiesceCv_.notify_all();
}

model::ManagementState NetworkRuntime::managementState(const std::string& elementRef) const {
  ElementRef ref = parseElementRef(elementRef);
  std::shared_lock<std::shared_mutex> lock(modelMu_);
  if (ref.kind == "rule") {
    auto [loc, ruleId] = parseRuleRef(ref.rest);
    const RepRuntime* rep = findRep(loc);
    if (!rep) throw err(ErrorCode::NotFound, "no point at " + loc.str());
    auto it = rep->knowledgebase.find(ruleId);
    if (it == rep->knowledgebase.end()) {
      throw err(ErrorCode::NotFound, "no rule " + ruleId + " at " + loc.str());
    }
    return it->second.mgmtState;
  }
  auto it = elementStates_.find(elementRef);
  if (it == elementStates_.end()) throw err(ErrorCode::NotFound, "no element " + elementRef);
  return it->second.state;
}

std::size_t NetworkRuntime::dependentInstances(const std::string& elementRef) const {
  ElementRef ref = parseElementRef(elementRef);
  std::lock_guard<std::mutex> lock(instMu_);
  std::size_t n = 0;
  for (const auto& [id, inst] : instances_) {
    if (!isActive(inst->lifecycle)) continue;
    bool depends = false;
    if (ref.kind == "network") {
      depends = true;
    } else if (ref.kind == "vsn") {
      depends = inst->vsn == ref.rest;
    } else if (inst->procDef) {
      const auto& path = inst->procDef->path;
      if (ref.kind == "role") {
        depends = std::count(path.roles.begin(), path.roles.end(), ref.rest) > 0;
      } else if (ref.kind == "contract") {
        depends = std::count(path.contracts.begin(), path.contracts.end(), ref.rest) > 0;
      } else if (ref.kind == "task") {
        auto taskRef = model::TaskRef::parse(ref.rest);
        depends = std::any_of(inst->procDef->steps.begin(), inst->procDef->steps.end(),
                              [&](const model::EpcStep& s) { return s.task == taskRef; });
      } else if (ref.kind == "term") {
        auto termRef = model::TermRef::parse(ref.rest);
        depends =
            std::count(path.contracts.begin(), path.contracts.end(), termRef.contract) > 0;
      } else if (ref.kind == "rule") {
        auto [loc, ruleId] = parseRuleRef(ref.rest);
        const RepRuntime* rep = findRep(loc);
        if (rep) {
          for (const auto& [flow, ids] : rep->table.entries()) {
            if (flow.covers(inst->flow()) &&
                std::count(ids.begin(), ids.end(), ruleId) > 0) {
              depends = true;
              break;
            }
          }
        }
      }
    }
    if (depends) ++n;
  }
  return n;
}

void NetworkRuntime::maybeEnterQuiescence(const std::string& elementRef) {
  ElementRef ref = parseElementRef(elementRef);
  bool entered = false;
  {
    std::unique_lock<std::shared_mutex> lock(modelMu_);
    if (ref.kind == "rule") {
      auto [loc, ruleId] = parseRuleRef(ref.rest);
      RepRuntime* rep = findRep(loc);
      if (!rep) return;
      auto it = rep->knowledgebase.find(ruleId);
      if (it == rep->knowledgebase.end()) return;
      if (it->second.mgmtState == ManagementState::Passive &&
          dependentInstances(elementRef) == 0) {
        it->second.mgmtState = ManagementState::Quiescence;
        entered = true;
      }
    } else {
      auto it = elementStates_.find(elementRef);
      if (it == elementStates_.end()) return;
      if (it->second.state == ManagementState::Passive && dependentInstances(elementRef) == 0) {
        it->second.state = ManagementState::Quiescence;
        entered = true;
      }
    }
    if (entered) draining_.erase(elementRef);
  }
  if (entered) {
    publishMgmtState(elementRef, ManagementState::Quiescence);
    quiesceCv_.notify_all();
  }
}

void NetworkRuntime::refreshQuiescence() {
  std::vector<std::string> passive;
  {
    std::shared_lock<std::shared_mutex> lock(modelMu_);
    passive.assign(draining_.begin(), draining_.end());
  }
  for (const auto& ref : passive) maybeEnterQuiescence(ref);
}

bool NetworkRuntime::awaitQuiescence(const std::string& elementRef, int timeoutMs) {
  {
    // Waiting for quiescence is itself a drain request: a passive element
    // with no mark (e.g. freshly added) becomes eligible for auto-detection.
    std::unique_lock<std::shared_mutex> lock(modelMu_);
    draining_.insert(elementRef);
  }
  const auto deadline =
      std::chrono::steady_clock::now() + std::chrono::milliseconds(timeoutMs);
  for (;;) {
    maybeEnterQuiescence(elementRef);
    if (managementState(elementRef) == ManagementState::Quiescence) return true;
    if (std::chrono::steady_clock::now() >= deadline) return false;
    std::unique_lock<std::mutex> lock(quiesceMu_);
    quiesceCv_.wait_for(lock, std::chrono::milliseconds(10));
  }
}

void NetworkRuntime::requireQuiescence(const std::string& elementRef) const {
  auto it = elementStates_.find(elementRef);
  if (it == elementStates_.end()) return;  // unknown elements have no instances
  if (it->second.state != ManagementState::Quiescence) {
    throw err(ErrorCode::QuiescenceRequired,
              elementRef + " must reach quiescence before destructive changes");
  }
}

// Updates only need quiescence when some running instance depends on the
// element; an idle element may be edited in place regardless of its state.
void NetworkRuntime::requireNotInUse(const std::string& elementRef) const {
  if (dependentInstances(elementRef) > 0) {
    throw err(ErrorCode::QuiescenceRequired,
              elementRef + " is in use by running instances; passivate and drain first");
  }
}

// ===========================================================================
// Snapshots and footprint
// ===========================================================================

model::ServiceNetworkDesign NetworkRuntime::designSnapshot() const {
  std::shared_lock<std::shared_mutex> lock(modelMu_);
  model::ServiceNetworkDesign out = design_;
  out.ruleGroups.clear();
  for (const auto& [key, rep] : reps_) {
    if (rep.knowledgebase.empty()) continue;
    std::vector<regulation::RegulationRule> rules;
    for (const auto& [id, rule] : rep.knowledgebase) rules.push_back(rule);
    model::RuleGroup group;
    group.at = rep.at;
    group.text = regulation::rulesToText(rules);
    out.ruleGroups.push_back(std::move(group));
  }
  return out;
}

StructureSnapshot NetworkRuntime::snapshot() const {
  std::shared_lock<std::shared_mutex> lock(modelMu_);
  StructureSnapshot snap;

  for (const auto& [rid, role] : design_.roles) {
    std::ostringstream s;
    s << role.name << "|user=" << role.userRole << "|endpoint=" << role.binding.endpoint;
    for (const auto& [tid, task] : role.tasks) {
      s << "|task " << tid << ":";
      for (const auto& ref : task.inputs) s << " in " << ref.str();
      for (const auto& ref : task.outputs) s << " out " << ref.str();
      s << " req " << task.request.toLiteral() << " resp " << task.response.toLiteral();
    }
    snap.items["role:" + rid] = s.str();
  }
  for (const auto& [cid, contract] : design_.contracts) {
    std::ostringstream s;
    s << contract.roleA << "~" << contract.roleB;
    for (const auto& [tid, term] : contract.terms) {
      s << "|" << tid << " " << model::termDirectionName(term.direction) << " "
        << term.tmplate.toLiteral();
    }
    snap.items["contract:" + cid] = s.str();
  }
  for (const auto& [name, spec] : design_.transforms) {
    std::ostringstream s;
    for (const auto& [target, source] : spec.assign) s << target << "<-" << source << ";";
    snap.items["transform:" + name] = s.str();
  }
  for (const auto& [key, rep] : reps_) {
    for (const auto& [id, rule] : rep.knowledgebase) {
      regulation::RegulationRule canon = rule;  // strip change bookkeeping
      canon.version = 1;
      canon.mgmtState = ManagementState::Active;
      canon.passiveSince = 0;
      snap.items["rule:" + key + "/" + id] = canon.text();
    }
    for (const auto& [flow, ids] : rep.table.entries()) {
      std::ostringstream s;
      for (const auto& id : ids) s << id << ",";
      snap.items["table:" + key + "/" + flow.str()] = s.str();
    }
  }
  for (const auto& vsn : design_.vsns) {
    snap.items["vsn:" + vsn.id] = model::serializeVsn(vsn);
  }
  return snap;
}

FootprintReport NetworkRuntime::footprint() const {
  FootprintReport fp;
  {
    std::shared_lock<std::shared_mutex> lock(modelMu_);
    fp.roles = design_.roles.size();
    for (const auto& [rid, role] : design_.roles) fp.tasks += role.tasks.size();
    fp.contracts = design_.contracts.size();
    for (const auto& [cid, contract] : design_.contracts) fp.terms += contract.terms.size();
    fp.reps = reps_.size();
    for (const auto& [key, rep] : reps_) {
      fp.rules += rep.knowledgebase.size();
      fp.tableEntries += rep.table.entries().size();
    }
    fp.vsns = design_.vsns.size();
  }
  {
    std::lock_guard<std::mutex> lock(instMu_);
    for (const auto& [id, inst] : instances_) {
      if (isActive(inst->lifecycle)) ++fp.activeInstances;
      for (const auto& [key, store] : inst->stores) fp.storedMessages += store.size();
    }
  }
  fp.stateKeys = state_.snapshot("").size();
  return fp;
}

}  // namespace sdsn::enactment
