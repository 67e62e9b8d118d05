#include "sdsn/enactment/network_runtime.hpp"

#include <algorithm>
#include <cassert>
#include <chrono>
#include <thread>

#include "sdsn/core/error.hpp"

namespace sdsn::enactment {

using model::ManagementState;
using model::RepKind;
using model::RepLocation;
using regulation::Effect;
using regulation::FlowKey;

// ===========================================================================
// RepRuntime
// ===========================================================================

bool RepRuntime::noteMessageId(const Id& id, std::size_t cap) {
  if (recentIdSet.count(id)) return false;
  recentIdSet.insert(id);
  recentIds.push_back(id);
  while (recentIds.size() > cap) {
    recentIdSet.erase(recentIds.front());
    recentIds.pop_front();
  }
  return true;
}

std::set<Id> RepRuntime::referencedEvents() const {
  std::set<Id> names;
  for (const auto& [id, rule] : knowledgebase) {
    rule.condition.collectEvents(names);
  }
  return names;
}

std::vector<std::string> StructureSnapshot::diff(const StructureSnapshot& other) const {
  std::vector<std::string> out;
  for (const auto& [key, value] : items) {
    auto it = other.items.find(key);
    if (it == other.items.end()) {
      out.push_back("only left: " + key);
    } else if (it->second != value) {
      out.push_back("differs: " + key);
    }
  }
  for (const auto& [key, value] : other.items) {
    if (!items.count(key)) out.push_back("only right: " + key);
  }
  return out;
}

// ===========================================================================
// Condition scope bound to one stimulus
// ===========================================================================

namespace {

class EngineScope : public regulation::ConditionScope {
 public:
  EngineScope(const MessageEnvelope* env, const ProcessInstance* inst,
              eventstate::StateManager& state)
      : env_(env), inst_(inst), state_(state) {}

  std::optional<Scalar> msgField(const std::string& name) const override {
    if (!env_) return std::nullopt;
    if (auto header = env_->headerField(name)) return header;
    auto it = env_->body.find(name);
    if (it != env_->body.end()) return it->second;
    return std::nullopt;
  }

  bool eventOccurred(const std::string& name) const override {
    return inst_ && inst_->eventsSeen.count(name) > 0;
  }

  std::optional<Scalar> stateValue(const std::string& key) const override {
    return Scalar{state_.read(key).value};
  }

  std::optional<Scalar> flowAttr(const std::string& attr) const override {
    if (attr == "vsn") return Scalar{env_ ? env_->vsn : (inst_ ? inst_->vsn : "")};
    if (attr == "process") return Scalar{env_ ? env_->process : (inst_ ? inst_->process : "")};
    if (attr == "instance") return Scalar{env_ ? env_->instance : (inst_ ? inst_->id : "")};
    return std::nullopt;
  }

  std::optional<Scalar> clockAttr(const std::string& attr) const override {
    if (attr == "epochMs") return Scalar{nowMs()};
    if (attr == "unixSeconds") return Scalar{nowMs() / 1000};
    return std::nullopt;
  }

 private:
  const MessageEnvelope* env_;
  const ProcessInstance* inst_;
  eventstate::StateManager& state_;
};

bool allowedAfterReject(const std::string& fn) {
  return fn == "Drop" || fn == "Schedule" || fn == "PublishEvent" ||
         fn == "MonitorThroughput" || fn == "AdjustState";
}

std::optional<std::string> asText(const Scalar& v) {
  if (std::holds_alternative<std::string>(v)) return std::get<std::string>(v);
  return std::nullopt;
}

}  // namespace

// ===========================================================================
// EngineEffectBuilder — resolves catalog invocations against the live model.
// Failures during resolution become diagnostics and the action is skipped;
// the effects that do come out are guaranteed applicable.
// ===========================================================================

class EngineEffectBuilder : public regulation::EffectBuilder {
 public:
  EngineEffectBuilder(NetworkRuntime& rt, NetworkRuntime::StimulusContext& ctx,
                      std::vector<std::string>& diags)
      : rt_(rt), ctx_(ctx), diags_(diags), workingBody_(ctx.env.body) {}

  void build(const regulation::RegulationRule& rule,
             const regulation::FunctionInvocation& inv,
             std::vector<Effect>& out) override {
    if (rejected_ && !allowedAfterReject(inv.fn)) {
      diag(rule.id, inv.fn + " skipped after rejection");
      return;
    }
    if (inv.fn == "AdmissionControl") buildAdmission(rule, inv, out);
    else if (inv.fn == "LoadBalance") buildLoadBalance(rule, inv, out);
    else if (inv.fn == "Drop") out.push_back({rule.id, inv.fn, regulation::DropEffect{stringParam(inv, "reason", "dropped")}});
    else if (inv.fn == "Schedule") out.push_back({rule.id, inv.fn, regulation::ScheduleEffect{stringParam(inv, "queue", "default"), stringParam(inv, "stateKey", "")}});
    else if (inv.fn == "CreateInstance") buildCreateInstance(rule, inv, out);
    else if (inv.fn == "Route") buildRoute(rule, inv, out);
    else if (inv.fn == "Forward") out.push_back({rule.id, inv.fn, regulation::ForwardEffect{workingBody_}});
    else if (inv.fn == "PublishEvent") buildPublish(rule, inv, out);
    else if (inv.fn == "StoreMessage") out.push_back({rule.id, inv.fn, regulation::StoreMessageEffect{}});
    else if (inv.fn == "SynthesizeAndInvoke") buildSynthesize(rule, inv, out);
    else if (inv.fn == "Transform") buildTransform(rule, inv, out);
    else if (inv.fn == "AdjustState") out.push_back({rule.id, inv.fn, regulation::AdjustStateEffect{stringParam(inv, "key", ""), numberParam(inv, "delta", 0)}});
    else if (inv.fn == "MonitorResponseTime") out.push_back({rule.id, inv.fn, regulation::MonitorResponseTimeEffect{stringParam(inv, "key", "")}});
    else if (inv.fn == "MonitorThroughput") out.push_back({rule.id, inv.fn, regulation::MonitorThroughputEffect{stringParam(inv, "key", "")}});
    else if (inv.fn == "TerminateInstance") out.push_back({rule.id, inv.fn, regulation::TerminateEffect{stringParam(inv, "outcome", "completed")}});
    else diag(rule.id, "no effect mapping for " + inv.fn);
  }

 private:
  void diag(const Id& ruleId, const std::string& message) {
    diags_.push_back("rule " + ruleId + ": " + message);
  }

  std::string stringParam(const regulation::FunctionInvocation& inv, const std::string& key,
                          const std::string& fallback) const {
    auto it = inv.params.find(key);
    if (it == inv.params.end()) return fallback;
    if (auto s = asText(it->second)) return *s;
    return scalarToText(it->second);
  }

  double numberParam(const regulation::FunctionInvocation& inv, const std::string& key,
                     double fallback) const {
    auto it = inv.params.find(key);
    if (it == inv.params.end()) return fallback;
    if (std::holds_alternative<std::int64_t>(it->second))
      return static_cast<double>(std::get<std::int64_t>(it->second));
    if (std::holds_alternative<double>(it->second)) return std::get<double>(it->second);
    return fallback;
  }

  bool boolParam(const regulation::FunctionInvocation& inv, const std::string& key,
                 bool fallback) const {
    auto it = inv.params.find(key);
    if (it == inv.params.end()) return fallback;
    if (std::holds_alternative<bool>(it->second)) return std::get<bool>(it->second);
    if (auto s = asText(it->second)) return *s == "true";
    return fallback;
  }

  void buildAdmission(const regulation::RegulationRule& rule,
                      const regulation::FunctionInvocation& inv, std::vector<Effect>& out) {
    std::string key = stringParam(inv, "capacityKey", "");
    auto limit = static_cast<std::int64_t>(numberParam(inv, "limit", 0));
    std::int64_t current = 0;
    {
      const Scalar v = rt_.state_.read(key).value;
      if (std::holds_alternative<std::int64_t>(v)) {
        current = std::get<std::int64_t>(v);
      } else if (std::holds_alternative<double>(v)) {
        current = static_cast<std::int64_t>(std::get<double>(v));
      }
    }
    if (current < limit) {
      out.push_back({rule.id, inv.fn, regulation::AdmitEffect{key}});
      return;
    }
    rejected_ = true;
    out.push_back({rule.id, inv.fn,
                   regulation::RejectEffect{"capacity " + key + " at limit " +
                                            std::to_string(limit)}});
    if (stringParam(inv, "onReject", "drop") == "schedule") {
      std::string queue = stringParam(inv, "queue", key + ".queue");
      std::string stateKey = stringParam(inv, "queueKey", key);
      out.push_back({rule.id, inv.fn, regulation::ScheduleEffect{queue, stateKey}});
    }
  }

  void buildLoadBalance(const regulation::RegulationRule& rule,
                        const regulation::FunctionInvocation& inv, std::vector<Effect>& out) {
    const model::VsnSpec* vsn = rt_.findVsn(ctx_.env.vsn);
    if (!vsn || vsn->processes.empty()) {
      diag(rule.id, "LoadBalance: no processes for vsn " + ctx_.env.vsn);
      return;
    }
    std::vector<Id> ids;
    for (const auto& [pid, p] : vsn->processes) ids.push_back(pid);
    std::string strategy = stringParam(inv, "strategy", "roundRobin");
    Id chosen;
    if (strategy == "leastActive") {
      std::map<Id, std::size_t> active;
      {
        std::lock_guard<std::mutex> lock(rt_.instMu_);
        for (const auto& [iid, inst] : rt_.instances_) {
          if (inst->vsn == vsn->id && isActive(inst->lifecycle)) ++active[inst->process];
        }
      }
      chosen = ids.front();
      for (const auto& pid : ids) {
        if (active[pid] < active[chosen]) chosen = pid;
      }
    } else {  // roundRobin: counter advances when the instance is created
      std::size_t counter;
      {
        std::lock_guard<std::mutex> lock(rt_.lbMu_);
        counter = rt_.roundRobin_[vsn->id];
      }
      chosen = ids[counter % ids.size()];
    }
    chosenProcess_ = chosen;
    out.push_back({rule.id, inv.fn, regulation::ChooseProcessEffect{chosen}});
  }

  void buildCreateInstance(const regulation::RegulationRule& rule,
                           const regulation::FunctionInvocation& inv,
                           std::vector<Effect>& out) {
    Id process = stringParam(inv, "process", "");
    if (process.empty()) process = chosenProcess_;
    if (process.empty() && !ctx_.env.process.empty()) process = ctx_.env.process;
    const model::VsnSpec* vsn = rt_.findVsn(ctx_.env.vsn);
    if (!vsn) {
      diag(rule.id, "CreateInstance: unknown vsn " + ctx_.env.vsn);
      return;
    }
    if (process.empty()) {
      if (vsn->processes.size() == 1) process = vsn->processes.begin()->first;
      else {
        diag(rule.id, "CreateInstance: process ambiguous for vsn " + vsn->id);
        return;
      }
    }
    if (!vsn->processes.count(process)) {
      diag(rule.id, "CreateInstance: vsn " + vsn->id + " has no process " + process);
      return;
    }
    out.push_back({rule.id, inv.fn, regulation::CreateInstanceEffect{process}});
  }

  void buildRoute(const regulation::RegulationRule& rule,
                  const regulation::FunctionInvocation& inv, std::vector<Effect>& out) {
    if (!ctx_.instance || !ctx_.instance->procDef) {
      diag(rule.id, "Route: no instance in flow");
      return;
    }
    const Id from = ctx_.rep->at.element;  // role whose routing point fired
    const Id to = stringParam(inv, "to", "");
    const auto& path = ctx_.instance->procDef->path;

    const model::ContractSpec* contract = nullptr;
    for (const auto& cid : path.contracts) {
      const model::ContractSpec* c = rt_.design_.findContract(cid);
      if (!c) continue;
      if ((c->roleA == from && c->roleB == to) || (c->roleA == to && c->roleB == from)) {
        if (contract) {
          diag(rule.id, "Route: more than one contract joins " + from + " and " + to);
          return;
        }
        contract = c;
      }
    }
    if (!contract) {
      // Off the instance's path: this is a regulation fault, not a skippable
      // resolution hiccup — the instance must not continue on a foreign path.
      out.push_back({rule.id, inv.fn,
                     regulation::FaultInstanceEffect{"PathViolationError",
                                                     "route target " + to +
                                                     " is off the path of process " +
                                                     ctx_.instance->process}});
      return;
    }

    Id termId = stringParam(inv, "term", "");
    if (termId.empty()) {
      // Unique term travelling from → to. A routed envelope is always a new
      // request-leg interaction, whatever stimulus triggered the routing.
      const bool fromIsA = contract->roleA == from;
      for (const auto& [tid, term] : contract->terms) {
        const bool travels =
            (term.direction == model::TermDirection::AtoB) ? fromIsA : !fromIsA;
        if (!travels) continue;
        if (!termId.empty()) {
          diag(rule.id, "Route: term ambiguous on contract " + contract->id);
          return;
        }
        termId = tid;
      }
      if (termId.empty()) {
        diag(rule.id, "Route: no term flows from " + from + " on contract " + contract->id);
        return;
      }
    }
    const model::TermSpec* term = rt_.design_.findTerm({contract->id, termId});
    if (!term) {
      diag(rule.id, "Route: contract " + contract->id + " has no term " + termId);
      return;
    }

    // Project the working body through the term template.
    FieldMap body;
    for (const auto& [field, kind] : term->tmplate.fields) {
      auto it = workingBody_.find(field);
      if (it == workingBody_.end()) {
        diag(rule.id, "TemplateError: field " + field + " of " + term->tmplate.name +
                          " missing from message");
        return;
      }
      body[field] = it->second;
    }
    if (auto problem = term->tmplate.validate(body)) {
      diag(rule.id, "TemplateError: " + *problem);
      return;
    }

    regulation::RouteEffect e;
    e.contract = contract->id;
    e.term = termId;
    e.toRole = to;
    e.direction = MessageDirection::Request;
    e.body = std::move(body);
    out.push_back({rule.id, inv.fn, std::move(e)});
  }

  void buildPublish(const regulation::RegulationRule& rule,
                    const regulation::FunctionInvocation& inv, std::vector<Effect>& out) {
    regulation::PublishEventEffect e;
    e.name = stringParam(inv, "name", "");
    if (boolParam(inv, "withBody", false)) e.payload = workingBody_;
    out.push_back({rule.id, inv.fn, std::move(e)});
  }

  void buildSynthesize(const regulation::RegulationRule& rule,
                       const regulation::FunctionInvocation& inv, std::vector<Effect>& out) {
    if (!ctx_.instance) {
      diag(rule.id, "SynthesizeAndInvoke: no instance in flow");
      return;
    }
    const Id roleId = ctx_.rep->at.element;
    const Id taskId = stringParam(inv, "task", "");
    const model::TaskSpec* task = rt_.design_.findTask({roleId, taskId});
    if (!task) {
      diag(rule.id, "SynthesizeAndInvoke: role " + roleId + " has no task " + taskId);
      return;
    }
    auto stateIt = ctx_.instance->taskStates.find(taskId);
    if (stateIt != ctx_.instance->taskStates.end() && stateIt->second != TaskState::Pending) {
      diag(rule.id, "SynthesizeAndInvoke: task " + taskId + " already " +
                        taskStateName(stateIt->second));
      return;
    }

    const std::string storeKey = ctx_.rep->at.str();
    auto storesIt = ctx_.instance->stores.find(storeKey);
    static const std::vector<StoredEnvelope> kNoStored;
    const std::vector<StoredEnvelope>& stored =
        storesIt == ctx_.instance->stores.end() ? kNoStored : storesIt->second;

    // Merge: for every request field, input terms are searched in their
    // declared order and the field comes from the first stored (unconsumed)
    // envelope of that term which carries it. Deterministic regardless of
    // arrival order.
    FieldMap body;
    std::vector<Id> consumed;
    for (const auto& [field, kind] : task->request.fields) {
      bool found = false;
      for (const auto& input : task->inputs) {
        for (const auto& se : stored) {
          if (se.env.interaction != input.term) continue;
          if (se.consumedBy.count(taskId)) continue;
          auto fit = se.env.body.find(field);
          if (fit == se.env.body.end()) continue;
          body[field] = fit->second;
          if (std::find(consumed.begin(), consumed.end(), se.env.messageId) == consumed.end())
            consumed.push_back(se.env.messageId);
          found = true;
          break;
        }
        if (found) break;
      }
      if (!found) {
        // The conjunction held, so the inputs were supposed to be in the
        // stores; an unfillable field is a template breach, not a retry case.
        out.push_back({rule.id, inv.fn,
                       regulation::FaultInstanceEffect{
                           "TemplateError",
                           "field " + field + " of " + task->request.name +
                           " cannot be synthesized for task " + taskId}});
        return;
      }
    }
    if (auto problem = task->request.validate(body)) {
      out.push_back({rule.id, inv.fn,
                     regulation::FaultInstanceEffect{"TemplateError", *problem}});
      return;
    }

    regulation::SynthesizeEffect e;
    e.task = {roleId, taskId};
    e.requestBody = std::move(body);
    e.consumedMessageIds = std::move(consumed);
    out.push_back({rule.id, inv.fn, std::move(e)});
  }

  void buildTransform(const regulation::RegulationRule& rule,
                      const regulation::FunctionInvocation& inv, std::vector<Effect>& out) {
    std::string specName = stringParam(inv, "spec", "");
    auto it = rt_.design_.transforms.find(specName);
    if (it == rt_.design_.transforms.end()) {
      diag(rule.id, "Transform: unknown spec " + specName);
      return;
    }
    auto strip = [](const std::string& path) {
      return path.rfind("msg.", 0) == 0 ? path.substr(4) : path;
    };
    // Applied to the working copy: later actions of this stimulus see the
    // rewritten fields, the original envelope stays untouched.
    FieldMap before = workingBody_;
    for (const auto& [target, source] : it->second.assign) {
      auto src = before.find(strip(source));
      if (src != before.end()) workingBody_[strip(target)] = src->second;
    }
    out.push_back({rule.id, inv.fn, regulation::TransformEffect{specName}});
  }

  NetworkRuntime& rt_;
  NetworkRuntime::StimulusContext& ctx_;
  std::vector<std::string>& diags_;
  FieldMap workingBody_;
  Id chosenProcess_;
  bool rejected_ = false;
};

// ===========================================================================
// NetworkRuntime — construction
// ===========================================================================

NetworkRuntime::NetworkRuntime(model::ServiceNetworkDesign design, ServiceInvoker& invoker,
                               FlowExecutor& executor, bool elementsStartActive)
    : name_(design.name), design_(std::move(design)), invoker_(invoker), executor_(executor) {
  installDesign();
  if (!elementsStartActive) {
    for (auto& [ref, es] : elementStates_) es = {ManagementState::Passive, 0};
    for (auto& [key, rep] : reps_) {
      for (auto& [id, rule] : rep.knowledgebase) {
        rule.mgmtState = ManagementState::Passive;
        rule.passiveSince = 0;
      }
    }
  }
}

void NetworkRuntime::installDesign() {
  auto makeRep = [this](const RepLocation& at) {
    RepRuntime& rep = reps_[at.str()];
    rep.at = at;
  };
  elementStates_["network"] = {};
  for (const auto& [rid, role] : design_.roles) {
    makeRep({RepKind::Routing, rid});
    makeRep({RepKind::Synchronization, rid});
    elementStates_["role:" + rid] = {};
    for (const auto& [tid, task] : role.tasks) {
      elementStates_["task:" + rid + "." + tid] = {};
    }
  }
  for (const auto& [cid, contract] : design_.contracts) {
    makeRep({RepKind::PassThrough, cid});
    elementStates_["contract:" + cid] = {};
    for (const auto& [tid, term] : contract.terms) {
      elementStates_["term:" + cid + "." + tid] = {};
    }
  }
  makeRep({RepKind::Coordinated, ""});

  for (const auto& group : design_.ruleGroups) {
    RepRuntime& rep = repOrThrow(group.at);
    for (auto& rule : regulation::parseRules(group.text)) {
      if (rep.knowledgebase.count(rule.id)) {
        throw err(ErrorCode::DuplicateId,
                  "rule " + rule.id + " declared twice at " + group.at.str());
      }
      rep.knowledgebase.emplace(rule.id, std::move(rule));
    }
  }

  std::vector<model::VsnSpec> vsns;
  vsns.swap(design_.vsns);
  for (const auto& vsn : vsns) deployVsnLocked(vsn);
}

void NetworkRuntime::activateAll() {
  std::vector<std::string> flipped;
  {
    std::unique_lock<std::shared_mutex> lock(modelMu_);
    for (auto& [ref, es] : elementStates_) {
      if (es.state == ManagementState::Passive) {
        es = {ManagementState::Active, 0};
        flipped.push_back(ref);
      }
    }
    for (auto& [key, rep] : reps_) {
      for (auto& [id, rule] : rep.knowledgebase) {
        if (rule.mgmtState == ManagementState::Passive) {
          rule.mgmtState = ManagementState::Active;
          rule.passiveSince = 0;
          flipped.push_back("rule:" + key + "/" + id);
        }
      }
    }
    for (const auto& ref : flipped) draining_.erase(ref);
    if (!flipped.empty()) bumpEpoch();
  }
  for (const auto& ref : flipped) publishMgmtState(ref, ManagementState::Active);
  quiesceCv_.notify_all();
}

// ===========================================================================
// Lookup and gatekeeping
// ===========================================================================

bool NetworkRuntime::elementServes(const ElementState& es,
                                   const std::shared_ptr<ProcessInstance>& inst) const {
  switch (es.state) {
    case ManagementState::Active: return true;
    case ManagementState::Passive: return inst && inst->epoch < es.passiveSince;
    case ManagementState::Quiescence: return false;
  }
  return false;
}

std::vector<const regulation::RegulationRule*> NetworkRuntime::lookupRules(
    const RepRuntime& rep, const FlowKey& flow, const std::shared_ptr<ProcessInstance>& inst,
    std::vector<std::string>* whyNot) {
  std::vector<const regulation::RegulationRule*> out;
  for (const Id& id : rep.table.lookup(flow)) {  // throws NoEntry
    auto it = rep.knowledgebase.find(id);
    if (it == rep.knowledgebase.end()) {
      if (whyNot) whyNot->push_back("table names unknown rule " + id + " at " + rep.at.str());
      continue;
    }
    const regulation::RegulationRule& rule = it->second;
    ElementState ruleState{rule.mgmtState, rule.passiveSince};
    if (!elementServes(ruleState, inst)) {
      if (whyNot) whyNot->push_back("rule " + id + " is not serving this flow");
      continue;
    }
    out.push_back(&rule);
  }
  return out;
}

RepRuntime* NetworkRuntime::findRep(const RepLocation& at) {
  auto it = reps_.find(at.str());
  return it == reps_.end() ? nullptr : &it->second;
}

const RepRuntime* NetworkRuntime::findRep(const RepLocation& at) const {
  auto it = reps_.find(at.str());
  return it == reps_.end() ? nullptr : &it->second;
}

RepRuntime& NetworkRuntime::repOrThrow(const RepLocation& at) {
  RepRuntime* rep = findRep(at);
  if (!rep) throw err(ErrorCode::NotFound, "no enactment point at " + at.str());
  return *rep;
}

const model::VsnSpec* NetworkRuntime::findVsn(const Id& id) const {
  for (const auto& v : design_.vsns) {
    if (v.id == id) return &v;
  }
  return nullptr;
}

model::VsnSpec* NetworkRuntime::findVsnMutable(const Id& id) {
  for (auto& v : design_.vsns) {
    if (v.id == id) return &v;
  }
  return nullptr;
}

std::shared_ptr<ProcessInstance> NetworkRuntime::findInstance(const Id& id) const {
  std::lock_guard<std::mutex> lock(instMu_);
  auto it = instances_.find(id);
  return it == instances_.end() ? nullptr : it->second;
}

std::string NetworkRuntime::strandLabel(const MessageEnvelope& env) const {
  return name_ + "/" + (env.instance.empty() ? env.messageId : env.instance);
}

// ===========================================================================
// Ingress
// ===========================================================================

Id NetworkRuntime::ingress(MessageEnvelope env) {
  if (env.at == 0) env.at = nowMs();
  if (env.messageId.empty()) env.messageId = newToken();

  std::shared_lock<std::shared_mutex> model(modelMu_);

  auto networkState = elementStates_.find("network");
  if (networkState != elementStates_.end() &&
      networkState->second.state != ManagementState::Active && env.kind == MessageKind::Instantiation) {
    throw err(ErrorCode::PassiveElement, "network " + name_ + " is not accepting new instances");
  }

  const model::RoleSpec* role = design_.findRole(env.destRole);
  if (!role) throw err(ErrorCode::NotFound, "no role " + env.destRole + " in network " + name_);

  if (env.kind == MessageKind::Instantiation) {
    if (!role->userRole) {
      throw err(ErrorCode::PathViolation,
                "role " + role->id + " is not a user entry point");
    }
    // An unknown VSN surfaces as NoEntry below (its table entries were removed
    // with it); only a known VSN carries management state worth checking.
    if (findVsn(env.vsn)) {
      auto vsnState = elementStates_.find("vsn:" + env.vsn);
      if (vsnState != elementStates_.end() &&
          vsnState->second.state != ManagementState::Active) {
        throw err(ErrorCode::PassiveElement,
                  "vsn " + env.vsn + " is not accepting new instances");
      }
    }
    auto roleState = elementStates_.find("role:" + role->id);
    if (roleState != elementStates_.end() && roleState->second.state != ManagementState::Active) {
      throw err(ErrorCode::PassiveElement, "role " + role->id + " is not accepting new instances");
    }

    StimulusContext ctx{env, nullptr, &repOrThrow({RepKind::Routing, role->id}), std::nullopt};
    regulation::ExecOutcome outcome;
    {
      // Admission is a read-check-act on the capacity counters; serialize it
      // so two bursts cannot both observe the last free slot.
      std::lock_guard<std::mutex> admission(admitMu_);
      try {
        outcome = evaluate(ctx);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::NoEntry) {
          audit("NoEntryError", e.what(), env.flow());
        }
        throw;
      }
      applyEffects(ctx, outcome);
    }

    bool parked = std::any_of(outcome.effects.begin(), outcome.effects.end(),
                              [](const regulation::Effect& fx) {
                                return std::holds_alternative<regulation::ScheduleEffect>(fx.body);
                              });
    for (const auto& effect : outcome.effects) {
      if (const auto* reject = std::get_if<regulation::RejectEffect>(&effect.body)) {
        if (parked) return Id{};  // parked for retry, not refused
        throw err(ErrorCode::Rejected, reject->reason);
      }
    }
    if (!ctx.instance) {
      throw err(ErrorCode::Rejected, "no admission rule created an instance");
    }

    // Re-inject the admitted message as the first in-flow stimulus.
    MessageEnvelope flow = env;
    flow.kind = MessageKind::RoleService;
    flow.instance = ctx.instance->id;
    flow.process = ctx.instance->process;
    const Id roleId = role->id;
    const Id instanceId = ctx.instance->id;
    executor_.post(strandLabel(flow), [this, roleId, flow] { stageRouting(roleId, flow); });
    return instanceId;
  }

  // Mid-flow message from outside (e.g. a user follow-up): must name a live
  // instance and enters at the named role's routing point.
  if (env.instance.empty()) {
    throw err(ErrorCode::PathViolation, "non-instantiation ingress requires an instance header");
  }
  auto inst = findInstance(env.instance);
  if (!inst) throw err(ErrorCode::NotFound, "no instance " + env.instance);
  env.vsn = inst->vsn;
  env.process = inst->process;
  const Id roleId = role->id;
  const MessageEnvelope queued = env;
  executor_.post(strandLabel(env), [this, roleId, queued] { stageRouting(roleId, queued); });
  return inst->id;
}

// ===========================================================================
// Pipeline stages (strand context)
// ===========================================================================

namespace {
// Buffers the re-run of a stage while its instance is paused.
bool bufferIfPaused(const std::shared_ptr<ProcessInstance>& inst, std::mutex& instMu,
                    std::function<void()> replay) {
  if (!inst) return false;
  std::lock_guard<std::mutex> lock(instMu);
  if (inst->lifecycle != InstanceLifecycle::Paused) return false;
  inst->buffered.push_back(std::move(replay));
  return true;
}
}  // namespace

void NetworkRuntime::stageRouting(const Id& roleId, MessageEnvelope env) {
  auto inst = findInstance(env.instance);
  if (bufferIfPaused(inst, instMu_, [this, roleId, env] { stageRouting(roleId, env); })) return;
  if (inst && !isActive(inst->lifecycle)) {
    audit("drop", "stimulus after instance end at routing:" + roleId, env.flow());
    return;
  }
  {
    std::shared_lock<std::shared_mutex> model(modelMu_);
    RepRuntime* rep = findRep({RepKind::Routing, roleId});
    if (!rep) {
      audit("NotFoundError", "no routing point for role " + roleId, env.flow());
      return;
    }
    auto stateIt = elementStates_.find("role:" + roleId);
    if (stateIt != elementStates_.end() && !elementServes(stateIt->second, inst)) {
      audit("PassiveElementError", "role " + roleId + " not serving this flow", env.flow());
      return;
    }
    StimulusContext ctx{std::move(env), inst, rep, std::nullopt};
    try {
      auto outcome = evaluate(ctx);
      applyEffects(ctx, outcome);
    } catch (const Error& e) {
      audit(errorCodeName(e.code()), e.what(), ctx.env.flow());
    }
  }
  afterStage();
}

void NetworkRuntime::stagePassThrough(const Id& contractId, MessageEnvelope env) {
  auto inst = findInstance(env.instance);
  if (bufferIfPaused(inst, instMu_, [this, contractId, env] { stagePassThrough(contractId, env); }))
    return;
  if (inst && !isActive(inst->lifecycle)) {
    audit("drop", "stimulus after instance end at pass:" + contractId, env.flow());
    return;
  }
  {
    std::shared_lock<std::shared_mutex> model(modelMu_);
    RepRuntime* rep = findRep({RepKind::PassThrough, contractId});
    if (!rep) {
      audit("NotFoundError", "no pass-through point for contract " + contractId, env.flow());
      return;
    }
    auto stateIt = elementStates_.find("contract:" + contractId);
    if (stateIt != elementStates_.end() && !elementServes(stateIt->second, inst)) {
      audit("PassiveElementError", "contract " + contractId + " not serving this flow",
            env.flow());
      return;
    }
    {
      std::lock_guard<std::mutex> ring(ringMu_);
      if (!rep->noteMessageId(env.messageId)) {
        audit("duplicate", "message " + env.messageId + " replayed at pass:" + contractId,
              env.flow());
        return;
      }
    }
    StimulusContext ctx{std::move(env), inst, rep, std::nullopt};
    try {
      auto outcome = evaluate(ctx);
      applyEffects(ctx, outcome);
    } catch (const Error& e) {
      audit(errorCodeName(e.code()), e.what(), ctx.env.flow());
    }
  }
  afterStage();
}

void NetworkRuntime::stageSynchronization(const Id& roleId, MessageEnvelope env) {
  auto inst = findInstance(env.instance);
  if (bufferIfPaused(inst, instMu_, [this, roleId, env] { stageSynchronization(roleId, env); }))
    return;
  if (!inst || !isActive(inst->lifecycle)) {
    audit("drop", "stimulus without live instance at sync:" + roleId, env.flow());
    return;
  }
  {
    std::shared_lock<std::shared_mutex> model(modelMu_);
    RepRuntime* rep = findRep({RepKind::Synchronization, roleId});
    if (!rep) {
      audit("NotFoundError", "no synchronization point for role " + roleId, env.flow());
      return;
    }
    auto stateIt = elementStates_.find("role:" + roleId);
    if (stateIt != elementStates_.end() && !elementServes(stateIt->second, inst)) {
      audit("PassiveElementError", "role " + roleId + " not serving this flow", env.flow());
      return;
    }

    // Arriving role-to-role envelopes are stored unconditionally; rules then
    // decide what the stored set enables.
    if (env.kind == MessageKind::RoleRole) {
      std::lock_guard<std::mutex> lock(instMu_);
      auto& store = inst->stores[rep->at.str()];
      bool seen = std::any_of(store.begin(), store.end(), [&](const StoredEnvelope& se) {
        return se.env.messageId == env.messageId;
      });
      if (!seen) store.push_back({env, {}});
    }

    StimulusContext ctx{std::move(env), inst, rep, std::nullopt};
    try {
      auto outcome = evaluate(ctx);
      applyEffects(ctx, outcome);
    } catch (const Error& e) {
      audit(errorCodeName(e.code()), e.what(), ctx.env.flow());
    }
  }
  afterStage();
}

void NetworkRuntime::runEventCascade(const Id& instanceId) {
  auto inst = findInstance(instanceId);
  if (bufferIfPaused(inst, instMu_, [this, instanceId] { runEventCascade(instanceId); })) return;
  if (!inst || !isActive(inst->lifecycle)) return;
  {
    std::shared_lock<std::shared_mutex> model(modelMu_);
    if (!inst->procDef) return;

    // Event-conditioned rules at every synchronization point on the path plus
    // the coordinated point get one evaluation pass; refraction keeps rules
    // from firing twice.
    std::vector<RepLocation> points;
    for (const auto& rid : inst->procDef->path.roles) {
      points.push_back({RepKind::Synchronization, rid});
    }
    points.push_back({RepKind::Coordinated, ""});

    for (const auto& at : points) {
      if (!isActive(inst->lifecycle)) break;  // a terminate in the cascade ends it
      RepRuntime* rep = findRep(at);
      if (!rep) continue;
      if (at.kind == RepKind::Synchronization) {
        auto stateIt = elementStates_.find("role:" + at.element);
        if (stateIt != elementStates_.end() && !elementServes(stateIt->second, inst)) continue;
      }
      MessageEnvelope pseudo;  // event stimulus carries flow headers only
      pseudo.vsn = inst->vsn;
      pseudo.process = inst->process;
      pseudo.instance = inst->id;
      StimulusContext ctx{std::move(pseudo), inst, rep, std::nullopt};
      ctx.eventStimulus = true;
      try {
        auto outcome = evaluate(ctx);
        applyEffects(ctx, outcome);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NoEntry) {
          audit(errorCodeName(e.code()), e.what(), inst->flow());
        }
      }
    }
  }
  afterStage();
}

void NetworkRuntime::onServiceReply(const Id& instanceId, const Id& messageId,
                                    ServiceReply reply) {
  auto inst = findInstance(instanceId);
  if (bufferIfPaused(inst, instMu_,
                     [this, instanceId, messageId, reply] {
                       onServiceReply(instanceId, messageId, reply);
                     }))
    return;
  if (!inst || !isActive(inst->lifecycle)) {
    audit("CorrelationError", "service reply for ended instance " + instanceId, {});
    return;
  }

  InFlightCall call;
  {
    std::lock_guard<std::mutex> lock(instMu_);
    auto it = inst->pendingCalls.find(messageId);
    if (it == inst->pendingCalls.end()) {
      audit("CorrelationError", "no pending call " + messageId, inst->flow());
      return;
    }
    call = it->second;
    inst->pendingCalls.erase(it);
  }
  const std::int64_t latencyMs = monotonicNs() / 1000000 - call.sentAt;

  if (!reply.ok) {
    audit("ServiceFaultError", call.task.str() + ": " + reply.error, inst->flow());
    {
      std::lock_guard<std::mutex> lock(instMu_);
      inst->taskStates[call.task.task] = TaskState::Faulted;
    }
    endInstance(inst, InstanceLifecycle::Faulted, "service fault at " + call.task.str());
    afterStage();
    return;
  }

  {
    std::shared_lock<std::shared_mutex> model(modelMu_);
    const model::TaskSpec* task = design_.findTask(call.task);
    if (task) {
      if (auto problem = task->response.validate(reply.body)) {
        model.unlock();
        audit("TemplateError", call.task.str() + " response: " + *problem, inst->flow());
        {
          std::lock_guard<std::mutex> lock(instMu_);
          inst->taskStates[call.task.task] = TaskState::Faulted;
        }
        endInstance(inst, InstanceLifecycle::Faulted, "bad response from " + call.task.str());
        afterStage();
        return;
      }
    }
  }

  {
    std::lock_guard<std::mutex> lock(instMu_);
    inst->taskStates[call.task.task] = TaskState::Completed;
  }

  MessageEnvelope response;
  response.vsn = inst->vsn;
  response.process = inst->process;
  response.instance = inst->id;
  response.messageId = messageId;
  response.interaction = call.task.task;
  response.kind = MessageKind::RoleService;
  response.direction = MessageDirection::Response;
  response.sourceRole = call.task.role;
  response.destRole = call.task.role;
  response.body = std::move(reply.body);
  response.at = nowMs();

  {
    std::shared_lock<std::shared_mutex> model(modelMu_);
    RepRuntime* rep = findRep({RepKind::Routing, call.task.role});
    if (rep) {
      StimulusContext ctx{std::move(response), inst, rep, latencyMs};
      try {
        auto outcome = evaluate(ctx);
        applyEffects(ctx, outcome);
      } catch (const Error& e) {
        audit(errorCodeName(e.code()), e.what(), inst->flow());
      }
    }
  }

  checkNaturalCompletion(inst);
  afterStage();
}

void NetworkRuntime::afterStage() {
  if (pendingQuiescenceCheck_.exchange(false)) refreshQuiescence();
}

// ===========================================================================
// Evaluation and effect application
// ===========================================================================

regulation::ExecOutcome NetworkRuntime::evaluate(StimulusContext& ctx) {
  const std::string repKey = ctx.rep->at.str();
  FlowKey flow = ctx.instance ? ctx.instance->flow() : ctx.env.flow();

  std::vector<std::string> preDiags;
  auto candidates = lookupRules(*ctx.rep, flow, ctx.instance, &preDiags);

  // Translate versioned refraction marks into plain ids for the current
  // knowledgebase: an updated rule (new version) may fire again.
  std::set<Id> refracted;
  if (ctx.instance) {
    std::lock_guard<std::mutex> lock(instMu_);
    auto marks = ctx.instance->firedRules.find(repKey);
    if (marks != ctx.instance->firedRules.end()) {
      for (const auto* rule : candidates) {
        if (marks->second.count(rule->id + "#" + std::to_string(rule->version))) {
          refracted.insert(rule->id);
        }
      }
    }
  }

  EngineScope scope(ctx.eventStimulus ? nullptr : &ctx.env, ctx.instance.get(), state_);
  std::vector<std::string> buildDiags;
  EngineEffectBuilder builder(*this, ctx, buildDiags);
  auto outcome = regulation::executeRuleSet(candidates, scope, refracted, builder);

  outcome.diagnostics.insert(outcome.diagnostics.begin(), preDiags.begin(), preDiags.end());
  outcome.diagnostics.insert(outcome.diagnostics.end(), buildDiags.begin(), buildDiags.end());

  if (ctx.instance && !outcome.firedEventRules.empty()) {
    std::lock_guard<std::mutex> lock(instMu_);
    auto& marks = ctx.instance->firedRules[repKey];
    for (const Id& id : outcome.firedEventRules) {
      for (const auto* rule : candidates) {
        if (rule->id == id) {
          marks.insert(id + "#" + std::to_string(rule->version));
          break;
        }
      }
    }
  }

  recordFires(ctx.rep->at, outcome.fired);
  for (const auto& d : outcome.diagnostics) audit("diagnostic", repKey + ": " + d, flow);
  return outcome;
}

void NetworkRuntime::applyEffects(StimulusContext& ctx, const regulation::ExecOutcome& outcome) {
  std::string lastAdmitKey;
  bool cascade = false;

  for (const auto& effect : outcome.effects) {
    std::visit(
        [&](const auto& e) {
          using E = std::decay_t<decltype(e)>;

          if constexpr (std::is_same_v<E, regulation::AdmitEffect>) {
            if (!e.capacityKey.empty()) {
              state_.adjust(e.capacityKey, 1);
              lastAdmitKey = e.capacityKey;
            }
          } else if constexpr (std::is_same_v<E, regulation::RejectEffect>) {
            if (!lastAdmitKey.empty()) {  // an earlier rule admitted; undo it
              state_.adjust(lastAdmitKey, -1, true);
              lastAdmitKey.clear();
            }
            {
              std::lock_guard<std::mutex> lock(instMu_);
              ++counters_.rejected;
            }
            audit("reject", effect.ruleId + ": " + e.reason, ctx.env.flow());
          } else if constexpr (std::is_same_v<E, regulation::ChooseProcessEffect>) {
            std::lock_guard<std::mutex> lock(lbMu_);
            ++roundRobin_[ctx.env.vsn];
          } else if constexpr (std::is_same_v<E, regulation::CreateInstanceEffect>) {
            auto inst = std::make_shared<ProcessInstance>();
            inst->id = newToken();
            inst->vsn = ctx.env.vsn;
            inst->process = e.process;
            inst->epoch = changeEpoch_.load();
            inst->createdAt = nowMs();
            inst->admissionKey = lastAdmitKey;
            if (const model::VsnSpec* vsn = findVsn(ctx.env.vsn)) {
              auto pit = vsn->processes.find(e.process);
              if (pit != vsn->processes.end()) {
                inst->procDef = std::make_shared<const model::ProcessDefinition>(pit->second);
                for (const auto& step : pit->second.steps) {
                  inst->taskStates[step.task.task] = TaskState::Pending;
                }
              }
            }
            {
              std::lock_guard<std::mutex> lock(instMu_);
              instances_[inst->id] = inst;
              ++counters_.admitted;
            }
            ctx.instance = inst;
            ctx.env.instance = inst->id;
            ctx.env.process = e.process;
          } else if constexpr (std::is_same_v<E, regulation::RouteEffect>) {
            MessageEnvelope next;
            next.vsn = ctx.env.vsn;
            next.process = ctx.env.process;
            next.instance = ctx.env.instance;
            next.messageId = newToken();
            next.interaction = e.term;
            next.kind = MessageKind::RoleRole;
            next.direction = e.direction;
            next.sourceRole = ctx.rep->at.element;
            next.destRole = e.toRole;
            next.body = e.body;
            next.at = nowMs();
            const Id contract = e.contract;
            executor_.post(strandLabel(next),
                           [this, contract, next] { stagePassThrough(contract, next); });
          } else if constexpr (std::is_same_v<E, regulation::ForwardEffect>) {
            MessageEnvelope next = ctx.env;
            next.body = e.body;
            const Id dest = next.destRole;
            executor_.post(strandLabel(next),
                           [this, dest, next] { stageSynchronization(dest, next); });
          } else if constexpr (std::is_same_v<E, regulation::PublishEventEffect>) {
            FlowKey flow = ctx.instance ? ctx.instance->flow() : ctx.env.flow();
            events_.publish(e.name, flow, e.payload);
            if (ctx.instance) {
              std::lock_guard<std::mutex> lock(instMu_);
              ctx.instance->eventsSeen.insert(e.name);
              cascade = true;
            }
          } else if constexpr (std::is_same_v<E, regulation::StoreMessageEffect>) {
            if (ctx.instance) {
              std::lock_guard<std::mutex> lock(instMu_);
              auto& store = ctx.instance->stores[ctx.rep->at.str()];
              bool seen = std::any_of(store.begin(), store.end(), [&](const StoredEnvelope& se) {
                return se.env.messageId == ctx.env.messageId;
              });
              if (!seen) store.push_back({ctx.env, {}});
            }
          } else if constexpr (std::is_same_v<E, regulation::SynthesizeEffect>) {
            applySynthesize(ctx, e);
          } else if constexpr (std::is_same_v<E, regulation::TransformEffect>) {
            audit("transform", effect.ruleId + ": " + e.spec, ctx.env.flow());
          } else if constexpr (std::is_same_v<E, regulation::AdjustStateEffect>) {
            state_.adjust(e.key, e.delta, true);
            retryScheduled(e.key);
          } else if constexpr (std::is_same_v<E, regulation::MonitorResponseTimeEffect>) {
            state_.set(e.key, ctx.responseLatencyMs.value_or(0));
          } else if constexpr (std::is_same_v<E, regulation::MonitorThroughputEffect>) {
            throughputTick(e.key);
          } else if constexpr (std::is_same_v<E, regulation::TerminateEffect>) {
            if (ctx.instance) {
              endInstance(ctx.instance,
                          e.outcome == "completed" ? InstanceLifecycle::Completed
                                                   : InstanceLifecycle::Terminated,
                          e.outcome);
            }
          } else if constexpr (std::is_same_v<E, regulation::DropEffect>) {
            audit("drop", effect.ruleId + ": " + e.reason, ctx.env.flow());
          } else if constexpr (std::is_same_v<E, regulation::ScheduleEffect>) {
            {
              std::lock_guard<std::mutex> lock(schedMu_);
              scheduled_[e.stateKey].push_back({e.queue, ctx.env});
            }
            audit("schedule", effect.ruleId + ": parked on " + e.queue, ctx.env.flow());
          } else if constexpr (std::is_same_v<E, regulation::FaultInstanceEffect>) {
            audit(e.category, effect.ruleId + ": " + e.reason, ctx.env.flow());
            if (ctx.instance) {
              endInstance(ctx.instance, InstanceLifecycle::Faulted, e.reason);
            }
          }
        },
        effect.body);
  }

  if (cascade && ctx.instance && isActive(ctx.instance->lifecycle)) {
    const Id instanceId = ctx.instance->id;
    MessageEnvelope key;
    key.instance = instanceId;
    executor_.post(name_ + "/" + instanceId, [this, instanceId] { runEventCascade(instanceId); });
  }
}

void NetworkRuntime::applySynthesize(StimulusContext& ctx, const regulation::SynthesizeEffect& e) {
  if (!ctx.instance) return;
  const model::RoleSpec* role = design_.findRole(e.task.role);
  if (!role) return;

  MessageEnvelope request;
  request.vsn = ctx.instance->vsn;
  request.process = ctx.instance->process;
  request.instance = ctx.instance->id;
  request.messageId = newToken();
  request.interaction = e.task.task;
  request.kind = MessageKind::RoleService;
  request.direction = MessageDirection::Request;
  request.sourceRole = e.task.role;
  request.destRole = e.task.role;
  request.body = e.requestBody;
  request.at = nowMs();

  {
    std::lock_guard<std::mutex> lock(instMu_);
    ctx.instance->taskStates[e.task.task] = TaskState::Triggered;
    ctx.instance->pendingCalls[request.messageId] = {e.task, monotonicNs() / 1000000};
    auto& store = ctx.instance->stores[ctx.rep->at.str()];
    for (auto& se : store) {
      if (std::find(e.consumedMessageIds.begin(), e.consumedMessageIds.end(),
                    se.env.messageId) != e.consumedMessageIds.end()) {
        se.consumedBy.insert(e.task.task);
      }
    }
  }

  const Id instanceId = ctx.instance->id;
  const Id messageId = request.messageId;
  const std::string strand = name_ + "/" + instanceId;
  invoker_.invoke(role->binding, request, [this, instanceId, messageId, strand](ServiceReply r) {
    executor_.post(strand, [this, instanceId, messageId, reply = std::move(r)]() mutable {
      onServiceReply(instanceId, messageId, std::move(reply));
    });
  });
}

// ===========================================================================
// Instance end, scheduling, quiescence hooks
// ===========================================================================

void NetworkRuntime::checkNaturalCompletion(const std::shared_ptr<ProcessInstance>& inst) {
  bool done = false;
  {
    std::lock_guard<std::mutex> lock(instMu_);
    done = inst->lifecycle == InstanceLifecycle::Running && inst->procDef &&
           inst->procDef->termination == model::TerminationMode::AllTasks &&
           inst->allTasksCompleted();
  }
  if (done) endInstance(inst, InstanceLifecycle::Completed, "completed");
}

void NetworkRuntime::releaseAdmission(const std::shared_ptr<ProcessInstance>& inst) {
  if (inst->admissionReleased || inst->admissionKey.empty()) return;
  inst->admissionReleased = true;
  state_.adjust(inst->admissionKey, -1, true);
}

void NetworkRuntime::endInstance(const std::shared_ptr<ProcessInstance>& inst,
                                 InstanceLifecycle how, const std::string& outcome) {
  std::string admissionKey;
  {
    std::lock_guard<std::mutex> lock(instMu_);
    if (!isActive(inst->lifecycle)) return;  // already ended
    inst->lifecycle = how;
    inst->outcome = outcome;
    inst->endedAt = nowMs();
    inst->buffered.clear();
    switch (how) {
      case InstanceLifecycle::Completed: ++counters_.completed; break;
      case InstanceLifecycle::Terminated: ++counters_.terminated; break;
      case InstanceLifecycle::Faulted: ++counters_.faulted; break;
      default: break;
    }
    admissionKey = inst->admissionKey;
    releaseAdmission(inst);
  }

  const char* kind = how == InstanceLifecycle::Completed     ? "sys.instance.completed"
                     : how == InstanceLifecycle::Terminated ? "sys.instance.terminated"
                                                             : "sys.instance.faulted";
  events_.publish(kind, inst->flow(), {{"instance", inst->id}, {"outcome", outcome}});

  if (!admissionKey.empty()) retryScheduled(admissionKey);
  pendingQuiescenceCheck_.store(true);
  quiesceCv_.notify_all();
}

void NetworkRuntime::retryScheduled(const std::string& stateKey) {
  std::vector<Parked> parked;
  {
    std::lock_guard<std::mutex> lock(schedMu_);
    auto it = scheduled_.find(stateKey);
    if (it == scheduled_.end()) return;
    parked.swap(it->second);
    scheduled_.erase(it);
  }
  for (auto& p : parked) {
    MessageEnvelope env = std::move(p.env);
    executor_.post(name_ + "/sched/" + env.messageId, [this, env] {
      try {
        ingress(env);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::Rejected) {  // re-parked rejections are expected
          audit(errorCodeName(e.code()), std::string("scheduled retry: ") + e.what(),
                env.flow());
        }
      }
    });
  }
}

void NetworkRuntime::throughputTick(const std::string& key) {
  std::lock_guard<std::mutex> lock(tpMu_);
  const std::int64_t window = nowMs() / 1000;
  TpWindow& w = throughput_[key];
  if (w.windowStart != window) {
    if (w.windowStart != 0) state_.set(key, static_cast<std::int64_t>(w.count));
    w.windowStart = window;
    w.count = 0;
  }
  ++w.count;
}

// ===========================================================================
// Introspection
// ===========================================================================

void NetworkRuntime::settle() {
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(60);
  for (;;) {
    executor_.drain();
    bool pending = false;
    {
      std::lock_guard<std::mutex> lock(instMu_);
      for (const auto& [id, inst] : instances_) {
        if (isActive(inst->lifecycle) && !inst->pendingCalls.empty()) {
          pending = true;
          break;
        }
      }
    }
    if (!pending) {
      executor_.drain();
      return;
    }
    if (std::chrono::steady_clock::now() > deadline) return;
    std::this_thread::sleep_for(std::chrono::milliseconds(1));
  }
}

std::optional<ProcessInstance> NetworkRuntime::instanceSnapshot(const Id& id) const {
  std::lock_guard<std::mutex> lock(instMu_);
  auto it = instances_.find(id);
  if (it == instances_.end()) return std::nullopt;
  ProcessInstance copy = *it->second;
  copy.buffered.clear();  // closures are not part of the observable state
  return copy;
}

std::vector<Id> NetworkRuntime::instanceIds() const {
  std::lock_guard<std::mutex> lock(instMu_);
  std::vector<Id> out;
  out.reserve(instances_.size());
  for (const auto& [id, inst] : instances_) out.push_back(id);
  return out;
}

std::size_t NetworkRuntime::activeInstanceCount() const {
  std::lock_guard<std::mutex> lock(instMu_);
  std::size_t n = 0;
  for (const auto& [id, inst] : instances_) {
    if (isActive(inst->lifecycle)) ++n;
  }
  return n;
}

InstanceCounters NetworkRuntime::counters() const {
  std::lock_guard<std::mutex> lock(instMu_);
  return counters_;
}

std::vector<AuditEntry> NetworkRuntime::auditTail(std::size_t max) const {
  std::lock_guard<std::mutex> lock(auditMu_);
  std::vector<AuditEntry> out;
  std::size_t start = audit_.size() > max ? audit_.size() - max : 0;
  for (std::size_t i = start; i < audit_.size(); ++i) out.push_back(audit_[i]);
  return out;
}

std::map<std::string, std::uint64_t> NetworkRuntime::ruleFireCounts() const {
  std::lock_guard<std::mutex> lock(auditMu_);
  return ruleFires_;
}

void NetworkRuntime::audit(const std::string& category, const std::string& detail,
                           const FlowKey& flow) {
  std::lock_guard<std::mutex> lock(auditMu_);
  audit_.push_back({nowMs(), category, detail, flow});
  while (audit_.size() > 10000) audit_.pop_front();
}

void NetworkRuntime::recordFires(const RepLocation& at, const std::vector<Id>& fired) {
  if (fired.empty()) return;
  std::lock_guard<std::mutex> lock(auditMu_);
  for (const Id& id : fired) ++ruleFires_[at.str() + "/" + id];
}

void NetworkRuntime::controlInstance(const Id& instanceId, const std::string& action) {
  auto inst = findInstance(instanceId);
  if (!inst) throw err(ErrorCode::NotFound, "no instance " + instanceId);

  if (action == "pause") {
    std::lock_guard<std::mutex> lock(instMu_);
    if (inst->lifecycle != InstanceLifecycle::Running) {
      throw err(ErrorCode::IllegalTransition,
                std::string("cannot pause a ") + lifecycleName(inst->lifecycle) + " instance");
    }
    inst->lifecycle = InstanceLifecycle::Paused;
    return;
  }
  if (action == "resume") {
    std::vector<std::function<void()>> replay;
    {
      std::lock_guard<std::mutex> lock(instMu_);
      if (inst->lifecycle != InstanceLifecycle::Paused) {
        throw err(ErrorCode::IllegalTransition,
                  std::string("cannot resume a ") + lifecycleName(inst->lifecycle) + " instance");
      }
      inst->lifecycle = InstanceLifecycle::Running;
      replay.swap(inst->buffered);
    }
    for (auto& job : replay) {
      executor_.post(name_ + "/" + instanceId, std::move(job));
    }
    return;
  }
  if (action == "terminate") {
    if (!isActive(inst->lifecycle)) {
      throw err(ErrorCode::IllegalTransition, "instance already ended");
    }
    endInstance(inst, InstanceLifecycle::Terminated, "admin");
    afterStage();
    return;
  }
  throw err(ErrorCode::BadParams, "unknown instance action " + action);
}

}  // namespace sdsn::enactment
