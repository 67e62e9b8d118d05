#pragma once

#include <atomic>
#include <condition_variable>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include "sdsn/enactment/flow_executor.hpp"
#include "sdsn/enactment/instance.hpp"
#include "sdsn/enactment/service_invoker.hpp"
#include "sdsn/eventstate/event_manager.hpp"
#include "sdsn/eventstate/state_manager.hpp"
#include "sdsn/model/design.hpp"
#include "sdsn/regulation/executor.hpp"
#include "sdsn/regulation/rule.hpp"
#include "sdsn/regulation/table.hpp"

namespace sdsn::enactment {

// One regulated enactment point: knowledgebase plus regulation table, and for
// pass-through points a bounded ring of recently seen message ids (duplicate
// suppression).
struct RepRuntime {
  model::RepLocation at;
  std::map<Id, regulation::RegulationRule> knowledgebase;
  regulation::RegulationTable table;

  std::deque<Id> recentIds;
  std::set<Id> recentIdSet;

  // Records a message id; returns false when it was already seen.
  bool noteMessageId(const Id& id, std::size_t cap = 1024);

  // Event names mentioned by any rule condition in the knowledgebase.
  std::set<Id> referencedEvents() const;
};

// Per-element change-management state. Keys look like "role:CM",
// "contract:CM_SC", "vsn:HappyTours", "rule:sync:SC/rHandle", "network".
struct ElementState {
  model::ManagementState state = model::ManagementState::Active;
  std::uint64_t passiveSince = 0;  // change epoch of the passivation
};

struct AuditEntry {
  std::int64_t at = 0;
  std::string category;  // error code name or "drop", "reject", ...
  std::string detail;
  regulation::FlowKey flow;
};

struct InstanceCounters {
  std::uint64_t admitted = 0;
  std::uint64_t rejected = 0;
  std::uint64_t completed = 0;
  std::uint64_t terminated = 0;
  std::uint64_t faulted = 0;
};

// Structural size of the hosted network, reported by the engine itself (no
// OS-level sampling): element counts plus live regulation payload.
struct FootprintReport {
  std::size_t roles = 0;
  std::size_t tasks = 0;
  std::size_t contracts = 0;
  std::size_t terms = 0;
  std::size_t reps = 0;
  std::size_t rules = 0;
  std::size_t tableEntries = 0;
  std::size_t vsns = 0;
  std::size_t activeInstances = 0;
  std::size_t storedMessages = 0;
  std::size_t stateKeys = 0;

  std::size_t designElements() const { return roles + tasks + contracts + terms + rules + vsns; }
};

// Canonicalized structure used to diff two networks (rule versions and
// timestamps deliberately excluded).
struct StructureSnapshot {
  std::map<std::string, std::string> items;  // stable key → canonical rendering

  std::vector<std::string> diff(const StructureSnapshot& other) const;
  bool operator==(const StructureSnapshot&) const = default;
};

// A deployed service network: the live model, its regulated enactment
// points, tenant VSNs, instances, events and state. Stimulus processing
// takes the model lock shared; management operations take it exclusively.
class NetworkRuntime {
 public:
  // With elementsStartActive=false every element and rule comes up Passive;
  // the deployer then calls activateAll() as the explicit final step. The
  // default suits embedded use where the descriptor is the whole story.
  NetworkRuntime(model::ServiceNetworkDesign design, ServiceInvoker& invoker,
                 FlowExecutor& executor, bool elementsStartActive = true);

  const std::string& name() const { return name_; }

  // Activates every Passive element and rule (deployment completion step).
  void activateAll();

  // ------------------------------------------------------------------
  // Stimulus path
  // ------------------------------------------------------------------

  // Entry for external messages. Instantiations run admission synchronously
  // and return the new instance id (throws Rejected / PassiveElement /
  // NoEntry). A rejection whose rule chose scheduling parks the envelope and
  // returns an empty id instead of throwing. Mid-instance messages are queued
  // onto the instance's flow and the existing instance id is returned.
  Id ingress(MessageEnvelope env);

  // Blocks until all queued work for this network has run (tests and
  // benchmarks; not part of the serving path).
  void settle();

  // ------------------------------------------------------------------
  // Introspection
  // ------------------------------------------------------------------

  std::optional<ProcessInstance> instanceSnapshot(const Id& id) const;
  std::vector<Id> instanceIds() const;
  std::size_t activeInstanceCount() const;
  InstanceCounters counters() const;
  std::vector<AuditEntry> auditTail(std::size_t max = 100) const;
  std::map<std::string, std::uint64_t> ruleFireCounts() const;
  FootprintReport footprint() const;
  StructureSnapshot snapshot() const;
  model::ServiceNetworkDesign designSnapshot() const;

  eventstate::EventManager& events() { return events_; }
  eventstate::EventManager& mgmtEvents() { return mgmtEvents_; }
  eventstate::StateManager& state() { return state_; }

  // ------------------------------------------------------------------
  // Instance administration
  // ------------------------------------------------------------------

  void controlInstance(const Id& instanceId, const std::string& action);

  // ------------------------------------------------------------------
  // Change management (single writer; callers serialize through the
  // management interface)
  // ------------------------------------------------------------------

  void addRole(const model::RoleSpec& role);
  void removeRole(const Id& roleId);
  void updateRole(const Id& roleId, const std::string& property, const std::string& value);

  void addTask(const Id& roleId, const model::TaskSpec& task);
  void removeTask(const Id& roleId, const Id& taskId);
  void updateTask(const Id& roleId, const Id& taskId, const model::TaskSpec& task);

  void addContract(const model::ContractSpec& contract);
  void removeContract(const Id& contractId);
  void updateContract(const Id& contractId, const std::string& property, const std::string& value);

  void addTerm(const Id& contractId, const model::TermSpec& term);
  void removeTerm(const Id& contractId, const Id& termId);
  void updateTerm(const Id& contractId, const Id& termId, const model::MessageTemplate& tmplate);

  void addRules(const model::RepLocation& at, const std::string& rulesText);
  void removeRules(const model::RepLocation& at, const std::vector<Id>& ruleIds);
  void updateRule(const model::RepLocation& at, const Id& ruleId, const std::string& property,
                  const std::string& value);

  void addTableEntry(const model::RepLocation& at, const regulation::FlowKey& flow,
                     const std::vector<Id>& ruleIds);
  std::vector<Id> removeTableEntry(const model::RepLocation& at, const regulation::FlowKey& flow);
  // Removes only the listed ids from the entry; returns the ids actually
  // removed (the entry itself disappears once it empties).
  std::vector<Id> removeTableEntryRules(const model::RepLocation& at,
                                        const regulation::FlowKey& flow,
                                        const std::vector<Id>& ruleIds);
  std::vector<Id> replaceTableEntry(const model::RepLocation& at, const regulation::FlowKey& flow,
                                    const std::vector<Id>& ruleIds);
  std::map<regulation::FlowKey, std::vector<Id>> tableEntries(const model::RepLocation& at) const;

  void deployVsn(const model::VsnSpec& vsn);
  model::VsnSpec undeployVsn(const Id& vsnId, bool force);
  model::ProcessDefinition updateVsnProcess(const Id& vsnId, const model::ProcessDefinition& p);

  void setManagementState(const std::string& elementRef, model::ManagementState target);
  model::ManagementState managementState(const std::string& elementRef) const;

  // True once the element reached Quiescence within the timeout.
  bool awaitQuiescence(const std::string& elementRef, int timeoutMs);

  std::uint64_t changeEpoch() const { return changeEpoch_.load(); }

  // Re-evaluates auto-quiescence for every passive element (exposed for the
  // management layer after bulk changes).
  void refreshQuiescence();

 private:
  friend class EngineEffectBuilder;

  struct StimulusContext {
    MessageEnvelope env;
    std::shared_ptr<ProcessInstance> instance;  // null during instantiation
    RepRuntime* rep = nullptr;
    std::optional<std::int64_t> responseLatencyMs;
    bool eventStimulus = false;  // cascade pass: no message fields to match
  };

  // Pipeline stages (run on the instance's strand unless noted).
  void stageRouting(const Id& roleId, MessageEnvelope env);
  void stagePassThrough(const Id& contractId, MessageEnvelope env);
  void stageSynchronization(const Id& roleId, MessageEnvelope env);
  void runEventCascade(const Id& instanceId);
  void onServiceReply(const Id& instanceId, const Id& messageId, ServiceReply reply);

  // Evaluates one REP against a stimulus and applies the outcome.
  regulation::ExecOutcome evaluate(StimulusContext& ctx);
  void applyEffects(StimulusContext& ctx, const regulation::ExecOutcome& outcome);
  void applySynthesize(StimulusContext& ctx, const regulation::SynthesizeEffect& e);

  // Runs deferred quiescence re-checks once the stage released the shared
  // model lock (refreshQuiescence needs it exclusively).
  void afterStage();

  std::vector<const regulation::RegulationRule*> lookupRules(
      const RepRuntime& rep, const regulation::FlowKey& flow,
      const std::shared_ptr<ProcessInstance>& inst, std::vector<std::string>* whyNot);

  bool elementServes(const ElementState& es, const std::shared_ptr<ProcessInstance>& inst) const;

  void endInstance(const std::shared_ptr<ProcessInstance>& inst, InstanceLifecycle how,
                   const std::string& outcome);
  void checkNaturalCompletion(const std::shared_ptr<ProcessInstance>& inst);
  void releaseAdmission(const std::shared_ptr<ProcessInstance>& inst);
  void retryScheduled(const std::string& stateKey);
  void throughputTick(const std::string& key);

  void audit(const std::string& category, const std::string& detail,
             const regulation::FlowKey& flow);
  void recordFires(const model::RepLocation& at, const std::vector<Id>& fired);

  std::shared_ptr<ProcessInstance> findInstance(const Id& id) const;
  RepRuntime* findRep(const model::RepLocation& at);
  const RepRuntime* findRep(const model::RepLocation& at) const;
  RepRuntime& repOrThrow(const model::RepLocation& at);

  const model::VsnSpec* findVsn(const Id& id) const;
  model::VsnSpec* findVsnMutable(const Id& id);

  // Dependency census for auto-quiescence: active instances that still rely
  // on the element.
  std::size_t dependentInstances(const std::string& elementRef) const;
  void maybeEnterQuiescence(const std::string& elementRef);
  void publishMgmtState(const std::string& elementRef, model::ManagementState s);

  void requireQuiescence(const std::string& elementRef) const;
  void requireNotInUse(const std::string& elementRef) const;
  std::uint64_t bumpEpoch() { return changeEpoch_.fetch_add(1) + 1; }

  void installDesign();  // builds REPs and element states from design_
  void deployVsnLocked(const model::VsnSpec& vsn);
  std::string strandLabel(const MessageEnvelope& env) const;

  // --- data ---
  std::string name_;
  model::ServiceNetworkDesign design_;
  ServiceInvoker& invoker_;
  FlowExecutor& executor_;

  mutable std::shared_mutex modelMu_;
  std::map<std::string, RepRuntime> reps_;  // key: RepLocation::str()
  std::mutex ringMu_;  // guards the pass-through dedup rings
  std::map<std::string, ElementState> elementStates_;
  // Elements being drained toward quiescence. Automatic Passive→Quiescence
  // detection only applies to entries here, so an element an operator moves
  // Quiescence→Passive on the way back to Active is not yanked straight back.
  std::set<std::string> draining_;

  std::mutex admitMu_;  // serializes the synchronous admission read-check-act

  mutable std::mutex instMu_;
  std::map<Id, std::shared_ptr<ProcessInstance>> instances_;
  InstanceCounters counters_;

  mutable std::mutex auditMu_;
  std::deque<AuditEntry> audit_;
  std::map<std::string, std::uint64_t> ruleFires_;  // "rep/ruleId" → count

  mutable std::mutex schedMu_;
  struct Parked {
    std::string queue;
    MessageEnvelope env;
  };
  std::map<std::string, std::vector<Parked>> scheduled_;  // stateKey → parked envelopes

  mutable std::mutex quiesceMu_;
  std::condition_variable quiesceCv_;

  std::mutex lbMu_;
  std::map<std::string, std::size_t> roundRobin_;  // vsn → next process index

  std::mutex tpMu_;
  struct TpWindow {
    std::int64_t windowStart = 0;
    std::uint64_t count = 0;
  };
  std::map<std::string, TpWindow> throughput_;

  std::atomic<std::uint64_t> changeEpoch_{0};
  std::atomic<bool> pendingQuiescenceCheck_{false};

  eventstate::EventManager events_;
  eventstate::EventManager mgmtEvents_;
  eventstate::StateManager state_;
};

}  // namespace sdsn::enactment
