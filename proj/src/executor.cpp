#include "sdsn/regulation/executor.hpp"

#include <algorithm>

namespace sdsn::regulation {

std::string Effect::summary() const {
  struct V {
    std::string operator()(const AdmitEffect& e) { return "Admit(" + e.capacityKey + ")"; }
    std::string operator()(const RejectEffect& e) { return "Reject(" + e.reason + ")"; }
    std::string operator()(const ChooseProcessEffect& e) { return "ChooseProcess→" + e.process; }
    std::string operator()(const CreateInstanceEffect& e) { return "CreateInstance(" + e.process + ")"; }
    std::string operator()(const RouteEffect& e) { return "Route→" + e.toRole + "." + e.term; }
    std::string operator()(const ForwardEffect&) { return "Forward"; }
    std::string operator()(const PublishEventEffect& e) { return "PublishEvent(" + e.name + ")"; }
    std::string operator()(const StoreMessageEffect&) { return "StoreMessage"; }
    std::string operator()(const SynthesizeEffect& e) { return "Synthesize→" + e.task.str(); }
    std::string operator()(const TransformEffect& e) { return "Transform(" + e.spec + ")"; }
    std::string operator()(const AdjustStateEffect& e) {
      return "AdjustState(" + e.key + "," + std::to_string(e.delta) + ")";
    }
    std::string operator()(const MonitorResponseTimeEffect& e) { return "MonitorRT(" + e.key + ")"; }
    std::string operator()(const MonitorThroughputEffect& e) { return "MonitorTP(" + e.key + ")"; }
    std::string operator()(const TerminateEffect& e) { return "Terminate(" + e.outcome + ")"; }
    std::string operator()(const DropEffect& e) { return "Drop(" + e.reason + ")"; }
    std::string operator()(const ScheduleEffect& e) { return "Schedule(" + e.queue + ")"; }
    std::string operator()(const FaultInstanceEffect& e) { return "Fault(" + e.reason + ")"; }
  };
  return std::visit(V{}, body);
}

ExecOutcome executeRuleSet(const std::vector<const RegulationRule*>& candidates,
                           const ConditionScope& scope, const std::set<Id>& refracted,
                           EffectBuilder& builder) {
  std::vector<const RegulationRule*> ordered = candidates;
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const RegulationRule* a, const RegulationRule* b) {
                     if (a->priority != b->priority) return a->priority > b->priority;
                     return a->id < b->id;
                   });

  ExecOutcome outcome;
  for (const RegulationRule* rule : ordered) {
    bool eventRule = rule->condition.mentionsEvents();
    if (eventRule && refracted.count(rule->id)) continue;
    if (!evalCondition(rule->condition, scope, outcome.diagnostics)) continue;

    outcome.fired.push_back(rule->id);
    if (eventRule) outcome.firedEventRules.push_back(rule->id);
    for (const auto& invocation : rule->actions) {
      builder.build(*rule, invocation, outcome.effects);
    }
  }
  return outcome;
}

}  // namespace sdsn::regulation
