#ifndef SDSN_REGULATION_EFFECTS_HPP
#define SDSN_REGULATION_EFFECTS_HPP

#include <string>
#include <variant>
#include <vector>

#include "sdsn/core/id.hpp"
#include "sdsn/core/value.hpp"
#include "sdsn/enactment/envelope.hpp"
#include "sdsn/model/design.hpp"

namespace sdsn::regulation {

// Effects are fully resolved descriptions of what firing rules decided.
// Computing them performs no mutation; the enactment engine applies the
// whole list after the rule set finishes (all-or-nothing per stimulus), so
// effect application itself cannot fail.

struct AdmitEffect {
  std::string capacityKey;  // incremented on application; "" = unlimited admit
};

struct RejectEffect {
  std::string reason;  // e.g. "capacity 200 exhausted"
};

struct ChooseProcessEffect {
  Id process;
};

struct CreateInstanceEffect {
  Id process;
};

struct RouteEffect {
  Id contract;
  Id term;
  Id toRole;
  enactment::MessageDirection direction = enactment::MessageDirection::Request;
  FieldMap body;  // already projected through the term template
};

struct ForwardEffect {
  FieldMap body;  // stimulus body after transforms
};

struct PublishEventEffect {
  std::string name;
  FieldMap payload;
};

struct StoreMessageEffect {};

struct SynthesizeEffect {
  model::TaskRef task;
  FieldMap requestBody;                // merged per the task's request template
  std::vector<Id> consumedMessageIds;  // stored envelopes the merge drew from
};

struct TransformEffect {
  std::string spec;
};

struct AdjustStateEffect {
  std::string key;
  double delta = 0;
};

struct MonitorResponseTimeEffect {
  std::string key;
};

struct MonitorThroughputEffect {
  std::string key;
};

struct TerminateEffect {
  std::string outcome;  // "completed" unless the rule says otherwise
};

struct DropEffect {
  std::string reason;
};

// A rule decided something the model forbids (a Route target off the process
// path, a synthesis that cannot honor its template); the instance ends
// Faulted. `category` is the audit/error classification.
struct FaultInstanceEffect {
  std::string category;  // "PathViolationError", "TemplateError", ...
  std::string reason;
};

struct ScheduleEffect {
  std::string queue;
  std::string stateKey;  // re-inject when this key changes
};

using EffectBody =
    std::variant<AdmitEffect, RejectEffect, ChooseProcessEffect, CreateInstanceEffect,
                 RouteEffect, ForwardEffect, PublishEventEffect, StoreMessageEffect,
                 SynthesizeEffect, TransformEffect, AdjustStateEffect,
                 MonitorResponseTimeEffect, MonitorThroughputEffect, TerminateEffect,
                 DropEffect, ScheduleEffect, FaultInstanceEffect>;

struct Effect {
  Id ruleId;       // rule that produced it
  std::string fn;  // catalog function name
  EffectBody body;

  // Short description for audits and trace comparison, e.g. "Route→EP1".
  std::string summary() const;
};

}  // namespace sdsn::regulation

#endif  // SDSN_REGULATION_EFFECTS_HPP
