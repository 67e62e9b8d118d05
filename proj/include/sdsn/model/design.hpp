#ifndef SDSN_MODEL_DESIGN_HPP
#define SDSN_MODEL_DESIGN_HPP

#include <map>
#include <string>
#include <vector>

#include "sdsn/core/id.hpp"
#include "sdsn/core/value.hpp"
#include "sdsn/model/message_template.hpp"

namespace sdsn::model {

// ---------------------------------------------------------------------------
// Static design of a service network: what a descriptor file describes and
// what deployment turns into a live model. Pure data, no behaviour.
// ---------------------------------------------------------------------------

struct ServiceBinding {
  std::string endpoint;  // http URL of the bound service ("" for unbound)
  int timeoutMs = 2000;
  int retries = 0;

  bool operator==(const ServiceBinding&) const = default;
};

// Reference to an interaction term, qualified by its contract: "CM_SC.iAssist".
struct TermRef {
  Id contract;
  Id term;

  bool operator==(const TermRef&) const = default;
  auto operator<=>(const TermRef&) const = default;
  std::string str() const { return contract + "." + term; }
  static TermRef parse(const std::string& text);  // throws Parse
};

// Reference to a role task: "SC.tAnalyze".
struct TaskRef {
  Id role;
  Id task;

  bool operator==(const TaskRef&) const = default;
  auto operator<=>(const TaskRef&) const = default;
  std::string str() const { return role + "." + task; }
  static TaskRef parse(const std::string& text);  // throws Parse
};

struct TaskSpec {
  Id id;
  std::vector<TermRef> inputs;   // terms whose messages feed this task
  std::vector<TermRef> outputs;  // terms the task's completion may emit on
  MessageTemplate request;       // schema of the synthesized service request
  MessageTemplate response;      // schema of the service response

  bool operator==(const TaskSpec&) const = default;
};

struct RoleSpec {
  Id id;
  std::string name;        // display name, e.g. the bound organization
  ServiceBinding binding;  // empty endpoint for pure client roles
  bool userRole = false;   // true: tenants' users inject work here
  std::map<Id, TaskSpec> tasks;

  bool operator==(const RoleSpec&) const = default;
};

enum class TermDirection { AtoB, BtoA };
const char* termDirectionName(TermDirection d);
bool termDirectionFromName(const std::string& name, TermDirection& out);

struct TermSpec {
  Id id;
  TermDirection direction = TermDirection::AtoB;  // request flow direction
  MessageTemplate tmplate;                        // request-phase body schema

  bool operator==(const TermSpec&) const = default;
};

struct ContractSpec {
  Id id;
  Id roleA;
  Id roleB;
  std::map<Id, TermSpec> terms;

  bool operator==(const ContractSpec&) const = default;
};

// Where a group of regulation rules lives.
enum class RepKind { Routing, Synchronization, PassThrough, Coordinated };
const char* repKindName(RepKind k);
bool repKindFromName(const std::string& name, RepKind& out);

struct RepLocation {
  RepKind kind = RepKind::Routing;
  Id element;  // role id / contract id; empty for the coordinated REP

  bool operator==(const RepLocation&) const = default;
  auto operator<=>(const RepLocation&) const = default;
  std::string str() const;
};

// A block of rule text attached to one REP. Text is in the rule grammar and
// compiled at deployment.
struct RuleGroup {
  RepLocation at;
  std::string text;
  std::string sourceFile;  // where the text came from, for error messages

  // sourceFile is provenance, not content.
  bool operator==(const RuleGroup& o) const { return at == o.at && text == o.text; }
};

// Named body-rewrite spec usable from Transform(spec=...): target <- source.
struct TransformSpec {
  std::map<std::string, std::string> assign;

  bool operator==(const TransformSpec&) const = default;
};

// One step of the process's EPC graph: the task triggers once every event in
// `after` occurred for the instance (AND-join) and its completion leads to
// the events in `emits` (AND-split). Exclusive branches are expressed by
// regulation-rule conditions, not by connectors.
struct EpcStep {
  TaskRef task;
  std::vector<Id> after;
  std::vector<Id> emits;

  bool operator==(const EpcStep&) const = default;
};

enum class TerminationMode {
  AllTasks,        // instance completes when every step's task is Completed
  CoordinatedRule  // instance completes only via the coordinated REP
};
const char* terminationModeName(TerminationMode m);
bool terminationModeFromName(const std::string& name, TerminationMode& out);

struct ProcessPath {
  std::vector<Id> roles;
  std::vector<Id> contracts;

  bool operator==(const ProcessPath&) const = default;
};

struct ProcessDefinition {
  Id id;
  ProcessPath path;
  std::vector<EpcStep> steps;
  TerminationMode termination = TerminationMode::AllTasks;

  bool operator==(const ProcessDefinition&) const = default;
};

// Binds already-deployed rules (by id) to a REP for this VSN's flows. Turned
// into regulation-table entries at VSN deployment.
struct PolicyBinding {
  RepLocation at;
  std::vector<Id> rules;

  bool operator==(const PolicyBinding&) const = default;
};

struct VsnSpec {
  Id id;            // e.g. "HappyTours"
  std::string tenant;
  FieldMap params;  // throughputCapacity, responseTargetMs, ...
  std::map<Id, ProcessDefinition> processes;
  std::vector<PolicyBinding> policy;

  bool operator==(const VsnSpec&) const = default;
};

struct ServiceNetworkDesign {
  Id name;
  std::map<Id, RoleSpec> roles;
  std::map<Id, ContractSpec> contracts;
  std::vector<RuleGroup> ruleGroups;
  std::map<std::string, TransformSpec> transforms;
  std::vector<VsnSpec> vsns;

  bool operator==(const ServiceNetworkDesign&) const = default;

  const RoleSpec* findRole(const Id& id) const;
  const ContractSpec* findContract(const Id& id) const;
  const TermSpec* findTerm(const TermRef& ref) const;
  const TaskSpec* findTask(const TaskRef& ref) const;
};

// A single invariant violation found by validateDesign.
struct Violation {
  std::string element;    // offending element, e.g. "contract CM_ZZ"
  std::string invariant;  // short invariant name, e.g. "contract-role-exists"
  std::string detail;
};

std::vector<Violation> validateDesign(const ServiceNetworkDesign& design);

}  // namespace sdsn::model

#endif  // SDSN_MODEL_DESIGN_HPP
