#include "sdsn/model/design.hpp"

#include "sdsn/core/error.hpp"

namespace sdsn::model {

const char* termDirectionName(TermDirection d) { return d == TermDirection::AtoB ? "AtoB" : "BtoA"; }

bool termDirectionFromName(const std::string& name, TermDirection& out) {
  if (name == "AtoB") { out = TermDirection::AtoB; return true; }
  if (name == "BtoA") { out = TermDirection::BtoA; return true; }
  return false;
}

const char* repKindName(RepKind k) {
  switch (k) {
    case RepKind::Routing: return "routing";
    case RepKind::Synchronization: return "sync";
    case RepKind::PassThrough: return "pass";
    case RepKind::Coordinated: return "coord";
  }
  return "?";
}

bool repKindFromName(const std::string& name, RepKind& out) {
  if (name == "routing") { out = RepKind::Routing; return true; }
  if (name == "sync") { out = RepKind::Synchronization; return true; }
  if (name == "pass") { out = RepKind::PassThrough; return true; }
  if (name == "coord") { out = RepKind::Coordinated; return true; }
  return false;
}

std::string RepLocation::str() const {
  if (kind == RepKind::Coordinated) return "coord";
  return std::string(repKindName(kind)) + ":" + element;
}

const char* terminationModeName(TerminationMode m) {
  return m == TerminationMode::AllTasks ? "allTasks" : "rule";
}

bool terminationModeFromName(const std::string& name, TerminationMode& out) {
  if (name == "allTasks") { out = TerminationMode::AllTasks; return true; }
  if (name == "rule") { out = TerminationMode::CoordinatedRule; return true; }
  return false;
}

TermRef TermRef::parse(const std::string& text) {
  auto dot = text.find('.');
  if (dot == std::string::npos) {
    throw err(ErrorCode::Parse, "term reference must be Contract.term: " + text);
  }
  TermRef ref{text.substr(0, dot), text.substr(dot + 1)};
  if (!isValidIdentifier(ref.contract) || !isValidIdentifier(ref.term)) {
    throw err(ErrorCode::Parse, "bad term reference: " + text);
  }
  return ref;
}

TaskRef TaskRef::parse(const std::string& text) {
  auto dot = text.find('.');
  if (dot == std::string::npos) {
    throw err(ErrorCode::Parse, "task reference must be Role.task: " + text);
  }
  TaskRef ref{text.substr(0, dot), text.substr(dot + 1)};
  if (!isValidIdentifier(ref.role) || !isValidIdentifier(ref.task)) {
    throw err(ErrorCode::Parse, "bad task reference: " + text);
  }
  return ref;
}

const RoleSpec* ServiceNetworkDesign::findRole(const Id& id) const {
  auto it = roles.find(id);
  return it == roles.end() ? nullptr : &it->second;
}

const ContractSpec* ServiceNetworkDesign::findContract(const Id& id) const {
  auto it = contracts.find(id);
  return it == contracts.end() ? nullptr : &it->second;
}

const TermSpec* ServiceNetworkDesign::findTerm(const TermRef& ref) const {
  const ContractSpec* c = findContract(ref.contract);
  if (!c) return nullptr;
  auto it = c->terms.find(ref.term);
  return it == c->terms.end() ? nullptr : &it->second;
}

const TaskSpec* ServiceNetworkDesign::findTask(const TaskRef& ref) const {
  const RoleSpec* r = findRole(ref.role);
  if (!r) return nullptr;
  auto it = r->tasks.find(ref.task);
  return it == r->tasks.end() ? nullptr : &it->second;
}

}  // namespace sdsn::model
