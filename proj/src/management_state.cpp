#include "sdsn/model/management_state.hpp"

namespace sdsn::model {

const char* managementStateName(ManagementState s) {
  switch (s) {
    case ManagementState::Active: return "Active";
    case ManagementState::Passive: return "Passive";
    case ManagementState::Quiescence: return "Quiescence";
  }
  return "?";
}

bool managementStateFromName(const std::string& name, ManagementState& out) {
  if (name == "Active") { out = ManagementState::Active; return true; }
  if (name == "Passive") { out = ManagementState::Passive; return true; }
  if (name == "Quiescence") { out = ManagementState::Quiescence; return true; }
  return false;
}

bool isAdminTransitionAllowed(ManagementState from, ManagementState to) {
  using MS = ManagementState;
  if (from == MS::Active && to == MS::Passive) return true;
  if (from == MS::Passive && to == MS::Active) return true;
  if (from == MS::Quiescence && to == MS::Passive) return true;
  return false;
}

}  // namespace sdsn::model
