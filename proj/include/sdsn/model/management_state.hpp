#ifndef SDSN_MODEL_MANAGEMENT_STATE_HPP
#define SDSN_MODEL_MANAGEMENT_STATE_HPP

#include <string>

namespace sdsn::model {

// Change-management state of a hosted element.
//
//   Active     — serves new and existing work.
//   Passive    — finishes existing work, accepts nothing new.
//   Quiescence — passive and no dependent instance remains; safe to change.
//
// Only the admin moves Active<->Passive and Quiescence->Passive; the engine
// itself moves Passive->Quiescence when the last dependent instance ends.
enum class ManagementState { Active, Passive, Quiescence };

const char* managementStateName(ManagementState s);
bool managementStateFromName(const std::string& name, ManagementState& out);

// Admin-requestable transitions. Passive->Quiescence is reported illegal
// here because it is automatic, never requested.
bool isAdminTransitionAllowed(ManagementState from, ManagementState to);

}  // namespace sdsn::model

#endif  // SDSN_MODEL_MANAGEMENT_STATE_HPP
