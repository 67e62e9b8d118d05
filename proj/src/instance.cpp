#include "sdsn/enactment/instance.hpp"

namespace sdsn::enactment {

const char* taskStateName(TaskState s) {
  switch (s) {
    case TaskState::Pending:
      return "Pending";
    case TaskState::Triggered:
      return "Triggered";
    case TaskState::Completed:
      return "Completed";
    case TaskState::Faulted:
      return "Faulted";
  }
  return "?";
}

const char* lifecycleName(InstanceLifecycle s) {
  switch (s) {
    case InstanceLifecycle::Running:
      return "Running";
    case InstanceLifecycle::Paused:
      return "Paused";
    case InstanceLifecycle::Completed:
      return "Completed";
    case InstanceLifecycle::Terminated:
      return "Terminated";
    case InstanceLifecycle::Faulted:
      return "Faulted";
  }
  return "?";
}

}  // namespace sdsn::enactment
