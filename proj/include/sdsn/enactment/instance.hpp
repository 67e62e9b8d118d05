#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <memory>

#include "sdsn/core/id.hpp"
#include "sdsn/enactment/envelope.hpp"
#include "sdsn/model/design.hpp"
#include "sdsn/regulation/flow_key.hpp"

namespace sdsn::enactment {

enum class TaskState { Pending, Triggered, Completed, Faulted };

const char* taskStateName(TaskState s);

enum class InstanceLifecycle { Running, Paused, Completed, Terminated, Faulted };

const char* lifecycleName(InstanceLifecycle s);

// True when the instance still consumes stimuli (or will again after resume).
inline bool isActive(InstanceLifecycle s) {
  return s == InstanceLifecycle::Running || s == InstanceLifecycle::Paused;
}

// A message kept at a synchronization point until the instance ends. One
// stored message may feed several tasks, but never the same task twice.
struct StoredEnvelope {
  MessageEnvelope env;
  std::set<Id> consumedBy;  // task ids that already drew fields from it
};

struct InFlightCall {
  model::TaskRef task;
  std::int64_t sentAt = 0;  // monotonic ms, for response-time monitoring
};

struct ProcessInstance {
  Id id;
  Id vsn;
  Id process;
  std::uint64_t epoch = 0;  // network change epoch at creation

  // The process definition as it stood at creation. Later updateVsnProcess
  // calls re-point new instances while running ones keep this snapshot.
  std::shared_ptr<const model::ProcessDefinition> procDef;
  std::int64_t createdAt = 0;
  std::int64_t endedAt = 0;
  InstanceLifecycle lifecycle = InstanceLifecycle::Running;
  std::string outcome;

  std::map<Id, TaskState> taskStates;
  std::map<Id, InFlightCall> pendingCalls;  // messageId → invocation
  std::set<Id> eventsSeen;

  // Refraction marks per regulating point: "ruleId#version" entries. A rule
  // whose condition mentions events fires at most once per instance per rule
  // version.
  std::map<std::string, std::set<std::string>> firedRules;

  // Message stores of the synchronization points this instance passed, keyed
  // by point ("sync:SC"). Kept on the instance so the store's lifetime is the
  // instance's lifetime.
  std::map<std::string, std::vector<StoredEnvelope>> stores;

  std::string admissionKey;  // capacity to release exactly once at the end
  bool admissionReleased = false;

  // Stimuli deferred while Paused, replayed in arrival order on resume.
  std::vector<std::function<void()>> buffered;

  regulation::FlowKey flow() const { return {vsn, process, id}; }

  bool allTasksCompleted() const {
    for (const auto& [task, state] : taskStates) {
      if (state != TaskState::Completed) return false;
    }
    return !taskStates.empty();
  }
};

}  // namespace sdsn::enactment
