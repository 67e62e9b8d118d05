#include <map>
#include <set>
#include <sstream>

#include "sdsn/core/error.hpp"
#include "sdsn/model/descriptor.hpp"
#include "sdsn/model/design.hpp"
#include "sdsn/regulation/catalog.hpp"

namespace sdsn::model {

namespace {

[[noreturn]] void dangling(const std::string& kind, const std::string& id,
                           const std::string& where) {
  throw err(ErrorCode::Reference, kind + " '" + id + "' referenced by " + where +
                                      " does not exist");
}

void checkLocation(const ServiceNetworkDesign& d, const RepLocation& at,
                   const std::string& where) {
  switch (at.kind) {
    case RepKind::Routing:
    case RepKind::Synchronization:
      if (!d.findRole(at.element)) dangling("role", at.element, where);
      break;
    case RepKind::PassThrough:
      if (!d.findContract(at.element)) dangling("contract", at.element, where);
      break;
    case RepKind::Coordinated:
      break;  // network-level, no element
  }
}

}  // namespace

void checkReferences(const ServiceNetworkDesign& d) {
  for (const auto& [cid, contract] : d.contracts) {
    if (!d.findRole(contract.roleA)) dangling("role", contract.roleA, "contract " + cid);
    if (!d.findRole(contract.roleB)) dangling("role", contract.roleB, "contract " + cid);
  }
  for (const auto& [rid, role] : d.roles) {
    for (const auto& [tid, task] : role.tasks) {
      const std::string where = "task " + rid + "." + tid;
      for (const auto& ref : task.inputs) {
        if (!d.findTerm(ref)) dangling("term", ref.str(), where);
      }
      for (const auto& ref : task.outputs) {
        if (!d.findTerm(ref)) dangling("term", ref.str(), where);
      }
    }
  }
  for (const auto& group : d.ruleGroups) {
    checkLocation(d, group.at, "rule group at " + group.at.str());
  }
  for (const auto& vsn : d.vsns) {
    for (const auto& [pid, process] : vsn.processes) {
      const std::string where = "process " + vsn.id + "/" + pid;
      for (const auto& rid : process.path.roles) {
        if (!d.findRole(rid)) dangling("role", rid, where);
      }
      for (const auto& cid : process.path.contracts) {
        if (!d.findContract(cid)) dangling("contract", cid, where);
      }
      for (const auto& step : process.steps) {
        if (!d.findTask(step.task)) dangling("task", step.task.str(), where);
      }
    }
    for (const auto& binding : vsn.policy) {
      checkLocation(d, binding.at, "policy binding of vsn " + vsn.id);
    }
  }
}

std::vector<Violation> validateDesign(const ServiceNetworkDesign& d) {
  std::vector<Violation> out;
  auto flag = [&out](const std::string& element, const std::string& invariant,
                     const std::string& detail) {
    out.push_back({element, invariant, detail});
  };

  for (const auto& [cid, contract] : d.contracts) {
    if (contract.roleA == contract.roleB) {
      flag("contract " + cid, "contract-roles-distinct",
           "both ends bound to role " + contract.roleA);
    }
  }

  // A task may only read/write terms of contracts its own role participates in.
  for (const auto& [rid, role] : d.roles) {
    for (const auto& [tid, task] : role.tasks) {
      auto checkAdjacent = [&](const TermRef& ref, const char* dir) {
        const ContractSpec* contract = d.findContract(ref.contract);
        if (!contract) return;  // checkReferences reports dangling ids
        if (contract->roleA != rid && contract->roleB != rid) {
          flag("task " + rid + "." + tid, "task-io-adjacent",
               std::string(dir) + " term " + ref.str() + " belongs to contract " +
                   ref.contract + " which does not involve role " + rid);
        }
      };
      for (const auto& ref : task.inputs) checkAdjacent(ref, "input");
      for (const auto& ref : task.outputs) checkAdjacent(ref, "output");
      if (task.request.name.empty() || task.response.name.empty()) {
        flag("task " + rid + "." + tid, "task-templates-present",
             "request and response message templates are required");
      }
    }
  }

  // Rule groups must parse, and within one REP every rule id is unique.
  std::map<std::string, std::set<Id>> idsAt;
  // location → ruleId → events that rule consumes (conditions) or produces
  // (PublishEvent actions), for the step-event coverage check below.
  std::map<std::string, std::map<Id, std::set<Id>>> ruleEventsAt;
  int coordGroups = 0;
  for (const auto& group : d.ruleGroups) {
    if (group.at.kind == RepKind::Coordinated) ++coordGroups;
    std::vector<regulation::RegulationRule> rules;
    try {
      rules = regulation::parseRules(group.text);
    } catch (const Error& e) {
      flag("rule group at " + group.at.str(), "rules-parse", e.what());
      continue;
    }
    auto& seen = idsAt[group.at.str()];
    for (const auto& rule : rules) {
      if (!seen.insert(rule.id).second) {
        flag("rule " + rule.id, "rule-id-unique",
             "declared twice at " + group.at.str());
      }
      auto& events = ruleEventsAt[group.at.str()][rule.id];
      rule.condition.collectEvents(events);
      for (const auto& action : rule.actions) {
        if (action.fn != "PublishEvent") continue;
        auto it = action.params.find("name");
        if (it != action.params.end() && std::holds_alternative<std::string>(it->second)) {
          events.insert(std::get<std::string>(it->second));
        }
      }
    }
  }

  bool hasUserRole = false;
  for (const auto& [rid, role] : d.roles) hasUserRole |= role.userRole;
  if (!d.roles.empty() && !hasUserRole) {
    flag("network " + d.name, "user-role-present",
         "no role is marked as the user-facing entry point");
  }

  for (const auto& vsn : d.vsns) {
    for (const auto& [pid, process] : vsn.processes) {
      const std::string element = "process " + vsn.id + "/" + pid;
      std::set<Id> pathRoles(process.path.roles.begin(), process.path.roles.end());

      for (const auto& cid : process.path.contracts) {
        const ContractSpec* contract = d.findContract(cid);
        if (!contract) continue;
        if (!pathRoles.count(contract->roleA) || !pathRoles.count(contract->roleB)) {
          flag(element, "path-contract-endpoints-on-path",
               "contract " + cid + " joins roles outside the process path");
        }
      }

      std::set<std::string> stepTasks;
      for (const auto& step : process.steps) {
        if (!stepTasks.insert(step.task.str()).second) {
          flag(element, "step-task-unique", "task " + step.task.str() + " stepped twice");
        }
        if (!pathRoles.count(step.task.role)) {
          flag(element, "step-role-on-path",
               "task " + step.task.str() + " runs at a role outside the process path");
        }
      }

      // Event-precedence graph over steps must be acyclic: an edge runs from
      // the step emitting an event to each step waiting on it.
      std::map<Id, std::vector<size_t>> emitters;
      for (size_t i = 0; i < process.steps.size(); ++i) {
        for (const auto& ev : process.steps[i].emits) emitters[ev].push_back(i);
      }
      std::vector<std::vector<size_t>> adj(process.steps.size());
      for (size_t i = 0; i < process.steps.size(); ++i) {
        for (const auto& ev : process.steps[i].after) {
          auto it = emitters.find(ev);
          if (it == emitters.end()) continue;  // externally published event
          for (size_t from : it->second) adj[from].push_back(i);
        }
      }
      std::vector<int> color(process.steps.size(), 0);
      bool cyclic = false;
      auto dfs = [&](auto&& self, size_t v) -> void {
        color[v] = 1;
        for (size_t w : adj[v]) {
          if (color[w] == 1) cyclic = true;
          else if (color[w] == 0) self(self, w);
          if (cyclic) return;
        }
        color[v] = 2;
      };
      for (size_t i = 0; i < process.steps.size() && !cyclic; ++i) {
        if (color[i] == 0) dfs(dfs, i);
      }
      if (cyclic) {
        flag(element, "epc-acyclic", "step precedence events form a cycle");
      }
    }

    // Policy bindings may only select rules that some group defines at the
    // same location.
    std::set<Id> boundEvents;
    for (const auto& binding : vsn.policy) {
      auto it = idsAt.find(binding.at.str());
      for (const auto& rid : binding.rules) {
        if (it == idsAt.end() || !it->second.count(rid)) {
          flag("vsn " + vsn.id, "policy-rule-exists",
               "rule " + rid + " is not defined at " + binding.at.str());
        }
        auto locIt = ruleEventsAt.find(binding.at.str());
        if (locIt == ruleEventsAt.end()) continue;
        auto ruleIt = locIt->second.find(rid);
        if (ruleIt == locIt->second.end()) continue;
        boundEvents.insert(ruleIt->second.begin(), ruleIt->second.end());
      }
    }

    // The temporal skeleton only works if some bound rule produces or
    // consumes each event a step mentions.
    for (const auto& [pid, process] : vsn.processes) {
      for (const auto& step : process.steps) {
        auto checkEvent = [&](const Id& ev) {
          if (!boundEvents.count(ev)) {
            flag("process " + vsn.id + "/" + pid, "step-event-regulated",
                 "event " + ev + " of step " + step.task.str() +
                     " appears in no rule bound by the vsn");
          }
        };
        for (const auto& ev : step.after) checkEvent(ev);
        for (const auto& ev : step.emits) checkEvent(ev);
      }
    }
  }

  if (coordGroups > 1) {
    flag("network " + d.name, "single-coordinated-rep",
         "more than one coordinated rule group declared");
  }

  return out;
}

}  // namespace sdsn::model
