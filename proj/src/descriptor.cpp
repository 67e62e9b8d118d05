#include "sdsn/model/descriptor.hpp"

#include <yaml-cpp/yaml.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sdsn/core/error.hpp"
#include "sdsn/regulation/rule.hpp"

namespace sdsn::model {

namespace {

[[noreturn]] void parseFail(const std::string& message) {
  throw err(ErrorCode::Parse, message);
}

std::string str(const YAML::Node& n, const std::string& what) {
  if (!n || !n.IsScalar()) parseFail("expected scalar for " + what);
  return n.as<std::string>();
}

Id identifier(const YAML::Node& n, const std::string& what) {
  std::string s = str(n, what);
  if (!isValidIdentifier(s)) parseFail("bad identifier '" + s + "' for " + what);
  return s;
}

// YAML scalars keep no type; infer: quoted → string, else bool/int/double by
// shape, falling back to string.
Scalar yamlScalar(const YAML::Node& n) {
  if (!n.IsScalar()) parseFail("expected a scalar value");
  const std::string s = n.Scalar();
  if (n.Tag() == "!") return s;  // quoted
  if (s == "true") return true;
  if (s == "false") return false;
  if (!s.empty()) {
    char* end = nullptr;
    long long asInt = std::strtoll(s.c_str(), &end, 10);
    if (end && *end == '\0') return static_cast<std::int64_t>(asInt);
    double asDouble = std::strtod(s.c_str(), &end);
    if (end && *end == '\0' && end != s.c_str()) return asDouble;
  }
  return s;
}

FieldMap yamlFieldMap(const YAML::Node& n, const std::string& what) {
  FieldMap out;
  if (!n) return out;
  if (!n.IsMap()) parseFail(what + " must be a map");
  for (const auto& kv : n) {
    out[kv.first.as<std::string>()] = yamlScalar(kv.second);
  }
  return out;
}

MessageTemplate parseTemplate(const YAML::Node& n, const std::string& what) {
  if (!n || !n.IsMap()) parseFail("template for " + what + " must be a map");
  MessageTemplate t;
  t.name = identifier(n["name"], what + " template name");
  const auto& fields = n["fields"];
  if (fields) {
    if (!fields.IsMap()) parseFail(what + " template fields must be a map");
    for (const auto& kv : fields) {
      std::string field = kv.first.as<std::string>();
      if (!isValidIdentifier(field)) parseFail("bad field name '" + field + "' in " + what);
      auto kind = scalarKindFromName(kv.second.as<std::string>());
      if (!kind) parseFail("bad field kind for '" + field + "' in " + what);
      if (t.fields.count(field)) {
        throw err(ErrorCode::DuplicateId, "field '" + field + "' declared twice in " + what);
      }
      t.fields[field] = *kind;
    }
  }
  return t;
}

ServiceBinding parseBinding(const YAML::Node& n) {
  ServiceBinding b;
  if (!n) return b;
  if (!n.IsMap()) parseFail("binding must be a map");
  if (n["endpoint"]) b.endpoint = n["endpoint"].as<std::string>();
  if (n["timeoutMs"]) b.timeoutMs = n["timeoutMs"].as<int>();
  if (n["retries"]) b.retries = n["retries"].as<int>();
  return b;
}

RepLocation parseRepLocation(const std::string& text) {
  RepLocation loc;
  if (text == "coord") {
    loc.kind = RepKind::Coordinated;
    return loc;
  }
  auto colon = text.find(':');
  if (colon == std::string::npos) parseFail("bad REP location '" + text + "'");
  if (!repKindFromName(text.substr(0, colon), loc.kind) || loc.kind == RepKind::Coordinated) {
    parseFail("bad REP kind in location '" + text + "'");
  }
  loc.element = text.substr(colon + 1);
  if (!isValidIdentifier(loc.element)) parseFail("bad element in REP location '" + text + "'");
  return loc;
}

std::vector<Id> parseIdList(const YAML::Node& n, const std::string& what) {
  std::vector<Id> out;
  if (!n) return out;
  if (!n.IsSequence()) parseFail(what + " must be a list");
  for (const auto& item : n) out.push_back(identifier(item, what));
  return out;
}

ProcessDefinition parseProcess(const Id& id, const YAML::Node& n) {
  ProcessDefinition p;
  p.id = id;
  if (!n.IsMap()) parseFail("process " + id + " must be a map");
  if (n["termination"]) {
    if (!terminationModeFromName(n["termination"].as<std::string>(), p.termination)) {
      parseFail("process " + id + ": termination must be allTasks or rule");
    }
  }
  const auto& path = n["path"];
  if (path) {
    p.path.roles = parseIdList(path["roles"], "process path roles");
    p.path.contracts = parseIdList(path["contracts"], "process path contracts");
  }
  const auto& steps = n["steps"];
  if (steps) {
    if (!steps.IsSequence()) parseFail("process " + id + " steps must be a list");
    for (const auto& s : steps) {
      EpcStep step;
      step.task = TaskRef::parse(str(s["task"], "step task"));
      step.after = parseIdList(s["after"], "step events");
      step.emits = parseIdList(s["emits"], "step events");
      p.steps.push_back(std::move(step));
    }
  }
  return p;
}

VsnSpec parseVsn(const YAML::Node& n) {
  VsnSpec v;
  v.id = identifier(n["vsn"], "vsn id");
  if (n["tenant"]) v.tenant = n["tenant"].as<std::string>();
  v.params = yamlFieldMap(n["params"], "vsn params");
  const auto& procs = n["processes"];
  if (procs) {
    if (!procs.IsMap()) parseFail("vsn " + v.id + " processes must be a map");
    for (const auto& kv : procs) {
      Id pid = identifier(kv.first, "process id");
      if (v.processes.count(pid)) {
        throw err(ErrorCode::DuplicateId, "process '" + pid + "' declared twice in vsn " + v.id);
      }
      v.processes[pid] = parseProcess(pid, kv.second);
    }
  }
  const auto& policy = n["policy"];
  if (policy) {
    if (!policy.IsSequence()) parseFail("vsn " + v.id + " policy must be a list");
    for (const auto& b : policy) {
      PolicyBinding binding;
      binding.at = parseRepLocation(str(b["at"], "policy binding location"));
      binding.rules = parseIdList(b["rules"], "policy binding rules");
      v.policy.push_back(std::move(binding));
    }
  }
  return v;
}

std::string resolveOrThrow(const ResourceResolver& resolve, const std::string& path) {
  if (!resolve) {
    throw err(ErrorCode::NotFound, "descriptor references file '" + path +
                                       "' but no resource resolver was provided");
  }
  return resolve(path);
}

}  // namespace

std::string readTextFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw err(ErrorCode::NotFound, "cannot read " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

ResourceResolver fileResolver(const std::string& baseDir) {
  return [baseDir](const std::string& path) {
    std::filesystem::path p(path);
    if (p.is_relative()) p = std::filesystem::path(baseDir) / p;
    return readTextFile(p.string());
  };
}

ServiceNetworkDesign loadNetworkDescriptor(const std::string& text,
                                           const ResourceResolver& resolve) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    parseFail(std::string("descriptor: ") + e.what());
  }
  if (!root.IsMap()) parseFail("descriptor must be a map");

  ServiceNetworkDesign design;
  design.name = identifier(root["network"], "network name");

  const auto& roles = root["roles"];
  if (roles) {
    if (!roles.IsMap()) parseFail("roles must be a map");
    for (const auto& kv : roles) {
      RoleSpec role;
      role.id = identifier(kv.first, "role id");
      if (design.roles.count(role.id)) {
        throw err(ErrorCode::DuplicateId, "role '" + role.id + "' declared twice");
      }
      const auto& body = kv.second;
      if (body["name"]) role.name = body["name"].as<std::string>();
      if (body["user"]) role.userRole = body["user"].as<bool>();
      role.binding = parseBinding(body["binding"]);
      const auto& tasks = body["tasks"];
      if (tasks) {
        if (!tasks.IsMap()) parseFail("tasks of role " + role.id + " must be a map");
        for (const auto& tkv : tasks) {
          TaskSpec task;
          task.id = identifier(tkv.first, "task id");
          if (role.tasks.count(task.id)) {
            throw err(ErrorCode::DuplicateId,
                      "task '" + task.id + "' declared twice in role " + role.id);
          }
          const auto& tbody = tkv.second;
          if (tbody["inputs"]) {
            for (const auto& item : tbody["inputs"]) {
              task.inputs.push_back(TermRef::parse(item.as<std::string>()));
            }
          }
          if (tbody["outputs"]) {
            for (const auto& item : tbody["outputs"]) {
              task.outputs.push_back(TermRef::parse(item.as<std::string>()));
            }
          }
          if (tbody["request"]) task.request = parseTemplate(tbody["request"], "task " + task.id);
          if (tbody["response"]) task.response = parseTemplate(tbody["response"], "task " + task.id);
          role.tasks[task.id] = std::move(task);
        }
      }
      design.roles[role.id] = std::move(role);
    }
  }

  const auto& contracts = root["contracts"];
  if (contracts) {
    if (!contracts.IsMap()) parseFail("contracts must be a map");
    for (const auto& kv : contracts) {
      ContractSpec contract;
      contract.id = identifier(kv.first, "contract id");
      if (design.contracts.count(contract.id)) {
        throw err(ErrorCode::DuplicateId, "contract '" + contract.id + "' declared twice");
      }
      const auto& body = kv.second;
      contract.roleA = identifier(body["roleA"], "contract " + contract.id + " roleA");
      contract.roleB = identifier(body["roleB"], "contract " + contract.id + " roleB");
      const auto& terms = body["terms"];
      if (terms) {
        if (!terms.IsMap()) parseFail("terms of contract " + contract.id + " must be a map");
        for (const auto& tkv : terms) {
          TermSpec term;
          term.id = identifier(tkv.first, "term id");
          if (contract.terms.count(term.id)) {
            throw err(ErrorCode::DuplicateId,
                      "term '" + term.id + "' declared twice in contract " + contract.id);
          }
          const auto& tbody = tkv.second;
          if (tbody["direction"]) {
            if (!termDirectionFromName(tbody["direction"].as<std::string>(), term.direction)) {
              parseFail("term " + term.id + ": direction must be AtoB or BtoA");
            }
          }
          term.tmplate = parseTemplate(tbody["template"], "term " + term.id);
          contract.terms[term.id] = std::move(term);
        }
      }
      design.contracts[contract.id] = std::move(contract);
    }
  }

  const auto& transforms = root["transforms"];
  if (transforms) {
    if (!transforms.IsMap()) parseFail("transforms must be a map");
    for (const auto& kv : transforms) {
      TransformSpec spec;
      for (const auto& assign : kv.second) {
        spec.assign[assign.first.as<std::string>()] = assign.second.as<std::string>();
      }
      design.transforms[kv.first.as<std::string>()] = std::move(spec);
    }
  }

  const auto& rules = root["rules"];
  if (rules) {
    if (!rules.IsSequence()) parseFail("rules must be a list of groups");
    for (const auto& g : rules) {
      RuleGroup group;
      group.at = parseRepLocation(str(g["at"], "rule group location"));
      if (g["text"]) {
        group.text = g["text"].as<std::string>();
      } else if (g["file"]) {
        group.sourceFile = g["file"].as<std::string>();
        group.text = resolveOrThrow(resolve, group.sourceFile);
      } else {
        parseFail("rule group needs text: or file:");
      }
      design.ruleGroups.push_back(std::move(group));
    }
  }

  const auto& vsns = root["vsns"];
  if (vsns) {
    if (!vsns.IsSequence()) parseFail("vsns must be a list");
    for (const auto& v : vsns) {
      YAML::Node spec = v;
      if (v["file"]) {
        std::string raw = resolveOrThrow(resolve, v["file"].as<std::string>());
        try {
          spec = YAML::Load(raw);
        } catch (const YAML::Exception& e) {
          parseFail("vsn file " + v["file"].as<std::string>() + ": " + e.what());
        }
      }
      VsnSpec parsed = parseVsn(spec);
      for (const auto& existing : design.vsns) {
        if (existing.id == parsed.id) {
          throw err(ErrorCode::DuplicateId, "vsn '" + parsed.id + "' declared twice");
        }
      }
      design.vsns.push_back(std::move(parsed));
    }
  }

  checkReferences(design);
  return design;
}

ServiceNetworkDesign loadNetworkDescriptorFile(const std::string& path) {
  std::filesystem::path p(path);
  return loadNetworkDescriptor(readTextFile(path), fileResolver(p.parent_path().string()));
}

VsnSpec loadVsnSpec(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    parseFail(std::string("vsn: ") + e.what());
  }
  return parseVsn(root);
}

VsnSpec loadVsnSpecFile(const std::string& path) { return loadVsnSpec(readTextFile(path)); }

ProcessDefinition loadProcessDefinition(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    parseFail(std::string("process: ") + e.what());
  }
  Id pid = identifier(root["process"], "process id");
  return parseProcess(pid, root);
}

// ---------------------------------------------------------------------------
// Serialization. Emits a single self-contained document (rule text and VSNs
// inline) that loadNetworkDescriptor reads back to an equal design.
// ---------------------------------------------------------------------------

namespace {

void emitScalar(YAML::Emitter& out, const Scalar& v) {
  switch (kindOf(v)) {
    case ScalarKind::String: out << YAML::DoubleQuoted << std::get<std::string>(v); break;
    case ScalarKind::Integer: out << std::get<std::int64_t>(v); break;
    case ScalarKind::Decimal: out << std::get<double>(v); break;
    case ScalarKind::Boolean: out << std::get<bool>(v); break;
  }
}

void emitFieldMap(YAML::Emitter& out, const FieldMap& m) {
  out << YAML::BeginMap;
  for (const auto& [k, v] : m) {
    out << YAML::Key << k << YAML::Value;
    emitScalar(out, v);
  }
  out << YAML::EndMap;
}

void emitTemplate(YAML::Emitter& out, const MessageTemplate& t) {
  out << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << t.name;
  out << YAML::Key << "fields" << YAML::Value << YAML::BeginMap;
  for (const auto& [field, kind] : t.fields) {
    out << YAML::Key << field << YAML::Value << scalarKindName(kind);
  }
  out << YAML::EndMap << YAML::EndMap;
}

void emitIdList(YAML::Emitter& out, const std::vector<Id>& ids) {
  out << YAML::Flow << YAML::BeginSeq;
  for (const auto& id : ids) out << id;
  out << YAML::EndSeq;
}

// Emits termination/path/steps (the body shared by inline processes and
// stand-alone process documents). Caller opens/closes the surrounding map.
void emitProcessBody(YAML::Emitter& out, const ProcessDefinition& p) {
  out << YAML::Key << "termination" << YAML::Value << terminationModeName(p.termination);
  out << YAML::Key << "path" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "roles" << YAML::Value;
  emitIdList(out, p.path.roles);
  out << YAML::Key << "contracts" << YAML::Value;
  emitIdList(out, p.path.contracts);
  out << YAML::EndMap;
  if (!p.steps.empty()) {
    out << YAML::Key << "steps" << YAML::Value << YAML::BeginSeq;
    for (const auto& s : p.steps) {
      out << YAML::BeginMap;
      out << YAML::Key << "task" << YAML::Value << s.task.str();
      if (!s.after.empty()) {
        out << YAML::Key << "after" << YAML::Value;
        emitIdList(out, s.after);
      }
      if (!s.emits.empty()) {
        out << YAML::Key << "emits" << YAML::Value;
        emitIdList(out, s.emits);
      }
      out << YAML::EndMap;
    }
    out << YAML::EndSeq;
  }
}

void emitVsnBody(YAML::Emitter& out, const VsnSpec& v) {
  out << YAML::Key << "vsn" << YAML::Value << v.id;
  out << YAML::Key << "tenant" << YAML::Value << v.tenant;
  if (!v.params.empty()) {
    out << YAML::Key << "params" << YAML::Value;
    emitFieldMap(out, v.params);
  }
  if (!v.processes.empty()) {
    out << YAML::Key << "processes" << YAML::Value << YAML::BeginMap;
    for (const auto& [pid, p] : v.processes) {
      out << YAML::Key << pid << YAML::Value << YAML::BeginMap;
      emitProcessBody(out, p);
      out << YAML::EndMap;
    }
    out << YAML::EndMap;
  }
  if (!v.policy.empty()) {
    out << YAML::Key << "policy" << YAML::Value << YAML::BeginSeq;
    for (const auto& b : v.policy) {
      out << YAML::BeginMap;
      out << YAML::Key << "at" << YAML::Value << b.at.str();
      out << YAML::Key << "rules" << YAML::Value;
      emitIdList(out, b.rules);
      out << YAML::EndMap;
    }
    out << YAML::EndSeq;
  }
}

}  // namespace

std::string serializeVsn(const VsnSpec& vsn) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  emitVsnBody(out, vsn);
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

std::string serializeProcessDefinition(const ProcessDefinition& process) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "process" << YAML::Value << process.id;
  emitProcessBody(out, process);
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

std::string serializeDescriptor(const ServiceNetworkDesign& design) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "network" << YAML::Value << design.name;

  if (!design.roles.empty()) {
    out << YAML::Key << "roles" << YAML::Value << YAML::BeginMap;
    for (const auto& [id, role] : design.roles) {
      out << YAML::Key << id << YAML::Value << YAML::BeginMap;
      out << YAML::Key << "name" << YAML::Value << YAML::DoubleQuoted << role.name;
      if (role.userRole) out << YAML::Key << "user" << YAML::Value << true;
      out << YAML::Key << "binding" << YAML::Value << YAML::BeginMap;
      out << YAML::Key << "endpoint" << YAML::Value << YAML::DoubleQuoted << role.binding.endpoint;
      out << YAML::Key << "timeoutMs" << YAML::Value << role.binding.timeoutMs;
      out << YAML::Key << "retries" << YAML::Value << role.binding.retries;
      out << YAML::EndMap;
      if (!role.tasks.empty()) {
        out << YAML::Key << "tasks" << YAML::Value << YAML::BeginMap;
        for (const auto& [tid, task] : role.tasks) {
          out << YAML::Key << tid << YAML::Value << YAML::BeginMap;
          if (!task.inputs.empty()) {
            out << YAML::Key << "inputs" << YAML::Value << YAML::Flow << YAML::BeginSeq;
            for (const auto& ref : task.inputs) out << ref.str();
            out << YAML::EndSeq;
          }
          if (!task.outputs.empty()) {
            out << YAML::Key << "outputs" << YAML::Value << YAML::Flow << YAML::BeginSeq;
            for (const auto& ref : task.outputs) out << ref.str();
            out << YAML::EndSeq;
          }
          if (!task.request.name.empty()) {
            out << YAML::Key << "request" << YAML::Value;
            emitTemplate(out, task.request);
          }
          if (!task.response.name.empty()) {
            out << YAML::Key << "response" << YAML::Value;
            emitTemplate(out, task.response);
          }
          out << YAML::EndMap;
        }
        out << YAML::EndMap;
      }
      out << YAML::EndMap;
    }
    out << YAML::EndMap;
  }

  if (!design.contracts.empty()) {
    out << YAML::Key << "contracts" << YAML::Value << YAML::BeginMap;
    for (const auto& [id, contract] : design.contracts) {
      out << YAML::Key << id << YAML::Value << YAML::BeginMap;
      out << YAML::Key << "roleA" << YAML::Value << contract.roleA;
      out << YAML::Key << "roleB" << YAML::Value << contract.roleB;
      if (!contract.terms.empty()) {
        out << YAML::Key << "terms" << YAML::Value << YAML::BeginMap;
        for (const auto& [tid, term] : contract.terms) {
          out << YAML::Key << tid << YAML::Value << YAML::BeginMap;
          out << YAML::Key << "direction" << YAML::Value << termDirectionName(term.direction);
          out << YAML::Key << "template" << YAML::Value;
          emitTemplate(out, term.tmplate);
          out << YAML::EndMap;
        }
        out << YAML::EndMap;
      }
      out << YAML::EndMap;
    }
    out << YAML::EndMap;
  }

  if (!design.transforms.empty()) {
    out << YAML::Key << "transforms" << YAML::Value << YAML::BeginMap;
    for (const auto& [name, spec] : design.transforms) {
      out << YAML::Key << name << YAML::Value << YAML::BeginMap;
      for (const auto& [target, source] : spec.assign) {
        out << YAML::Key << target << YAML::Value << source;
      }
      out << YAML::EndMap;
    }
    out << YAML::EndMap;
  }

  if (!design.ruleGroups.empty()) {
    out << YAML::Key << "rules" << YAML::Value << YAML::BeginSeq;
    for (const auto& group : design.ruleGroups) {
      out << YAML::BeginMap;
      out << YAML::Key << "at" << YAML::Value << group.at.str();
      out << YAML::Key << "text" << YAML::Value << YAML::Literal << group.text;
      out << YAML::EndMap;
    }
    out << YAML::EndSeq;
  }

  if (!design.vsns.empty()) {
    out << YAML::Key << "vsns" << YAML::Value << YAML::BeginSeq;
    for (const auto& vsn : design.vsns) {
      out << YAML::BeginMap;
      emitVsnBody(out, vsn);
      out << YAML::EndMap;
    }
    out << YAML::EndSeq;
  }

  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace sdsn::model
