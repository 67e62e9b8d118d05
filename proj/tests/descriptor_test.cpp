#include <doctest.h>

#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include "sdsn/core/error.hpp"
#include "sdsn/model/descriptor.hpp"
#include "sdsn/model/design.hpp"

using namespace sdsn;
using namespace sdsn::model;

namespace {

// A small but feature-complete network: two roles, one contract, transforms,
// one rule group per REP kind, and a VSN with a process and a policy binding.
const char* kDemoDescriptor = R"(
network: Demo
roles:
  CL:
    name: "Client"
    user: true
    binding: { endpoint: "http://localhost:9401/cl" }
  CO:
    name: "Coordinator"
    binding: { endpoint: "http://localhost:9402/co", timeoutMs: 1500, retries: 1 }
    tasks:
      tHandle:
        inputs: [CL_CO.iSubmit]
        outputs: [CL_CO.iSubmit]
        request: { name: HandleReq, fields: { caseId: string, severity: integer } }
        response: { name: HandleResp, fields: { caseId: string, ok: boolean } }
contracts:
  CL_CO:
    roleA: CL
    roleB: CO
    terms:
      iSubmit:
        direction: AtoB
        template: { name: Submit, fields: { caseId: string, severity: integer } }
transforms:
  normalizeSeverity: { "msg.severity": "msg.level" }
rules:
  - at: "routing:CL"
    text: |
      rule rAdmit priority 10 when msg.kind == "instantiation" then AdmissionControl(capacityKey=cl.cap, limit=100); CreateInstance() end
  - at: "pass:CL_CO"
    text: |
      rule rPass priority 5 when msg.interaction == "iSubmit" then PublishEvent(name=eSubmitted); Forward() end
  - at: "sync:CO"
    text: |
      rule rSync priority 5 when allOf(eSubmitted) then SynthesizeAndInvoke(task=tHandle) end
  - at: "coord"
    text: |
      rule rEnd priority 1 when allOf(eHandled) then TerminateInstance(outcome=done) end
vsns:
  - vsn: vDemo
    tenant: "Demo Tenant"
    params: { region: "eu", maxCases: 10, ratio: 0.5, active: true }
    processes:
      pMain:
        termination: allTasks
        path: { roles: [CL, CO], contracts: [CL_CO] }
        steps:
          - { task: CO.tHandle, after: [eSubmitted], emits: [eHandled] }
    policy:
      - at: "routing:CL"
        rules: [rAdmit]
      - at: "pass:CL_CO"
        rules: [rPass]
      - at: "sync:CO"
        rules: [rSync]
      - at: "coord"
        rules: [rEnd]
)";

bool hasViolation(const std::vector<Violation>& vs, const std::string& invariant) {
  return std::any_of(vs.begin(), vs.end(),
                     [&](const Violation& v) { return v.invariant == invariant; });
}

}  // namespace

TEST_CASE("descriptor loads the full surface") {
  ServiceNetworkDesign d = loadNetworkDescriptor(kDemoDescriptor);

  CHECK(d.name == "Demo");
  REQUIRE(d.roles.size() == 2);
  CHECK(d.roles.at("CL").userRole);
  CHECK_FALSE(d.roles.at("CO").userRole);
  CHECK(d.roles.at("CO").binding.endpoint == "http://localhost:9402/co");
  CHECK(d.roles.at("CO").binding.timeoutMs == 1500);
  CHECK(d.roles.at("CO").binding.retries == 1);
  CHECK(d.roles.at("CL").binding.timeoutMs == 2000);  // default

  const TaskSpec& task = d.roles.at("CO").tasks.at("tHandle");
  REQUIRE(task.inputs.size() == 1);
  CHECK(task.inputs[0] == TermRef{"CL_CO", "iSubmit"});
  CHECK(task.request.name == "HandleReq");
  CHECK(task.request.fields.at("severity") == ScalarKind::Integer);
  CHECK(task.response.fields.at("ok") == ScalarKind::Boolean);

  const ContractSpec& c = d.contracts.at("CL_CO");
  CHECK(c.roleA == "CL");
  CHECK(c.roleB == "CO");
  CHECK(c.terms.at("iSubmit").direction == TermDirection::AtoB);
  CHECK(c.terms.at("iSubmit").tmplate.name == "Submit");

  CHECK(d.transforms.at("normalizeSeverity").assign.at("msg.severity") == "msg.level");

  REQUIRE(d.ruleGroups.size() == 4);
  CHECK(d.ruleGroups[0].at == RepLocation{RepKind::Routing, "CL"});
  CHECK(d.ruleGroups[3].at.kind == RepKind::Coordinated);
  CHECK(d.ruleGroups[1].text.find("PublishEvent") != std::string::npos);

  REQUIRE(d.vsns.size() == 1);
  const VsnSpec& v = d.vsns[0];
  CHECK(v.tenant == "Demo Tenant");
  CHECK(v.params.at("region") == Scalar{std::string("eu")});
  CHECK(v.params.at("maxCases") == Scalar{std::int64_t{10}});
  CHECK(v.params.at("ratio") == Scalar{0.5});
  CHECK(v.params.at("active") == Scalar{true});
  const ProcessDefinition& p = v.processes.at("pMain");
  CHECK(p.termination == TerminationMode::AllTasks);
  CHECK(p.path.roles == std::vector<Id>{"CL", "CO"});
  REQUIRE(p.steps.size() == 1);
  CHECK(p.steps[0].task == TaskRef{"CO", "tHandle"});
  CHECK(p.steps[0].after == std::vector<Id>{"eSubmitted"});
  CHECK(p.steps[0].emits == std::vector<Id>{"eHandled"});
  REQUIRE(v.policy.size() == 4);
  CHECK(v.policy[0].rules == std::vector<Id>{"rAdmit"});
  CHECK(v.policy[3].at.kind == RepKind::Coordinated);
}

TEST_CASE("serialize/load round trip preserves the design") {
  ServiceNetworkDesign d = loadNetworkDescriptor(kDemoDescriptor);
  std::string text = serializeDescriptor(d);
  ServiceNetworkDesign again = loadNetworkDescriptor(text);
  CHECK(again == d);
  // And the serialized form itself is a fixed point.
  CHECK(serializeDescriptor(again) == text);
}

TEST_CASE("vsn serialize/load round trip") {
  ServiceNetworkDesign d = loadNetworkDescriptor(kDemoDescriptor);
  VsnSpec again = loadVsnSpec(serializeVsn(d.vsns[0]));
  CHECK(again == d.vsns[0]);
}

TEST_CASE("dangling references are named in the error") {
  std::string text = kDemoDescriptor;

  SUBCASE("contract role") {
    auto pos = text.find("roleB: CO");
    text.replace(pos, 9, "roleB: ZZ");
    CHECK_THROWS_WITH_AS(loadNetworkDescriptor(text),
                         doctest::Contains("'ZZ'"), Error);
  }
  SUBCASE("task input term") {
    auto pos = text.find("inputs: [CL_CO.iSubmit]");
    text.replace(pos, 23, "inputs: [ZZ.iSubmit]");
    try {
      loadNetworkDescriptor(text);
      FAIL("expected ReferenceError");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Reference);
      CHECK(std::string(e.what()).find("ZZ") != std::string::npos);
    }
  }
  SUBCASE("step task") {
    auto pos = text.find("task: CO.tHandle");
    text.replace(pos, 16, "task: ZZ.tHandle");
    CHECK_THROWS_WITH_AS(loadNetworkDescriptor(text),
                         doctest::Contains("'ZZ.tHandle'"), Error);
  }
  SUBCASE("process path role") {
    auto pos = text.find("roles: [CL, CO], contracts");
    text.replace(pos, 15, "roles: [CL, ZZ]");
    CHECK_THROWS_WITH_AS(loadNetworkDescriptor(text),
                         doctest::Contains("'ZZ'"), Error);
  }
}

TEST_CASE("duplicate ids are rejected") {
  SUBCASE("duplicate vsn") {
    std::string text = kDemoDescriptor;
    text += R"(
  - vsn: vDemo
    tenant: "Copycat"
)";
    try {
      loadNetworkDescriptor(text);
      FAIL("expected DuplicateIdError");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DuplicateId);
    }
  }
  SUBCASE("duplicate role key") {
    std::string text = kDemoDescriptor;
    auto pos = text.find("contracts:");
    text.insert(pos, "  CL:\n    name: \"Client again\"\n");
    CHECK_THROWS_AS(loadNetworkDescriptor(text), Error);
  }
}

TEST_CASE("malformed descriptors raise parse errors") {
  auto expectParse = [](const std::string& text) {
    try {
      loadNetworkDescriptor(text);
      FAIL("expected ParseError for: ", text);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Parse);
    }
  };
  expectParse("network: [not, a, name]");
  expectParse("network: Demo\nroles: [CL]");            // roles must be a map
  expectParse("network: 9bad");                          // identifiers start with a letter
  expectParse("network: Demo\nrules:\n  - at: \"nowhere:CL\"\n    text: x");
  expectParse("network: Demo\nrules:\n  - at: \"routing:CL\"\n");  // no text/file

  std::string badDirection = kDemoDescriptor;
  auto pos = badDirection.find("direction: AtoB");
  badDirection.replace(pos, 15, "direction: Down");
  expectParse(badDirection);

  std::string badTermination = kDemoDescriptor;
  pos = badTermination.find("termination: allTasks");
  badTermination.replace(pos, 21, "termination: never");
  expectParse(badTermination);
}

TEST_CASE("descriptor files resolve rule and vsn references relative to themselves") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / ("sdsn_desc_" + std::to_string(::getpid()));
  fs::create_directories(dir);

  auto writeFile = [&](const char* name, const std::string& content) {
    std::ofstream out(dir / name);
    out << content;
  };
  writeFile("admit.rules",
            "rule rAdmit priority 10 when msg.kind == \"instantiation\" "
            "then CreateInstance() end\n");
  writeFile("tenant.vsn",
            "vsn: vFile\ntenant: \"From File\"\n");
  writeFile("net.sdsn",
            "network: FromFiles\n"
            "roles:\n  CL: { name: \"Client\", user: true }\n"
            "rules:\n  - at: \"routing:CL\"\n    file: admit.rules\n"
            "vsns:\n  - file: tenant.vsn\n");

  ServiceNetworkDesign d = loadNetworkDescriptorFile((dir / "net.sdsn").string());
  REQUIRE(d.ruleGroups.size() == 1);
  CHECK(d.ruleGroups[0].sourceFile == "admit.rules");
  CHECK(d.ruleGroups[0].text.find("rAdmit") != std::string::npos);
  REQUIRE(d.vsns.size() == 1);
  CHECK(d.vsns[0].id == "vFile");
  CHECK(d.vsns[0].tenant == "From File");

  // Without a resolver, file references cannot be satisfied.
  CHECK_THROWS_AS(loadNetworkDescriptor(readTextFile((dir / "net.sdsn").string())), Error);

  fs::remove_all(dir);
}

TEST_CASE("standalone process definitions parse") {
  ProcessDefinition p = loadProcessDefinition(
      "process: pAlt\n"
      "termination: rule\n"
      "path: { roles: [CL, CO], contracts: [CL_CO] }\n"
      "steps:\n"
      "  - { task: CO.tHandle, after: [eSubmitted] }\n");
  CHECK(p.id == "pAlt");
  CHECK(p.termination == TerminationMode::CoordinatedRule);
  CHECK(p.steps.size() == 1);
}

// ---------------------------------------------------------------------------
// validateDesign: one broken design per invariant.
// ---------------------------------------------------------------------------

TEST_CASE("a well-formed design has no violations") {
  ServiceNetworkDesign d = loadNetworkDescriptor(kDemoDescriptor);
  auto vs = validateDesign(d);
  for (const auto& v : vs) {
    CAPTURE(v.element);
    CAPTURE(v.invariant);
    CAPTURE(v.detail);
    CHECK(false);
  }
  CHECK(vs.empty());
}

TEST_CASE("validateDesign flags each shape invariant") {
  ServiceNetworkDesign base = loadNetworkDescriptor(kDemoDescriptor);

  SUBCASE("contract-roles-distinct") {
    ServiceNetworkDesign d = base;
    d.contracts.at("CL_CO").roleB = "CL";
    CHECK(hasViolation(validateDesign(d), "contract-roles-distinct"));
  }
  SUBCASE("task-io-adjacent") {
    ServiceNetworkDesign d = base;
    // Move the task to a role that is not an endpoint of CL_CO.
    RoleSpec outsider;
    outsider.id = "XR";
    outsider.tasks["tHandle"] = d.roles.at("CO").tasks.at("tHandle");
    d.roles["XR"] = outsider;
    CHECK(hasViolation(validateDesign(d), "task-io-adjacent"));
  }
  SUBCASE("task-templates-present") {
    ServiceNetworkDesign d = base;
    d.roles.at("CO").tasks.at("tHandle").response = MessageTemplate{};
    CHECK(hasViolation(validateDesign(d), "task-templates-present"));
  }
  SUBCASE("rules-parse") {
    ServiceNetworkDesign d = base;
    d.ruleGroups[0].text = "rule rBroken priority x when true then Forward() end";
    CHECK(hasViolation(validateDesign(d), "rules-parse"));
  }
  SUBCASE("rule-id-unique") {
    ServiceNetworkDesign d = base;
    RuleGroup dup = d.ruleGroups[0];  // same location, same rule id again
    d.ruleGroups.push_back(dup);
    CHECK(hasViolation(validateDesign(d), "rule-id-unique"));
  }
  SUBCASE("user-role-present") {
    ServiceNetworkDesign d = base;
    d.roles.at("CL").userRole = false;
    CHECK(hasViolation(validateDesign(d), "user-role-present"));
  }
  SUBCASE("path-contract-endpoints-on-path") {
    ServiceNetworkDesign d = base;
    d.vsns[0].processes.at("pMain").path.roles = {"CO"};  // CL_CO's A end left out
    auto vs = validateDesign(d);
    CHECK(hasViolation(vs, "path-contract-endpoints-on-path"));
  }
  SUBCASE("step-task-unique") {
    ServiceNetworkDesign d = base;
    auto& steps = d.vsns[0].processes.at("pMain").steps;
    steps.push_back(steps[0]);
    CHECK(hasViolation(validateDesign(d), "step-task-unique"));
  }
  SUBCASE("step-role-on-path") {
    ServiceNetworkDesign d = base;
    d.roles["XR"] = RoleSpec{.id = "XR"};
    d.roles["XR"].tasks["tSide"] = TaskSpec{
        .id = "tSide",
        .request = MessageTemplate{.name = "SideReq"},
        .response = MessageTemplate{.name = "SideResp"}};
    d.vsns[0].processes.at("pMain").steps.push_back(EpcStep{.task = {"XR", "tSide"}});
    CHECK(hasViolation(validateDesign(d), "step-role-on-path"));
  }
  SUBCASE("epc-acyclic") {
    ServiceNetworkDesign d = base;
    d.roles.at("CO").tasks["tSecond"] = TaskSpec{
        .id = "tSecond",
        .request = MessageTemplate{.name = "SecondReq"},
        .response = MessageTemplate{.name = "SecondResp"}};
    auto& p = d.vsns[0].processes.at("pMain");
    // tHandle waits on eLoop which tSecond emits; tSecond waits on eHandled.
    p.steps[0].after.push_back("eLoop");
    p.steps.push_back(EpcStep{.task = {"CO", "tSecond"},
                              .after = {"eHandled"},
                              .emits = {"eLoop"}});
    CHECK(hasViolation(validateDesign(d), "epc-acyclic"));
  }
  SUBCASE("policy-rule-exists") {
    ServiceNetworkDesign d = base;
    d.vsns[0].policy[0].rules.push_back("rMissing");
    CHECK(hasViolation(validateDesign(d), "policy-rule-exists"));
  }
  SUBCASE("step-event-regulated") {
    ServiceNetworkDesign d = base;
    d.vsns[0].processes.at("pMain").steps[0].emits.push_back("eNobodyMentionsThis");
    CHECK(hasViolation(validateDesign(d), "step-event-regulated"));
  }
  SUBCASE("single-coordinated-rep") {
    ServiceNetworkDesign d = base;
    d.ruleGroups.push_back(RuleGroup{
        .at = {RepKind::Coordinated, ""},
        .text = "rule rEnd2 priority 1 when allOf(eOther) then TerminateInstance() end"});
    CHECK(hasViolation(validateDesign(d), "single-coordinated-rep"));
  }
}
