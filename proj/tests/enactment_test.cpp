#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <functional>
#include <future>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "sdsn/core/error.hpp"
#include "sdsn/enactment/flow_executor.hpp"
#include "sdsn/enactment/network_runtime.hpp"
#include "sdsn/enactment/service_invoker.hpp"
#include "sdsn/model/descriptor.hpp"

using namespace sdsn;
using namespace sdsn::enactment;
using sdsn::model::ManagementState;

namespace {

// Three tenants over one case-handling network. vA runs the full two-task
// chain and terminates naturally; vB runs one task and is ended by the
// coordinated point; vC has capacity 1 with scheduling on rejection.
const char* kCaseflow = R"(
network: caseflow
roles:
  CL: { name: "Client entry", user: true, binding: { endpoint: "stub://client" } }
  CO:
    name: "Case office"
    binding: { endpoint: "stub://case-office" }
    tasks:
      tHandle:
        inputs: [CL_CO.iSubmit]
        outputs: [CO_BI.iBill]
        request: { name: HandleReq, fields: { caseId: string, severity: integer } }
        response: { name: HandleResp, fields: { caseId: string, amount: integer } }
  BI:
    name: "Billing"
    binding: { endpoint: "stub://billing" }
    tasks:
      tBill:
        inputs: [CO_BI.iBill]
        request: { name: BillReq, fields: { caseId: string, amount: integer } }
        response: { name: BillResp, fields: { caseId: string, ok: boolean } }
contracts:
  CL_CO:
    roleA: CL
    roleB: CO
    terms:
      iSubmit:
        direction: AtoB
        template: { name: Submit, fields: { caseId: string, severity: integer } }
  CO_BI:
    roleA: CO
    roleB: BI
    terms:
      iBill:
        direction: AtoB
        template: { name: Bill, fields: { caseId: string, amount: integer } }
rules:
  - at: "routing:CL"
    text: |
      rule rAdmitA priority 100 when msg.kind == "instantiation" then AdmissionControl(capacityKey=cap.vA, limit=100, onReject=drop); LoadBalance(strategy=roundRobin); CreateInstance() end
      rule rAdmitB priority 100 when msg.kind == "instantiation" then AdmissionControl(capacityKey=cap.vB, limit=2, onReject=drop); LoadBalance(strategy=roundRobin); CreateInstance() end
      rule rAdmitC priority 100 when msg.kind == "instantiation" then AdmissionControl(capacityKey=cap.vC, limit=1, onReject=schedule, queue=waiting.vC, queueKey=cap.vC); LoadBalance(strategy=roundRobin); CreateInstance() end
      rule rToCO priority 90 when msg.kind == "roleService" and msg.direction == "request" then Route(to=CO); AdjustState(key=count.started, delta=1) end
  - at: "routing:CO"
    text: |
      rule rBillA priority 50 when msg.kind == "roleService" and msg.direction == "response" and msg.interaction == "tHandle" then Route(to=BI); MonitorResponseTime(key=rt.tHandle) end
      rule rDoneB priority 50 when msg.kind == "roleService" and msg.direction == "response" and msg.interaction == "tHandle" then PublishEvent(name=eHandled); MonitorResponseTime(key=rt.vB.tHandle) end
  - at: "routing:BI"
    text: |
      rule rDoneBI priority 10 when msg.direction == "response" then MonitorResponseTime(key=rt.tBill) end
  - at: "pass:CL_CO"
    text: |
      rule rPassSubmit priority 10 when msg.kind == "roleRole" then PublishEvent(name=eSubmitArrived); Forward() end
  - at: "pass:CO_BI"
    text: |
      rule rPassBill priority 10 when msg.kind == "roleRole" then PublishEvent(name=eBillArrived); Forward() end
  - at: "sync:CO"
    text: |
      rule rSyncCO priority 10 when allOf(eSubmitArrived) then SynthesizeAndInvoke(task=tHandle) end
  - at: "sync:BI"
    text: |
      rule rSyncBI priority 10 when allOf(eBillArrived) then SynthesizeAndInvoke(task=tBill) end
  - at: "coord"
    text: |
      rule rFinishB priority 10 when allOf(eHandled) then TerminateInstance(outcome=completed) end
vsns:
  - vsn: vA
    tenant: "Tenant A"
    processes:
      pMain:
        termination: allTasks
        path: { roles: [CL, CO, BI], contracts: [CL_CO, CO_BI] }
        steps:
          - { task: CO.tHandle, after: [eSubmitArrived], emits: [eBillArrived] }
          - { task: BI.tBill, after: [eBillArrived] }
    policy:
      - { at: "routing:CL", rules: [rAdmitA, rToCO] }
      - { at: "routing:CO", rules: [rBillA] }
      - { at: "routing:BI", rules: [rDoneBI] }
      - { at: "pass:CL_CO", rules: [rPassSubmit] }
      - { at: "pass:CO_BI", rules: [rPassBill] }
      - { at: "sync:CO", rules: [rSyncCO] }
      - { at: "sync:BI", rules: [rSyncBI] }
  - vsn: vB
    tenant: "Tenant B"
    processes:
      pB:
        termination: rule
        path: { roles: [CL, CO], contracts: [CL_CO] }
        steps:
          - { task: CO.tHandle, after: [eSubmitArrived], emits: [eHandled] }
    policy:
      - { at: "routing:CL", rules: [rAdmitB, rToCO] }
      - { at: "routing:CO", rules: [rDoneB] }
      - { at: "pass:CL_CO", rules: [rPassSubmit] }
      - { at: "sync:CO", rules: [rSyncCO] }
      - { at: "coord", rules: [rFinishB] }
  - vsn: vC
    tenant: "Tenant C"
    processes:
      pC:
        termination: allTasks
        path: { roles: [CL, CO], contracts: [CL_CO] }
        steps:
          - { task: CO.tHandle, after: [eSubmitArrived] }
    policy:
      - { at: "routing:CL", rules: [rAdmitC, rToCO] }
      - { at: "pass:CL_CO", rules: [rPassSubmit] }
      - { at: "sync:CO", rules: [rSyncCO] }
)";

struct Harness {
  ScriptedInvoker invoker;
  FlowExecutor executor;
  std::unique_ptr<NetworkRuntime> net;

  // An optional gate lets a test hold every service call open so admitted
  // instances keep their capacity slots until the test releases them.
  explicit Harness(std::size_t strands = 4, std::shared_future<void> gate = {})
      : executor(strands) {
    invoker.bind("stub://case-office", [gate](const MessageEnvelope& req) {
      if (gate.valid()) gate.wait();
      ServiceReply r;
      r.ok = true;
      r.body["caseId"] = req.body.at("caseId");
      r.body["amount"] = std::get<std::int64_t>(req.body.at("severity")) * 10;
      return r;
    });
    invoker.bind("stub://billing", [gate](const MessageEnvelope& req) {
      if (gate.valid()) gate.wait();
      ServiceReply r;
      r.ok = true;
      r.body["caseId"] = req.body.at("caseId");
      r.body["ok"] = true;
      return r;
    });
    net = std::make_unique<NetworkRuntime>(model::loadNetworkDescriptor(kCaseflow), invoker,
                                           executor);
  }

  ~Harness() {
    if (net) net->settle();
  }
};

MessageEnvelope submit(const Id& vsn, const std::string& caseId, std::int64_t severity = 3) {
  MessageEnvelope env;
  env.vsn = vsn;
  env.destRole = "CL";
  env.kind = MessageKind::Instantiation;
  env.direction = MessageDirection::Request;
  env.body["caseId"] = caseId;
  env.body["severity"] = severity;
  return env;
}

std::optional<ErrorCode> codeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

// Render the observable end state of an instance without engine-generated
// identifiers, so traces compare across runs and thread counts.
std::string canonicalTrace(const ProcessInstance& inst) {
  std::ostringstream s;
  s << lifecycleName(inst.lifecycle) << "|outcome=" << inst.outcome << "|tasks:";
  for (const auto& [task, state] : inst.taskStates) {
    s << " " << task << "=" << taskStateName(state);
  }
  s << "|events:";
  for (const auto& ev : inst.eventsSeen) s << " " << ev;
  s << "|stores:";
  for (const auto& [rep, store] : inst.stores) {
    std::vector<std::string> rendered;
    for (const auto& se : store) {
      std::ostringstream one;
      one << se.env.interaction << "{";
      for (const auto& [k, v] : se.env.body) one << k << "=" << scalarToText(v) << ",";
      one << "}consumed:";
      for (const auto& t : se.consumedBy) one << t << ",";
      rendered.push_back(one.str());
    }
    std::sort(rendered.begin(), rendered.end());
    s << " " << rep << "[";
    for (const auto& r : rendered) s << r << ";";
    s << "]";
  }
  return s.str();
}

bool conservationHolds(const NetworkRuntime& net) {
  auto c = net.counters();
  return c.admitted - c.completed - c.terminated - c.faulted == net.activeInstanceCount();
}

}  // namespace

TEST_CASE("a tenant request runs the full chain to natural completion") {
  Harness h;
  Id id = h.net->ingress(submit("vA", "case-1", 4));
  REQUIRE_FALSE(id.empty());
  h.net->settle();

  auto snap = h.net->instanceSnapshot(id);
  REQUIRE(snap.has_value());
  CHECK(snap->lifecycle == InstanceLifecycle::Completed);
  CHECK(snap->outcome == "completed");
  CHECK(snap->endedAt >= snap->createdAt);
  CHECK(snap->taskStates.at("tHandle") == TaskState::Completed);
  CHECK(snap->taskStates.at("tBill") == TaskState::Completed);
  CHECK(snap->eventsSeen.count("eSubmitArrived") == 1);
  CHECK(snap->eventsSeen.count("eBillArrived") == 1);
  CHECK(snap->pendingCalls.empty());

  // Both services saw exactly one call each, with bodies merged from the
  // stored envelopes (amount = severity * 10 proves the response flowed on).
  CHECK(h.invoker.callCount() == 2);
  const auto& billStore = snap->stores.at("sync:BI");
  REQUIRE(billStore.size() == 1);
  CHECK(billStore[0].env.interaction == "iBill");
  CHECK(billStore[0].env.body.at("amount") == Scalar{std::int64_t{40}});
  CHECK(billStore[0].consumedBy.count("tBill") == 1);

  auto counters = h.net->counters();
  CHECK(counters.admitted == 1);
  CHECK(counters.completed == 1);
  CHECK(conservationHolds(*h.net));

  // Completion was announced, capacity returned, latency recorded.
  h.net->events().drain();
  auto events = h.net->events().readSince(0);
  CHECK(std::count_if(events.begin(), events.end(), [](const eventstate::Event& e) {
          return e.name == "sys.instance.completed";
        }) == 1);
  CHECK(h.net->state().read("cap.vA").value == Scalar{std::int64_t{0}});
  CHECK(h.net->state().read("count.started").value == Scalar{std::int64_t{1}});
  CHECK(h.net->state().read("rt.tHandle").version >= 1);
  CHECK(h.net->state().read("rt.tBill").version >= 1);
}

TEST_CASE("coordinated point ends instances whose process has no natural termination") {
  Harness h;
  Id id = h.net->ingress(submit("vB", "case-b"));
  h.net->settle();

  auto snap = h.net->instanceSnapshot(id);
  REQUIRE(snap.has_value());
  CHECK(snap->lifecycle == InstanceLifecycle::Completed);
  CHECK(snap->taskStates.at("tHandle") == TaskState::Completed);
  CHECK(snap->eventsSeen.count("eHandled") == 1);
  CHECK(h.net->state().read("cap.vB").value == Scalar{std::int64_t{0}});
  CHECK(h.net->ruleFireCounts().at("coord/rFinishB") == 1);
  CHECK(conservationHolds(*h.net));
}

TEST_CASE("all tasks done without a coordinated rule leaves the instance running") {
  // vC's process terminates on allTasks, so swap its termination mode by
  // running the same flow with the coordinated rule unbound: use a copy of
  // the design where pC is coordinated and no coord entry exists for vC.
  std::string doc = kCaseflow;
  auto pos = doc.find("pC:\n        termination: allTasks");
  REQUIRE(pos != std::string::npos);
  doc.replace(pos, std::string("pC:\n        termination: allTasks").size(),
              "pC:\n        termination: rule");

  ScriptedInvoker invoker;
  invoker.setDefaultLatency(0);
  FlowExecutor executor(2);
  Harness h;  // reuse the stub bindings via a full harness for vC's flow
  NetworkRuntime net(model::loadNetworkDescriptor(doc), h.invoker, executor);

  Id id = net.ingress(submit("vC", "case-c"));
  net.settle();

  auto snap = net.instanceSnapshot(id);
  REQUIRE(snap.has_value());
  CHECK(snap->lifecycle == InstanceLifecycle::Running);
  CHECK(snap->taskStates.at("tHandle") == TaskState::Completed);

  // The administrative path still closes it.
  net.controlInstance(id, "terminate");
  net.settle();
  snap = net.instanceSnapshot(id);
  CHECK(snap->lifecycle == InstanceLifecycle::Terminated);
  CHECK(conservationHolds(net));
}

TEST_CASE("admission limit holds for every arrival order") {
  std::vector<std::string> cases{"x", "y", "z"};
  std::sort(cases.begin(), cases.end());
  do {
    std::promise<void> gate;
    Harness h(4, gate.get_future().share());
    int admitted = 0;
    int rejected = 0;
    for (const auto& c : cases) {
      try {
        h.net->ingress(submit("vB", c));
        ++admitted;
      } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Rejected);
        ++rejected;
      }
    }
    CHECK(admitted == 2);
    CHECK(rejected == 1);
    CHECK(h.net->counters().rejected == 1);
    gate.set_value();
    h.net->settle();
    CHECK(h.net->state().read("cap.vB").value == Scalar{std::int64_t{0}});
    CHECK(conservationHolds(*h.net));
  } while (std::next_permutation(cases.begin(), cases.end()));
}

TEST_CASE("rejected-with-scheduling envelopes are parked and retried on release") {
  std::promise<void> gate;
  Harness h(4, gate.get_future().share());
  Id first = h.net->ingress(submit("vC", "case-first"));
  REQUIRE_FALSE(first.empty());

  // Capacity 1 is taken; the second submission parks instead of failing.
  Id second = h.net->ingress(submit("vC", "case-second"));
  CHECK(second.empty());
  CHECK(h.net->counters().rejected == 1);

  // When the first instance completes its slot frees and the parked envelope
  // re-enters admission on its own.
  gate.set_value();
  h.net->settle();
  auto counters = h.net->counters();
  CHECK(counters.admitted == 2);
  CHECK(counters.completed == 2);
  CHECK(h.net->state().read("cap.vC").value == Scalar{std::int64_t{0}});
  CHECK(conservationHolds(*h.net));
}

TEST_CASE("event rules fire once per instance even though several passes see them") {
  Harness h;
  h.net->ingress(submit("vA", "case-once"));
  h.net->settle();

  auto fires = h.net->ruleFireCounts();
  CHECK(fires.at("sync:CO/rSyncCO") == 1);
  CHECK(fires.at("sync:BI/rSyncBI") == 1);
  CHECK(fires.at("pass:CL_CO/rPassSubmit") == 1);
  CHECK(fires.at("pass:CO_BI/rPassBill") == 1);
  CHECK(fires.at("routing:CL/rAdmitA") == 1);
  CHECK(fires.at("routing:CL/rToCO") == 1);
}

TEST_CASE("unknown tenant is turned away with an audit trail") {
  Harness h;
  CHECK(codeOf([&] { h.net->ingress(submit("vZ", "ghost")); }) == ErrorCode::NoEntry);
  auto tail = h.net->auditTail();
  CHECK(std::any_of(tail.begin(), tail.end(), [](const AuditEntry& a) {
    return a.category == "NoEntryError";
  }));
  CHECK(h.net->counters().admitted == 0);
}

TEST_CASE("non-entry roles refuse instantiation") {
  Harness h;
  CHECK(codeOf([&] {
          auto env = submit("vA", "side-door");
          env.destRole = "CO";
          h.net->ingress(env);
        }) == ErrorCode::PathViolation);
  CHECK(codeOf([&] {
          auto env = submit("vA", "no-role");
          env.destRole = "XX";
          h.net->ingress(env);
        }) == ErrorCode::NotFound);
}

TEST_CASE("paused instances buffer stimuli and resume where they left off") {
  auto gate = std::make_shared<std::promise<void>>();
  auto gateFuture = gate->get_future().share();
  std::atomic<bool> replied{false};

  ScriptedInvoker invoker;
  invoker.bind("stub://case-office", [&, gateFuture](const MessageEnvelope& req) {
    gateFuture.wait();
    ServiceReply r;
    r.ok = true;
    r.body["caseId"] = req.body.at("caseId");
    r.body["amount"] = std::int64_t{10};
    replied = true;
    return r;
  });
  FlowExecutor executor(2);
  NetworkRuntime net(model::loadNetworkDescriptor(kCaseflow), invoker, executor);

  Id id = net.ingress(submit("vB", "case-paused"));
  executor.drain();  // pipeline ran up to the blocked service call

  auto snap = net.instanceSnapshot(id);
  REQUIRE(snap.has_value());
  CHECK(snap->lifecycle == InstanceLifecycle::Running);
  CHECK(snap->taskStates.at("tHandle") == TaskState::Triggered);

  net.controlInstance(id, "pause");
  CHECK(net.instanceSnapshot(id)->lifecycle == InstanceLifecycle::Paused);

  // Release the service; its reply lands while the instance is paused and
  // must wait in the buffer rather than advance the flow.
  gate->set_value();
  for (int i = 0; i < 200 && !replied; ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  REQUIRE(replied);
  std::this_thread::sleep_for(std::chrono::milliseconds(50));
  snap = net.instanceSnapshot(id);
  CHECK(snap->lifecycle == InstanceLifecycle::Paused);
  CHECK(snap->taskStates.at("tHandle") == TaskState::Triggered);

  net.controlInstance(id, "resume");
  net.settle();
  snap = net.instanceSnapshot(id);
  CHECK(snap->lifecycle == InstanceLifecycle::Completed);
  CHECK(snap->taskStates.at("tHandle") == TaskState::Completed);

  CHECK(codeOf([&] { net.controlInstance(id, "pause"); }) == ErrorCode::IllegalTransition);
}

TEST_CASE("a faulting service ends the instance as faulted") {
  ScriptedInvoker invoker;
  invoker.bind("stub://case-office", [](const MessageEnvelope&) {
    ServiceReply r;
    r.ok = false;
    r.error = "backend unavailable";
    return r;
  });
  FlowExecutor executor(2);
  NetworkRuntime net(model::loadNetworkDescriptor(kCaseflow), invoker, executor);

  Id id = net.ingress(submit("vB", "case-fault"));
  net.settle();

  auto snap = net.instanceSnapshot(id);
  REQUIRE(snap.has_value());
  CHECK(snap->lifecycle == InstanceLifecycle::Faulted);
  CHECK(snap->taskStates.at("tHandle") == TaskState::Faulted);
  CHECK(net.counters().faulted == 1);
  CHECK(conservationHolds(net));

  net.events().drain();
  auto events = net.events().readSince(0);
  CHECK(std::any_of(events.begin(), events.end(), [](const eventstate::Event& e) {
    return e.name == "sys.instance.faulted";
  }));
}

TEST_CASE("flows are isolated: concurrent outcome equals single-threaded outcome") {
  auto runWorkload = [](std::size_t strands) {
    Harness h(strands);
    std::vector<Id> ids;
    for (int i = 0; i < 4; ++i) {
      ids.push_back(h.net->ingress(submit("vA", "case-a" + std::to_string(i), i + 1)));
    }
    ids.push_back(h.net->ingress(submit("vB", "case-b0", 7)));
    ids.push_back(h.net->ingress(submit("vB", "case-b1", 9)));
    h.net->settle();

    std::vector<std::string> traces;
    for (const auto& id : ids) {
      auto snap = h.net->instanceSnapshot(id);
      REQUIRE(snap.has_value());
      traces.push_back(canonicalTrace(*snap));
    }
    CHECK(conservationHolds(*h.net));
    return traces;
  };

  auto serial = runWorkload(1);
  auto concurrent = runWorkload(4);
  REQUIRE(serial.size() == concurrent.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i] == concurrent[i]);
  }

  // And the concurrent outcome is stable across repetitions.
  for (int round = 0; round < 4; ++round) {
    CHECK(runWorkload(4) == concurrent);
  }
}

TEST_CASE("each instance only sees its own data") {
  Harness h;
  Id a = h.net->ingress(submit("vA", "case-alpha", 2));
  Id b = h.net->ingress(submit("vA", "case-beta", 5));
  h.net->settle();

  for (const auto& [id, caseId, amount] :
       {std::tuple<Id, std::string, std::int64_t>{a, "case-alpha", 20},
        std::tuple<Id, std::string, std::int64_t>{b, "case-beta", 50}}) {
    auto snap = h.net->instanceSnapshot(id);
    REQUIRE(snap.has_value());
    for (const auto& [rep, store] : snap->stores) {
      for (const auto& se : store) {
        CHECK(se.env.instance == id);
        CHECK(se.env.body.at("caseId") == Scalar{caseId});
      }
    }
    CHECK(snap->stores.at("sync:BI")[0].env.body.at("amount") == Scalar{amount});
  }
}

TEST_CASE("passive tenants stop accepting work but serve what they started") {
  auto gate = std::make_shared<std::promise<void>>();
  auto gateFuture = gate->get_future().share();

  ScriptedInvoker invoker;
  invoker.bind("stub://case-office", [gateFuture](const MessageEnvelope& req) {
    gateFuture.wait();
    ServiceReply r;
    r.ok = true;
    r.body["caseId"] = req.body.at("caseId");
    r.body["amount"] = std::int64_t{10};
    return r;
  });
  FlowExecutor executor(2);
  NetworkRuntime net(model::loadNetworkDescriptor(kCaseflow), invoker, executor);

  Id preexisting = net.ingress(submit("vB", "case-pre"));
  executor.drain();

  net.setManagementState("vsn:vB", ManagementState::Passive);
  CHECK(net.managementState("vsn:vB") == ManagementState::Passive);

  // New work for the passive tenant is refused; other tenants are untouched.
  CHECK(codeOf([&] { net.ingress(submit("vB", "case-late")); }) ==
        ErrorCode::PassiveElement);
  CHECK_FALSE(net.ingress(submit("vC", "case-other")).empty());

  // The pre-existing instance still completes, after which the element is
  // automatically quiescent and announces it.
  gate->set_value();
  net.settle();
  CHECK(net.instanceSnapshot(preexisting)->lifecycle == InstanceLifecycle::Completed);
  CHECK(net.awaitQuiescence("vsn:vB", 2000));
  CHECK(net.managementState("vsn:vB") == ManagementState::Quiescence);

  net.mgmtEvents().drain();
  auto events = net.mgmtEvents().readSince(0);
  auto stateOf = [&](const std::string& state) {
    return std::count_if(events.begin(), events.end(), [&](const eventstate::Event& e) {
      return e.name == "sys.mgmt.state" &&
             e.payload.at("element") == Scalar{std::string("vsn:vB")} &&
             e.payload.at("state") == Scalar{state};
    });
  };
  CHECK(stateOf("Passive") == 1);
  CHECK(stateOf("Quiescence") == 1);

  // Reactivation goes back through Passive; jumping straight to Active is not
  // an administrative transition.
  CHECK(codeOf([&] { net.setManagementState("vsn:vB", ManagementState::Active); }) ==
        ErrorCode::IllegalTransition);
  net.setManagementState("vsn:vB", ManagementState::Passive);
  net.setManagementState("vsn:vB", ManagementState::Active);
  CHECK_FALSE(net.ingress(submit("vB", "case-after")).empty());
  net.settle();
}

TEST_CASE("rules can be withdrawn per tenant without touching the shared knowledgebase") {
  Harness h;

  // vB's completion depends on rFinishB at the coordinated point. Unbind it
  // for vB only: instances then stay running, while vA is unaffected.
  auto removed = h.net->removeTableEntry({model::RepKind::Coordinated, ""},
                                         regulation::FlowKey{"vB", "", ""});
  CHECK(removed == std::vector<Id>{"rFinishB"});

  Id b = h.net->ingress(submit("vB", "case-unbound"));
  Id a = h.net->ingress(submit("vA", "case-still-works"));
  h.net->settle();

  CHECK(h.net->instanceSnapshot(b)->lifecycle == InstanceLifecycle::Running);
  CHECK(h.net->instanceSnapshot(a)->lifecycle == InstanceLifecycle::Completed);

  // Rebind and the next vB instance completes again.
  h.net->addTableEntry({model::RepKind::Coordinated, ""}, regulation::FlowKey{"vB", "", ""},
                       {"rFinishB"});
  Id b2 = h.net->ingress(submit("vB", "case-rebound"));
  h.net->settle();
  CHECK(h.net->instanceSnapshot(b2)->lifecycle == InstanceLifecycle::Completed);

  h.net->controlInstance(b, "terminate");
  h.net->settle();
  CHECK(conservationHolds(*h.net));
}

TEST_CASE("pass-through points drop replayed message ids") {
  RepRuntime rep;
  CHECK(rep.noteMessageId("m1"));
  CHECK_FALSE(rep.noteMessageId("m1"));
  CHECK(rep.noteMessageId("m2"));

  // The ring forgets the oldest id once past capacity.
  for (int i = 0; i < 1024; ++i) {
    CHECK(rep.noteMessageId("fill-" + std::to_string(i)));
  }
  CHECK(rep.noteMessageId("m1"));  // evicted, so it reads as fresh again
  CHECK_FALSE(rep.noteMessageId("fill-1023"));
}

TEST_CASE("instance counters reconcile under a mixed workload") {
  std::promise<void> gate;
  Harness h(4, gate.get_future().share());
  int rejected = 0;
  for (int i = 0; i < 3; ++i) {
    try {
      h.net->ingress(submit("vB", "mix-b" + std::to_string(i)));
    } catch (const Error&) {
      ++rejected;
    }
  }
  for (int i = 0; i < 3; ++i) {
    h.net->ingress(submit("vA", "mix-a" + std::to_string(i)));
  }
  gate.set_value();
  h.net->settle();

  auto c = h.net->counters();
  CHECK(rejected == 1);
  CHECK(c.rejected == 1);
  CHECK(c.admitted == 5);
  CHECK(c.completed == 5);
  CHECK(conservationHolds(*h.net));
}
