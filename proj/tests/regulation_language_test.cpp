#include <doctest.h>

#include <functional>

#include "sdsn/core/error.hpp"
#include "sdsn/model/management_state.hpp"
#include "sdsn/model/message_template.hpp"
#include "sdsn/regulation/catalog.hpp"
#include "sdsn/regulation/rule.hpp"
#include "sdsn/regulation/table.hpp"

using namespace sdsn;
using namespace sdsn::regulation;

namespace {

ErrorCode codeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an sdsn::Error");
  return ErrorCode::Parse;
}

// Minimal scope for condition-evaluation tests.
struct MapScope : ConditionScope {
  FieldMap msg;
  std::set<std::string> events;
  FieldMap state;

  std::optional<Scalar> msgField(const std::string& path) const override {
    auto it = msg.find(path);
    if (it == msg.end()) return std::nullopt;
    return it->second;
  }
  bool eventOccurred(const std::string& name) const override { return events.count(name) > 0; }
  std::optional<Scalar> stateValue(const std::string& key) const override {
    auto it = state.find(key);
    if (it == state.end()) return Scalar(std::int64_t{0});  // unknown numeric keys read 0
    return it->second;
  }
  std::optional<Scalar> flowAttr(const std::string& attr) const override {
    if (attr == "vsn") return Scalar(std::string("vsnHappy"));
    return std::nullopt;
  }
  std::optional<Scalar> clockAttr(const std::string&) const override {
    return Scalar(std::int64_t{12});
  }
};

}  // namespace

TEST_CASE("scalar comparison is total but partial orders return nullopt") {
  CHECK(*compareScalars(Scalar(std::int64_t{3}), CmpOp::Lt, Scalar(4.5)));
  CHECK(*compareScalars(Scalar(std::string("a")), CmpOp::Lt, Scalar(std::string("b"))));
  CHECK(*compareScalars(Scalar(true), CmpOp::Eq, Scalar(true)));
  CHECK_FALSE(compareScalars(Scalar(true), CmpOp::Lt, Scalar(false)).has_value());
  CHECK_FALSE(compareScalars(Scalar(std::string("1")), CmpOp::Eq, Scalar(std::int64_t{1})).has_value());
}

TEST_CASE("message template validates bodies field-by-field") {
  model::MessageTemplate t;
  t.name = "AssistMsg";
  t.fields = {{"location", ScalarKind::String}, {"tier", ScalarKind::Integer}};

  FieldMap ok{{"location", std::string("Ardennes")}, {"tier", std::int64_t{2}}};
  CHECK_FALSE(t.validate(ok).has_value());

  FieldMap missing{{"location", std::string("x")}};
  CHECK(t.validate(missing).value().find("missing field tier") != std::string::npos);

  FieldMap extra = ok;
  extra["bogus"] = true;
  CHECK(t.validate(extra).value().find("undeclared field bogus") != std::string::npos);

  FieldMap wrongKind{{"location", std::string("x")}, {"tier", std::string("two")}};
  CHECK(t.validate(wrongKind).value().find("expected integer") != std::string::npos);

  // Integers widen into declared decimals, not the other way around.
  model::MessageTemplate d;
  d.name = "D";
  d.fields = {{"amount", ScalarKind::Decimal}};
  CHECK_FALSE(d.validate({{"amount", std::int64_t{5}}}).has_value());
}

TEST_CASE("template literal round-trip") {
  auto t = model::MessageTemplate::fromLiteral("CaseReq{desc:string,severity:integer}");
  CHECK(t.name == "CaseReq");
  CHECK(t.fields.size() == 2);
  CHECK(model::MessageTemplate::fromLiteral(t.toLiteral()) == t);
  CHECK(codeOf([] { model::MessageTemplate::fromLiteral("Bad{x}"); }) == ErrorCode::Parse);
  CHECK(codeOf([] { model::MessageTemplate::fromLiteral("Bad{x:string,x:string}"); }) ==
        ErrorCode::DuplicateId);
}

TEST_CASE("admin management-state transitions") {
  using model::ManagementState;
  CHECK(model::isAdminTransitionAllowed(ManagementState::Active, ManagementState::Passive));
  CHECK(model::isAdminTransitionAllowed(ManagementState::Passive, ManagementState::Active));
  CHECK(model::isAdminTransitionAllowed(ManagementState::Quiescence, ManagementState::Passive));
  // Quiescence is only ever reached automatically.
  CHECK_FALSE(model::isAdminTransitionAllowed(ManagementState::Active, ManagementState::Quiescence));
  CHECK_FALSE(model::isAdminTransitionAllowed(ManagementState::Passive, ManagementState::Quiescence));
  CHECK_FALSE(model::isAdminTransitionAllowed(ManagementState::Quiescence, ManagementState::Active));
}

TEST_CASE("pass-through rule text compiles to the expected structure") {
  auto rule = parseSingleRule(
      "rule rPassLoc priority 50\n"
      "when msg.interaction == \"iSendLocation\" and msg.direction == \"request\"\n"
      "then PublishEvent(name=eSendLocToDC); Forward()\n"
      "end\n");
  CHECK(rule.id == "rPassLoc");
  CHECK(rule.priority == 50);
  REQUIRE(rule.actions.size() == 2);
  CHECK(rule.actions[0].fn == "PublishEvent");
  CHECK(std::get<std::string>(rule.actions[0].params.at("name")) == "eSendLocToDC");
  CHECK(rule.actions[1].fn == "Forward");

  // The condition mentions the interaction field with an equality compare.
  CHECK(rule.condition.text().find("msg.interaction == \"iSendLocation\"") != std::string::npos);
}

TEST_CASE("rule grammar rejects unknown functions and empty action lists") {
  CHECK(codeOf([] {
          parseRules("rule r1 priority 1 when true then FlyToMoon(dest=moon) end");
        }) == ErrorCode::UnknownFunction);
  CHECK(codeOf([] { parseRules("rule r1 priority 1 when true then end"); }) ==
        ErrorCode::BadParams);
  CHECK(codeOf([] { parseRules("rule r1 priority 1 when true then Drop(speed=9) end"); }) ==
        ErrorCode::BadParams);
  CHECK(codeOf([] { parseRules("rule r1 priority 1 when msg. then Drop() end"); }) ==
        ErrorCode::Parse);
  // Missing required parameter.
  CHECK(codeOf([] { parseRules("rule r1 priority 1 when true then Schedule(queue=q) end"); }) ==
        ErrorCode::BadParams);
}

TEST_CASE("parse errors carry 1-based line numbers") {
  try {
    parseRules("rule r1 priority 1\nwhen true\nthen Drop(\nend");
    FAIL("expected parse error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 4") != std::string::npos);
  }
}

TEST_CASE("canonical rule text re-parses to the same content") {
  auto rule = parseSingleRule(
      "rule rAdmit priority 100 when msg.kind == \"instantiation\" and "
      "(state(vsnHappy.throughput.used) < 200 or flow.vsn == \"vsnHappy\") "
      "then AdmissionControl(capacityKey=vsnHappy.throughput.used, limit=200, onReject=drop); "
      "CreateInstance() end");
  auto again = parseSingleRule(rule.text());
  CHECK(rule.sameContent(again));
  CHECK(again.text() == rule.text());
}

TEST_CASE("condition evaluation is total: unresolved references are false plus a diagnostic") {
  MapScope scope;
  scope.msg = {{"kind", std::string("roleRole")}};
  std::vector<std::string> diags;

  auto rule = parseSingleRule(
      "rule r priority 1 when msg.nosuchfield == 3 then Drop() end");
  CHECK_FALSE(evalCondition(rule.condition, scope, diags));
  REQUIRE(diags.size() == 1);
  CHECK(diags[0].find("nosuchfield") != std::string::npos);

  // Incomparable kinds: also false + diagnostic, never an exception.
  diags.clear();
  auto rule2 = parseSingleRule("rule r priority 1 when msg.kind < 5 then Drop() end");
  CHECK_FALSE(evalCondition(rule2.condition, scope, diags));
  CHECK(diags.size() == 1);
}

TEST_CASE("condition connectives: precedence and allOf") {
  MapScope scope;
  scope.events = {"eA", "eB"};
  std::vector<std::string> diags;

  // or binds looser than and: false or (true and true) == true.
  auto r = parseSingleRule(
      "rule r priority 1 when event(eZ) or event(eA) and event(eB) then Drop() end");
  CHECK(evalCondition(r.condition, scope, diags));

  auto all = parseSingleRule("rule r priority 1 when allOf(eA, eB, eC) then Drop() end");
  CHECK_FALSE(evalCondition(all.condition, scope, diags));
  scope.events.insert("eC");
  CHECK(evalCondition(all.condition, scope, diags));

  auto neg = parseSingleRule("rule r priority 1 when not event(eQ) then Drop() end");
  CHECK(evalCondition(neg.condition, scope, diags));

  std::set<std::string> names;
  all.condition.collectEvents(names);
  CHECK(names == std::set<std::string>{"eA", "eB", "eC"});
}

TEST_CASE("state predicates read unknown numeric keys as zero") {
  MapScope scope;
  std::vector<std::string> diags;
  auto r = parseSingleRule(
      "rule r priority 1 when state(vsnHappy.throughput.used) < 200 then Drop() end");
  CHECK(evalCondition(r.condition, scope, diags));
  CHECK(diags.empty());
}

TEST_CASE("regulation table resolves the most specific level, falling back without merging") {
  RegulationTable table;
  table.addEntry({"vsnHappy", "", ""}, {"r1", "r2"});

  // Fallback: instance-level flow resolves at the vsn level.
  auto& hit = table.lookup({"vsnHappy", "pA", "i7"});
  CHECK(hit == std::vector<Id>{"r1", "r2"});

  // Most-specific wins and levels never merge.
  table.addEntry({"vsnHappy", "pA", ""}, {"r3"});
  CHECK(table.lookup({"vsnHappy", "pA", ""}) == std::vector<Id>{"r3"});
  CHECK(table.lookup({"vsnHappy", "pA", "i7"}) == std::vector<Id>{"r3"});
  CHECK(table.lookup({"vsnHappy", "pB", ""}) == std::vector<Id>{"r1", "r2"});

  table.addEntry({"vsnHappy", "pA", "i7"}, {"r9"});
  CHECK(table.lookup({"vsnHappy", "pA", "i7"}) == std::vector<Id>{"r9"});

  CHECK(codeOf([&] { table.lookup({"vsnSun", "", ""}); }) == ErrorCode::NoEntry);
}

TEST_CASE("regulation table entry edits") {
  RegulationTable table;
  table.addEntry({"v", "", ""}, {"r1", "r2", "r1"});  // duplicate id collapses
  CHECK(table.lookup({"v", "", ""}) == std::vector<Id>{"r1", "r2"});

  auto removed = table.removeEntry({"v", "", ""}, {"r2", "rX"});
  CHECK(removed == std::vector<Id>{"r2"});
  CHECK(table.lookup({"v", "", ""}) == std::vector<Id>{"r1"});

  auto before = table.replaceEntry({"v", "", ""}, {"r7", "r8"});
  CHECK(before == std::vector<Id>{"r1"});
  CHECK(table.referencesRule("r7"));
  CHECK(table.vsnsReferencing("r8") == std::vector<Id>{"v"});

  table.removeEntry({"v", "", ""}, {"r7", "r8"});
  CHECK(table.empty());
  CHECK(codeOf([&] { table.removeEntry({"v", "", ""}, {"r1"}); }) == ErrorCode::NoEntry);
}

TEST_CASE("management dialect accepts change operations, runtime dialect does not") {
  auto policy = parseRulesDialect(
      "rule s1 priority 10 when true then "
      "addRole(rId=BR, rName=\"EuroBikes\", endpoint=\"http://127.0.0.1:9410/br\"); "
      "setManagementState(element=\"role:BR\", state=Active) end",
      RuleDialect::Management);
  CHECK(policy.size() == 1);
  CHECK(policy[0].actions.size() == 2);

  CHECK(codeOf([] {
          parseRules("rule r priority 1 when true then addRole(rId=BR) end");
        }) == ErrorCode::UnknownFunction);
}
