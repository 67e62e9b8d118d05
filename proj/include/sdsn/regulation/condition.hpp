#ifndef SDSN_REGULATION_CONDITION_HPP
#define SDSN_REGULATION_CONDITION_HPP

#include <memory>
#include <set>
#include <string>
#include <vector>

#include "sdsn/core/value.hpp"

namespace sdsn::regulation {

// Condition tree over message fields, observed events, engine state, and
// flow attributes. Evaluation is total: a predicate that cannot be resolved
// (unknown field, incomparable kinds) evaluates to false and appends one
// diagnostic line instead of failing the stimulus.

enum class PredKind {
  MsgField,    // msg.<path> <op> <literal>
  EventSingle, // event(<name>)
  EventAll,    // allOf(<e1>,<e2>,...)
  StateCmp,    // state(<key>) <op> <literal>
  FlowAttr,    // flow.<vsn|process|instance> <op> <literal>
  ClockCmp,    // time.<hour|minute|epochMs> <op> <literal>
  Literal      // true / false
};

struct Condition;
using ConditionPtr = std::unique_ptr<Condition>;

struct Condition {
  enum class Node { And, Or, Not, Pred } node = Node::Pred;

  // And/Or: 2+ children; Not: 1 child.
  std::vector<ConditionPtr> children;

  // Pred payload:
  PredKind pred = PredKind::Literal;
  std::string subject;           // field path / state key / flow attr / "hour"
  std::vector<std::string> events;  // EventSingle (1) or EventAll (1+)
  CmpOp op = CmpOp::Eq;
  Scalar literal = false;        // Literal uses this as the truth value

  Condition() = default;
  Condition(const Condition& other) { *this = other; }
  Condition& operator=(const Condition& other);
  Condition(Condition&&) = default;
  Condition& operator=(Condition&&) = default;

  bool operator==(const Condition& other) const { return text() == other.text(); }

  // Canonical re-rendering in the rule grammar (parenthesized).
  std::string text() const;

  // Names of all events this condition mentions (for subscription wiring).
  void collectEvents(std::set<std::string>& out) const;
  bool mentionsEvents() const;
};

// What a predicate can see during evaluation. Keeping this an interface lets
// the executor evaluate against live managers or against frozen snapshots.
struct ConditionScope {
  virtual ~ConditionScope() = default;
  // Message header/body field by path; nullopt when absent or no message.
  virtual std::optional<Scalar> msgField(const std::string& path) const = 0;
  // Has this event occurred for the flow (including the triggering event)?
  virtual bool eventOccurred(const std::string& name) const = 0;
  // Engine state by key; numeric keys default to 0 when unknown.
  virtual std::optional<Scalar> stateValue(const std::string& key) const = 0;
  // vsn / process / instance of the flow under evaluation.
  virtual std::optional<Scalar> flowAttr(const std::string& attr) const = 0;
  // Wall-clock attribute (hour, minute, epochMs).
  virtual std::optional<Scalar> clockAttr(const std::string& attr) const = 0;
};

// Evaluates the tree; unresolvable predicates are false and push one line
// onto `diagnostics`.
bool evalCondition(const Condition& cond, const ConditionScope& scope,
                   std::vector<std::string>& diagnostics);

}  // namespace sdsn::regulation

#endif  // SDSN_REGULATION_CONDITION_HPP
