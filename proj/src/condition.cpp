#include "sdsn/regulation/condition.hpp"

namespace sdsn::regulation {

Condition& Condition::operator=(const Condition& other) {
  if (this == &other) return *this;
  node = other.node;
  pred = other.pred;
  subject = other.subject;
  events = other.events;
  op = other.op;
  literal = other.literal;
  children.clear();
  children.reserve(other.children.size());
  for (const auto& child : other.children) {
    children.push_back(std::make_unique<Condition>(*child));
  }
  return *this;
}

std::string Condition::text() const {
  switch (node) {
    case Node::And:
    case Node::Or: {
      std::string joiner = node == Node::And ? " and " : " or ";
      std::string out = "(";
      for (size_t i = 0; i < children.size(); ++i) {
        if (i) out += joiner;
        out += children[i]->text();
      }
      out += ")";
      return out;
    }
    case Node::Not:
      return "not " + children[0]->text();
    case Node::Pred:
      break;
  }
  switch (pred) {
    case PredKind::MsgField:
      return "msg." + subject + " " + cmpOpName(op) + " " + scalarToText(literal);
    case PredKind::EventSingle:
      return "event(" + events[0] + ")";
    case PredKind::EventAll: {
      std::string out = "allOf(";
      for (size_t i = 0; i < events.size(); ++i) {
        if (i) out += ", ";
        out += events[i];
      }
      return out + ")";
    }
    case PredKind::StateCmp:
      return "state(" + subject + ") " + cmpOpName(op) + " " + scalarToText(literal);
    case PredKind::FlowAttr:
      return "flow." + subject + " " + cmpOpName(op) + " " + scalarToText(literal);
    case PredKind::ClockCmp:
      return "time." + subject + " " + cmpOpName(op) + " " + scalarToText(literal);
    case PredKind::Literal:
      return std::get<bool>(literal) ? "true" : "false";
  }
  return "?";
}

void Condition::collectEvents(std::set<std::string>& out) const {
  if (node == Node::Pred) {
    for (const auto& e : events) out.insert(e);
    return;
  }
  for (const auto& child : children) child->collectEvents(out);
}

bool Condition::mentionsEvents() const {
  std::set<std::string> names;
  collectEvents(names);
  return !names.empty();
}

namespace {

bool evalPred(const Condition& c, const ConditionScope& scope,
              std::vector<std::string>& diagnostics) {
  auto compareOrDiag = [&](const std::optional<Scalar>& lhs, const char* what) {
    if (!lhs) {
      diagnostics.push_back(std::string("unresolved ") + what + " '" + c.subject +
                            "' in " + c.text());
      return false;
    }
    auto verdict = compareScalars(*lhs, c.op, c.literal);
    if (!verdict) {
      diagnostics.push_back("incomparable operands in " + c.text());
      return false;
    }
    return *verdict;
  };

  switch (c.pred) {
    case PredKind::MsgField:
      return compareOrDiag(scope.msgField(c.subject), "message field");
    case PredKind::EventSingle:
      return scope.eventOccurred(c.events[0]);
    case PredKind::EventAll:
      for (const auto& e : c.events) {
        if (!scope.eventOccurred(e)) return false;
      }
      return true;
    case PredKind::StateCmp:
      return compareOrDiag(scope.stateValue(c.subject), "state key");
    case PredKind::FlowAttr:
      return compareOrDiag(scope.flowAttr(c.subject), "flow attribute");
    case PredKind::ClockCmp:
      return compareOrDiag(scope.clockAttr(c.subject), "clock attribute");
    case PredKind::Literal:
      return std::get<bool>(c.literal);
  }
  return false;
}

}  // namespace

bool evalCondition(const Condition& cond, const ConditionScope& scope,
                   std::vector<std::string>& diagnostics) {
  switch (cond.node) {
    case Condition::Node::And:
      for (const auto& child : cond.children) {
        if (!evalCondition(*child, scope, diagnostics)) return false;
      }
      return true;
    case Condition::Node::Or:
      for (const auto& child : cond.children) {
        if (evalCondition(*child, scope, diagnostics)) return true;
      }
      return false;
    case Condition::Node::Not:
      return !evalCondition(*cond.children[0], scope, diagnostics);
    case Condition::Node::Pred:
      return evalPred(cond, scope, diagnostics);
  }
  return false;
}

}  // namespace sdsn::regulation
