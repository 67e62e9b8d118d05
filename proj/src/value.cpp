#include "sdsn/core/value.hpp"

#include <cmath>
#include <sstream>

namespace sdsn {

const char* scalarKindName(ScalarKind k) {
  switch (k) {
    case ScalarKind::String: return "string";
    case ScalarKind::Integer: return "integer";
    case ScalarKind::Decimal: return "decimal";
    case ScalarKind::Boolean: return "boolean";
  }
  return "?";
}

std::optional<ScalarKind> scalarKindFromName(const std::string& name) {
  if (name == "string") return ScalarKind::String;
  if (name == "integer") return ScalarKind::Integer;
  if (name == "decimal") return ScalarKind::Decimal;
  if (name == "boolean") return ScalarKind::Boolean;
  return std::nullopt;
}

ScalarKind kindOf(const Scalar& v) {
  switch (v.index()) {
    case 0: return ScalarKind::String;
    case 1: return ScalarKind::Integer;
    case 2: return ScalarKind::Decimal;
    default: return ScalarKind::Boolean;
  }
}

std::string scalarToText(const Scalar& v) {
  switch (v.index()) {
    case 0: {
      std::string out = "\"";
      for (char c : std::get<std::string>(v)) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
      }
      out.push_back('"');
      return out;
    }
    case 1: return std::to_string(std::get<std::int64_t>(v));
    case 2: {
      std::ostringstream os;
      os << std::get<double>(v);
      return os.str();
    }
    default: return std::get<bool>(v) ? "true" : "false";
  }
}

const char* cmpOpName(CmpOp op) {
  switch (op) {
    case CmpOp::Eq: return "==";
    case CmpOp::Ne: return "!=";
    case CmpOp::Lt: return "<";
    case CmpOp::Le: return "<=";
    case CmpOp::Gt: return ">";
    case CmpOp::Ge: return ">=";
  }
  return "?";
}

std::optional<CmpOp> cmpOpFromName(const std::string& name) {
  if (name == "==") return CmpOp::Eq;
  if (name == "!=") return CmpOp::Ne;
  if (name == "<") return CmpOp::Lt;
  if (name == "<=") return CmpOp::Le;
  if (name == ">") return CmpOp::Gt;
  if (name == ">=") return CmpOp::Ge;
  return std::nullopt;
}

namespace {

bool bothNumeric(const Scalar& a, const Scalar& b) {
  auto num = [](const Scalar& s) {
    return kindOf(s) == ScalarKind::Integer || kindOf(s) == ScalarKind::Decimal;
  };
  return num(a) && num(b);
}

double asDouble(const Scalar& s) {
  if (kindOf(s) == ScalarKind::Integer) return static_cast<double>(std::get<std::int64_t>(s));
  return std::get<double>(s);
}

}  // namespace

bool scalarsComparable(const Scalar& lhs, const Scalar& rhs) {
  if (bothNumeric(lhs, rhs)) return true;
  return kindOf(lhs) == kindOf(rhs);
}

std::optional<bool> compareScalars(const Scalar& lhs, CmpOp op, const Scalar& rhs) {
  if (!scalarsComparable(lhs, rhs)) return std::nullopt;

  // Equality is defined for every kind; ordering only for numbers & strings.
  if (bothNumeric(lhs, rhs)) {
    // Compare integers exactly when both sides are integers.
    if (kindOf(lhs) == ScalarKind::Integer && kindOf(rhs) == ScalarKind::Integer) {
      auto a = std::get<std::int64_t>(lhs);
      auto b = std::get<std::int64_t>(rhs);
      switch (op) {
        case CmpOp::Eq: return a == b;
        case CmpOp::Ne: return a != b;
        case CmpOp::Lt: return a < b;
        case CmpOp::Le: return a <= b;
        case CmpOp::Gt: return a > b;
        case CmpOp::Ge: return a >= b;
      }
    }
    double a = asDouble(lhs);
    double b = asDouble(rhs);
    switch (op) {
      case CmpOp::Eq: return a == b;
      case CmpOp::Ne: return a != b;
      case CmpOp::Lt: return a < b;
      case CmpOp::Le: return a <= b;
      case CmpOp::Gt: return a > b;
      case CmpOp::Ge: return a >= b;
    }
  }

  if (kindOf(lhs) == ScalarKind::String) {
    const auto& a = std::get<std::string>(lhs);
    const auto& b = std::get<std::string>(rhs);
    switch (op) {
      case CmpOp::Eq: return a == b;
      case CmpOp::Ne: return a != b;
      case CmpOp::Lt: return a < b;
      case CmpOp::Le: return a <= b;
      case CmpOp::Gt: return a > b;
      case CmpOp::Ge: return a >= b;
    }
  }

  // Booleans support equality only.
  bool a = std::get<bool>(lhs);
  bool b = std::get<bool>(rhs);
  switch (op) {
    case CmpOp::Eq: return a == b;
    case CmpOp::Ne: return a != b;
    default: return std::nullopt;
  }
}

}  // namespace sdsn
