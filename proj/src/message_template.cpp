#include "sdsn/model/message_template.hpp"

#include "sdsn/core/error.hpp"

namespace sdsn::model {

std::optional<std::string> MessageTemplate::validate(const FieldMap& body) const {
  for (const auto& [field, kind] : fields) {
    auto it = body.find(field);
    if (it == body.end()) {
      return "missing field " + field;
    }
    ScalarKind got = kindOf(it->second);
    // Integers are acceptable where decimals are declared; not vice versa.
    bool ok = got == kind || (kind == ScalarKind::Decimal && got == ScalarKind::Integer);
    if (!ok) {
      return "field " + field + ": expected " + scalarKindName(kind) + ", got " +
             scalarKindName(got);
    }
  }
  for (const auto& [field, value] : body) {
    (void)value;
    if (!fields.count(field)) {
      return "undeclared field " + field;
    }
  }
  return std::nullopt;
}

std::string MessageTemplate::toLiteral() const {
  std::string out = name + "{";
  bool first = true;
  for (const auto& [field, kind] : fields) {
    if (!first) out.push_back(',');
    first = false;
    out += field + ":" + scalarKindName(kind);
  }
  out.push_back('}');
  return out;
}

MessageTemplate MessageTemplate::fromLiteral(const std::string& text) {
  auto brace = text.find('{');
  if (brace == std::string::npos || text.empty() || text.back() != '}') {
    throw err(ErrorCode::Parse, "template literal must look like Name{field:kind,...}: " + text);
  }
  MessageTemplate t;
  t.name = text.substr(0, brace);
  if (!isValidIdentifier(t.name)) {
    throw err(ErrorCode::Parse, "bad template name in literal: " + text);
  }
  std::string inner = text.substr(brace + 1, text.size() - brace - 2);
  size_t pos = 0;
  while (pos < inner.size()) {
    auto comma = inner.find(',', pos);
    std::string item = inner.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    pos = comma == std::string::npos ? inner.size() : comma + 1;
    if (item.empty()) continue;
    auto colon = item.find(':');
    if (colon == std::string::npos) {
      throw err(ErrorCode::Parse, "template field needs a kind: " + item);
    }
    std::string field = item.substr(0, colon);
    auto kind = scalarKindFromName(item.substr(colon + 1));
    if (!isValidIdentifier(field) || !kind) {
      throw err(ErrorCode::Parse, "bad template field: " + item);
    }
    if (t.fields.count(field)) {
      throw err(ErrorCode::DuplicateId, "template field declared twice: " + field);
    }
    t.fields[field] = *kind;
  }
  return t;
}

}  // namespace sdsn::model
