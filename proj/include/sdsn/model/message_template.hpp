#ifndef SDSN_MODEL_MESSAGE_TEMPLATE_HPP
#define SDSN_MODEL_MESSAGE_TEMPLATE_HPP

#include <map>
#include <optional>
#include <string>

#include "sdsn/core/id.hpp"
#include "sdsn/core/value.hpp"

namespace sdsn::model {

// Flat field schema for message bodies. Bodies are validated against the
// template at creation time and again at REP ingress.
struct MessageTemplate {
  std::string name;
  std::map<std::string, ScalarKind> fields;  // field name -> kind

  bool operator==(const MessageTemplate&) const = default;

  // Returns a human-readable violation ("field x: expected integer, got
  // string" / "missing field y" / "undeclared field z"), or nullopt when the
  // body conforms. Bodies must carry exactly the declared fields.
  std::optional<std::string> validate(const FieldMap& body) const;

  // Compact literal form used by change operations: Name{a:string,b:integer}
  std::string toLiteral() const;
  static MessageTemplate fromLiteral(const std::string& text);  // throws Parse
};

}  // namespace sdsn::model

#endif  // SDSN_MODEL_MESSAGE_TEMPLATE_HPP
