#include "sdsn/enactment/envelope.hpp"

namespace sdsn::enactment {

const char* messageKindName(MessageKind k) {
  switch (k) {
    case MessageKind::Instantiation: return "instantiation";
    case MessageKind::RoleRole: return "roleRole";
    case MessageKind::RoleService: return "roleService";
  }
  return "?";
}

bool messageKindFromName(const std::string& name, MessageKind& out) {
  if (name == "instantiation") { out = MessageKind::Instantiation; return true; }
  if (name == "roleRole") { out = MessageKind::RoleRole; return true; }
  if (name == "roleService") { out = MessageKind::RoleService; return true; }
  return false;
}

const char* messageDirectionName(MessageDirection d) {
  return d == MessageDirection::Request ? "request" : "response";
}

bool messageDirectionFromName(const std::string& name, MessageDirection& out) {
  if (name == "request") { out = MessageDirection::Request; return true; }
  if (name == "response") { out = MessageDirection::Response; return true; }
  return false;
}

std::optional<Scalar> MessageEnvelope::headerField(const std::string& name) const {
  if (name == "vsn") return Scalar(vsn);
  if (name == "process") return Scalar(process);
  if (name == "instance") return Scalar(instance);
  if (name == "message_id") return Scalar(messageId);
  if (name == "interaction") return Scalar(interaction);
  if (name == "kind") return Scalar(std::string(messageKindName(kind)));
  if (name == "direction") return Scalar(std::string(messageDirectionName(direction)));
  if (name == "source_role") return Scalar(sourceRole);
  if (name == "dest_role") return Scalar(destRole);
  auto it = extraHeaders.find(name);
  if (it != extraHeaders.end()) return it->second;
  return std::nullopt;
}

}  // namespace sdsn::enactment
