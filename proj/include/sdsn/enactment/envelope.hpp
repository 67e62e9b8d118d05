#ifndef SDSN_ENACTMENT_ENVELOPE_HPP
#define SDSN_ENACTMENT_ENVELOPE_HPP

#include <cstdint>
#include <string>

#include "sdsn/core/id.hpp"
#include "sdsn/core/value.hpp"
#include "sdsn/regulation/flow_key.hpp"

namespace sdsn::enactment {

// instantiation — a tenant user's request entering at a user role;
// roleRole    — envelope travelling between roles over a contract;
// roleService — request to / response from a role's bound service.
enum class MessageKind { Instantiation, RoleRole, RoleService };
const char* messageKindName(MessageKind k);
bool messageKindFromName(const std::string& name, MessageKind& out);

enum class MessageDirection { Request, Response };
const char* messageDirectionName(MessageDirection d);
bool messageDirectionFromName(const std::string& name, MessageDirection& out);

// The regulated unit of transport. Header names match the wire format
// (vsn, process, instance, message_id, interaction, kind, direction,
// source_role, dest_role); unknown wire headers ride along untouched.
struct MessageEnvelope {
  Id vsn;
  Id process;
  Id instance;
  std::string messageId;
  Id interaction;  // term id (roleRole/instantiation) or task id (roleService)
  MessageKind kind = MessageKind::Instantiation;
  MessageDirection direction = MessageDirection::Request;
  Id sourceRole;
  Id destRole;
  FieldMap extraHeaders;
  FieldMap body;
  std::int64_t at = 0;  // created/received wall-clock ms

  bool operator==(const MessageEnvelope&) const = default;

  regulation::FlowKey flow() const { return {vsn, process, instance}; }

  // Header view used by msg.<field> predicates; nullopt for non-headers.
  std::optional<Scalar> headerField(const std::string& name) const;
};

}  // namespace sdsn::enactment

#endif  // SDSN_ENACTMENT_ENVELOPE_HPP
