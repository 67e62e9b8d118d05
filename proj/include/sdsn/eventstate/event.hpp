#ifndef SDSN_EVENTSTATE_EVENT_HPP
#define SDSN_EVENTSTATE_EVENT_HPP

#include <cstdint>
#include <string>

#include "sdsn/core/value.hpp"
#include "sdsn/regulation/flow_key.hpp"

namespace sdsn::eventstate {

// A published occurrence, ordered per network by `seq`.
struct Event {
  std::string name;
  regulation::FlowKey flow;
  FieldMap payload;
  std::uint64_t seq = 0;
  std::int64_t at = 0;  // wall-clock ms

  bool operator==(const Event&) const = default;
};

// '*' matches any (possibly empty) substring; everything else is literal.
bool globMatch(const std::string& pattern, const std::string& name);

}  // namespace sdsn::eventstate

#endif  // SDSN_EVENTSTATE_EVENT_HPP
