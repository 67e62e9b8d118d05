#ifndef SDSN_REGULATION_FLOW_KEY_HPP
#define SDSN_REGULATION_FLOW_KEY_HPP

#include <compare>
#include <string>

#include "sdsn/core/id.hpp"

namespace sdsn::regulation {

// Identifies a regulated message flow at one of three specificity levels:
//
//   (vsn)                    — every flow of the tenant's VSN
//   (vsn, process)           — flows of one process definition
//   (vsn, process, instance) — one live process instance
//
// Regulation tables register rule sets per key; lookup picks the most
// specific level that matches, never merging across levels.
struct FlowKey {
  Id vsn;
  Id process;   // empty at VSN level
  Id instance;  // empty at VSN/process level

  bool operator==(const FlowKey&) const = default;
  auto operator<=>(const FlowKey&) const = default;

  // 1 = vsn, 2 = vsn+process, 3 = vsn+process+instance.
  int specificity() const;

  // True when this key (a registration) covers `flow` (a concrete flow).
  // A registration covers any flow that matches all its filled components.
  bool covers(const FlowKey& flow) const;

  FlowKey vsnLevel() const { return {vsn, "", ""}; }
  FlowKey processLevel() const { return {vsn, process, ""}; }

  std::string str() const;
};

}  // namespace sdsn::regulation

#endif  // SDSN_REGULATION_FLOW_KEY_HPP
