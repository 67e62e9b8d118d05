#include "sdsn/regulation/flow_key.hpp"

namespace sdsn::regulation {

int FlowKey::specificity() const {
  if (!instance.empty()) return 3;
  if (!process.empty()) return 2;
  return 1;
}

bool FlowKey::covers(const FlowKey& flow) const {
  if (vsn != flow.vsn) return false;
  if (!process.empty() && process != flow.process) return false;
  if (!instance.empty() && instance != flow.instance) return false;
  return true;
}

std::string FlowKey::str() const {
  std::string out = "(" + vsn;
  if (!process.empty()) out += ", " + process;
  if (!instance.empty()) out += ", " + instance;
  out += ")";
  return out;
}

}  // namespace sdsn::regulation
