#include "sdsn/enactment/engine.hpp"

#include <chrono>
#include <sstream>

#include "sdsn/core/error.hpp"
#include "sdsn/model/descriptor.hpp"

namespace sdsn::enactment {

namespace {

std::int64_t nowMs() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

}  // namespace

Engine::Engine(ServiceInvoker& invoker, std::size_t strands)
    : invoker_(invoker), executor_(strands) {}

Engine::~Engine() {
  // Let in-flight work finish before the runtimes go away; their queued jobs
  // hold raw pointers into the runtime objects.
  for (auto& [name, net] : nets_) net->settle();
}

DeployedNetworkHandle Engine::deployNetwork(const model::ServiceNetworkDesign& design) {
  if (design.name.empty()) {
    throw err(ErrorCode::Validation, "network design needs a non-empty name");
  }
  auto violations = model::validateDesign(design);
  if (!violations.empty()) {
    std::ostringstream msg;
    msg << design.name << ": " << violations.size() << " design violation(s); first: "
        << violations.front().element << " breaks " << violations.front().invariant << " ("
        << violations.front().detail << ")";
    throw err(ErrorCode::Validation, msg.str());
  }

  std::unique_ptr<NetworkRuntime> net;
  {
    std::lock_guard<std::mutex> lock(mu_);
    if (nets_.count(design.name)) {
      throw err(ErrorCode::DuplicateNetwork, "network " + design.name + " already deployed");
    }
    // Reserve the name before the (comparatively slow) runtime build so two
    // concurrent deploys of the same name cannot both proceed.
    nets_[design.name] = nullptr;
  }

  try {
    net = std::make_unique<NetworkRuntime>(design, invoker_, executor_,
                                           /*elementsStartActive=*/false);
  } catch (...) {
    std::lock_guard<std::mutex> lock(mu_);
    nets_.erase(design.name);
    throw;
  }
  net->activateAll();  // deployment ends with an explicit activate-all step

  DeployedNetworkHandle handle;
  handle.name = design.name;
  handle.createdAt = nowMs();
  auto fp = net->footprint();
  handle.roles = fp.roles;
  handle.tasks = fp.tasks;
  handle.contracts = fp.contracts;
  handle.terms = fp.terms;
  handle.rules = fp.rules;

  std::lock_guard<std::mutex> lock(mu_);
  nets_[design.name] = std::move(net);
  handles_[design.name] = handle;
  return handle;
}

DeployedNetworkHandle Engine::deployNetworkText(const std::string& descriptorText) {
  return deployNetwork(model::loadNetworkDescriptor(descriptorText));
}

void Engine::undeployNetwork(const std::string& name, bool force) {
  std::unique_ptr<NetworkRuntime> net;
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = nets_.find(name);
    if (it == nets_.end() || !it->second) {
      throw err(ErrorCode::NotFound, "no network " + name);
    }
    std::size_t active = it->second->activeInstanceCount();
    if (active > 0 && !force) {
      throw err(ErrorCode::ActiveInstances,
                "network " + name + " has " + std::to_string(active) + " active instances");
    }
    net = std::move(it->second);
    nets_.erase(it);
    handles_.erase(name);
  }

  if (force) {
    for (const Id& id : net->instanceIds()) {
      try {
        net->controlInstance(id, "terminate");
      } catch (const Error&) {
        // already finished; nothing to do
      }
    }
  }
  net->settle();  // drain before the runtime objects are released
}

NetworkRuntime& Engine::network(const std::string& name) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = nets_.find(name);
  if (it == nets_.end() || !it->second) throw err(ErrorCode::NotFound, "no network " + name);
  return *it->second;
}

const NetworkRuntime& Engine::network(const std::string& name) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = nets_.find(name);
  if (it == nets_.end() || !it->second) throw err(ErrorCode::NotFound, "no network " + name);
  return *it->second;
}

NetworkRuntime* Engine::findNetwork(const std::string& name) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = nets_.find(name);
  return (it == nets_.end() || !it->second) ? nullptr : it->second.get();
}

bool Engine::hasNetwork(const std::string& name) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = nets_.find(name);
  return it != nets_.end() && it->second != nullptr;
}

std::vector<DeployedNetworkHandle> Engine::networks() const {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<DeployedNetworkHandle> out;
  out.reserve(handles_.size());
  for (const auto& [name, handle] : handles_) out.push_back(handle);
  return out;
}

std::size_t Engine::networkCount() const {
  std::lock_guard<std::mutex> lock(mu_);
  std::size_t n = 0;
  for (const auto& [name, net] : nets_) {
    if (net) ++n;
  }
  return n;
}

void Engine::settle() {
  std::vector<NetworkRuntime*> live;
  {
    std::lock_guard<std::mutex> lock(mu_);
    for (auto& [name, net] : nets_) {
      if (net) live.push_back(net.get());
    }
  }
  for (auto* net : live) net->settle();
}

}  // namespace sdsn::enactment
