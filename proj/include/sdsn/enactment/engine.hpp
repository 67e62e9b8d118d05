#ifndef SDSN_ENACTMENT_ENGINE_HPP
#define SDSN_ENACTMENT_ENGINE_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "sdsn/enactment/flow_executor.hpp"
#include "sdsn/enactment/network_runtime.hpp"
#include "sdsn/enactment/service_invoker.hpp"
#include "sdsn/model/design.hpp"

namespace sdsn::enactment {

// What deployNetwork hands back: identity plus the topology object counts
// created for the network.
struct DeployedNetworkHandle {
  std::string name;
  std::int64_t createdAt = 0;
  std::size_t roles = 0;
  std::size_t tasks = 0;
  std::size_t contracts = 0;
  std::size_t terms = 0;
  std::size_t rules = 0;
};

// Hosts any number of service networks over one service invoker and one
// flow-executor pool. Each network keeps its own isolated runtime objects
// (model, enactment points, instances, events, state); the engine is only
// the registry and the deployment protocol around them.
class Engine {
 public:
  explicit Engine(ServiceInvoker& invoker, std::size_t strands = 4);
  ~Engine();

  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  // Validates the design, creates the runtime with every element Passive,
  // then activates everything as the explicit completion step.
  DeployedNetworkHandle deployNetwork(const model::ServiceNetworkDesign& design);

  // Convenience: parse a descriptor document and deploy it.
  DeployedNetworkHandle deployNetworkText(const std::string& descriptorText);

  // Releases the network's runtime objects. Refuses while instances are
  // active unless force, in which case they are terminated first.
  void undeployNetwork(const std::string& name, bool force = false);

  NetworkRuntime& network(const std::string& name);              // throws NotFound
  const NetworkRuntime& network(const std::string& name) const;  // throws NotFound
  NetworkRuntime* findNetwork(const std::string& name);
  bool hasNetwork(const std::string& name) const;

  std::vector<DeployedNetworkHandle> networks() const;
  std::size_t networkCount() const;

  FlowExecutor& executor() { return executor_; }
  ServiceInvoker& invoker() { return invoker_; }

  // Drains queued work across all hosted networks (tests and benchmarks).
  void settle();

 private:
  ServiceInvoker& invoker_;
  FlowExecutor executor_;

  mutable std::mutex mu_;
  std::map<std::string, std::unique_ptr<NetworkRuntime>> nets_;
  std::map<std::string, DeployedNetworkHandle> handles_;
};

}  // namespace sdsn::enactment

#endif  // SDSN_ENACTMENT_ENGINE_HPP
