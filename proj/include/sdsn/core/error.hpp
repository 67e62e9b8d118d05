#ifndef SDSN_CORE_ERROR_HPP
#define SDSN_CORE_ERROR_HPP

#include <stdexcept>
#include <string>

namespace sdsn {

// One taxonomy for the whole engine so the gateway can map errors onto HTTP
// statuses and the CLI onto exit codes without string matching.
enum class ErrorCode {
  Parse,              // malformed descriptor / rule / policy text
  Reference,          // dangling id reference (names the offender)
  DuplicateId,        // id declared twice in one scope
  UnknownFunction,    // rule action not in the catalog
  BadParams,          // action present but parameters unusable
  NoEntry,            // regulation table has no row for the flow
  ActionFault,        // a regulation function failed while executing
  PassiveElement,     // element not Active for new work
  PathViolation,      // envelope tried to leave the instance's declared path
  TemplateViolation,  // body does not satisfy the message template
  Correlation,        // service response matches no outstanding request
  ServiceFault,       // bound service failed after retries
  NotFound,           // unknown network / instance / subscription / policy
  IllegalTransition,  // management-state or lifecycle transition not allowed
  QuiescenceRequired, // destructive change on a non-quiescent element
  Validation,         // design invariant violated
  DuplicateNetwork,
  DuplicateVsn,
  ActiveInstances,    // undeploy refused while instances run
  Timeout,
  QueueOverflow,      // ingress backpressure
  Rejected,           // admission control turned the instantiation away
  PortInUse,
  Connection,         // could not reach an endpoint
  MalformedResponse,  // endpoint answered with something unusable
  Precondition        // harness/scenario invoked out of order
};

const char* errorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Shorthand used throughout: throw err(ErrorCode::Reference, "role ZZ ...").
inline Error err(ErrorCode code, const std::string& message) {
  return Error(code, std::string(errorCodeName(code)) + ": " + message);
}

}  // namespace sdsn

#endif  // SDSN_CORE_ERROR_HPP
