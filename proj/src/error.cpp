#include "sdsn/core/error.hpp"

namespace sdsn {

const char* errorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::Parse: return "ParseError";
    case ErrorCode::Reference: return "ReferenceError";
    case ErrorCode::DuplicateId: return "DuplicateIdError";
    case ErrorCode::UnknownFunction: return "UnknownFunctionError";
    case ErrorCode::BadParams: return "BadParamsError";
    case ErrorCode::NoEntry: return "NoEntryError";
    case ErrorCode::ActionFault: return "ActionFaultError";
    case ErrorCode::PassiveElement: return "PassiveElementError";
    case ErrorCode::PathViolation: return "PathViolationError";
    case ErrorCode::TemplateViolation: return "TemplateError";
    case ErrorCode::Correlation: return "CorrelationError";
    case ErrorCode::ServiceFault: return "ServiceFaultError";
    case ErrorCode::NotFound: return "NotFoundError";
    case ErrorCode::IllegalTransition: return "IllegalTransitionError";
    case ErrorCode::QuiescenceRequired: return "QuiescenceRequiredError";
    case ErrorCode::Validation: return "ValidationError";
    case ErrorCode::DuplicateNetwork: return "DuplicateNetworkError";
    case ErrorCode::DuplicateVsn: return "DuplicateVsnError";
    case ErrorCode::ActiveInstances: return "ActiveInstancesError";
    case ErrorCode::Timeout: return "TimeoutError";
    case ErrorCode::QueueOverflow: return "QueueOverflowError";
    case ErrorCode::Rejected: return "RejectedError";
    case ErrorCode::PortInUse: return "PortInUseError";
    case ErrorCode::Connection: return "ConnectionError";
    case ErrorCode::MalformedResponse: return "MalformedResponseError";
    case ErrorCode::Precondition: return "PreconditionError";
  }
  return "Error";
}

}  // namespace sdsn
