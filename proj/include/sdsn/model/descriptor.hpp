#ifndef SDSN_MODEL_DESCRIPTOR_HPP
#define SDSN_MODEL_DESCRIPTOR_HPP

#include <functional>
#include <string>

#include "sdsn/model/design.hpp"

namespace sdsn::model {

// Resolves a rule/VSN file reference from a descriptor to its content.
// Deployment over the wire supplies a bundle; local loading reads files.
using ResourceResolver = std::function<std::string(const std::string& path)>;

// Reads paths relative to baseDir; throws NotFound for missing files.
ResourceResolver fileResolver(const std::string& baseDir);

// Parses a network descriptor (YAML). File references (rules/VSNs) are
// resolved through `resolve`. Performs structural checks: throws ParseError,
// DuplicateIdError, and ReferenceError (naming the dangling id). Deeper
// shape invariants are validateDesign's job.
ServiceNetworkDesign loadNetworkDescriptor(const std::string& text,
                                           const ResourceResolver& resolve = {});

// Convenience: read the file and resolve references relative to it.
ServiceNetworkDesign loadNetworkDescriptorFile(const std::string& path);

// Parses one VSN spec document (a `.vsn` file or an inline block).
VsnSpec loadVsnSpec(const std::string& text);
VsnSpec loadVsnSpecFile(const std::string& path);

// Parses one process definition document (used by process-update changes).
ProcessDefinition loadProcessDefinition(const std::string& text);

// Self-contained round-trippable rendering: rule texts and VSNs inline.
std::string serializeDescriptor(const ServiceNetworkDesign& design);
std::string serializeVsn(const VsnSpec& vsn);
std::string serializeProcessDefinition(const ProcessDefinition& process);

// Structural reference check shared by the loader and the validator; throws
// on the first dangling reference / duplicate id.
void checkReferences(const ServiceNetworkDesign& design);

std::string readTextFile(const std::string& path);  // NotFound on failure

}  // namespace sdsn::model

#endif  // SDSN_MODEL_DESCRIPTOR_HPP
