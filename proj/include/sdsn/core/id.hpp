#ifndef SDSN_CORE_ID_HPP
#define SDSN_CORE_ID_HPP

#include <cstdint>
#include <string>

namespace sdsn {

using Id = std::string;

// Element identifiers: [A-Za-z][A-Za-z0-9_]*
bool isValidIdentifier(const std::string& s);

// Random 128-bit token rendered as 32 hex chars; used for instance and
// message ids. Thread-safe.
std::string newToken();

// Wall-clock milliseconds since the epoch (for wire timestamps / event `at`).
std::int64_t nowMs();

// Monotonic nanoseconds (for durations).
std::int64_t monotonicNs();

}  // namespace sdsn

#endif  // SDSN_CORE_ID_HPP
