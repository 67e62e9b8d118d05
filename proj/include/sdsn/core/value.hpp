#ifndef SDSN_CORE_VALUE_HPP
#define SDSN_CORE_VALUE_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>

namespace sdsn {

// Scalar kinds supported by message templates and state records.
enum class ScalarKind { String, Integer, Decimal, Boolean };

// A single field value. Integer and Decimal are kept distinct so template
// validation can reject a decimal where an integer is declared.
using Scalar = std::variant<std::string, std::int64_t, double, bool>;

// Envelope bodies and event payloads: ordered so serialization and
// field-merge results are deterministic.
using FieldMap = std::map<std::string, Scalar>;

const char* scalarKindName(ScalarKind k);
std::optional<ScalarKind> scalarKindFromName(const std::string& name);

ScalarKind kindOf(const Scalar& v);

// Renders a scalar the way the rule grammar writes literals: strings quoted,
// booleans as true/false, numbers unadorned.
std::string scalarToText(const Scalar& v);

// Comparison operators usable in rule conditions.
enum class CmpOp { Eq, Ne, Lt, Le, Gt, Ge };

const char* cmpOpName(CmpOp op);
std::optional<CmpOp> cmpOpFromName(const std::string& name);

// Total comparison used by the condition evaluator. Returns nullopt when the
// two scalars are not comparable (e.g. ordering two booleans or a string vs
// a number); callers treat that as "condition is false" plus a diagnostic.
std::optional<bool> compareScalars(const Scalar& lhs, CmpOp op, const Scalar& rhs);

// Scalar coercion helpers (integers widen to double for mixed numeric
// comparisons; everything else must match kinds exactly).
bool scalarsComparable(const Scalar& lhs, const Scalar& rhs);

}  // namespace sdsn

#endif  // SDSN_CORE_VALUE_HPP
