#include "sdsn/core/id.hpp"

#include <chrono>
#include <mutex>
#include <random>

namespace sdsn {

bool isValidIdentifier(const std::string& s) {
  if (s.empty()) return false;
  auto alpha = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); };
  auto digit = [](char c) { return c >= '0' && c <= '9'; };
  if (!alpha(s[0])) return false;
  for (char c : s) {
    if (!alpha(c) && !digit(c) && c != '_') return false;
  }
  return true;
}

std::string newToken() {
  static std::mutex mu;
  static std::mt19937_64 rng(std::random_device{}());
  std::uint64_t hi, lo;
  {
    std::lock_guard<std::mutex> lock(mu);
    hi = rng();
    lo = rng();
  }
  static const char* hex = "0123456789abcdef";
  std::string out(32, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = hex[hi & 0xF];
    hi >>= 4;
  }
  for (int i = 31; i >= 16; --i) {
    out[i] = hex[lo & 0xF];
    lo >>= 4;
  }
  return out;
}

std::int64_t nowMs() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

std::int64_t monotonicNs() {
  using namespace std::chrono;
  return duration_cast<nanoseconds>(steady_clock::now().time_since_epoch()).count();
}

}  // namespace sdsn
