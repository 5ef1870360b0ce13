#include "billiard/common.hpp"

#include <charconv>
#include <cmath>

namespace billiard {

int exit_code_for(fault f) noexcept {
  switch (f) {
    case fault::schema:
    case fault::parameter:
    case fault::arity:
    case fault::alphabet:
    case fault::admissibility:
    case fault::region:
    case fault::coverage:
    case fault::insufficient_data:
    case fault::unsupported:
    case fault::io:
      return 3;
    case fault::overlap:
    case fault::eclipse:
      return 2;
    case fault::provenance:
      return 5;
    default:
      return 4;
  }
}

std::string_view fault_name(fault f) noexcept {
  switch (f) {
    case fault::schema: return "schema";
    case fault::parameter: return "parameter";
    case fault::arity: return "arity";
    case fault::alphabet: return "alphabet";
    case fault::admissibility: return "admissibility";
    case fault::region: return "region";
    case fault::coverage: return "coverage";
    case fault::insufficient_data: return "insufficient-data";
    case fault::unsupported: return "unsupported";
    case fault::io: return "io";
    case fault::overlap: return "overlap";
    case fault::eclipse: return "eclipse";
    case fault::boundary: return "boundary";
    case fault::frame: return "frame";
    case fault::inside: return "inside";
    case fault::escape: return "escape";
    case fault::grazing: return "grazing";
    case fault::domain: return "domain";
    case fault::convergence: return "convergence";
    case fault::degeneracy: return "degeneracy";
    case fault::contraction: return "contraction";
    case fault::hyperbolicity: return "hyperbolicity";
    case fault::internal: return "internal";
    case fault::provenance: return "provenance";
  }
  return "unknown";
}

error::error(fault f, const std::string& msg)
    : std::runtime_error(std::string(fault_name(f)) + ": " + msg), kind_(f) {}

void raise(fault f, const std::string& msg) { throw error(f, msg); }

std::string fmt17(double x) {
  if (!std::isfinite(x)) raise(fault::internal, "non-finite value reached serialization");
  // Canonicalize zero: "-0" would be read back by JSON parsers as integer
  // zero, losing the sign bit and breaking byte-stable round-trips.
  if (x == 0.0) return "0";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

}  // namespace billiard
