#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace billiard {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Cplx = std::complex<double>;

// Failure taxonomy. Every throw site picks a tag; the CLI maps tags onto the
// exit-code contract: 2 geometric validation, 3 configuration/usage,
// 4 computation/certification, 5 provenance.
enum class fault {
  // configuration and usage (exit 3)
  schema,
  parameter,
  arity,
  alphabet,
  admissibility,
  region,
  coverage,
  insufficient_data,
  unsupported,
  io,
  // geometric validation (exit 2)
  overlap,
  eclipse,
  // computation and certification (exit 4)
  boundary,
  frame,
  inside,
  escape,
  grazing,
  domain,
  convergence,
  degeneracy,
  contraction,
  hyperbolicity,
  internal,
  // provenance (exit 5)
  provenance,
};

int exit_code_for(fault f) noexcept;
std::string_view fault_name(fault f) noexcept;

class error : public std::runtime_error {
 public:
  error(fault f, const std::string& msg);
  fault kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return exit_code_for(kind_); }

 private:
  fault kind_;
};

[[noreturn]] void raise(fault f, const std::string& msg);

// Floats in every persisted artifact go through fmt17: up to 17 significant
// digits, locale independent, round-trip exact for doubles.
std::string fmt17(double x);

// FNV-1a 64-bit over raw bytes. Provenance fingerprint only, not cryptographic.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

}  // namespace billiard
