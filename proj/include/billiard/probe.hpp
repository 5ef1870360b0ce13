#pragma once

#include "billiard/database.hpp"

namespace billiard {

// Shoulder profile of the plateau cutoff phi: identically 1 on
// |t| <= plateau, identically 0 beyond support, joined by the smooth
// exp(-sharpness/x) transition. Defaults give the plateau 3/8 and support
// 1/2, so rho below is supported in [-1, 1].
struct PhiParams {
  double plateau = 0.375;
  double support = 0.5;
  double sharpness = 1.0;
};

// Test function rho = 9 (phi * phi) (autocorrelation by evenness of phi):
// even, supported in [-2*support, 2*support], rho > 9/8 on |t| <= support,
// and rho_hat = 9 phi_hat^2 >= 0.
class Rho {
 public:
  explicit Rho(PhiParams p = {});
  double phi(double t) const;
  double operator()(double t) const;
  double hat(double k) const;
  double support() const { return 2.0 * p_.support; }

 private:
  PhiParams p_;
};

Rho build_rho(PhiParams p = {});

// Window rho_q(t) = rho(m_q (t - ell_q)), supported in
// [ell - 1/m_q, ell + 1/m_q] for the default rho support.
struct ProbeWindow {
  double ell = 0.0;
  double m = 1.0;
};

// Validates ell > d0 and m >= max(1, 1/d0).
ProbeWindow make_window(double d0, double ell, double m);

// Raises fault::coverage unless every ray with period <= upper is certainly
// in the database: the length cutoff (when set) must reach upper and the
// first omitted word length must be too long, (n_max + 1) d0 > upper.
void coverage_audit(const OrbitDatabase& db, double upper);

// Sum over oriented rays (iterates included) with period inside the window:
//   (+-1)^m * tau_sharp * |det(Id-P)|^{-1/2} * rho(m_q (tau - ell_q)),
// the pairing of the window against the singular part of the boundary-trace
// distribution. The sign factor is dropped in the Neumann variant. Windows
// containing no ray period return exactly 0.
double fd_pairing(const OrbitDatabase& db, const ProbeWindow& w, const Rho& rho,
                  bool neumann = false);

// Amplitude of the length-spectrum singularity at T: signed sum of
// tau_sharp / |det(Id-P)|^{1/2} over rays with |tau - T| <= tol.
double singularity_coefficient(const OrbitDatabase& db, double T, double tol,
                               bool neumann = false);

}  // namespace billiard
