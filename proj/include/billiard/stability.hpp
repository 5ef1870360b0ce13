#pragma once

#include "billiard/orbit.hpp"

#include <vector>

namespace billiard {

// One orthonormal basis of the transverse plane (orthogonal to the outgoing
// direction) per bounce. Deterministic construction:
//   d=2: the 90-degree counterclockwise rotation of the direction;
//   d=3: minimal rotation transporting the previous frame between
//        consecutive directions, seeded at bounce 0 from the smallest-index
//        coordinate axis not parallel to the first direction.
struct TransverseFrames {
  std::vector<Mat> E;  // d x (d-1) per bounce
};

TransverseFrames build_frames(const Scene& s, const PeriodicOrbit& orbit);

// Symmetric curvature form of the bounce at q_i expressed in the frame of
// the outgoing transverse plane: 2 cos(theta) times the Gram matrix of the
// mirrored frame vectors projected along the incoming direction onto the
// boundary tangent plane, scaled by the shape operator.
Mat curvature_form(const Scene& s, const PeriodicOrbit& orbit, int i,
                   const TransverseFrames& frames);

// Orthogonal (d-1)x(d-1) change of frame induced by the mirror reflection
// at bounce i, mapping the previous transverse frame to the current one.
Mat sigma_matrix(const Scene& s, const PeriodicOrbit& orbit, int i,
                 const TransverseFrames& frames);

// 2(d-1) square block of the linearized bounce-to-bounce map:
// [[I, lambda_i I],[psi_i, I + lambda_i psi_i]] * blockdiag(sigma_i, sigma_i).
Mat reflection_block(const Scene& s, const PeriodicOrbit& orbit, int i,
                     const TransverseFrames& frames);

struct StabilityReport {
  Mat P;                           // linearized return map, based at the last bounce plane
  std::vector<Cplx> eigenvalues;   // of P
  double det_direct = 0.0;         // |det(Id - P)|
  double det_factored = 0.0;       // same via the unstable factorization
  Mat M0;                          // unstable fixed-point curvature, symmetric positive definite
  Mat S;                           // expansion map; eigenvalues are the expanding multipliers
  std::vector<Cplx> nu;            // eigenvalues of S
  double beta_bound = 0.0;         // log(min |nu|) / m
  double factor_smin = 0.0;        // min singular value over per-bounce expansion factors
  double cross_check_delta = 0.0;  // |det_direct - det_factored| / det_direct
};

// Fixed point of the composed curvature update
// M -> sigma_i M (I + lambda_i M)^{-1} sigma_i^T + psi_i swept over bounces,
// iterated until successive sweeps differ by <= tol. Raises
// fault::contraction when 1e4 sweeps do not converge.
Mat unstable_fixed_point(const Scene& s, const PeriodicOrbit& orbit,
                         const TransverseFrames& frames, double tol = 1e-14);

struct ExpansionResult {
  Mat S;
  std::vector<Cplx> nu;
  double det_factored = 0.0;
  double factor_smin = 0.0;
};

// Product of per-bounce factors sigma_i (I + lambda_i M^(i-1)) with M
// propagated from the fixed point; raises fault::hyperbolicity if any
// multiplier fails |nu| > 1.
ExpansionResult expansion_map(const Scene& s, const PeriodicOrbit& orbit,
                              const TransverseFrames& frames, const Mat& M0);

// Full pipeline: frames, block product, eigenvalues, fixed point, expansion
// factorization and the direct-vs-factored cross check.
StabilityReport poincare_map(const Scene& s, const PeriodicOrbit& orbit, double tol = 1e-14);

// |det(Id - P^mu)| for the mu-fold iterate from the expanding multipliers:
// prod |nu_j|^mu * |prod (1 - nu_j^{-mu})|^2.
double iterate_det_abs(const std::vector<Cplx>& nu, int mu);

struct CertificateSample {
  double tau = 0.0;
  int m = 0;
  double det_abs = 0.0;
  double min_abs_nu = 0.0;
  double factor_smin = 0.0;
};

struct HyperbolicityCertificate {
  double epsilon = 0.0;  // per-bounce expansion margin: every factor's smallest
                         // singular value is >= 1 + epsilon * d0
  double beta = 0.0;     // log(1 + epsilon * d0); min |nu| >= e^{beta m} for all samples
  double b1 = 0.0;       // lower envelope rate for |det(Id-P)| vs tau
  double b2 = 0.0;       // upper envelope rate
  double C1 = 0.0;       // lower envelope constant: C1 e^{b1 tau} <= det <= e^{b2 tau}
};

HyperbolicityCertificate hyperbolicity_certificate(double d0,
                                                   const std::vector<CertificateSample>& samples);

}  // namespace billiard
