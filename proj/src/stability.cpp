#include "billiard/stability.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace billiard {

namespace {

Vec cross3(const Vec& a, const Vec& b) {
  Vec w(3);
  w << a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0];
  return w;
}

Mat cross_matrix(const Vec& w) {
  Mat k = Mat::Zero(3, 3);
  k << 0, -w[2], w[1], w[2], 0, -w[0], -w[1], w[0], 0;
  return k;
}

// Rotation taking unit vector u to unit vector v in their common plane.
Mat minimal_rotation(const Vec& u, const Vec& v, const Vec& fallback_axis) {
  double c = u.dot(v);
  if (c < -1.0 + 1e-12) {
    // Antiparallel: half-turn about the provided transverse axis.
    Vec a = fallback_axis.normalized();
    return 2.0 * a * a.transpose() - Mat::Identity(3, 3);
  }
  Vec w = cross3(u, v);
  Mat k = cross_matrix(w);
  return Mat::Identity(3, 3) + k + k * k / (1.0 + c);
}

const Obstacle& bounce_obstacle(const Scene& s, const PeriodicOrbit& orbit, int i) {
  int sym = orbit.cls.canonical[i];
  return s.obstacles[sym - 1];
}

}  // namespace

TransverseFrames build_frames(const Scene& s, const PeriodicOrbit& orbit) {
  int d = s.dim;
  int m = orbit.m;
  TransverseFrames f;
  f.E.resize(m);
  if (d == 2) {
    for (int i = 0; i < m; ++i) {
      const Vec& w = orbit.directions[i];
      Mat e(2, 1);
      e << -w[1], w[0];
      f.E[i] = e;
    }
    return f;
  }
  // d = 3: seed from the smallest-index coordinate axis not parallel to the
  // first direction, then transport by minimal rotations.
  const Vec& w0 = orbit.directions[0];
  int axis = 0;
  while (axis < 3 && std::abs(w0[axis]) > 1.0 - 1e-9) ++axis;
  if (axis == 3) raise(fault::frame, "no coordinate axis transverse to the first direction");
  Vec a = Vec::Unit(3, axis);
  Vec e1 = (a - a.dot(w0) * w0).normalized();
  Vec e2 = cross3(w0, e1);
  Mat e(3, 2);
  e.col(0) = e1;
  e.col(1) = e2;
  f.E[0] = e;
  for (int i = 1; i < m; ++i) {
    Mat r = minimal_rotation(orbit.directions[i - 1], orbit.directions[i], f.E[i - 1].col(0));
    Mat cand = r * f.E[i - 1];
    const Vec& w = orbit.directions[i];
    Vec c1 = cand.col(0);
    c1 -= c1.dot(w) * w;
    c1.normalize();
    Vec c2 = cand.col(1);
    c2 -= c2.dot(w) * w + c2.dot(c1) * c1;
    c2.normalize();
    Mat ei(3, 2);
    ei.col(0) = c1;
    ei.col(1) = c2;
    f.E[i] = ei;
  }
  return f;
}

Mat curvature_form(const Scene& s, const PeriodicOrbit& orbit, int i,
                   const TransverseFrames& frames) {
  int m = orbit.m;
  int prev = (i - 1 + m) % m;
  const Obstacle& o = bounce_obstacle(s, orbit, i);
  const Vec& q = orbit.points[i];
  const Vec& w_in = orbit.directions[prev];
  Vec n = -o.gradient(q);  // inward unit normal
  double ct = w_in.dot(n);
  if (ct < kGrazingTol)
    raise(fault::grazing, "bounce " + std::to_string(i) + " is grazing (cos " + fmt17(ct) + ")");
  const Mat& E = frames.E[i];
  int td = s.dim - 1;
  // Mirror each outgoing-frame vector back to the incoming plane, project it
  // along the incoming direction onto the boundary tangent plane, then take
  // the Gram matrix under the shape operator (1/radius on balls).
  Mat proj(s.dim, td);
  for (int a = 0; a < td; ++a) {
    Vec rf = reflect(E.col(a), n);
    proj.col(a) = rf - (rf.dot(n) / ct) * w_in;
  }
  Mat psi = (2.0 * ct / o.radius) * (proj.transpose() * proj);
  return 0.5 * (psi + psi.transpose());
}

Mat sigma_matrix(const Scene& s, const PeriodicOrbit& orbit, int i,
                 const TransverseFrames& frames) {
  int m = orbit.m;
  int prev = (i - 1 + m) % m;
  const Obstacle& o = bounce_obstacle(s, orbit, i);
  Vec n = -o.gradient(orbit.points[i]);
  int td = s.dim - 1;
  Mat sig(td, td);
  for (int a = 0; a < td; ++a)
    sig.col(a) = frames.E[i].transpose() * reflect(frames.E[prev].col(a), n);
  Mat defect = sig.transpose() * sig - Mat::Identity(td, td);
  if (defect.cwiseAbs().maxCoeff() > 1e-10)
    raise(fault::frame, "frame change at bounce " + std::to_string(i) + " is not orthogonal");
  return sig;
}

Mat reflection_block(const Scene& s, const PeriodicOrbit& orbit, int i,
                     const TransverseFrames& frames) {
  int td = s.dim - 1;
  Mat psi = curvature_form(s, orbit, i, frames);
  Mat sig = sigma_matrix(s, orbit, i, frames);
  double lambda = orbit.lambdas[i];
  Mat block(2 * td, 2 * td);
  block.topLeftCorner(td, td) = sig;
  block.topRightCorner(td, td) = lambda * sig;
  block.bottomLeftCorner(td, td) = psi * sig;
  block.bottomRightCorner(td, td) = (Mat::Identity(td, td) + lambda * psi) * sig;
  return block;
}

Mat unstable_fixed_point(const Scene& s, const PeriodicOrbit& orbit,
                         const TransverseFrames& frames, double tol) {
  int td = s.dim - 1;
  int m = orbit.m;
  std::vector<Mat> psi(m), sig(m);
  for (int i = 0; i < m; ++i) {
    psi[i] = curvature_form(s, orbit, i, frames);
    sig[i] = sigma_matrix(s, orbit, i, frames);
  }
  Mat M = 1e-6 * Mat::Identity(td, td);
  for (int it = 0; it < 10000; ++it) {
    Mat prev = M;
    for (int i = 0; i < m; ++i) {
      Mat inv_arg = Mat::Identity(td, td) + orbit.lambdas[i] * M;
      Mat x = inv_arg.ldlt().solve(M);  // (I + lambda M)^{-1} M, symmetric
      x = 0.5 * (x + x.transpose());
      M = sig[i] * x * sig[i].transpose() + psi[i];
      M = 0.5 * (M + M.transpose());
    }
    if ((M - prev).cwiseAbs().maxCoeff() <= tol * std::max(1.0, M.cwiseAbs().maxCoeff()))
      return M;
  }
  raise(fault::contraction, "curvature fixed point did not converge for word " +
                                word_to_string(orbit.cls.canonical));
}

ExpansionResult expansion_map(const Scene& s, const PeriodicOrbit& orbit,
                              const TransverseFrames& frames, const Mat& M0) {
  int td = s.dim - 1;
  int m = orbit.m;
  ExpansionResult res;
  res.S = Mat::Identity(td, td);
  res.factor_smin = std::numeric_limits<double>::infinity();
  Mat M = M0;
  for (int i = 0; i < m; ++i) {
    Mat grown = Mat::Identity(td, td) + orbit.lambdas[i] * M;
    Mat sig = sigma_matrix(s, orbit, i, frames);
    res.S = sig * grown * res.S;
    // sigma is orthogonal, so the factor's singular values are those of
    // (I + lambda M), a symmetric positive definite matrix.
    Eigen::SelfAdjointEigenSolver<Mat> es(grown);
    res.factor_smin = std::min(res.factor_smin, es.eigenvalues().minCoeff());
    Mat psi = curvature_form(s, orbit, i, frames);
    Mat x = grown.ldlt().solve(M);
    x = 0.5 * (x + x.transpose());
    M = sig * x * sig.transpose() + psi;
    M = 0.5 * (M + M.transpose());
  }
  Eigen::EigenSolver<Mat> es(res.S);
  for (int j = 0; j < td; ++j) res.nu.push_back(es.eigenvalues()[j]);
  for (const Cplx& v : res.nu)
    if (std::abs(v) <= 1.0)
      raise(fault::hyperbolicity, "expanding multiplier with modulus " + fmt17(std::abs(v)) +
                                      " <= 1 for word " + word_to_string(orbit.cls.canonical));
  Cplx contracted(1.0, 0.0);
  for (const Cplx& v : res.nu) contracted *= (1.0 - 1.0 / v);
  double mod = std::abs(contracted);
  res.det_factored = std::abs(res.S.determinant()) * mod * mod;
  return res;
}

StabilityReport poincare_map(const Scene& s, const PeriodicOrbit& orbit, double tol) {
  if (orbit.residual > 1e-8)
    raise(fault::convergence, "stability requested on an uncertified orbit (residual " +
                                  fmt17(orbit.residual) + ")");
  TransverseFrames frames = build_frames(s, orbit);
  int td = s.dim - 1;
  StabilityReport rep;
  rep.P = Mat::Identity(2 * td, 2 * td);
  for (int i = 0; i < orbit.m; ++i) rep.P = reflection_block(s, orbit, i, frames) * rep.P;
  // The return map is symplectic, so its characteristic polynomial is
  // palindromic and the spectrum comes in (lambda, 1/lambda) pairs.  A dense
  // QR on P itself loses the contracting member of each pair once |P| grows
  // past 1/eps, and an LU determinant of Id - P cancels the same way; both
  // quantities are instead recovered from the trace invariants of P, which
  // are cancellation-free products of positive terms.
  double c1 = rep.P.trace();
  if (td == 1) {
    rep.det_direct = std::abs(2.0 - c1);
    // lambda + 1/lambda = c1 with |c1| > 2 for a hyperbolic ray; take the
    // expanding branch without subtractive cancellation, partner exactly
    // reciprocal.
    double disc = c1 * c1 - 4.0;
    Cplx big;
    if (disc >= 0.0) {
      double root = std::sqrt(disc);
      big = Cplx(0.5 * (c1 + (c1 >= 0.0 ? root : -root)), 0.0);
    } else {
      big = 0.5 * Cplx(c1, std::sqrt(-disc));
    }
    rep.eigenvalues.push_back(big);
    rep.eigenvalues.push_back(Cplx(1.0, 0.0) / big);
  } else {
    // det(Id - P) = p(1) of the palindromic quartic
    // p(x) = x^4 - c1 x^3 + c2 x^2 - c1 x + 1, with c2 from Newton's identity.
    double c2 = 0.5 * (c1 * c1 - (rep.P * rep.P).trace());
    rep.det_direct = std::abs(2.0 - 2.0 * c1 + c2);
    // Substituting y = lambda + 1/lambda gives y^2 - c1 y + (c2 - 2) = 0;
    // solve with the stable quadratic formula, then split each y into its
    // expanding branch and the exact reciprocal partner.
    Cplx sd = std::sqrt(Cplx(c1 * c1 - 4.0 * (c2 - 2.0), 0.0));
    if (c1 < 0.0) sd = -sd;
    Cplx q = 0.5 * (Cplx(c1, 0.0) + sd);
    std::vector<Cplx> ys;
    if (std::abs(q) > 0.0) {
      ys = {q, Cplx(c2 - 2.0, 0.0) / q};
    } else {
      ys = {sd * 0.5, -sd * 0.5};
    }
    for (const Cplx& y : ys) {
      Cplx root = std::sqrt(y * y - 4.0);
      Cplx big = 0.5 * (y + root);
      Cplx alt = 0.5 * (y - root);
      if (std::abs(alt) > std::abs(big)) big = alt;
      rep.eigenvalues.push_back(big);
      rep.eigenvalues.push_back(Cplx(1.0, 0.0) / big);
    }
  }
  rep.M0 = unstable_fixed_point(s, orbit, frames, tol);
  ExpansionResult ex = expansion_map(s, orbit, frames, rep.M0);
  rep.S = ex.S;
  rep.nu = ex.nu;
  rep.det_factored = ex.det_factored;
  rep.factor_smin = ex.factor_smin;
  double min_abs_nu = std::numeric_limits<double>::infinity();
  for (const Cplx& v : rep.nu) min_abs_nu = std::min(min_abs_nu, std::abs(v));
  rep.beta_bound = std::log(min_abs_nu) / orbit.m;
  rep.cross_check_delta = std::abs(rep.det_direct - rep.det_factored) / rep.det_direct;
  return rep;
}

double iterate_det_abs(const std::vector<Cplx>& nu, int mu) {
  if (mu < 1) raise(fault::parameter, "iterate exponent must be >= 1");
  double grow = 1.0;
  Cplx contracted(1.0, 0.0);
  for (const Cplx& v : nu) {
    grow *= std::pow(std::abs(v), mu);
    contracted *= (1.0 - std::pow(v, -mu));
  }
  double mod = std::abs(contracted);
  return grow * mod * mod;
}

HyperbolicityCertificate hyperbolicity_certificate(double d0,
                                                   const std::vector<CertificateSample>& samples) {
  if (samples.empty()) raise(fault::insufficient_data, "certificate needs at least one orbit");
  if (!(d0 > 0.0)) raise(fault::parameter, "certificate needs a positive minimal gap");
  HyperbolicityCertificate cert;
  double worst_smin = std::numeric_limits<double>::infinity();
  for (const auto& s : samples) worst_smin = std::min(worst_smin, s.factor_smin);
  if (worst_smin <= 1.0)
    raise(fault::hyperbolicity, "a bounce factor fails strict expansion (smin " +
                                    fmt17(worst_smin) + ")");
  // Shrink slightly so that min|nu| >= e^{beta m} holds strictly under
  // floating-point rounding even for the saturating orbit.
  cert.epsilon = (worst_smin - 1.0) * (1.0 - 1e-12) / d0;
  cert.beta = std::log1p(cert.epsilon * d0);

  // Envelope for |det(Id-P)|: least-squares rate of log det vs tau, clamped
  // so that the per-orbit ratios all lie in [b1, b2]; C1 closes the lower band.
  double n = static_cast<double>(samples.size());
  double st = 0.0, sl = 0.0, stt = 0.0, stl = 0.0;
  double min_ratio = std::numeric_limits<double>::infinity();
  double max_ratio = -std::numeric_limits<double>::infinity();
  for (const auto& smp : samples) {
    double l = std::log(smp.det_abs);
    st += smp.tau;
    sl += l;
    stt += smp.tau * smp.tau;
    stl += smp.tau * l;
    min_ratio = std::min(min_ratio, l / smp.tau);
    max_ratio = std::max(max_ratio, l / smp.tau);
  }
  double denom = n * stt - st * st;
  double slope = denom > 1e-12 ? (n * stl - st * sl) / denom : min_ratio;
  cert.b1 = std::min(slope, min_ratio);
  cert.b2 = max_ratio;
  double log_c1 = std::numeric_limits<double>::infinity();
  for (const auto& smp : samples)
    log_c1 = std::min(log_c1, std::log(smp.det_abs) - cert.b1 * smp.tau);
  cert.C1 = std::exp(log_c1);
  return cert;
}

}  // namespace billiard
