#include "billiard/probe.hpp"

#include "billiard/stability.hpp"

#include <algorithm>
#include <cmath>

namespace billiard {

namespace {

// Adaptive Simpson with absolute tolerance; integrands here are smooth
// compactly supported bumps, so the recursion stays shallow.
template <typename F>
double simpson_rec(const F& f, double a, double b, double fa, double fm, double fb, double whole,
                   double tol, int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

template <typename F>
double integrate(const F& f, double a, double b, double tol) {
  if (!(b > a)) return 0.0;
  double m = 0.5 * (a + b);
  double fa = f(a), fm = f(m), fb = f(b);
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_rec(f, a, b, fa, fm, fb, whole, tol, 48);
}

constexpr double kQuadTol = 1e-13;

}  // namespace

Rho::Rho(PhiParams p) : p_(p) {
  if (!(p_.plateau > 0.0) || !(p_.support > p_.plateau) || !(p_.sharpness > 0.0))
    raise(fault::parameter, "shoulder profile needs 0 < plateau < support and sharpness > 0");
}

Rho build_rho(PhiParams p) { return Rho(p); }

double Rho::phi(double t) const {
  double a = std::abs(t);
  if (a <= p_.plateau) return 1.0;
  if (a >= p_.support) return 0.0;
  double x = (a - p_.plateau) / (p_.support - p_.plateau);
  auto bump = [&](double y) { return y > 0.0 ? std::exp(-p_.sharpness / y) : 0.0; };
  double num = bump(1.0 - x);
  double den = bump(x) + num;
  return num / den;
}

double Rho::operator()(double t) const {
  double s = p_.support;
  double lo = std::max(-s, t - s);
  double hi = std::min(s, t + s);
  if (!(hi > lo)) return 0.0;
  double conv =
      integrate([&](double u) { return phi(u) * phi(t - u); }, lo, hi, kQuadTol);
  return 9.0 * conv;
}

double Rho::hat(double k) const {
  double s = p_.support;
  // phi is even and real, so its transform is 2 * int_0^s phi cos(kt) dt.
  double ph = 2.0 * integrate([&](double t) { return phi(t) * std::cos(k * t); }, 0.0, s,
                              kQuadTol);
  return 9.0 * ph * ph;
}

ProbeWindow make_window(double d0, double ell, double m) {
  if (!(d0 > 0.0)) raise(fault::parameter, "window validation needs a positive minimal gap");
  if (!(ell > d0))
    raise(fault::parameter, "window center " + fmt17(ell) +
                                " must exceed the minimal gap " + fmt17(d0));
  double m_min = std::max(1.0, 1.0 / d0);
  if (!(m >= m_min))
    raise(fault::parameter,
          "window scale " + fmt17(m) + " must be at least " + fmt17(m_min));
  return ProbeWindow{ell, m};
}

void coverage_audit(const OrbitDatabase& db, double upper) {
  if (db.header.tau_max > 0.0 && db.header.tau_max < upper)
    raise(fault::coverage, "database length cutoff " + fmt17(db.header.tau_max) +
                               " does not reach the window bound " + fmt17(upper));
  double first_missing = (db.header.n_max + 1) * db.header.d0;
  if (!(first_missing > upper))
    raise(fault::coverage, "words longer than the cutoff could enter the window: (n_max+1)*d0 = " +
                               fmt17(first_missing) + " <= " + fmt17(upper));
}

namespace {

double windowed_sum(const OrbitDatabase& db, double lo, double hi, bool neumann,
                    const ProbeWindow* w, const Rho* rho) {
  double acc = 0.0;
  for (const OrbitRecord& rec : db.records) {
    double ts = rec.orbit.tau_sharp;
    int mu_hi = static_cast<int>(std::floor(hi / ts + 1e-9));
    for (int mu = 1; mu <= mu_hi; ++mu) {
      double tau = mu * ts;
      if (tau < lo) continue;
      int m_total = mu * rec.orbit.m;
      double sign = neumann ? 1.0 : (m_total % 2 == 0 ? 1.0 : -1.0);
      double det = iterate_det_abs(rec.stab.nu, mu);
      double amp = sign * ts / std::sqrt(det);
      acc += w ? amp * (*rho)(w->m * (tau - w->ell)) : amp;
    }
  }
  return acc;
}

}  // namespace

double fd_pairing(const OrbitDatabase& db, const ProbeWindow& w, const Rho& rho, bool neumann) {
  double half = rho.support() / w.m;
  double upper = w.ell + half;
  coverage_audit(db, upper);
  return windowed_sum(db, w.ell - half, upper, neumann, &w, &rho);
}

double singularity_coefficient(const OrbitDatabase& db, double T, double tol, bool neumann) {
  if (!(tol >= 0.0)) raise(fault::parameter, "length tolerance must be nonnegative");
  coverage_audit(db, T + tol);
  return windowed_sum(db, T - tol, T + tol, neumann, nullptr, nullptr);
}

}  // namespace billiard
