#include "billiard/zeta.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace billiard {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct RayView {
  double tau_sharp = 0.0;
  int m = 0;  // reflections of the primitive loop
  const std::vector<Cplx>* nu = nullptr;
  double copies = 1.0;  // 2 when double-counting a self-reversible ray
};

std::vector<RayView> ray_views(const OrbitDatabase& db, const SeriesSpec& spec) {
  if (db.records.empty()) raise(fault::insufficient_data, "database has no orbit records");
  int n_cut = spec.n_max > 0 ? std::min(spec.n_max, db.header.n_max) : db.header.n_max;
  std::vector<RayView> out;
  for (const OrbitRecord& rec : db.records) {
    if (rec.cls.n() > n_cut) continue;
    if (spec.tau_max > 0.0 && rec.orbit.tau_sharp > spec.tau_max) continue;
    RayView v;
    v.tau_sharp = rec.orbit.tau_sharp;
    v.m = rec.orbit.m;
    v.nu = &rec.stab.nu;
    v.copies = (spec.double_count_self && rec.cls.orientation == Orientation::SelfReversible)
                   ? 2.0
                   : 1.0;
    out.push_back(v);
  }
  return out;
}

int iterate_cap(const RayView& v, const SeriesSpec& spec, int db_n_max) {
  if (spec.tau_max > 0.0) {
    double cap = spec.tau_max / v.tau_sharp;
    return std::max(1, static_cast<int>(std::floor(cap + 1e-12)));
  }
  int n_cut = spec.n_max > 0 ? std::min(spec.n_max, db_n_max) : db_n_max;
  return std::max(1, n_cut / v.m);
}

double series_weight(SeriesKind kind, int q, int m_total) {
  switch (kind) {
    case SeriesKind::N: return 1.0;
    case SeriesKind::D: return (m_total % 2 == 0) ? 1.0 : -1.0;
    case SeriesKind::Q: return (m_total % q == 0) ? 1.0 : 0.0;
  }
  return 0.0;
}

}  // namespace

int holonomy_weight(int m, int q) {
  if (q < 2) raise(fault::parameter, "holonomy modulus must be >= 2, got " + std::to_string(q));
  if (m < 1) raise(fault::parameter, "reflection count must be >= 1");
  return (m % q == 0) ? q : 0;
}

Cplx eta_value(const OrbitDatabase& db, const SeriesSpec& spec, Cplx s) {
  if (spec.kind == SeriesKind::Q && spec.q < 2)
    raise(fault::parameter, "kind Q needs q >= 2");
  Cplx total(0.0, 0.0);
  for (const RayView& v : ray_views(db, spec)) {
    int cap = iterate_cap(v, spec, db.header.n_max);
    for (int mu = 1; mu <= cap; ++mu) {
      double det = iterate_det_abs(*v.nu, mu);
      double w = series_weight(spec.kind, spec.q, mu * v.m);
      if (w == 0.0) continue;
      total += v.copies * w * v.tau_sharp * std::exp(-s * (mu * v.tau_sharp)) / std::sqrt(det);
    }
  }
  return total;
}

Cplx zeta_value(const OrbitDatabase& db, const SeriesSpec& spec, Cplx s) {
  if (spec.kind == SeriesKind::Q && spec.q < 2)
    raise(fault::parameter, "kind Q needs q >= 2");
  Cplx exponent(0.0, 0.0);
  for (const RayView& v : ray_views(db, spec)) {
    int cap = iterate_cap(v, spec, db.header.n_max);
    for (int mu = 1; mu <= cap; ++mu) {
      double det = iterate_det_abs(*v.nu, mu);
      double w = series_weight(spec.kind, spec.q, mu * v.m);
      if (w == 0.0) continue;
      exponent += v.copies * w * std::exp(-s * (mu * v.tau_sharp)) / (mu * std::sqrt(det));
    }
  }
  return std::exp(-exponent);
}

Cplx CycleExpansion::value(Cplx s) const {
  Cplx acc(1.0, 0.0);
  for (const Term& t : terms) acc += t.coeff * std::exp(-s * t.tau);
  return acc;
}

Cplx CycleExpansion::derivative(Cplx s) const {
  Cplx acc(0.0, 0.0);
  for (const Term& t : terms) acc += -t.tau * t.coeff * std::exp(-s * t.tau);
  return acc;
}

CycleExpansion cycle_expansion(const OrbitDatabase& db, SeriesKind kind, int k_max, int n_max,
                               bool double_count_self) {
  if (db.header.dim != 2)
    raise(fault::unsupported, "cycle expansion is implemented for planar scenes only");
  if (kind == SeriesKind::Q)
    raise(fault::unsupported,
          "holonomy weights are not multiplicative over iterates; kind Q has no product form");
  if (k_max < 0) raise(fault::parameter, "k_max must be >= 0");
  if (n_max < 2) raise(fault::parameter, "n_max must be >= 2");
  if (n_max > db.header.n_max)
    raise(fault::insufficient_data, "expansion order exceeds the database word-length cutoff");
  if (db.records.empty()) raise(fault::insufficient_data, "database has no orbit records");

  struct Factor {
    int degree = 0;
    double tau = 0.0;
    double amp = 0.0;  // -w_p sgn(L)^k |L|^{-1/2-k}
  };
  std::vector<Factor> factors;
  for (const OrbitRecord& rec : db.records) {
    if (rec.cls.n() > n_max) continue;
    if (rec.stab.nu.size() != 1)
      raise(fault::internal, "planar record carries more than one expanding multiplier");
    Cplx lam_c = rec.stab.nu[0];
    if (std::abs(lam_c.imag()) > 1e-9 * std::abs(lam_c))
      raise(fault::internal, "planar expanding multiplier is not real");
    double lam = lam_c.real();
    double sign = lam < 0.0 ? -1.0 : 1.0;
    double alam = std::abs(lam);
    double w = (kind == SeriesKind::D && rec.orbit.m % 2 != 0) ? -1.0 : 1.0;
    int copies =
        (double_count_self && rec.cls.orientation == Orientation::SelfReversible) ? 2 : 1;
    for (int k = 0; k <= k_max; ++k) {
      Factor f;
      f.degree = rec.cls.n();
      f.tau = rec.orbit.tau_sharp;
      f.amp = -w * std::pow(sign, k) * std::pow(alam, -0.5 - k);
      for (int c = 0; c < copies; ++c) factors.push_back(f);
    }
  }
  std::stable_sort(factors.begin(), factors.end(),
                   [](const Factor& a, const Factor& b) { return a.degree < b.degree; });

  CycleExpansion ce;
  ce.n_max = n_max;
  ce.k_max = k_max;
  ce.kind = kind;
  // Depth-first subset expansion of the product, pruned by the length grading.
  // Factors are degree-sorted, so the scan stops at the first overflow.
  std::vector<CycleExpansion::Term>& terms = ce.terms;
  std::function<void(std::size_t, int, double, double)> dfs = [&](std::size_t start, int degree,
                                                                  double coeff, double tau) {
    for (std::size_t i = start; i < factors.size(); ++i) {
      int nd = degree + factors[i].degree;
      if (nd > n_max) break;
      double nc = coeff * factors[i].amp;
      double nt = tau + factors[i].tau;
      terms.push_back({nc, nt, nd});
      dfs(i + 1, nd, nc, nt);
    }
  };
  dfs(0, 0, 1.0, 0.0);
  return ce;
}

namespace {

// Phase increment of f along the segment [a, b], adaptively split so each
// accepted step turns the argument by at most pi/2. Returns false when a
// sample lands numerically on a zero or the recursion bottoms out.
bool edge_phase(const std::function<Cplx(Cplx)>& f, Cplx a, Cplx fa, Cplx b, Cplx fb, int depth,
                double& total) {
  if (std::abs(fa) < 1e-13 || std::abs(fb) < 1e-13) return false;
  double dphi = std::arg(fb / fa);
  if (std::abs(dphi) <= 0.5 * kPi) {
    total += dphi;
    return true;
  }
  if (depth >= 28) return false;
  Cplx mid = 0.5 * (a + b);
  Cplx fm = f(mid);
  return edge_phase(f, a, fa, mid, fm, depth + 1, total) &&
         edge_phase(f, mid, fm, b, fb, depth + 1, total);
}

// Winding number of f along the rectangle boundary, tracked by phase
// continuation with adaptive refinement. Returns -1 when a boundary point
// gets numerically too close to a zero (caller nudges the box).
int winding_number(const std::function<Cplx(Cplx)>& f, double re0, double re1, double im0,
                   double im1, int grid) {
  std::vector<Cplx> corners = {Cplx(re0, im0), Cplx(re1, im0), Cplx(re1, im1), Cplx(re0, im1)};
  double total = 0.0;
  for (int side = 0; side < 4; ++side) {
    Cplx a = corners[side];
    Cplx b = corners[(side + 1) % 4];
    int steps = std::max(grid / 4, 16);
    Cplx prev_z = a;
    Cplx prev_f = f(a);
    for (int k = 1; k <= steps; ++k) {
      Cplx z = a + (b - a) * (static_cast<double>(k) / steps);
      Cplx fz = f(z);
      if (!edge_phase(f, prev_z, prev_f, z, fz, 0, total)) return -1;
      prev_z = z;
      prev_f = fz;
    }
  }
  return static_cast<int>(std::lround(total / (2.0 * kPi)));
}

Cplx newton_polish(const std::function<Cplx(Cplx)>& f, const std::function<Cplx(Cplx)>& fprime,
                   Cplx start, double tol, int max_iter = 60) {
  Cplx s = start;
  for (int it = 0; it < max_iter; ++it) {
    Cplx fv = f(s);
    Cplx dv = fprime ? fprime(s) : (f(s + Cplx(1e-7, 0)) - f(s - Cplx(1e-7, 0))) / Cplx(2e-7, 0);
    if (std::abs(dv) < 1e-300) break;
    Cplx step = fv / dv;
    s -= step;
    if (std::abs(step) < tol) break;
  }
  return s;
}

void collect_rect(const std::function<Cplx(Cplx)>& f, const std::function<Cplx(Cplx)>& fprime,
                  double re0, double re1, double im0, double im1, int depth,
                  const ZeroSearchOptions& opts, std::vector<Cplx>& zeros) {
  int w = winding_number(f, re0, re1, im0, im1, opts.grid);
  if (w < 0) {
    // Boundary passed near a zero; nudge the box outward slightly.
    double eps = 1e-6 * std::max(re1 - re0, im1 - im0);
    w = winding_number(f, re0 - eps, re1 + eps, im0 - eps, im1 + eps, opts.grid * 2);
    if (w < 0) w = 0;
  }
  if (w == 0) return;
  double width = re1 - re0, height = im1 - im0;
  if (w == 1 || depth >= opts.max_depth || (width < 1e-9 && height < 1e-9)) {
    Cplx center(0.5 * (re0 + re1), 0.5 * (im0 + im1));
    for (int attempt = 0; attempt < 3; ++attempt) {
      Cplx z = newton_polish(f, fprime, center, opts.newton_tol);
      if (std::abs(f(z)) < 1e-9 && z.real() >= re0 - 1e-6 && z.real() <= re1 + 1e-6 &&
          z.imag() >= im0 - 1e-6 && z.imag() <= im1 + 1e-6) {
        zeros.push_back(z);
        return;
      }
      center += Cplx(0.1 * width * (attempt + 1), 0.07 * height * (attempt + 1));
    }
    return;
  }
  double rm = 0.5 * (re0 + re1), imid = 0.5 * (im0 + im1);
  collect_rect(f, fprime, re0, rm, im0, imid, depth + 1, opts, zeros);
  collect_rect(f, fprime, rm, re1, im0, imid, depth + 1, opts, zeros);
  collect_rect(f, fprime, re0, rm, imid, im1, depth + 1, opts, zeros);
  collect_rect(f, fprime, rm, re1, imid, im1, depth + 1, opts, zeros);
}

}  // namespace

std::vector<ZeroReport> find_zeros(const std::function<Cplx(Cplx)>& f,
                                   const std::function<Cplx(Cplx)>& fprime, double re0, double re1,
                                   double im0, double im1, const ZeroSearchOptions& opts) {
  if (!(re1 > re0)) raise(fault::region, "zero-search region has empty real extent");
  if (im1 < im0) raise(fault::region, "zero-search region has negative imaginary extent");
  std::vector<Cplx> zeros;
  if (im0 == 0.0 && im1 == 0.0) {
    int n = std::max(opts.grid, 8);
    double prev_x = re0;
    double prev_f = f(Cplx(re0, 0.0)).real();
    for (int i = 1; i <= n; ++i) {
      double x = re0 + (re1 - re0) * i / n;
      double fx = f(Cplx(x, 0.0)).real();
      if (prev_f == 0.0) zeros.push_back(Cplx(prev_x, 0.0));
      if (prev_f * fx < 0.0) {
        Cplx z = newton_polish(f, fprime, Cplx(0.5 * (prev_x + x), 0.0), opts.newton_tol);
        if (std::abs(z.imag()) < 1e-8 && z.real() >= prev_x - 1e-9 && z.real() <= x + 1e-9) {
          zeros.push_back(Cplx(z.real(), 0.0));
        } else {
          // Newton escaped the bracket; fall back to bisection.
          double lo = prev_x, hi = x, flo = prev_f;
          for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
            double mid = 0.5 * (lo + hi);
            double fm = f(Cplx(mid, 0.0)).real();
            if (flo * fm <= 0.0)
              hi = mid;
            else {
              lo = mid;
              flo = fm;
            }
          }
          zeros.push_back(Cplx(0.5 * (lo + hi), 0.0));
        }
      }
      prev_x = x;
      prev_f = fx;
    }
  } else {
    collect_rect(f, fprime, re0, re1, im0, im1, 0, opts, zeros);
    std::sort(zeros.begin(), zeros.end(), [](const Cplx& a, const Cplx& b) {
      return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    // Deduplicate Newton results that converged to the same point.
    std::vector<Cplx> unique;
    for (const Cplx& z : zeros) {
      bool dup = false;
      for (const Cplx& u : unique)
        if (std::abs(z - u) < 1e-7) dup = true;
      if (!dup) unique.push_back(z);
    }
    zeros = std::move(unique);
  }

  std::vector<ZeroReport> reports;
  for (std::size_t i = 0; i < zeros.size(); ++i) {
    ZeroReport rep;
    rep.location = zeros[i];
    rep.low_confidence = std::abs(f(zeros[i])) > 1e-8;
    double nearest = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < zeros.size(); ++j)
      if (j != i) nearest = std::min(nearest, std::abs(zeros[i] - zeros[j]));
    rep.radius = std::min(0.05, 0.5 * nearest);
    Cplx acc(0.0, 0.0);
    for (int k = 0; k < 64; ++k) {
      double th = 2.0 * kPi * k / 64.0;
      Cplx dir(std::cos(th), std::sin(th));
      Cplx s = zeros[i] + rep.radius * dir;
      Cplx eta = fprime ? fprime(s) / f(s)
                        : (f(s + Cplx(1e-7, 0)) - f(s - Cplx(1e-7, 0))) / (Cplx(2e-7, 0) * f(s));
      acc += eta * dir;
    }
    rep.residue = acc * (rep.radius / 64.0);
    reports.push_back(rep);
  }
  return reports;
}

double s0_estimate(const OrbitDatabase& db) {
  int top = db.header.n_max;
  if (top < 6) raise(fault::insufficient_data, "abscissa estimate needs word length >= 6");
  int n2 = top - 2, n1 = top - 4;
  auto eta_at = [&](int n_cut, double s) {
    SeriesSpec spec;
    spec.kind = SeriesKind::N;
    spec.n_max = n_cut;
    return eta_value(db, spec, Cplx(s, 0.0)).real();
  };
  auto converging = [&](double s) {
    double e1 = eta_at(n1, s), e2 = eta_at(n2, s), e3 = eta_at(top, s);
    double inc1 = e2 - e1, inc2 = e3 - e2;
    // Deep in the convergent half-plane both shell increments fall below the
    // rounding floor of the partial sums; the strict comparison would then
    // see 0 < 0 and misreport divergence.
    double noise = 1e-14 * (std::abs(e3) + 1.0);
    if (std::abs(inc1) <= noise && std::abs(inc2) <= noise) return true;
    return inc2 < inc1;
  };
  double lo = -2.0, hi = 2.0;
  if (converging(lo)) return lo;  // degenerate: everything converges in range
  if (!converging(hi)) raise(fault::insufficient_data, "partial sums grow across the whole range");
  for (int it = 0; it < 60; ++it) {
    double mid = 0.5 * (lo + hi);
    if (converging(mid))
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

CountingFit counting_fit(const OrbitDatabase& db, const std::vector<double>& x_grid) {
  if (static_cast<int>(db.records.size()) < 20)
    raise(fault::insufficient_data, "counting fit needs at least 20 orbits, have " +
                                        std::to_string(db.records.size()));
  std::vector<double> taus;
  for (const OrbitRecord& rec : db.records) taus.push_back(rec.orbit.tau_sharp);
  std::sort(taus.begin(), taus.end());
  double t_min = taus.front(), t_max = taus.back();

  std::vector<double> grid = x_grid;
  if (grid.empty()) {
    for (double t : taus)
      if (grid.empty() || t - grid.back() > 1e-12) grid.push_back(t);
  } else {
    for (double x : grid)
      if (x < t_min - 1e-12 || x > t_max + 1e-12)
        raise(fault::region, "grid point " + fmt17(x) + " outside the length spectrum range [" +
                                 fmt17(t_min) + ", " + fmt17(t_max) + "]");
    std::sort(grid.begin(), grid.end());
  }

  CountingFit fit;
  std::vector<double> logN(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::size_t cnt = std::upper_bound(taus.begin(), taus.end(), grid[i] + 1e-12) - taus.begin();
    fit.curve.emplace_back(grid[i], static_cast<double>(cnt));
    logN[i] = std::log(static_cast<double>(std::max<std::size_t>(cnt, 1)));
  }

  auto sse = [&](double a) {
    double acc = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      double model = a * grid[i] - std::log(a * grid[i]);
      double r = logN[i] - model;
      acc += r * r;
    }
    return acc;
  };
  double lo = 1e-3, hi = 5.0;
  for (int it = 0; it < 200; ++it) {
    double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
    if (sse(m1) <= sse(m2))
      hi = m2;
    else
      lo = m1;
  }
  fit.a_hat = 0.5 * (lo + hi);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double model = fit.a_hat * grid[i] - std::log(fit.a_hat * grid[i]);
    fit.max_abs_residual = std::max(fit.max_abs_residual, std::abs(logN[i] - model));
  }

  // Exponential bound rate over all rays including iterates.
  double a1 = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double x = grid[i];
    long long total = 0;
    for (double t : taus) total += static_cast<long long>(std::floor(x / t + 1e-12));
    if (total > 0) a1 = std::max(a1, std::log(static_cast<double>(total)) / x);
  }
  fit.a1 = a1;
  return fit;
}

}  // namespace billiard
