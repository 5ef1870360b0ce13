#pragma once

#include "billiard/database.hpp"

#include <functional>
#include <utility>
#include <vector>

namespace billiard {

enum class SeriesKind { N, D, Q };

struct SeriesSpec {
  SeriesKind kind = SeriesKind::N;
  int q = 2;             // reflection-count modulus, kind Q only
  int n_max = 0;         // symbolic truncation (0: inherit the database cutoff)
  double tau_max = 0.0;  // period truncation (0: none; then iterates are graded
                         // symbolically, mu * word length <= n_max)
  bool double_count_self = false;  // weight self-reversible rays twice
};

// q * [m == 0 mod q]: trace of the m-th power of the cyclic shift on q points.
int holonomy_weight(int m, int q);

// Truncated Dirichlet series over oriented rays (primitive records x iterates):
//   sum  w * tau_sharp * e^{-s tau} / |det(Id-P)|^{1/2}
// with w = 1 (N), (-1)^m (D), [m in qN] (Q).
Cplx eta_value(const OrbitDatabase& db, const SeriesSpec& spec, Cplx s);

// exp(- sum w e^{-s tau} / (mu |det(Id-P)|^{1/2})), same ray set; the
// logarithmic derivative of this function is eta_value.
Cplx zeta_value(const OrbitDatabase& db, const SeriesSpec& spec, Cplx s);

// Truncated product expansion of the zeta function over primitive cycles and
// their expanding-eigenvalue tower (d=2 only; kinds N and D):
//   prod_{p, 0<=k<=k_max} (1 - w_p sgn(L_p)^k |L_p|^{-1/2-k} e^{-s tau_p})
// expanded as pseudo-cycle terms graded by total word length <= n_max.
struct CycleExpansion {
  struct Term {
    double coeff = 0.0;
    double tau = 0.0;
    int degree = 0;
  };
  std::vector<Term> terms;  // the leading constant 1 is implicit
  int n_max = 0;
  int k_max = 0;
  SeriesKind kind = SeriesKind::N;

  Cplx value(Cplx s) const;
  Cplx derivative(Cplx s) const;
};

CycleExpansion cycle_expansion(const OrbitDatabase& db, SeriesKind kind, int k_max, int n_max,
                               bool double_count_self = false);

struct ZeroReport {
  Cplx location;
  Cplx residue;  // contour residue of f'/f, the log-derivative series
  double radius = 0.0;  // contour radius used for the residue
  bool low_confidence = false;
};

struct ZeroSearchOptions {
  int grid = 1200;          // boundary/real-line sampling density
  double newton_tol = 1e-12;
  int max_depth = 48;       // rectangle subdivision depth
};

// Zeros of a truncated-entire evaluator inside the rectangle
// [re0, re1] x [im0, im1]. A degenerate rectangle (im0 == im1 == 0) runs a
// real-line scan with Newton polish; otherwise argument-principle winding
// counts drive recursive subdivision. Residues of f'/f are then computed by
// a 64-point trapezoid contour of radius min(0.05, half the distance to the
// nearest other zero).
std::vector<ZeroReport> find_zeros(const std::function<Cplx(Cplx)>& f,
                                   const std::function<Cplx(Cplx)>& fprime, double re0, double re1,
                                   double im0, double im1, const ZeroSearchOptions& opts = {});

// Abscissa estimate for the Neumann series: bisection on real s of the
// partial-sum convergence test across symbolic orders {n_max-4, n_max-2,
// n_max} (increments decreasing = converging side).
double s0_estimate(const OrbitDatabase& db);

struct CountingFit {
  double a_hat = 0.0;          // rate in N(x) ~ e^{ax}/(ax)
  double a1 = 0.0;             // exponential bound rate for all rays incl. iterates
  double max_abs_residual = 0.0;
  std::vector<std::pair<double, double>> curve;  // (x, N(x)) on the grid
};

// Counting function of primitive oriented ray lengths with the one-parameter
// least-squares fit log N ~ a x - log(a x). Empty x_grid uses the sorted
// distinct tau_sharp values. Requires at least 20 records.
CountingFit counting_fit(const OrbitDatabase& db, const std::vector<double>& x_grid = {});

}  // namespace billiard
