#pragma once

// Shared fixtures and independent oracles for the test suite. Everything in
// here is deliberately written against first principles (quadratic formulas,
// brute-force enumeration, finite differences) rather than through the
// library code paths it is meant to check.

#include "billiard/database.hpp"
#include "billiard/io.hpp"
#include "billiard/orbit.hpp"
#include "billiard/probe.hpp"
#include "billiard/stability.hpp"
#include "billiard/zeta.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>

namespace testutil {

// ----------------------------------------------------------------- scenes

// Equilateral triangle of unit disks with side 6 (pairwise gap 4). Kept as
// the exact bytes of scenes/three_disks.json so hashes match the shipped file.
inline const char* kThreeDiskJson =
    "{\n"
    "  \"dim\": 2,\n"
    "  \"obstacles\": [\n"
    "    { \"center\": [0.0, 0.0], \"radius\": 1.0 },\n"
    "    { \"center\": [6.0, 0.0], \"radius\": 1.0 },\n"
    "    { \"center\": [3.0, 5.196152422706632], \"radius\": 1.0 }\n"
    "  ]\n"
    "}\n";

// Isosceles variant: gap(1,2) = 4 but the other two gaps differ, so the
// 2-cycle of length 8 is the unique ray near tau = 8.
inline const char* kIsolationJson =
    "{\n"
    "  \"dim\": 2,\n"
    "  \"obstacles\": [\n"
    "    { \"center\": [0.0, 0.0], \"radius\": 1.0 },\n"
    "    { \"center\": [6.0, 0.0], \"radius\": 1.0 },\n"
    "    { \"center\": [3.0, 6.0], \"radius\": 1.0 }\n"
    "  ]\n"
    "}\n";

inline billiard::SceneFile three_disk_file() {
  return billiard::scene_from_string(kThreeDiskJson, "three_disks.json");
}

inline billiard::Scene three_disk_scene() { return three_disk_file().scene; }

inline billiard::SceneFile isolation_file() {
  return billiard::scene_from_string(kIsolationJson, "isolation.json");
}

inline billiard::Obstacle disk(double x, double y, double rad) {
  billiard::Obstacle o;
  o.center = billiard::Vec(2);
  o.center << x, y;
  o.radius = rad;
  return o;
}

inline billiard::Obstacle ball(double x, double y, double z, double rad) {
  billiard::Obstacle o;
  o.center = billiard::Vec(3);
  o.center << x, y, z;
  o.radius = rad;
  return o;
}

// Three unit spheres in the z = 0 plane, same layout as the planar scene.
inline billiard::Scene three_sphere_scene() {
  return billiard::make_scene(
      3, {ball(0, 0, 0, 1), ball(6, 0, 0, 1), ball(3, 3.0 * std::sqrt(3.0), 0, 1)});
}

// Regular tetrahedron of unit spheres, edge 6.
inline billiard::Scene four_sphere_scene() {
  return billiard::make_scene(3, {ball(0, 0, 0, 1), ball(6, 0, 0, 1),
                                  ball(3, 3.0 * std::sqrt(3.0), 0, 1),
                                  ball(3, std::sqrt(3.0), 2.0 * std::sqrt(6.0), 1)});
}

// Closed forms for the side-6 equilateral scene.
constexpr double kDet2Cycle = 96.0;          // |det(Id-P)| of the 2-cycles
inline double lambda_2cycle() { return 49.0 + 20.0 * std::sqrt(6.0); }  // expanding multiplier
inline double tau_3cycle() { return 3.0 * (6.0 - std::sqrt(3.0)); }
inline double m0_2cycle() { return 1.0 + std::sqrt(1.5); }  // unstable curvature fixed point

// ------------------------------------------------- symbolic brute force

inline void gen_sequences_rec(int r, int n, billiard::Word& cur,
                              std::vector<billiard::Word>& out) {
  if (static_cast<int>(cur.size()) == n) {
    if (cur.back() != cur.front()) out.push_back(cur);
    return;
  }
  for (int s = 1; s <= r; ++s) {
    if (!cur.empty() && cur.back() == s) continue;
    cur.push_back(s);
    gen_sequences_rec(r, n, cur, out);
    cur.pop_back();
  }
}

// Every cyclically admissible sequence of length n over {1..r}.
inline std::vector<billiard::Word> all_admissible(int r, int n) {
  std::vector<billiard::Word> out;
  billiard::Word cur;
  gen_sequences_rec(r, n, cur, out);
  return out;
}

inline billiard::Word min_rotation_brute(const billiard::Word& w) {
  billiard::Word best = w;
  int n = static_cast<int>(w.size());
  for (int k = 1; k < n; ++k) {
    billiard::Word rot(w.begin() + k, w.end());
    rot.insert(rot.end(), w.begin(), w.begin() + k);
    if (rot < best) best = rot;
  }
  return best;
}

inline bool primitive_brute(const billiard::Word& w) {
  int n = static_cast<int>(w.size());
  for (int p = 1; p < n; ++p) {
    if (n % p != 0) continue;
    bool tiles = true;
    for (int i = 0; i < n && tiles; ++i) tiles = w[i] == w[i % p];
    if (tiles) return false;
  }
  return true;
}

// Distinct primitive cyclic classes of length exactly n (as canonical words).
inline std::set<billiard::Word> primitive_classes_brute(int r, int n) {
  std::set<billiard::Word> out;
  for (const billiard::Word& w : all_admissible(r, n))
    if (primitive_brute(w)) out.insert(min_rotation_brute(w));
  return out;
}

// ----------------------------------------------- planar determinant oracle

// |det(Id - P)| from the scalar transfer-matrix chain: per bounce
// T_i = [[1, l_i], [p_i, 1 + l_i p_i]] with p_i = 2/(a_i cos t_i), and the
// mirror contributing an overall (-1)^m in the plane. det T_i = 1, so
// |det(Id -+ T)| = |2 -+ tr T|.
inline double det_oracle_2d(const billiard::Scene& s, const billiard::PeriodicOrbit& orb) {
  Eigen::Matrix2d T = Eigen::Matrix2d::Identity();
  for (int i = 0; i < orb.m; ++i) {
    double a = s.obstacles[orb.cls.canonical[i] - 1].radius;
    double ct = std::abs(orb.incidences[i]);
    double psi = 2.0 / (a * ct);
    double lam = orb.lambdas[i];
    Eigen::Matrix2d Ti;
    Ti << 1.0, lam, psi, 1.0 + lam * psi;
    T = Ti * T;
  }
  double sgn = (orb.m % 2 == 0) ? 1.0 : -1.0;
  return std::abs(2.0 - sgn * T.trace());
}

// ------------------------------------------ finite-difference map oracle

// Smallest positive flight time to the sphere, plain quadratic formula.
inline double sphere_hit_oracle(const billiard::Obstacle& ob, const billiard::Vec& x,
                                const billiard::Vec& v) {
  billiard::Vec rel = x - ob.center;
  double b = rel.dot(v);
  double c = rel.squaredNorm() - ob.radius * ob.radius;
  double disc = b * b - c;
  if (disc < 0.0) return std::numeric_limits<double>::quiet_NaN();
  double sq = std::sqrt(disc);
  double t1 = -b - sq;
  if (t1 > 1e-9) return t1;
  return -b + sq;
}

// Central-difference Jacobian of the composed billiard map on the transverse
// section at the last bounce: positions offset in an orthonormal basis of the
// direction's orthogonal complement, directions charted on the affine plane
// <w, w0> = 1. Fully independent of the stability module.
inline Eigen::MatrixXd fd_poincare(const billiard::Scene& s, const billiard::PeriodicOrbit& orb) {
  int d = s.dim, k = d - 1, m = orb.m;
  billiard::Vec q = orb.points[m - 1];
  billiard::Vec w0 = orb.directions[m - 1];
  Eigen::MatrixXd E(d, k);
  {
    int filled = 0;
    for (int a = 0; a < d && filled < k; ++a) {
      billiard::Vec e = billiard::Vec::Zero(d);
      e[a] = 1.0;
      billiard::Vec v = e - w0 * w0.dot(e);
      for (int c = 0; c < filled; ++c) v -= E.col(c) * E.col(c).dot(v);
      if (v.norm() > 1e-6) {
        E.col(filled) = v.normalized();
        ++filled;
      }
    }
  }
  auto flow = [&](const Eigen::VectorXd& z) -> Eigen::VectorXd {
    billiard::Vec x = q + E * z.head(k);
    billiard::Vec w = w0 + E * z.tail(k);
    w.normalize();
    for (int i = 0; i < m; ++i) {
      const billiard::Obstacle& ob = s.obstacles[orb.cls.canonical[i] - 1];
      double t = sphere_hit_oracle(ob, x, w);
      x = x + t * w;
      billiard::Vec nrm = (x - ob.center).normalized();
      w = w - 2.0 * w.dot(nrm) * nrm;
    }
    Eigen::VectorXd out(2 * k);
    out.head(k) = E.transpose() * (x - q);
    out.tail(k) = E.transpose() * (w / w.dot(w0) - w0);
    return out;
  };
  // Step choice: expanding multipliers up to ~2e5 at word length 5 amplify
  // the offset, so the quadratic truncation term at step 1e-6 is ~1e-2
  // relative on those eigenvalues (and at 1e-5 the offset ray misses disks
  // outright).  Step 1e-8 measures ~1e-6 relative with the roundoff floor
  // still two decades lower.
  double h = 1e-8;
  Eigen::MatrixXd J(2 * k, 2 * k);
  for (int c = 0; c < 2 * k; ++c) {
    Eigen::VectorXd zp = Eigen::VectorXd::Zero(2 * k);
    Eigen::VectorXd zm = zp;
    zp[c] = h;
    zm[c] = -h;
    J.col(c) = (flow(zp) - flow(zm)) / (2.0 * h);
  }
  return J;
}

// Expanding half of a symplectic spectrum.  Finite-difference Jacobians of a
// strongly hyperbolic return map carry O(eps * |J|) absolute noise, which
// swamps the contracting eigenvalues entirely; only the expanding ones are
// comparable against an independent computation.
inline std::vector<billiard::Cplx> expanding_part(const std::vector<billiard::Cplx>& eigs) {
  std::vector<billiard::Cplx> out;
  for (const billiard::Cplx& z : eigs)
    if (std::abs(z) > 1.0) out.push_back(z);
  return out;
}

// The k largest-modulus members of a spectrum.
inline std::vector<billiard::Cplx> top_by_modulus(std::vector<billiard::Cplx> eigs,
                                                  std::size_t k) {
  std::sort(eigs.begin(), eigs.end(), [](const billiard::Cplx& a, const billiard::Cplx& b) {
    return std::abs(a) > std::abs(b);
  });
  if (eigs.size() > k) eigs.resize(k);
  return eigs;
}

// Worst relative mismatch between two eigenvalue multisets, greedy pairing.
inline double eigen_multiset_distance(std::vector<billiard::Cplx> a,
                                      std::vector<billiard::Cplx> b) {
  double worst = 0.0;
  for (const billiard::Cplx& x : a) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_j = 0;
    for (std::size_t j = 0; j < b.size(); ++j) {
      double dv = std::abs(x - b[j]) / std::max(1e-300, std::abs(x));
      if (dv < best) {
        best = dv;
        best_j = j;
      }
    }
    if (b.empty()) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, best);
    b.erase(b.begin() + best_j);
  }
  return worst;
}

// ------------------------------------------------------------ quadrature

// Fixed-grid composite Simpson rule (n even).
template <typename F>
double simpson_n(const F& f, double a, double b, int n) {
  double h = (b - a) / n;
  double acc = f(a) + f(b);
  for (int i = 1; i < n; ++i) acc += f(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

// ------------------------------------------------------------ subprocess

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

inline std::string slurp_or_empty(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline std::string make_temp_dir() {
  char tmpl[] = "/tmp/billiard_test_XXXXXX";
  char* got = mkdtemp(tmpl);
  if (!got) throw std::runtime_error("mkdtemp failed");
  return std::string(got);
}

// Runs a shell command, capturing both streams and the exit code.
inline RunResult run_cmd(const std::string& cmd) {
  std::string dir = make_temp_dir();
  std::string out_path = dir + "/out", err_path = dir + "/err";
  std::string full = cmd + " >" + out_path + " 2>" + err_path;
  int status = std::system(full.c_str());
  RunResult r;
  if (status == -1)
    r.code = -1;
  else if (WIFEXITED(status))
    r.code = WEXITSTATUS(status);
  else
    r.code = 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0);
  r.out = slurp_or_empty(out_path);
  r.err = slurp_or_empty(err_path);
  std::remove(out_path.c_str());
  std::remove(err_path.c_str());
  rmdir(dir.c_str());
  return r;
}

}  // namespace testutil
