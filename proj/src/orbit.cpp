#include "billiard/orbit.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace billiard {

namespace {

// Boundary charts for ball obstacles: angle in d=2, spherical (theta, phi)
// in d=3. Chart parameters are row-stacked per bounce.

int chart_dim(int d) { return d - 1; }

Vec chart_unit(int d, const double* a) {
  Vec u(d);
  if (d == 2) {
    u << std::cos(a[0]), std::sin(a[0]);
  } else {
    double st = std::sin(a[0]), ct = std::cos(a[0]);
    u << st * std::cos(a[1]), st * std::sin(a[1]), ct;
  }
  return u;
}

// d x (d-1) Jacobian of the chart point q = c + radius*u(a).
Mat chart_jacobian(const Obstacle& o, const double* a) {
  int d = o.dim();
  Mat j(d, d - 1);
  if (d == 2) {
    j << -std::sin(a[0]), std::cos(a[0]);
  } else {
    double st = std::sin(a[0]), ct = std::cos(a[0]);
    double cp = std::cos(a[1]), sp = std::sin(a[1]);
    j.col(0) << ct * cp, ct * sp, -st;
    j.col(1) << -st * sp, st * cp, 0.0;
  }
  return o.radius * j;
}

// Chart curvature contribution to the Hessian: T_ab = <g, d^2 q / da_a da_b>.
Mat chart_curvature_term(const Obstacle& o, const double* a, const Vec& g) {
  int d = o.dim();
  Mat t = Mat::Zero(d - 1, d - 1);
  if (d == 2) {
    Vec u = chart_unit(d, a);
    t(0, 0) = -o.radius * g.dot(u);
  } else {
    double st = std::sin(a[0]), ct = std::cos(a[0]);
    double cp = std::cos(a[1]), sp = std::sin(a[1]);
    Vec u = chart_unit(d, a);
    Vec u_tt = -u;
    Vec u_tp(3), u_pp(3);
    u_tp << -ct * sp, ct * cp, 0.0;
    u_pp << -st * cp, -st * sp, 0.0;
    t(0, 0) = o.radius * g.dot(u_tt);
    t(0, 1) = t(1, 0) = o.radius * g.dot(u_tp);
    t(1, 1) = o.radius * g.dot(u_pp);
  }
  return t;
}

std::vector<double> chart_from_point(const Obstacle& o, const Vec& q) {
  Vec u = (q - o.center) / o.radius;
  if (o.dim() == 2) return {std::atan2(u[1], u[0])};
  double uz = std::clamp(u[2], -1.0, 1.0);
  return {std::acos(uz), std::atan2(u[1], u[0])};
}

struct Chain {
  const Scene* scene = nullptr;
  std::vector<int> obstacle;  // 0-based obstacle index per bounce
  int m = 0;
  int cd = 0;  // chart dims per bounce

  const Obstacle& obs(int i) const { return scene->obstacles[obstacle[i]]; }

  Vec point(const std::vector<double>& a, int i) const {
    const Obstacle& o = obs(i);
    return o.center + o.radius * chart_unit(scene->dim, a.data() + i * cd);
  }

  std::vector<Vec> points(const std::vector<double>& a) const {
    std::vector<Vec> q(m);
    for (int i = 0; i < m; ++i) q[i] = point(a, i);
    return q;
  }

  double length(const std::vector<double>& a) const {
    auto q = points(a);
    double L = 0.0;
    for (int i = 0; i < m; ++i) L += (q[(i + 1) % m] - q[i]).norm();
    return L;
  }

  // Max reflection-law defect plus boundary defect. Boundary defect is zero
  // by construction of the chart; kept for orbits built from raw points.
  double residual_at(const std::vector<Vec>& q) const {
    double worst = 0.0;
    for (int i = 0; i < m; ++i) {
      const Vec& prev = q[(i - 1 + m) % m];
      const Vec& next = q[(i + 1) % m];
      Vec w_in = (q[i] - prev).normalized();
      Vec w_out = (next - q[i]).normalized();
      Vec n = -obs(i).gradient(q[i]);
      worst = std::max(worst, (reflect(w_in, n) - w_out).norm());
    }
    double bdry = 0.0;
    for (int i = 0; i < m; ++i) bdry = std::max(bdry, std::abs(obs(i).value(q[i])));
    return worst + bdry;
  }

  double residual(const std::vector<double>& a) const { return residual_at(points(a)); }
};

// Gradient and Hessian of the cyclic length functional in chart parameters.
void length_derivatives(const Chain& ch, const std::vector<double>& a, Eigen::VectorXd* grad,
                        Eigen::MatrixXd* hess) {
  int m = ch.m, cd = ch.cd;
  auto q = ch.points(a);
  std::vector<Vec> e(m);      // unit vector of segment i: q_i -> q_{i+1}
  std::vector<double> len(m);
  for (int i = 0; i < m; ++i) {
    Vec d = q[(i + 1) % m] - q[i];
    len[i] = d.norm();
    e[i] = d / len[i];
  }
  std::vector<Mat> jac(m);
  for (int i = 0; i < m; ++i) jac[i] = chart_jacobian(ch.obs(i), a.data() + i * cd);

  if (grad) {
    grad->setZero(m * cd);
    for (int i = 0; i < m; ++i) {
      Vec g_pt = e[(i - 1 + m) % m] - e[i];  // dL/dq_i
      grad->segment(i * cd, cd) = jac[i].transpose() * g_pt;
    }
  }
  if (hess) {
    hess->setZero(m * cd, m * cd);
    for (int i = 0; i < m; ++i) {
      int j = (i + 1) % m;
      Mat A = (Mat::Identity(ch.scene->dim, ch.scene->dim) - e[i] * e[i].transpose()) / len[i];
      hess->block(i * cd, i * cd, cd, cd) += jac[i].transpose() * A * jac[i];
      hess->block(j * cd, j * cd, cd, cd) += jac[j].transpose() * A * jac[j];
      Mat cross = -jac[i].transpose() * A * jac[j];
      hess->block(i * cd, j * cd, cd, cd) += cross;
      hess->block(j * cd, i * cd, cd, cd) += cross.transpose();
    }
    for (int i = 0; i < m; ++i) {
      Vec g_pt = e[(i - 1 + m) % m] - e[i];
      hess->block(i * cd, i * cd, cd, cd) +=
          chart_curvature_term(ch.obs(i), a.data() + i * cd, g_pt);
    }
  }
}

// One pass of cyclic coordinate descent: per bounce, a damped Newton step on
// the two adjacent segment lengths (a strictly convex (d-1)-dimensional
// subproblem under non-eclipse).
void descent_sweep(const Chain& ch, std::vector<double>& a) {
  int m = ch.m, cd = ch.cd;
  for (int i = 0; i < m; ++i) {
    auto local_obj = [&](const std::vector<double>& params) {
      Vec qi = ch.point(params, i);
      Vec prev = ch.point(params, (i - 1 + m) % m);
      Vec next = ch.point(params, (i + 1) % m);
      return (qi - prev).norm() + (next - qi).norm();
    };
    for (int inner = 0; inner < 3; ++inner) {
      Vec qi = ch.point(a, i);
      Vec prev = ch.point(a, (i - 1 + m) % m);
      Vec next = ch.point(a, (i + 1) % m);
      Vec d_in = qi - prev;
      Vec d_out = next - qi;
      double l_in = d_in.norm(), l_out = d_out.norm();
      Vec e_in = d_in / l_in, e_out = d_out / l_out;
      Mat jac = chart_jacobian(ch.obs(i), a.data() + i * cd);
      Vec g_pt = e_in - e_out;
      Eigen::VectorXd g = jac.transpose() * g_pt;
      if (g.norm() < 1e-15) break;
      Mat A_in = (Mat::Identity(ch.scene->dim, ch.scene->dim) - e_in * e_in.transpose()) / l_in;
      Mat A_out =
          (Mat::Identity(ch.scene->dim, ch.scene->dim) - e_out * e_out.transpose()) / l_out;
      Mat h = jac.transpose() * (A_in + A_out) * jac +
              chart_curvature_term(ch.obs(i), a.data() + i * cd, g_pt);
      Eigen::VectorXd step;
      Eigen::LDLT<Mat> ldlt(h);
      if (ldlt.info() == Eigen::Success && ldlt.isPositive())
        step = -ldlt.solve(g);
      else
        step = -g;  // gradient fallback away from the convex basin
      double f0 = local_obj(a);
      double scale = 1.0;
      for (int bt = 0; bt < 12; ++bt, scale *= 0.5) {
        std::vector<double> trial = a;
        for (int k = 0; k < cd; ++k) trial[i * cd + k] += scale * step[k];
        if (local_obj(trial) < f0) {
          a = std::move(trial);
          break;
        }
      }
    }
  }
}

PeriodicOrbit assemble(const Chain& ch, const CyclicClass& cls, const std::vector<double>& a,
                       double tau_sharp_override = -1.0) {
  PeriodicOrbit orb;
  orb.cls = cls;
  orb.m = ch.m;
  orb.points = ch.points(a);
  orb.directions.resize(ch.m);
  orb.lambdas.resize(ch.m);
  orb.incidences.resize(ch.m);
  double tau = 0.0;
  for (int i = 0; i < ch.m; ++i) {
    Vec d = orb.points[(i + 1) % ch.m] - orb.points[i];
    double l = d.norm();
    orb.directions[i] = d / l;
    tau += l;
  }
  for (int i = 0; i < ch.m; ++i)
    orb.lambdas[i] = (orb.points[i] - orb.points[(i - 1 + ch.m) % ch.m]).norm();
  for (int i = 0; i < ch.m; ++i) {
    Vec n = -ch.obs(i).gradient(orb.points[i]);
    orb.incidences[i] = orb.directions[i].dot(n);
  }
  orb.tau = tau;
  orb.tau_sharp = tau_sharp_override > 0.0 ? tau_sharp_override : tau;
  orb.residual = ch.residual_at(orb.points);
  const Scene& s = *ch.scene;
  for (int i = 0; i < ch.m; ++i)
    if (orb.lambdas[i] < s.d0 - 1e-9)
      raise(fault::internal, "flight " + std::to_string(i) + " shorter than the minimal gap");
  return orb;
}

std::vector<double> default_init(const Chain& ch) {
  // q_i starts at the boundary point of its obstacle nearest the centroid of
  // the neighboring obstacles' centers.
  int m = ch.m, cd = ch.cd;
  std::vector<double> a(m * cd);
  for (int i = 0; i < m; ++i) {
    const Obstacle& o = ch.obs(i);
    Vec centroid =
        0.5 * (ch.obs((i - 1 + m) % m).center + ch.obs((i + 1) % m).center);
    Vec dir = centroid - o.center;
    double nd = dir.norm();
    Vec u = nd > 1e-12 ? Vec(dir / nd) : Vec(Vec::Unit(ch.scene->dim, 0));
    Vec q = o.center + o.radius * u;
    auto p = chart_from_point(o, q);
    for (int k = 0; k < cd; ++k) a[i * cd + k] = p[k];
  }
  return a;
}

// Full Newton on the stacked parameter vector. Returns the achieved residual.
double newton_phase(const Chain& ch, std::vector<double>& a, double tol, int max_iter) {
  double res = ch.residual(a);
  for (int it = 0; it < max_iter && res > tol; ++it) {
    Eigen::VectorXd g;
    Eigen::MatrixXd h;
    length_derivatives(ch, a, &g, &h);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(h);
    if (!lu.isInvertible())
      raise(fault::degeneracy, "singular Hessian in Newton refinement (residual " +
                                   fmt17(res) + ")");
    Eigen::VectorXd step = lu.solve(-g);
    double f0 = ch.length(a);
    double scale = 1.0;
    std::vector<double> best = a;
    bool moved = false;
    for (int bt = 0; bt < 10; ++bt, scale *= 0.5) {
      std::vector<double> trial = a;
      for (int k = 0; k < static_cast<int>(a.size()); ++k) trial[k] += scale * step[k];
      // Accept on residual decrease near the solution, or on length decrease
      // while still approaching the basin.
      if (ch.residual(trial) < res || ch.length(trial) < f0) {
        a = std::move(trial);
        moved = true;
        break;
      }
    }
    if (!moved) break;
    res = ch.residual(a);
  }
  return res;
}

Chain make_chain(const Scene& s, const Word& word) {
  Chain ch;
  ch.scene = &s;
  ch.m = static_cast<int>(word.size());
  ch.cd = chart_dim(s.dim);
  ch.obstacle.resize(ch.m);
  for (int i = 0; i < ch.m; ++i) {
    if (word[i] < 1 || word[i] > s.r())
      raise(fault::alphabet, "word symbol " + std::to_string(word[i]) +
                                 " exceeds obstacle count " + std::to_string(s.r()));
    ch.obstacle[i] = word[i] - 1;
  }
  return ch;
}

}  // namespace

PeriodicOrbit find_orbit(const Scene& s, const CyclicClass& cls, const OrbitOptions& opts) {
  if (!cls.primitive) {
    // Solve the primitive root, then tile; the period is exactly mu * tau_sharp.
    CyclicClass root_cls;
    root_cls.canonical = cls.root;
    root_cls.root = cls.root;
    root_cls.mu = 1;
    root_cls.primitive = true;
    root_cls.orientation = cls.orientation;
    PeriodicOrbit root = find_orbit(s, root_cls, opts);
    PeriodicOrbit orb;
    orb.cls = cls;
    orb.m = cls.n();
    int p = root.m;
    for (int rep = 0; rep < cls.mu; ++rep)
      for (int i = 0; i < p; ++i) {
        orb.points.push_back(root.points[i]);
        orb.directions.push_back(root.directions[i]);
        orb.lambdas.push_back(root.lambdas[i]);
        orb.incidences.push_back(root.incidences[i]);
      }
    orb.tau_sharp = root.tau;
    orb.tau = cls.mu * root.tau;
    orb.residual = root.residual;
    return orb;
  }

  Chain ch = make_chain(s, cls.canonical);
  std::vector<double> a;
  if (opts.init_params) {
    if (static_cast<int>(opts.init_params->size()) != ch.m * ch.cd)
      raise(fault::parameter, "init_params has wrong size");
    a = *opts.init_params;
  } else {
    a = default_init(ch);
  }

  double res = ch.residual(a);
  for (int sweep = 0; sweep < opts.max_sweeps && res > 1e-6; ++sweep) {
    descent_sweep(ch, a);
    res = ch.residual(a);
  }
  res = newton_phase(ch, a, opts.tol, opts.max_newton);
  if (res > opts.tol)
    raise(fault::convergence, "orbit for word " + word_to_string(cls.canonical) +
                                  " did not certify: residual " + fmt17(res) +
                                  " above tolerance " + fmt17(opts.tol));
  return assemble(ch, cls, a);
}

double orbit_residual(const Scene& s, const PeriodicOrbit& orbit) {
  if (orbit.cls.canonical.empty()) raise(fault::parameter, "orbit has no word");
  Chain ch = make_chain(s, orbit.cls.canonical);
  return ch.residual_at(orbit.points);
}

PeriodicOrbit refine_orbit(const Scene& s, const PeriodicOrbit& orbit, double tol) {
  if (!orbit.cls.primitive) {
    PeriodicOrbit root_orb = orbit;
    root_orb.cls = canonicalize(orbit.cls.root, s.r());
    root_orb.points.assign(orbit.points.begin(), orbit.points.begin() + root_orb.cls.n());
    root_orb.m = root_orb.cls.n();
    PeriodicOrbit refined_root = refine_orbit(s, root_orb, tol);
    CyclicClass cls = orbit.cls;
    OrbitOptions opts;
    // Rebuild the iterate from the refined root through the tiling path.
    std::vector<double> params;
    for (int i = 0; i < refined_root.m; ++i) {
      auto p = chart_from_point(s.obstacles[refined_root.cls.canonical[i] - 1],
                                refined_root.points[i]);
      params.insert(params.end(), p.begin(), p.end());
    }
    opts.init_params = params;
    opts.tol = tol;
    return find_orbit(s, cls, opts);
  }

  Chain ch = make_chain(s, orbit.cls.canonical);
  double res0 = ch.residual_at(orbit.points);
  if (res0 > 1e-2)
    raise(fault::convergence, "refine_orbit outside the Newton basin (residual " +
                                  fmt17(res0) + ")");
  std::vector<double> a;
  for (int i = 0; i < ch.m; ++i) {
    auto p = chart_from_point(ch.obs(i), orbit.points[i]);
    a.insert(a.end(), p.begin(), p.end());
  }
  double res = newton_phase(ch, a, tol, 25);
  if (res > tol)
    raise(fault::convergence, "refine_orbit stalled at residual " + fmt17(res));
  return assemble(ch, orbit.cls, a);
}

}  // namespace billiard
