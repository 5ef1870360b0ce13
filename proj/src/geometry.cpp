#include "billiard/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace billiard {

double Obstacle::value(const Vec& x) const { return (x - center).norm() - radius; }

Vec Obstacle::gradient(const Vec& x) const {
  Vec d = x - center;
  double n = d.norm();
  if (n < 1e-300) raise(fault::domain, "gradient requested at the obstacle center");
  return d / n;
}

Mat Obstacle::hessian(const Vec& x) const {
  Vec d = x - center;
  double n = d.norm();
  if (n < 1e-300) raise(fault::domain, "hessian requested at the obstacle center");
  Vec u = d / n;
  Mat h = (Mat::Identity(dim(), dim()) - u * u.transpose()) / n;
  return h;
}

bool Obstacle::on_boundary(const Vec& x, double tol) const {
  return std::abs(value(x)) <= tol;
}

double obstacle_gap(const Obstacle& a, const Obstacle& b) {
  return (a.center - b.center).norm() - a.radius - b.radius;
}

Scene make_scene(int dim, std::vector<Obstacle> obstacles) {
  if (dim != 2 && dim != 3)
    raise(fault::unsupported, "only dimensions 2 and 3 are supported, got " + std::to_string(dim));
  if (obstacles.empty()) raise(fault::arity, "scene has no obstacles");
  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    const Obstacle& o = obstacles[i];
    if (o.center.size() != dim)
      raise(fault::parameter, "obstacle " + std::to_string(i + 1) + " center has dimension " +
                                  std::to_string(o.center.size()) + ", scene is " +
                                  std::to_string(dim) + "-dimensional");
    if (!(o.radius > 0.0) || !std::isfinite(o.radius))
      raise(fault::parameter, "obstacle " + std::to_string(i + 1) + " has non-positive radius");
    for (int c = 0; c < dim; ++c)
      if (!std::isfinite(o.center[c]))
        raise(fault::parameter, "obstacle " + std::to_string(i + 1) + " has non-finite center");
  }
  Scene s;
  s.dim = dim;
  s.obstacles = std::move(obstacles);
  double d0 = std::numeric_limits<double>::infinity();
  double d1 = 0.0;
  for (std::size_t i = 0; i < s.obstacles.size(); ++i)
    for (std::size_t j = i + 1; j < s.obstacles.size(); ++j) {
      double g = obstacle_gap(s.obstacles[i], s.obstacles[j]);
      if (g <= 0.0)
        raise(fault::overlap, "obstacles " + std::to_string(i + 1) + " and " +
                                  std::to_string(j + 1) + " are not disjoint (gap " +
                                  fmt17(g) + ")");
      d0 = std::min(d0, g);
      d1 = std::max(d1, g);
    }
  if (s.obstacles.size() < 2) d0 = d1 = 0.0;
  s.d0 = d0;
  s.d1 = d1;
  return s;
}

Vec normal(const Obstacle& o, const Vec& x) {
  if (!o.on_boundary(x))
    raise(fault::boundary, "normal requested off the boundary (residual " +
                               fmt17(o.value(x)) + ")");
  return -o.gradient(x);  // inward
}

Mat gauss_map(const Obstacle& o, const Vec& x, const Mat& frame) {
  int d = o.dim();
  if (!o.on_boundary(x))
    raise(fault::boundary, "gauss_map requested off the boundary (residual " +
                               fmt17(o.value(x)) + ")");
  if (frame.rows() != d || frame.cols() != d - 1)
    raise(fault::frame, "tangent frame must be " + std::to_string(d) + "x" +
                            std::to_string(d - 1));
  Vec n = normal(o, x);
  Mat gram = frame.transpose() * frame;
  if ((gram - Mat::Identity(d - 1, d - 1)).cwiseAbs().maxCoeff() > 1e-10)
    raise(fault::frame, "tangent frame columns are not orthonormal");
  if ((frame.transpose() * n).cwiseAbs().maxCoeff() > 1e-10)
    raise(fault::frame, "tangent frame is not orthogonal to the normal");
  // For a ball the shape operator is (1/radius) * Id in any tangent frame.
  return Mat::Identity(d - 1, d - 1) / o.radius;
}

Vec reflect(const Vec& v, const Vec& n) { return v - 2.0 * v.dot(n) * n; }

namespace {

// Smallest positive root of |x + t v - c|^2 = a^2 along a unit direction,
// written in the cancellation-free form t = q / (b + sqrt(disc)) for the
// near root. Returns nullopt when the line misses or only touches behind.
std::optional<double> sphere_entry_time(const Vec& x, const Vec& v, const Vec& c, double a) {
  Vec m = x - c;
  double b = m.dot(v);                 // t^2 + 2 b t + q = 0
  double q = m.squaredNorm() - a * a;
  double disc = b * b - q;
  if (disc < 0.0) return std::nullopt;
  double sq = std::sqrt(disc);
  // Roots t = -b -+ sq; each root also equals q divided by the other, which
  // is the cancellation-free form when -b and sq nearly coincide.
  double t_near, t_far;
  if (b <= 0.0) {
    t_far = sq - b;
    t_near = q / t_far;
  } else {
    t_near = -b - sq;
    t_far = q / t_near;
  }
  if (t_near > 0.0) return t_near;
  if (t_far > 0.0) return t_far;
  return std::nullopt;
}

}  // namespace

std::optional<Hit> ray_intersect(const Scene& s, const Vec& x, const Vec& v) {
  if (x.size() != s.dim || v.size() != s.dim)
    raise(fault::parameter, "ray point/direction dimension mismatch");
  double vn = v.norm();
  if (std::abs(vn - 1.0) > 1e-9)
    raise(fault::parameter, "ray direction must be a unit vector (norm " + fmt17(vn) + ")");
  for (std::size_t i = 0; i < s.obstacles.size(); ++i)
    if (s.obstacles[i].value(x) < -kBoundaryTol)
      raise(fault::inside, "ray origin lies strictly inside obstacle " + std::to_string(i + 1));

  int best = -1;
  double best_t = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < s.obstacles.size(); ++i) {
    auto t = sphere_entry_time(x, v, s.obstacles[i].center, s.obstacles[i].radius);
    // Ignore re-hits of the surface we are standing on: entry times below the
    // boundary tolerance are the launch point itself, not a crossing.
    if (t && *t > kBoundaryTol && *t < best_t) {
      best_t = *t;
      best = static_cast<int>(i);
    }
  }
  if (best < 0) return std::nullopt;
  Hit h;
  h.obstacle = best;
  h.tau = best_t;
  h.point = x + best_t * v;
  // Snap exactly onto the sphere so chained bounces do not accumulate drift.
  const Obstacle& o = s.obstacles[best];
  Vec rad = h.point - o.center;
  h.point = o.center + rad * (o.radius / rad.norm());
  return h;
}

BounceResult billiard_map(const Scene& s, int from, const Vec& x, const Vec& v) {
  if (from < 0 || from >= s.r())
    raise(fault::parameter, "billiard_map: obstacle index out of range");
  const Obstacle& src = s.obstacles[from];
  if (!src.on_boundary(x))
    raise(fault::boundary, "billiard_map: start point is not on obstacle " +
                               std::to_string(from + 1));
  Vec n_src = normal(src, x);
  // Outgoing directions move away from the source body: <v, inward normal> <= 0.
  if (v.dot(n_src) > 1e-12)
    raise(fault::domain, "billiard_map: direction points into the source obstacle");

  auto hit = ray_intersect(s, x, v);
  if (!hit) raise(fault::escape, "billiard_map: trajectory escapes the obstacle system");

  const Obstacle& dst = s.obstacles[hit->obstacle];
  Vec n = normal(dst, hit->point);
  double inc = std::abs(v.dot(n));
  BounceResult r;
  r.obstacle = hit->obstacle;
  r.point = hit->point;
  r.direction = reflect(v, n).normalized();
  r.lambda = hit->tau;
  r.incidence = inc;
  r.grazing = inc < kGrazingTol;
  return r;
}

double hull_distance(const Vec& p, const Vec& c0, double r0, const Vec& c1, double r1,
                     Vec* closest) {
  // g(t) = |p - c(t)| - r(t) with c(t) = (1-t)c0 + t c1, r(t) = (1-t)r0 + t r1
  // is convex on [0,1]; minimize by ternary search.
  auto g = [&](double t) {
    Vec c = (1.0 - t) * c0 + t * c1;
    return (p - c).norm() - ((1.0 - t) * r0 + t * r1);
  };
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    double m1 = lo + (hi - lo) / 3.0;
    double m2 = hi - (hi - lo) / 3.0;
    if (g(m1) <= g(m2))
      hi = m2;
    else
      lo = m1;
  }
  double t = 0.5 * (lo + hi);
  double vals[3] = {g(0.0), g(t), g(1.0)};
  double ts[3] = {0.0, t, 1.0};
  int arg = 0;
  for (int i = 1; i < 3; ++i)
    if (vals[i] < vals[arg]) arg = i;
  if (closest) {
    double tb = ts[arg];
    Vec c = (1.0 - tb) * c0 + tb * c1;
    double rr = (1.0 - tb) * r0 + tb * r1;
    Vec d = p - c;
    double nd = d.norm();
    // Nearest point of the hull: project onto the interpolated ball surface
    // when outside, p itself when inside.
    *closest = (nd > rr && nd > 0.0) ? Vec(c + d * (rr / nd)) : p;
  }
  return vals[arg];
}

ValidationReport check_noneclipse(const Scene& s) {
  if (s.r() < 3)
    raise(fault::arity, "non-eclipse scenes need at least 3 obstacles, got " +
                            std::to_string(s.r()));
  // Disjointness is checked before visibility so overlap faults win.
  for (int i = 0; i < s.r(); ++i)
    for (int j = i + 1; j < s.r(); ++j)
      if (obstacle_gap(s.obstacles[i], s.obstacles[j]) <= 0.0)
        raise(fault::overlap, "obstacles " + std::to_string(i + 1) + " and " +
                                  std::to_string(j + 1) + " are not disjoint");

  ValidationReport rep;
  rep.d0 = s.d0;
  rep.d1 = s.d1;
  rep.pass = true;
  rep.min_clearance = std::numeric_limits<double>::infinity();
  for (int i = 0; i < s.r() && rep.pass; ++i)
    for (int j = i + 1; j < s.r() && rep.pass; ++j)
      for (int k = 0; k < s.r(); ++k) {
        if (k == i || k == j) continue;
        const Obstacle& oi = s.obstacles[i];
        const Obstacle& oj = s.obstacles[j];
        const Obstacle& ok = s.obstacles[k];
        Vec closest;
        double dist =
            hull_distance(ok.center, oi.center, oi.radius, oj.center, oj.radius, &closest);
        double clearance = dist - ok.radius;
        rep.min_clearance = std::min(rep.min_clearance, clearance);
        if (clearance <= 0.0) {
          rep.pass = false;
          NonEclipseWitness w;
          w.i = i + 1;
          w.j = j + 1;
          w.k = k + 1;
          w.point = closest;
          rep.witness = w;
          break;
        }
      }
  return rep;
}

}  // namespace billiard
