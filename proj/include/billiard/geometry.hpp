#pragma once

#include "billiard/common.hpp"

#include <optional>
#include <vector>

namespace billiard {

// Absolute tolerance (scene units) for "point lies on the boundary".
constexpr double kBoundaryTol = 1e-10;
// |<v,n>| below this at a hit raises a warning flag. Non-eclipse scenes never
// produce grazing periodic rays; this only guards bad inputs.
constexpr double kGrazingTol = 1e-6;

/**
 * Strictly convex obstacle. v1 supports balls (disks for d=2, spheres for
 * d=3). The implicit-surface evaluators below are the extension seam for
 * other strictly convex bodies: downstream code consumes only value(),
 * gradient(), hessian() and the closed-form helpers that currently special
 * case balls.
 */
struct Obstacle {
  Vec center;
  double radius = 0.0;

  int dim() const { return static_cast<int>(center.size()); }
  // Signed boundary function, negative inside: |x - center| - radius.
  double value(const Vec& x) const;
  // Gradient of value(): outward unit radial field.
  Vec gradient(const Vec& x) const;
  // Hessian of value(): (I - u u^T)/|x - center|, u the radial unit vector.
  Mat hessian(const Vec& x) const;
  bool on_boundary(const Vec& x, double tol = kBoundaryTol) const;
};

struct Scene {
  int dim = 0;
  std::vector<Obstacle> obstacles;
  double d0 = 0.0;    // min pairwise boundary gap
  double d1 = 0.0;    // max pairwise boundary gap
  double kappa = 0.0; // empirical min |<w,n>| over computed reflections; 0 until observed

  int r() const { return static_cast<int>(obstacles.size()); }
};

// Validates dimensions, radii and pairwise disjointness, and fills d0/d1.
// Does not run the eclipse test; see check_noneclipse.
Scene make_scene(int dim, std::vector<Obstacle> obstacles);

// Inward unit normal at boundary point x of the obstacle.
Vec normal(const Obstacle& o, const Vec& x);

// Shape operator at x expressed in the given orthonormal tangent frame
// (d x (d-1), columns orthonormal and orthogonal to the normal). For a ball
// of radius a this is (1/a)*Id on the tangent space.
Mat gauss_map(const Obstacle& o, const Vec& x, const Mat& frame);

// Specular reflection v - 2<v,n>n. Total on unit vectors.
Vec reflect(const Vec& v, const Vec& n);

struct Hit {
  int obstacle = -1;  // 0-based index into scene.obstacles
  double tau = 0.0;   // travel time (= distance, unit speed)
  Vec point;
};

// First boundary hit along {x + t v, t > 0}, or nullopt if the ray escapes.
// Throws fault::inside if x lies strictly inside an obstacle.
std::optional<Hit> ray_intersect(const Scene& s, const Vec& x, const Vec& v);

struct BounceResult {
  int obstacle = -1;   // obstacle that was hit (0-based)
  Vec point;           // collision point y
  Vec direction;       // reflected unit direction
  double lambda = 0.0; // flight length |y - x|
  double incidence = 0.0; // |<v, n(y)>| at the hit
  bool grazing = false;   // incidence below kGrazingTol
};

// One step of the billiard ball map: fly from boundary point x of obstacle
// `from` with outgoing unit direction v to the next collision, then reflect.
// Throws fault::escape when the ray leaves the obstacle system.
BounceResult billiard_map(const Scene& s, int from, const Vec& x, const Vec& v);

struct NonEclipseWitness {
  int i = 0, j = 0, k = 0;  // 1-based obstacle indices: D_k meets hull(D_i u D_j)
  Vec point;                // point of the hull closest to center_k
};

struct ValidationReport {
  bool pass = false;
  double d0 = 0.0;
  double d1 = 0.0;
  double min_clearance = 0.0;  // min over triples of dist(c_k, hull) - radius_k
  std::optional<NonEclipseWitness> witness;
};

// Non-eclipse test: for every triple (i,j,k) with k distinct from i and j,
// the convex hull of D_i and D_j must stay clear of D_k. Throws
// fault::arity for r < 3 and fault::overlap if disjointness fails.
ValidationReport check_noneclipse(const Scene& s);

// Signed distance from p to conv(B(c0,r0) u B(c1,r1)), negative inside.
// The hull equals the union of interpolated balls B((1-t)c0 + t c1,
// (1-t)r0 + t r1), t in [0,1]: the support functions of both sides are
// max(h_B0, h_B1) since <c(t),u> + r(t) is affine in t. Hence
// dist(p, hull) = min_t |p - c(t)| - r(t), a convex 1-D problem.
double hull_distance(const Vec& p, const Vec& c0, double r0, const Vec& c1, double r1,
                     Vec* closest = nullptr);

double obstacle_gap(const Obstacle& a, const Obstacle& b);

}  // namespace billiard
