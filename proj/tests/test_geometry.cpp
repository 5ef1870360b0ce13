#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "common.hpp"

#include <random>

using namespace billiard;
using testutil::disk;

namespace {

Vec v2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

}  // namespace

TEST_CASE("obstacle evaluators match the implicit sphere") {
  Obstacle o = disk(0, 0, 1);
  CHECK(o.value(v2(2, 0)) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(o.value(v2(0.5, 0)) == doctest::Approx(-0.5).epsilon(1e-14));
  CHECK(o.on_boundary(v2(1, 0)));
  CHECK_FALSE(o.on_boundary(v2(1.1, 0)));

  Vec g = o.gradient(v2(2, 0));
  CHECK(g[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(g[1] == doctest::Approx(0.0).epsilon(1e-14));

  // Hessian against central differences of the gradient.
  Vec x = v2(1.3, -0.7);
  Mat H = o.hessian(x);
  double h = 1e-6;
  for (int a = 0; a < 2; ++a) {
    Vec dx = Vec::Zero(2);
    dx[a] = h;
    Vec col = (o.gradient(x + dx) - o.gradient(x - dx)) / (2 * h);
    for (int b = 0; b < 2; ++b) CHECK(H(b, a) == doctest::Approx(col[b]).epsilon(1e-8));
  }
}

TEST_CASE("make_scene fills gap constants and rejects bad input") {
  Scene s = testutil::three_disk_scene();
  CHECK(s.dim == 2);
  CHECK(s.r() == 3);
  CHECK(s.d0 == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(s.d1 == doctest::Approx(4.0).epsilon(1e-12));

  // Distinct gaps: d0/d1 are the extremes.
  Scene iso = testutil::isolation_file().scene;
  CHECK(iso.d0 == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(iso.d1 == doctest::Approx(std::sqrt(45.0) - 2.0).epsilon(1e-12));

  CHECK_THROWS_AS(make_scene(2, {disk(0, 0, 1), disk(1.5, 0, 1)}), error);  // overlap
  CHECK_THROWS_AS(make_scene(2, {disk(0, 0, -1), disk(6, 0, 1)}), error);  // bad radius
  CHECK_THROWS_AS(make_scene(2, {}), error);                               // empty
  CHECK_THROWS_AS(make_scene(4, {disk(0, 0, 1)}), error);                  // bad dim
  try {
    make_scene(2, {disk(0, 0, 1), disk(1.5, 0, 1)});
    CHECK(false);
  } catch (const error& e) {
    CHECK(e.kind() == fault::overlap);
  }
}

TEST_CASE("normals point into the obstacle and reflection is specular") {
  Obstacle o = disk(0, 0, 1);
  Vec n = normal(o, v2(1, 0));
  CHECK(n[0] == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(n[1] == doctest::Approx(0.0).epsilon(1e-14));

  Vec v = v2(1, -1).normalized();
  Vec r = reflect(v, v2(0, 1));
  CHECK(r[0] == doctest::Approx(v[0]).epsilon(1e-14));
  CHECK(r[1] == doctest::Approx(-v[1]).epsilon(1e-14));
  CHECK(r.norm() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("gauss map of a ball is curvature times identity on the tangent") {
  Obstacle o = disk(0, 0, 2);
  Vec x = v2(2, 0);
  Mat frame(2, 1);
  frame << 0, 1;
  Mat G = gauss_map(o, x, frame);
  CHECK(G.rows() == 1);
  CHECK(G(0, 0) == doctest::Approx(0.5).epsilon(1e-13));
}

TEST_CASE("ray casting agrees with the quadratic-formula oracle") {
  Scene s = testutil::three_disk_scene();
  std::mt19937_64 rng(20240817);
  std::uniform_real_distribution<double> pos(-4.0, 10.0);
  std::uniform_real_distribution<double> ang(-M_PI, M_PI);
  int hits = 0, escapes = 0;
  for (int trial = 0; trial < 600; ++trial) {
    Vec x = v2(pos(rng), pos(rng));
    bool inside = false;
    for (const Obstacle& o : s.obstacles) inside = inside || o.value(x) < 1e-9;
    if (inside) continue;
    double th = ang(rng);
    Vec v = v2(std::cos(th), std::sin(th));

    // Oracle: nearest positive root over all obstacles.
    int best_obs = -1;
    double best_t = std::numeric_limits<double>::infinity();
    for (int oi = 0; oi < s.r(); ++oi) {
      double t = testutil::sphere_hit_oracle(s.obstacles[oi], x, v);
      if (std::isfinite(t) && t > 1e-10 && t < best_t) {
        best_t = t;
        best_obs = oi;
      }
    }

    auto hit = ray_intersect(s, x, v);
    if (best_obs < 0) {
      CHECK_FALSE(hit.has_value());
      ++escapes;
    } else {
      REQUIRE(hit.has_value());
      CHECK(hit->obstacle == best_obs);
      CHECK(hit->tau == doctest::Approx(best_t).epsilon(1e-10));
      CHECK(s.obstacles[hit->obstacle].on_boundary(hit->point, 1e-9));
      ++hits;
    }
  }
  // The sample must exercise both branches.
  CHECK(hits > 50);
  CHECK(escapes > 50);
}

TEST_CASE("ray_intersect rejects interior launch points and ignores the launch surface") {
  Scene s = testutil::three_disk_scene();
  CHECK_THROWS_AS(ray_intersect(s, v2(0.2, 0), v2(1, 0)), error);

  // From a boundary point straight at the neighbor: the hit is the far disk.
  auto hit = ray_intersect(s, v2(1, 0), v2(1, 0));
  REQUIRE(hit.has_value());
  CHECK(hit->obstacle == 1);
  CHECK(hit->tau == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("billiard map performs one flight-and-reflect step") {
  Scene s = testutil::three_disk_scene();
  BounceResult b = billiard_map(s, 0, v2(1, 0), v2(1, 0));
  CHECK(b.obstacle == 1);
  CHECK(b.lambda == doctest::Approx(4.0).epsilon(1e-13));
  CHECK(b.point[0] == doctest::Approx(5.0).epsilon(1e-13));
  CHECK(b.point[1] == doctest::Approx(0.0).epsilon(1e-13));
  CHECK(b.direction[0] == doctest::Approx(-1.0).epsilon(1e-13));
  CHECK(b.incidence == doctest::Approx(1.0).epsilon(1e-13));
  CHECK_FALSE(b.grazing);

  // Direction pointing into the source obstacle is not a legal outgoing ray.
  CHECK_THROWS_AS(billiard_map(s, 0, v2(1, 0), v2(-1, 0)), error);

  // A ray that leaves the obstacle system.
  CHECK_THROWS_AS(billiard_map(s, 0, v2(-1, 0), v2(-1, 0)), error);
}

TEST_CASE("tangent hits are flagged as grazing") {
  Scene s = make_scene(2, {disk(0, 0, 1), disk(6, 0, 1)});
  // The line y = 1 from the top of disk 1 is exactly tangent to disk 2.
  BounceResult b = billiard_map(s, 0, v2(0, 1), v2(1, 0));
  CHECK(b.obstacle == 1);
  CHECK(b.grazing);
  CHECK(b.incidence < 1e-6);
}

TEST_CASE("hull distance matches a dense parameter scan") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-6.0, 12.0);
  Vec c0 = v2(0, 0), c1 = v2(6, 0);
  for (auto [r0, r1] : {std::pair{1.0, 1.0}, std::pair{1.0, 2.5}, std::pair{2.0, 0.5}}) {
    for (int trial = 0; trial < 60; ++trial) {
      Vec p = v2(u(rng), u(rng));
      double got = hull_distance(p, c0, r0, c1, r1);
      double best = std::numeric_limits<double>::infinity();
      int nsc = 20000;
      for (int i = 0; i <= nsc; ++i) {
        double t = static_cast<double>(i) / nsc;
        Vec c = (1 - t) * c0 + t * c1;
        double rad = (1 - t) * r0 + t * r1;
        best = std::min(best, (p - c).norm() - rad);
      }
      CHECK(got == doctest::Approx(best).epsilon(1e-5));
    }
  }

  // Hand values for equal radii.
  CHECK(hull_distance(v2(3, 2), c0, 1, c1, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(hull_distance(v2(3, 0), c0, 1, c1, 1) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(hull_distance(v2(7, 0), c0, 1, c1, 1) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("non-eclipse validation passes the triangle and pinpoints collinear blockers") {
  ValidationReport rep = check_noneclipse(testutil::three_disk_scene());
  CHECK(rep.pass);
  CHECK(rep.d0 == doctest::Approx(4.0).epsilon(1e-13));
  // Closest triple: apex disk vs the hull of the base pair.
  CHECK(rep.min_clearance == doctest::Approx(3.0 * std::sqrt(3.0) - 2.0).epsilon(1e-10));
  CHECK_FALSE(rep.witness.has_value());

  Scene collinear = make_scene(2, {disk(0, 0, 1), disk(4, 0, 1), disk(8, 0, 1)});
  ValidationReport bad = check_noneclipse(collinear);
  CHECK_FALSE(bad.pass);
  REQUIRE(bad.witness.has_value());
  CHECK(bad.witness->k == 2);  // middle disk blocks the line of sight
  CHECK(bad.min_clearance < 0.0);

  Scene two = make_scene(2, {disk(0, 0, 1), disk(6, 0, 1)});
  try {
    check_noneclipse(two);
    CHECK(false);
  } catch (const error& e) {
    CHECK(e.kind() == fault::arity);
  }
}
