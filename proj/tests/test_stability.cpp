#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "common.hpp"

using namespace billiard;

namespace {

PeriodicOrbit solve(const Scene& s, std::initializer_list<int> word) {
  return find_orbit(s, canonicalize(Word(word), s.r()));
}

StabilityReport stab(const Scene& s, std::initializer_list<int> word) {
  return poincare_map(s, solve(s, word));
}

// Cyclic rotation of every per-bounce array; the class word is rotated
// literally (no re-canonicalization) so the record stays aligned.
PeriodicOrbit rotate_orbit(const PeriodicOrbit& o, int k) {
  PeriodicOrbit r = o;
  int m = o.m;
  for (int i = 0; i < m; ++i) {
    int j = (i + k) % m;
    r.points[i] = o.points[j];
    r.directions[i] = o.directions[j];
    r.lambdas[i] = o.lambdas[j];
    r.incidences[i] = o.incidences[j];
    r.cls.canonical[i] = o.cls.canonical[j];
  }
  r.cls.root = r.cls.canonical;
  return r;
}

double max_abs(const std::vector<Cplx>& zs) {
  double v = 0.0;
  for (const Cplx& z : zs) v = std::max(v, std::abs(z));
  return v;
}

}  // namespace

TEST_CASE("bouncing-ball stability has its exact closed forms") {
  Scene s = testutil::three_disk_scene();
  StabilityReport r = stab(s, {1, 2});

  CHECK(std::abs(r.det_direct - testutil::kDet2Cycle) <= 1e-9);
  CHECK(std::abs(r.det_factored - testutil::kDet2Cycle) <= 1e-9);
  CHECK(r.cross_check_delta <= 1e-12);

  double lam = testutil::lambda_2cycle();
  CHECK(max_abs(r.eigenvalues) == doctest::Approx(lam).epsilon(1e-9));
  double lam_min = 1e300;
  for (const Cplx& z : r.eigenvalues) lam_min = std::min(lam_min, std::abs(z));
  CHECK(lam_min == doctest::Approx(1.0 / lam).epsilon(1e-9));

  REQUIRE(r.M0.rows() == 1);
  CHECK(r.M0(0, 0) == doctest::Approx(testutil::m0_2cycle()).epsilon(1e-12));

  REQUIRE(r.nu.size() == 1);
  CHECK(r.nu[0].real() == doctest::Approx(lam).epsilon(1e-10));
  CHECK(std::abs(r.nu[0].imag()) <= 1e-10);

  // Per-bounce expansion factor sigma (1 + lambda M0): magnitude sqrt(lam).
  CHECK(r.factor_smin == doctest::Approx(std::sqrt(lam)).epsilon(1e-10));
  CHECK(r.beta_bound == doctest::Approx(std::log(lam) / 2.0).epsilon(1e-10));
}

TEST_CASE("block product determinant matches the scalar transfer-matrix oracle") {
  Scene s = testutil::three_disk_scene();
  for (const CyclicClass& c : enumerate_words(3, 6)) {
    PeriodicOrbit o = find_orbit(s, c);
    StabilityReport r = poincare_map(s, o);
    double want = testutil::det_oracle_2d(s, o);
    CHECK(r.det_direct == doctest::Approx(want).epsilon(1e-10));
  }
}

TEST_CASE("direct and factored determinants agree through length six") {
  Scene s = testutil::three_disk_scene();
  for (const CyclicClass& c : enumerate_words(3, 6)) {
    StabilityReport r = poincare_map(s, find_orbit(s, c));
    CHECK(r.cross_check_delta <= 1e-8);
  }
}

TEST_CASE("eigenvalues pair symplectically") {
  Scene s2 = testutil::three_disk_scene();
  for (const CyclicClass& c : enumerate_words(3, 6)) {
    StabilityReport r = poincare_map(s2, find_orbit(s2, c));
    std::vector<Cplx> inv;
    for (const Cplx& z : r.eigenvalues) inv.push_back(1.0 / z);
    CHECK(testutil::eigen_multiset_distance(r.eigenvalues, inv) <= 1e-8);
  }
  Scene s3 = testutil::three_sphere_scene();
  for (auto word : {Word{1, 2}, Word{1, 2, 3}}) {
    StabilityReport r = poincare_map(s3, find_orbit(s3, canonicalize(word, 3)));
    std::vector<Cplx> inv;
    for (const Cplx& z : r.eigenvalues) inv.push_back(1.0 / z);
    CHECK(testutil::eigen_multiset_distance(r.eigenvalues, inv) <= 1e-8);
  }
}

TEST_CASE("finite differences of the composed flight map reproduce the linearization") {
  Scene s = testutil::three_disk_scene();
  for (const CyclicClass& c : enumerate_words(3, 5)) {
    PeriodicOrbit o = find_orbit(s, c);
    StabilityReport r = poincare_map(s, o);
    Eigen::MatrixXd J = testutil::fd_poincare(s, o);
    std::vector<Cplx> fd_eigs;
    Eigen::EigenSolver<Eigen::MatrixXd> es(J);
    for (int i = 0; i < J.rows(); ++i) fd_eigs.push_back(es.eigenvalues()[i]);
    // Compare the expanding branch against the same number of top-modulus FD
    // eigenvalues; the FD contracting eigenvalues are below the differencing
    // noise floor for these multipliers, and their exact values follow from
    // the symplectic pairing checked separately.
    std::vector<Cplx> lib_exp = testutil::expanding_part(r.eigenvalues);
    REQUIRE(lib_exp.size() == static_cast<std::size_t>(J.rows()) / 2);
    std::vector<Cplx> fd_exp = testutil::top_by_modulus(fd_eigs, lib_exp.size());
    CHECK(testutil::eigen_multiset_distance(lib_exp, fd_exp) <= 1e-5);
  }

  Scene s3 = testutil::three_sphere_scene();
  for (auto word : {Word{1, 2}, Word{1, 2, 3}, Word{1, 3, 2}}) {
    PeriodicOrbit o = find_orbit(s3, canonicalize(word, 3));
    StabilityReport r = poincare_map(s3, o);
    Eigen::MatrixXd J = testutil::fd_poincare(s3, o);
    std::vector<Cplx> fd_eigs;
    Eigen::EigenSolver<Eigen::MatrixXd> es(J);
    for (int i = 0; i < J.rows(); ++i) fd_eigs.push_back(es.eigenvalues()[i]);
    std::vector<Cplx> lib_exp = testutil::expanding_part(r.eigenvalues);
    REQUIRE(lib_exp.size() == static_cast<std::size_t>(J.rows()) / 2);
    std::vector<Cplx> fd_exp = testutil::top_by_modulus(fd_eigs, lib_exp.size());
    CHECK(testutil::eigen_multiset_distance(lib_exp, fd_exp) <= 1e-5);
  }

  Scene tetra = testutil::four_sphere_scene();
  PeriodicOrbit o = find_orbit(tetra, canonicalize({1, 2, 3, 4}, 4));
  StabilityReport r = poincare_map(tetra, o);
  Eigen::MatrixXd J = testutil::fd_poincare(tetra, o);
  std::vector<Cplx> fd_eigs;
  Eigen::EigenSolver<Eigen::MatrixXd> es(J);
  for (int i = 0; i < J.rows(); ++i) fd_eigs.push_back(es.eigenvalues()[i]);
  std::vector<Cplx> lib_exp = testutil::expanding_part(r.eigenvalues);
  REQUIRE(lib_exp.size() == static_cast<std::size_t>(J.rows()) / 2);
  std::vector<Cplx> fd_exp = testutil::top_by_modulus(fd_eigs, lib_exp.size());
  CHECK(testutil::eigen_multiset_distance(lib_exp, fd_exp) <= 1e-5);
}

TEST_CASE("the return map basepoint only conjugates the spectrum") {
  Scene s = testutil::three_disk_scene();
  for (auto word : {Word{1, 2, 3}, Word{1, 2, 1, 3}, Word{1, 2, 3, 1, 3}}) {
    PeriodicOrbit o = find_orbit(s, canonicalize(word, 3));
    StabilityReport base = poincare_map(s, o);
    for (int k = 1; k < o.m; ++k) {
      StabilityReport rot = poincare_map(s, rotate_orbit(o, k));
      CHECK(rot.det_direct == doctest::Approx(base.det_direct).epsilon(1e-9));
      CHECK(testutil::eigen_multiset_distance(base.eigenvalues, rot.eigenvalues) <= 1e-9);
    }
  }
}

TEST_CASE("orientation reversal preserves every stability invariant") {
  Scene s = testutil::three_disk_scene();
  StabilityReport a = stab(s, {1, 2, 3});
  StabilityReport b = stab(s, {1, 3, 2});
  CHECK(a.det_direct == doctest::Approx(b.det_direct).epsilon(1e-10));
  CHECK(testutil::eigen_multiset_distance(a.eigenvalues, b.eigenvalues) <= 1e-9);
  CHECK(std::abs(a.nu[0]) == doctest::Approx(std::abs(b.nu[0])).epsilon(1e-10));
}

TEST_CASE("iterate determinants factor through the primitive multipliers") {
  Scene s = testutil::three_disk_scene();
  StabilityReport prim = stab(s, {1, 2});
  StabilityReport twice = stab(s, {1, 2, 1, 2});

  // (Lam - 1/Lam)^2 = 9600 exactly for the side-6 scene.
  CHECK(twice.det_direct == doctest::Approx(9600.0).epsilon(1e-8));
  CHECK(iterate_det_abs(prim.nu, 2) == doctest::Approx(9600.0).epsilon(1e-10));
  CHECK(iterate_det_abs(prim.nu, 2) == doctest::Approx(twice.det_direct).epsilon(1e-8));
  CHECK(iterate_det_abs(prim.nu, 1) == doctest::Approx(prim.det_direct).epsilon(1e-10));

  // nu of the doubled word is the square of the primitive multiplier.
  CHECK(std::abs(twice.nu[0]) ==
        doctest::Approx(std::abs(prim.nu[0]) * std::abs(prim.nu[0])).epsilon(1e-8));

  StabilityReport thrice = stab(s, {1, 2, 1, 2, 1, 2});
  CHECK(iterate_det_abs(prim.nu, 3) == doctest::Approx(thrice.det_direct).epsilon(1e-7));
}

TEST_CASE("fixed point of the curvature update is stable under tolerance changes") {
  Scene s = testutil::three_disk_scene();
  PeriodicOrbit o = solve(s, {1, 2, 3});
  TransverseFrames fr = build_frames(s, o);
  Mat a = unstable_fixed_point(s, o, fr, 1e-13);
  Mat b = unstable_fixed_point(s, o, fr, 1e-15);
  CHECK((a - b).norm() <= 1e-10);
  // Positive definite.
  Eigen::SelfAdjointEigenSolver<Mat> es(a);
  CHECK(es.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("curvature forms reproduce the planar incidence formula") {
  Scene s = testutil::three_disk_scene();
  PeriodicOrbit two = solve(s, {1, 2});
  TransverseFrames fr2 = build_frames(s, two);
  Mat psi = curvature_form(s, two, 0, fr2);
  REQUIRE(psi.rows() == 1);
  CHECK(psi(0, 0) == doctest::Approx(2.0).epsilon(1e-12));  // head-on: 2/a

  PeriodicOrbit tri = solve(s, {1, 2, 3});
  TransverseFrames fr3 = build_frames(s, tri);
  for (int i = 0; i < 3; ++i) {
    Mat p = curvature_form(s, tri, i, fr3);
    CHECK(p(0, 0) == doctest::Approx(4.0 / std::sqrt(3.0)).epsilon(1e-11));
  }
}

TEST_CASE("frame changes are orthogonal and planar mirrors flip the line") {
  Scene s2 = testutil::three_disk_scene();
  PeriodicOrbit o2 = solve(s2, {1, 2, 3});
  TransverseFrames f2 = build_frames(s2, o2);
  for (int i = 0; i < o2.m; ++i) {
    Mat sig = sigma_matrix(s2, o2, i, f2);
    REQUIRE(sig.rows() == 1);
    CHECK(sig(0, 0) == doctest::Approx(-1.0).epsilon(1e-12));
  }

  Scene s3 = testutil::four_sphere_scene();
  PeriodicOrbit o3 = find_orbit(s3, canonicalize({1, 2, 3, 4}, 4));
  TransverseFrames f3 = build_frames(s3, o3);
  for (int i = 0; i < o3.m; ++i) {
    Mat sig = sigma_matrix(s3, o3, i, f3);
    REQUIRE(sig.rows() == 2);
    CHECK((sig.transpose() * sig - Mat::Identity(2, 2)).norm() <= 1e-10);
    Mat blk = reflection_block(s3, o3, i, f3);
    REQUIRE(blk.rows() == 4);
    CHECK((blk.topLeftCorner(2, 2) - sig).norm() <= 1e-12);
  }
}

TEST_CASE("planar orbits embedded in space double the spectrum") {
  Scene s3 = testutil::three_sphere_scene();
  StabilityReport r = poincare_map(s3, find_orbit(s3, canonicalize({1, 2}, 3)));
  // Normal incidence: in-plane and out-of-plane chains coincide, so
  // det(Id-P) = 96^2 and both expanding multipliers equal the planar one.
  CHECK(r.det_direct == doctest::Approx(96.0 * 96.0).epsilon(1e-8));
  REQUIRE(r.nu.size() == 2);
  double lam = testutil::lambda_2cycle();
  CHECK(std::abs(r.nu[0]) == doctest::Approx(lam).epsilon(1e-8));
  CHECK(std::abs(r.nu[1]) == doctest::Approx(lam).epsilon(1e-8));
}

TEST_CASE("the hyperbolicity certificate bounds every sample") {
  Scene s = testutil::three_disk_scene();
  std::vector<CertificateSample> samples;
  for (const CyclicClass& c : enumerate_words(3, 6)) {
    PeriodicOrbit o = find_orbit(s, c);
    StabilityReport r = poincare_map(s, o);
    CertificateSample cs;
    cs.tau = o.tau;
    cs.m = o.m;
    cs.det_abs = r.det_direct;
    cs.min_abs_nu = std::abs(r.nu[0]);
    cs.factor_smin = r.factor_smin;
    samples.push_back(cs);
  }
  HyperbolicityCertificate cert = hyperbolicity_certificate(s.d0, samples);
  CHECK(cert.epsilon > 0.0);
  CHECK(cert.beta > 0.0);
  CHECK(cert.beta == doctest::Approx(std::log1p(cert.epsilon * s.d0)).epsilon(1e-12));
  for (const CertificateSample& cs : samples) {
    CHECK(cs.min_abs_nu >= std::exp(cert.beta * cs.m) * (1.0 - 1e-10));
    CHECK(cs.det_abs >= cert.C1 * std::exp(cert.b1 * cs.tau) * (1.0 - 1e-9));
    CHECK(cs.det_abs <= std::exp(cert.b2 * cs.tau) * (1.0 + 1e-9));
  }
  // The bouncing-ball growth rate log(96)/8 lies inside the envelope band.
  double rate = std::log(96.0) / 8.0;
  CHECK(cert.b1 <= rate + 1e-12);
  CHECK(cert.b2 >= rate - 1e-12);

  CHECK_THROWS_AS(hyperbolicity_certificate(s.d0, {}), error);
}

TEST_CASE("stale orbits are rejected before linearization") {
  Scene s = testutil::three_disk_scene();
  PeriodicOrbit o = solve(s, {1, 2});
  o.points[0][1] += 1e-3;  // stale data: no longer a periodic ray
  o.residual = orbit_residual(s, o);
  CHECK_THROWS_AS(poincare_map(s, o), error);
}
