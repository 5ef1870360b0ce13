#pragma once

#include "billiard/geometry.hpp"
#include "billiard/symbolic.hpp"

#include <optional>
#include <vector>

namespace billiard {

struct PeriodicOrbit {
  CyclicClass cls;
  std::vector<Vec> points;       // q_i on the boundary of obstacle word[i]
  std::vector<Vec> directions;   // w_i: unit vector from q_i to q_{i+1} (cyclic)
  std::vector<double> lambdas;   // lambda_i = |q_i - q_{i-1}| (incoming flight, cyclic)
  std::vector<double> incidences;  // <w_i, n(q_i)> per bounce (outgoing vs inward normal)
  double tau = 0.0;
  double tau_sharp = 0.0;
  int m = 0;
  double residual = 0.0;
};

struct OrbitOptions {
  double tol = 1e-12;    // residual certification target
  int max_sweeps = 200;  // cyclic coordinate-descent sweeps
  int max_newton = 25;   // stacked Newton iterations
  // Optional explicit initial chart parameters ((d-1) angles per bounce,
  // concatenated); used by the multi-start uniqueness probe. Default
  // initialization puts q_i nearest the centroid of the neighboring
  // obstacles' centers.
  std::optional<std::vector<double>> init_params;
};

// Realizes the unique periodic ray with the given itinerary by minimizing
// the cyclic length functional over boundary charts (angle in d=2,
// spherical coordinates in d=3): coordinate descent to enter the Newton
// basin, then full Newton. Non-primitive classes are solved through their
// root and tiled, so tau = mu * tau_sharp exactly.
PeriodicOrbit find_orbit(const Scene& s, const CyclicClass& cls, const OrbitOptions& opts = {});

// Reflection-law certificate: max_i |reflect(w_{i-1}, n(q_i)) - w_i| plus
// the worst boundary defect max_i |value_i(q_i)|.
double orbit_residual(const Scene& s, const PeriodicOrbit& orbit);

// Newton polish of an existing orbit down to the requested residual.
// Raises fault::convergence when outside the Newton basin (residual > 1e-2)
// or when the iteration stalls; fault::degeneracy on a singular Hessian.
PeriodicOrbit refine_orbit(const Scene& s, const PeriodicOrbit& orbit, double tol);

}  // namespace billiard
