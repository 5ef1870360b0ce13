#pragma once

#include "billiard/io.hpp"
#include "billiard/orbit.hpp"
#include "billiard/stability.hpp"

#include <string>
#include <vector>

namespace billiard {

struct OrbitRecord {
  CyclicClass cls;
  PeriodicOrbit orbit;
  StabilityReport stab;
  bool certified = true;
  std::string note;  // failure diagnostics when not certified
};

struct DbHeader {
  int version = 1;
  std::string scene_hash;
  std::string config_hash;
  int dim = 0;
  int r = 0;
  double d0 = 0.0;
  double d1 = 0.0;
  int n_max = 0;
  double tau_max = 0.0;  // 0 = no length cutoff
  double tol_orbit = 1e-12;
  double tol_stab = 1e-14;
};

struct DbSummary {
  int records = 0;
  int failures = 0;
  double max_residual = 0.0;
  double max_cross_check_delta = 0.0;
  double kappa = 0.0;  // empirical min |<w, n>| over all bounces
  HyperbolicityCertificate certificate;
};

struct OrbitDatabase {
  DbHeader header;
  std::vector<OrbitRecord> records;
  DbSummary summary;
};

struct BuildOptions {
  int n_max = 2;
  double tau_max = 0.0;
  double tol_orbit = 1e-12;
  double tol_stab = 1e-14;
  int jobs = 1;
  unsigned long long seed = 0;  // 0 disables the multi-start uniqueness probe
  bool allow_partial = false;
};

// Pipeline: enumerate primitive classes to n_max, solve each orbit, compute
// stability, assemble certificate. Parallel across words; results are slotted
// by enumeration index so output order (and bytes) never depend on jobs.
// Seed only drives the optional uniqueness probe, whose outcome goes to the
// log sink; database content is seed-independent.
OrbitDatabase build_database(const SceneFile& scene, const BuildOptions& opts,
                             std::string* log = nullptr);

std::string config_hash(const SceneFile& scene, const BuildOptions& opts);

// JSONL: header line, one line per record, summary line. All floats with
// 17 significant digits; byte-deterministic.
std::string serialize_database(const OrbitDatabase& db);
OrbitDatabase parse_database(const std::string& text);

}  // namespace billiard
