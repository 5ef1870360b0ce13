#include "billiard/database.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

namespace billiard {

namespace {

std::string orientation_name(Orientation o) {
  return o == Orientation::SelfReversible ? "self_reversible" : "chiral";
}

std::string vec_json(const Vec& v) {
  std::string s = "[";
  for (int i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += json_num(v[i]);
  }
  return s + "]";
}

std::string mat_json(const Mat& m) {
  std::string s = "[";
  for (int i = 0; i < m.rows(); ++i) {
    if (i) s += ',';
    s += "[";
    for (int j = 0; j < m.cols(); ++j) {
      if (j) s += ',';
      s += json_num(m(i, j));
    }
    s += "]";
  }
  return s + "]";
}

std::string cplx_list_json(const std::vector<Cplx>& zs) {
  std::string s = "[";
  for (std::size_t i = 0; i < zs.size(); ++i) {
    if (i) s += ',';
    s += "[" + json_num(zs[i].real()) + "," + json_num(zs[i].imag()) + "]";
  }
  return s + "]";
}

std::string scalar_list_json(const std::vector<double>& xs) {
  std::string s = "[";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ',';
    s += json_num(xs[i]);
  }
  return s + "]";
}

std::string record_line(const OrbitRecord& rec) {
  const PeriodicOrbit& o = rec.orbit;
  const StabilityReport& st = rec.stab;
  std::string s = "{\"type\":\"orbit\"";
  s += ",\"word\":" + json_str(word_to_string(rec.cls.canonical));
  s += ",\"n\":" + std::to_string(rec.cls.n());
  s += ",\"mu\":" + std::to_string(rec.cls.mu);
  s += ",\"orientation\":" + json_str(orientation_name(rec.cls.orientation));
  s += ",\"m\":" + std::to_string(o.m);
  s += ",\"tau\":" + json_num(o.tau);
  s += ",\"tau_sharp\":" + json_num(o.tau_sharp);
  s += ",\"residual\":" + json_num(o.residual);
  s += ",\"points\":[";
  for (int i = 0; i < o.m; ++i) {
    if (i) s += ',';
    s += vec_json(o.points[i]);
  }
  s += "]";
  s += ",\"lambdas\":" + scalar_list_json(o.lambdas);
  s += ",\"incidences\":" + scalar_list_json(o.incidences);
  s += ",\"det_abs\":" + json_num(st.det_direct);
  s += ",\"det_factored\":" + json_num(st.det_factored);
  s += ",\"cross_check_delta\":" + json_num(st.cross_check_delta);
  s += ",\"eigenvalues\":" + cplx_list_json(st.eigenvalues);
  s += ",\"nu\":" + cplx_list_json(st.nu);
  s += ",\"m0\":" + mat_json(st.M0);
  s += ",\"beta_bound\":" + json_num(st.beta_bound);
  s += ",\"factor_smin\":" + json_num(st.factor_smin);
  s += ",\"certified\":";
  s += rec.certified ? "true" : "false";
  s += ",\"note\":" + json_str(rec.note);
  s += "}";
  return s;
}

}  // namespace

std::string config_hash(const SceneFile& scene, const BuildOptions& opts) {
  std::string canon = "scene=" + scene.scene_hash + ";nmax=" + std::to_string(opts.n_max) +
                      ";taumax=" + fmt17(opts.tau_max) + ";tol_orbit=" + fmt17(opts.tol_orbit) +
                      ";tol_stab=" + fmt17(opts.tol_stab) +
                      ";allow_partial=" + (opts.allow_partial ? "1" : "0");
  return hex64(fnv1a64(canon));
}

OrbitDatabase build_database(const SceneFile& scene_file, const BuildOptions& opts,
                             std::string* log) {
  const Scene& scene = scene_file.scene;
  ValidationReport val = check_noneclipse(scene);
  if (!val.pass)
    raise(fault::eclipse, "scene fails the non-eclipse condition (obstacle " +
                              std::to_string(val.witness->k) + " meets hull of " +
                              std::to_string(val.witness->i) + "," +
                              std::to_string(val.witness->j) + ")");
  if (opts.n_max < 2) raise(fault::parameter, "n_max must be >= 2");
  if (opts.tau_max < 0.0) raise(fault::parameter, "tau_max must be >= 0");
  if (!(opts.tol_orbit > 0.0) || !(opts.tol_stab > 0.0))
    raise(fault::parameter, "tolerances must be positive");

  std::vector<CyclicClass> classes = enumerate_words(scene.r(), opts.n_max);

  struct Slot {
    OrbitRecord rec;
    bool failed = false;
    fault kind = fault::internal;
    std::string message;
  };
  std::vector<Slot> slots(classes.size());

  std::atomic<std::size_t> next{0};
  int jobs = std::max(1, opts.jobs);
  auto worker = [&]() {
    for (;;) {
      std::size_t idx = next.fetch_add(1);
      if (idx >= classes.size()) return;
      Slot& slot = slots[idx];
      slot.rec.cls = classes[idx];
      try {
        OrbitOptions oo;
        oo.tol = opts.tol_orbit;
        slot.rec.orbit = find_orbit(scene, classes[idx], oo);
        slot.rec.stab = poincare_map(scene, slot.rec.orbit, opts.tol_stab);
        slot.rec.certified = slot.rec.orbit.residual <= opts.tol_orbit &&
                             slot.rec.stab.cross_check_delta <= 1e-8;
        if (!slot.rec.certified)
          slot.rec.note = "certification failed: residual " + fmt17(slot.rec.orbit.residual) +
                          ", cross_check_delta " + fmt17(slot.rec.stab.cross_check_delta);
      } catch (const error& e) {
        slot.failed = true;
        slot.kind = e.kind();
        slot.message = e.what();
      } catch (const std::exception& e) {
        slot.failed = true;
        slot.kind = fault::internal;
        slot.message = e.what();
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  OrbitDatabase db;
  db.header.scene_hash = scene_file.scene_hash;
  db.header.config_hash = config_hash(scene_file, opts);
  db.header.dim = scene.dim;
  db.header.r = scene.r();
  db.header.d0 = scene.d0;
  db.header.d1 = scene.d1;
  db.header.n_max = opts.n_max;
  db.header.tau_max = opts.tau_max;
  db.header.tol_orbit = opts.tol_orbit;
  db.header.tol_stab = opts.tol_stab;

  std::ostringstream logbuf;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    Slot& slot = slots[i];
    if (slot.failed) {
      if (!opts.allow_partial) raise(slot.kind, slot.message);
      db.summary.failures += 1;
      logbuf << "skipped word " << word_to_string(classes[i].canonical) << ": " << slot.message
             << "\n";
      continue;
    }
    if (!slot.rec.certified && !opts.allow_partial)
      raise(fault::convergence, "record for word " + word_to_string(classes[i].canonical) +
                                    " failed certification: " + slot.rec.note);
    if (opts.tau_max > 0.0 && slot.rec.orbit.tau_sharp > opts.tau_max) continue;
    db.records.push_back(std::move(slot.rec));
  }

  // Optional multi-start uniqueness probe; log-only, never touches records.
  if (opts.seed != 0) {
    std::mt19937_64 rng(opts.seed);
    double worst = 0.0;
    int starts = 0;
    for (const OrbitRecord& rec : db.records) {
      if (rec.cls.n() > 4) continue;
      int cd = scene.dim - 1;
      for (int trial = 0; trial < 2; ++trial) {
        std::vector<double> params(rec.orbit.m * cd);
        for (int i = 0; i < rec.orbit.m; ++i) {
          std::uniform_real_distribution<double> ang(-M_PI, M_PI);
          params[i * cd] = scene.dim == 2 ? ang(rng)
                                          : std::uniform_real_distribution<double>(0.05, M_PI - 0.05)(rng);
          if (cd == 2) params[i * cd + 1] = ang(rng);
        }
        OrbitOptions oo;
        oo.tol = opts.tol_orbit;
        oo.max_sweeps = 400;
        oo.init_params = params;
        try {
          PeriodicOrbit alt = find_orbit(scene, rec.cls, oo);
          double dev = 0.0;
          for (int i = 0; i < rec.orbit.m; ++i)
            dev = std::max(dev, (alt.points[i] - rec.orbit.points[i]).norm());
          worst = std::max(worst, dev);
          ++starts;
        } catch (const error& e) {
          logbuf << "uniqueness probe start diverged for " << word_to_string(rec.cls.canonical)
                 << ": " << e.what() << "\n";
        }
      }
    }
    logbuf << "uniqueness probe: " << starts << " random starts, max pointwise deviation "
           << fmt17(worst) << "\n";
  }

  db.summary.records = static_cast<int>(db.records.size());
  double kappa = std::numeric_limits<double>::infinity();
  std::vector<CertificateSample> samples;
  for (const OrbitRecord& rec : db.records) {
    db.summary.max_residual = std::max(db.summary.max_residual, rec.orbit.residual);
    db.summary.max_cross_check_delta =
        std::max(db.summary.max_cross_check_delta, rec.stab.cross_check_delta);
    for (double inc : rec.orbit.incidences) kappa = std::min(kappa, std::abs(inc));
    CertificateSample cs;
    cs.tau = rec.orbit.tau;
    cs.m = rec.orbit.m;
    cs.det_abs = rec.stab.det_direct;
    cs.min_abs_nu = std::numeric_limits<double>::infinity();
    for (const Cplx& v : rec.stab.nu) cs.min_abs_nu = std::min(cs.min_abs_nu, std::abs(v));
    cs.factor_smin = rec.stab.factor_smin;
    samples.push_back(cs);
  }
  db.summary.kappa = db.records.empty() ? 0.0 : kappa;
  if (!samples.empty()) db.summary.certificate = hyperbolicity_certificate(scene.d0, samples);
  if (log) *log = logbuf.str();
  return db;
}

std::string serialize_database(const OrbitDatabase& db) {
  std::string out;
  const DbHeader& h = db.header;
  out += "{\"type\":\"header\",\"version\":" + std::to_string(h.version) +
         ",\"scene_hash\":" + json_str(h.scene_hash) +
         ",\"config_hash\":" + json_str(h.config_hash) + ",\"dim\":" + std::to_string(h.dim) +
         ",\"r\":" + std::to_string(h.r) + ",\"d0\":" + json_num(h.d0) +
         ",\"d1\":" + json_num(h.d1) + ",\"n_max\":" + std::to_string(h.n_max) +
         ",\"tau_max\":" + json_num(h.tau_max) + ",\"tol_orbit\":" + json_num(h.tol_orbit) +
         ",\"tol_stab\":" + json_num(h.tol_stab) + "}\n";
  for (const OrbitRecord& rec : db.records) out += record_line(rec) + "\n";
  const DbSummary& s = db.summary;
  out += "{\"type\":\"summary\",\"records\":" + std::to_string(s.records) +
         ",\"failures\":" + std::to_string(s.failures) +
         ",\"max_residual\":" + json_num(s.max_residual) +
         ",\"max_cross_check_delta\":" + json_num(s.max_cross_check_delta) +
         ",\"kappa\":" + json_num(s.kappa) + ",\"certificate\":{\"epsilon\":" +
         json_num(s.certificate.epsilon) + ",\"beta\":" + json_num(s.certificate.beta) +
         ",\"b1\":" + json_num(s.certificate.b1) + ",\"b2\":" + json_num(s.certificate.b2) +
         ",\"C1\":" + json_num(s.certificate.C1) + "}}\n";
  return out;
}

OrbitDatabase parse_database(const std::string& text) {
  OrbitDatabase db;
  std::istringstream in(text);
  std::string line;
  bool have_header = false, have_summary = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const std::exception& e) {
      raise(fault::schema, std::string("database line is not valid JSON: ") + e.what());
    }
    std::string type = j.value("type", "");
    if (type == "header") {
      have_header = true;
      db.header.version = j.value("version", 1);
      db.header.scene_hash = j.value("scene_hash", "");
      db.header.config_hash = j.value("config_hash", "");
      db.header.dim = j.value("dim", 0);
      db.header.r = j.value("r", 0);
      db.header.d0 = j.value("d0", 0.0);
      db.header.d1 = j.value("d1", 0.0);
      db.header.n_max = j.value("n_max", 0);
      db.header.tau_max = j.value("tau_max", 0.0);
      db.header.tol_orbit = j.value("tol_orbit", 1e-12);
      db.header.tol_stab = j.value("tol_stab", 1e-14);
    } else if (type == "orbit") {
      OrbitRecord rec;
      Word w = word_from_string(j.at("word").get<std::string>());
      rec.cls = canonicalize(w, db.header.r > 0 ? db.header.r : 64);
      PeriodicOrbit& o = rec.orbit;
      o.cls = rec.cls;
      o.m = j.at("m").get<int>();
      o.tau = j.at("tau").get<double>();
      o.tau_sharp = j.at("tau_sharp").get<double>();
      o.residual = j.at("residual").get<double>();
      for (const auto& pt : j.at("points")) {
        Vec v(static_cast<int>(pt.size()));
        for (int k = 0; k < v.size(); ++k) v[k] = pt[k].get<double>();
        o.points.push_back(v);
      }
      for (const auto& x : j.at("lambdas")) o.lambdas.push_back(x.get<double>());
      for (const auto& x : j.at("incidences")) o.incidences.push_back(x.get<double>());
      for (int i = 0; i < o.m; ++i)
        o.directions.push_back((o.points[(i + 1) % o.m] - o.points[i]).normalized());
      StabilityReport& st = rec.stab;
      st.det_direct = j.at("det_abs").get<double>();
      st.det_factored = j.at("det_factored").get<double>();
      st.cross_check_delta = j.at("cross_check_delta").get<double>();
      for (const auto& z : j.at("eigenvalues"))
        st.eigenvalues.emplace_back(z[0].get<double>(), z[1].get<double>());
      for (const auto& z : j.at("nu")) st.nu.emplace_back(z[0].get<double>(), z[1].get<double>());
      const auto& m0 = j.at("m0");
      int rows = static_cast<int>(m0.size());
      int cols = rows > 0 ? static_cast<int>(m0[0].size()) : 0;
      st.M0 = Mat::Zero(rows, cols);
      for (int a = 0; a < rows; ++a)
        for (int b = 0; b < cols; ++b) st.M0(a, b) = m0[a][b].get<double>();
      st.beta_bound = j.at("beta_bound").get<double>();
      st.factor_smin = j.at("factor_smin").get<double>();
      rec.certified = j.at("certified").get<bool>();
      rec.note = j.value("note", "");
      db.records.push_back(std::move(rec));
    } else if (type == "summary") {
      have_summary = true;
      db.summary.records = j.value("records", 0);
      db.summary.failures = j.value("failures", 0);
      db.summary.max_residual = j.value("max_residual", 0.0);
      db.summary.max_cross_check_delta = j.value("max_cross_check_delta", 0.0);
      db.summary.kappa = j.value("kappa", 0.0);
      if (j.contains("certificate")) {
        const auto& c = j["certificate"];
        db.summary.certificate.epsilon = c.value("epsilon", 0.0);
        db.summary.certificate.beta = c.value("beta", 0.0);
        db.summary.certificate.b1 = c.value("b1", 0.0);
        db.summary.certificate.b2 = c.value("b2", 0.0);
        db.summary.certificate.C1 = c.value("C1", 0.0);
      }
    } else {
      raise(fault::schema, "database line with unknown type \"" + type + "\"");
    }
  }
  if (!have_header) raise(fault::schema, "database is missing its header line");
  if (!have_summary) raise(fault::schema, "database is missing its summary line");
  if (static_cast<int>(db.records.size()) != db.summary.records)
    raise(fault::schema, "database record count disagrees with the summary");
  return db;
}

}  // namespace billiard
