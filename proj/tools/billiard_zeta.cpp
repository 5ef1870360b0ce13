// billiard_zeta: command-line surface over the open-billiard library.
//
// Subcommands:
//   validate            scene geometry + non-eclipse check
//   build-db            enumerate words, solve orbits, compute stability, emit JSONL
//   zeta eval           truncated eta/zeta series values at a point
//   zeta zeros          zeros of the cycle-expanded zeta inside a rectangle
//   count fit           counting-function growth fit
//   probe pair          length-spectrum pairing against one window
//   probe sweep         CSV comb of pairings over a window sweep
//
// Exit codes: 0 ok, 2 geometric validation fail, 3 configuration/usage error,
// 4 computation/certification fail, 5 provenance mismatch.

#include "CLI11.hpp"

#include "billiard/database.hpp"
#include "billiard/io.hpp"
#include "billiard/probe.hpp"
#include "billiard/stability.hpp"
#include "billiard/zeta.hpp"

#include <cmath>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace billiard;

void emit(const std::string& out_path, const std::string& content) {
  if (out_path.empty())
    std::cout << content;
  else
    write_file(out_path, content);
}

std::vector<double> parse_csv_doubles(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      double v = std::stod(tok, &used);
      while (used < tok.size() && std::isspace(static_cast<unsigned char>(tok[used]))) ++used;
      if (used != tok.size()) throw std::invalid_argument(tok);
      out.push_back(v);
    } catch (const std::exception&) {
      raise(fault::parameter, flag + ": cannot parse '" + tok + "' as a number");
    }
  }
  if (out.empty()) raise(fault::parameter, flag + ": empty value");
  return out;
}

Cplx parse_point(const std::string& text) {
  auto v = parse_csv_doubles(text, "--s");
  if (v.size() == 1) return Cplx(v[0], 0.0);
  if (v.size() == 2) return Cplx(v[0], v[1]);
  raise(fault::parameter, "--s expects RE or RE,IM");
}

SeriesSpec parse_series(const std::string& kind, int n_max, double tau_max, bool double_self) {
  SeriesSpec sp;
  sp.n_max = n_max;
  sp.tau_max = tau_max;
  sp.double_count_self = double_self;
  if (kind == "N") {
    sp.kind = SeriesKind::N;
  } else if (kind == "D") {
    sp.kind = SeriesKind::D;
  } else if (kind == "Q" || kind.rfind("Q:", 0) == 0) {
    sp.kind = SeriesKind::Q;
    sp.q = 2;
    if (kind.size() > 2) {
      const std::string tail = kind.substr(2);
      try {
        std::size_t used = 0;
        sp.q = std::stoi(tail, &used);
        if (used != tail.size()) throw std::invalid_argument(tail);
      } catch (const std::exception&) {
        raise(fault::parameter, "--kind Q:q needs an integer modulus, got '" + tail + "'");
      }
      if (sp.q < 2) raise(fault::parameter, "--kind Q:q needs q >= 2");
    }
  } else {
    raise(fault::parameter, "unknown series kind '" + kind + "' (expected N, D, or Q:q)");
  }
  return sp;
}

std::string kind_name(const SeriesSpec& sp) {
  switch (sp.kind) {
    case SeriesKind::N: return "N";
    case SeriesKind::D: return "D";
    case SeriesKind::Q: return "Q:" + std::to_string(sp.q);
  }
  return "?";
}

std::string json_cplx(Cplx z) {
  return "{\"re\":" + json_num(z.real()) + ",\"im\":" + json_num(z.imag()) + "}";
}

// Shared options of every database-consuming command.
struct DbArgs {
  std::string db_path;
  std::string scene_path;  // optional cross-check of the scene file hash
  std::string out_path;
};

void add_db_args(CLI::App* cmd, DbArgs& a) {
  cmd->add_option("--db", a.db_path, "orbit database (JSONL) to analyze")->required();
  cmd->add_option("--scene", a.scene_path,
                  "scene file to cross-check against the database provenance hash");
  cmd->add_option("--out", a.out_path, "write the JSON report here instead of stdout");
}

OrbitDatabase load_db_checked(const DbArgs& a) {
  OrbitDatabase db = parse_database(read_file(a.db_path));
  if (!a.scene_path.empty()) {
    SceneFile sf = load_scene(a.scene_path);
    if (sf.scene_hash != db.header.scene_hash)
      raise(fault::provenance, "scene file hash " + sf.scene_hash +
                                   " does not match database scene hash " + db.header.scene_hash);
  }
  return db;
}

std::string provenance_fields(const OrbitDatabase& db) {
  return "\"scene_hash\":" + json_str(db.header.scene_hash) +
         ",\"config_hash\":" + json_str(db.header.config_hash);
}

std::string csv_provenance(const OrbitDatabase& db) {
  return "# scene_hash=" + db.header.scene_hash + "\n# config_hash=" + db.header.config_hash +
         "\n";
}

int effective_nmax(const OrbitDatabase& db, int requested) {
  if (requested <= 0) return db.header.n_max;
  return std::min(requested, db.header.n_max);
}

// ---------------------------------------------------------------- validate

int cmd_validate(const std::string& scene_path, const std::string& out_path) {
  SceneFile sf = load_scene(scene_path);
  ValidationReport rep = check_noneclipse(sf.scene);
  std::string doc = "{\"type\":\"validate_report\",\"scene_hash\":" + json_str(sf.scene_hash) +
                    ",\"pass\":" + (rep.pass ? "true" : "false") +
                    ",\"r\":" + std::to_string(sf.scene.r()) + ",\"d0\":" + json_num(rep.d0) +
                    ",\"d1\":" + json_num(rep.d1) +
                    ",\"min_clearance\":" + json_num(rep.min_clearance) + ",\"witness\":";
  if (rep.witness) {
    doc += "{\"i\":" + std::to_string(rep.witness->i) + ",\"j\":" + std::to_string(rep.witness->j) +
           ",\"k\":" + std::to_string(rep.witness->k) + ",\"point\":[";
    for (int c = 0; c < rep.witness->point.size(); ++c) {
      if (c) doc += ",";
      doc += json_num(rep.witness->point[c]);
    }
    doc += "]}";
  } else {
    doc += "null";
  }
  doc += "}\n";
  emit(out_path, doc);
  return rep.pass ? 0 : 2;
}

// ---------------------------------------------------------------- build-db

struct BuildArgs {
  std::string scene_path;
  std::string out_path;
  BuildOptions opts;
  int jobs = 0;  // 0: fall back to BILLIARD_ZETA_JOBS, then 1
};

int cmd_build_db(const BuildArgs& a) {
  if (a.opts.tol_orbit <= 0.0 || a.opts.tol_stab <= 0.0)
    raise(fault::parameter, "tolerances must be positive");
  if (a.opts.tau_max < 0.0) raise(fault::parameter, "--taumax must be nonnegative");
  BuildOptions opts = a.opts;
  opts.jobs = a.jobs == 0 ? 1 : a.jobs;
  if (opts.jobs < 1) raise(fault::parameter, "--jobs must be a positive worker count");
  SceneFile sf = load_scene(a.scene_path);
  std::string log;
  OrbitDatabase db = build_database(sf, opts, &log);
  emit(a.out_path, serialize_database(db));
  if (!log.empty()) std::cerr << log;
  return 0;
}

// ---------------------------------------------------------------- zeta eval

struct EvalArgs {
  DbArgs db;
  std::string kind = "N";
  std::string s_text;
  int n_max = 0;
  double tau_max = 0.0;
  bool double_self = false;
  std::string scan_text;  // re0,re1,count: real-axis CSV table
  std::string csv_path;
};

int cmd_zeta_eval(const EvalArgs& a) {
  OrbitDatabase db = load_db_checked(a.db);
  SeriesSpec sp = parse_series(a.kind, a.n_max, a.tau_max, a.double_self);
  Cplx s = parse_point(a.s_text);
  Cplx eta = eta_value(db, sp, s);
  Cplx zeta = zeta_value(db, sp, s);
  std::string doc = "{\"type\":\"zeta_eval_report\"," + provenance_fields(db) +
                    ",\"kind\":" + json_str(kind_name(sp)) +
                    ",\"n_max\":" + std::to_string(effective_nmax(db, sp.n_max)) +
                    ",\"tau_max\":" + json_num(sp.tau_max) +
                    ",\"double_count_self\":" + (sp.double_count_self ? "true" : "false") +
                    ",\"s\":" + json_cplx(s) + ",\"eta\":" + json_cplx(eta) +
                    ",\"zeta\":" + json_cplx(zeta) + "}\n";
  emit(a.db.out_path, doc);
  if (!a.scan_text.empty()) {
    if (a.csv_path.empty()) raise(fault::parameter, "--scan needs --csv PATH for the table");
    auto g = parse_csv_doubles(a.scan_text, "--scan");
    if (g.size() != 3 || !(g[1] > g[0]) || !(g[2] >= 2.0))
      raise(fault::parameter, "--scan expects re0,re1,count with re0 < re1 and count >= 2");
    int count = static_cast<int>(g[2]);
    std::string csv = csv_provenance(db) + "s,eta_re,eta_im,zeta_re,zeta_im\n";
    for (int i = 0; i < count; ++i) {
      double x = g[0] + (g[1] - g[0]) * i / (count - 1);
      Cplx e = eta_value(db, sp, Cplx(x, 0.0));
      Cplx z = zeta_value(db, sp, Cplx(x, 0.0));
      csv += json_num(x) + "," + json_num(e.real()) + "," + json_num(e.imag()) + "," +
             json_num(z.real()) + "," + json_num(z.imag()) + "\n";
    }
    write_file(a.csv_path, csv);
  }
  return 0;
}

// ---------------------------------------------------------------- zeta zeros

struct ZerosArgs {
  DbArgs db;
  std::string kind = "N";
  std::string region_text;  // re0,re1,im0,im1; default derived from s0
  int n_max = 0;
  int k_max = 2;
  int grid = 1200;
  bool double_self = false;
  std::string csv_path;
};

int cmd_zeta_zeros(const ZerosArgs& a) {
  OrbitDatabase db = load_db_checked(a.db);
  SeriesSpec sp = parse_series(a.kind, a.n_max, 0.0, a.double_self);
  int n_max = effective_nmax(db, sp.n_max);
  double re0, re1, im0, im1;
  bool have_s0 = false;
  double s0 = 0.0;
  if (a.region_text.empty()) {
    s0 = s0_estimate(db);
    have_s0 = true;
    re0 = s0 - 1.5;
    re1 = s0 + 0.5;
    im0 = 0.0;
    im1 = 2.0 * M_PI / db.header.d0;
  } else {
    auto g = parse_csv_doubles(a.region_text, "--region");
    if (g.size() != 4) raise(fault::region, "--region expects re0,re1,im0,im1");
    re0 = g[0];
    re1 = g[1];
    im0 = g[2];
    im1 = g[3];
    if (!(re1 > re0) || im1 < im0) raise(fault::region, "--region needs re0 < re1 and im0 <= im1");
  }
  CycleExpansion ce = cycle_expansion(db, sp.kind, a.k_max, n_max, sp.double_count_self);
  auto f = [&](Cplx s) { return ce.value(s); };
  auto fp = [&](Cplx s) { return ce.derivative(s); };
  ZeroSearchOptions opts;
  opts.grid = a.grid;
  std::vector<ZeroReport> zeros = find_zeros(f, fp, re0, re1, im0, im1, opts);

  std::string doc = "{\"type\":\"zeta_zeros_report\"," + provenance_fields(db) +
                    ",\"kind\":" + json_str(kind_name(sp)) + ",\"n_max\":" + std::to_string(n_max) +
                    ",\"k_max\":" + std::to_string(a.k_max) + ",\"region\":[" + json_num(re0) +
                    "," + json_num(re1) + "," + json_num(im0) + "," + json_num(im1) + "]";
  if (have_s0) doc += ",\"s0_estimate\":" + json_num(s0);
  doc += ",\"zeros\":[";
  for (std::size_t i = 0; i < zeros.size(); ++i) {
    if (i) doc += ",";
    doc += "{\"re\":" + json_num(zeros[i].location.real()) +
           ",\"im\":" + json_num(zeros[i].location.imag()) +
           ",\"residue\":" + json_cplx(zeros[i].residue) +
           ",\"radius\":" + json_num(zeros[i].radius) +
           ",\"low_confidence\":" + (zeros[i].low_confidence ? "true" : "false") + "}";
  }
  doc += "]}\n";
  emit(a.db.out_path, doc);

  if (!a.csv_path.empty()) {
    std::string csv = csv_provenance(db) + "s,f_re,f_im\n";
    for (int i = 0; i < a.grid; ++i) {
      double x = re0 + (re1 - re0) * i / (a.grid - 1);
      Cplx v = ce.value(Cplx(x, 0.0));
      csv += json_num(x) + "," + json_num(v.real()) + "," + json_num(v.imag()) + "\n";
    }
    write_file(a.csv_path, csv);
  }
  return 0;
}

// ---------------------------------------------------------------- count fit

struct CountArgs {
  DbArgs db;
  std::string csv_path;
};

int cmd_count_fit(const CountArgs& a) {
  OrbitDatabase db = load_db_checked(a.db);
  CountingFit fit = counting_fit(db);
  std::string doc = "{\"type\":\"count_report\"," + provenance_fields(db) +
                    ",\"a_hat\":" + json_num(fit.a_hat) + ",\"a1\":" + json_num(fit.a1) +
                    ",\"max_abs_residual\":" + json_num(fit.max_abs_residual) +
                    ",\"points\":" + std::to_string(fit.curve.size()) + "}\n";
  emit(a.db.out_path, doc);
  if (!a.csv_path.empty()) {
    std::string csv = csv_provenance(db) + "x,count\n";
    for (const auto& [x, n] : fit.curve) csv += json_num(x) + "," + json_num(n) + "\n";
    write_file(a.csv_path, csv);
  }
  return 0;
}

// ---------------------------------------------------------------- probe

struct PairArgs {
  DbArgs db;
  double ell = 0.0;
  double m = 0.0;
  bool neumann = false;
};

int cmd_probe_pair(const PairArgs& a) {
  OrbitDatabase db = load_db_checked(a.db);
  ProbeWindow w = make_window(db.header.d0, a.ell, a.m);
  Rho rho = build_rho();
  double v = fd_pairing(db, w, rho, a.neumann);
  std::string doc = "{\"type\":\"probe_pair_report\"," + provenance_fields(db) +
                    ",\"ell\":" + json_num(w.ell) + ",\"m\":" + json_num(w.m) +
                    ",\"neumann\":" + (a.neumann ? "true" : "false") +
                    ",\"value\":" + json_num(v) + "}\n";
  emit(a.db.out_path, doc);
  return 0;
}

struct SweepArgs {
  DbArgs db;  // out_path here holds the optional JSON summary
  double ell0 = 0.0;
  double ell1 = 0.0;
  double step = 0.0;
  double m = 0.0;
  bool neumann = false;
  std::string csv_path;
};

int cmd_probe_sweep(const SweepArgs& a) {
  OrbitDatabase db = load_db_checked(a.db);
  if (!(a.ell1 >= a.ell0)) raise(fault::parameter, "--ell1 must be >= --ell0");
  double step = a.step > 0.0 ? a.step : (a.ell1 - a.ell0) / 200.0;
  if (!(step > 0.0)) raise(fault::parameter, "--step must be positive for a degenerate range");
  Rho rho = build_rho();
  int rows = static_cast<int>(std::floor((a.ell1 - a.ell0) / step + 1e-9)) + 1;
  std::string csv = csv_provenance(db) + "ell,pairing\n";
  for (int i = 0; i < rows; ++i) {
    double ell = a.ell0 + i * step;
    ProbeWindow w = make_window(db.header.d0, ell, a.m);
    double v = fd_pairing(db, w, rho, a.neumann);
    csv += json_num(ell) + "," + json_num(v) + "\n";
  }
  if (a.csv_path.empty())
    std::cout << csv;
  else
    write_file(a.csv_path, csv);
  if (!a.db.out_path.empty()) {
    std::string doc = "{\"type\":\"probe_sweep_report\"," + provenance_fields(db) +
                      ",\"ell0\":" + json_num(a.ell0) + ",\"ell1\":" + json_num(a.ell1) +
                      ",\"step\":" + json_num(step) + ",\"m\":" + json_num(a.m) +
                      ",\"neumann\":" + (a.neumann ? "true" : "false") +
                      ",\"rows\":" + std::to_string(rows) + "}\n";
    write_file(a.db.out_path, doc);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Periodic rays, stability spectra, and dynamical zeta functions of open "
      "dispersing billiards"};
  app.require_subcommand(1);
  int rc = 0;

  // validate
  std::string v_scene, v_out;
  auto* validate = app.add_subcommand("validate", "check scene geometry and the non-eclipse condition");
  validate->add_option("--scene", v_scene, "scene JSON file")->required();
  validate->add_option("--out", v_out, "write the JSON report here instead of stdout");
  validate->callback([&] { rc = cmd_validate(v_scene, v_out); });

  // build-db
  BuildArgs b;
  auto* build = app.add_subcommand("build-db", "enumerate words, solve orbits, emit the JSONL database");
  build->add_option("--scene", b.scene_path, "scene JSON file")->required();
  build->add_option("--nmax", b.opts.n_max, "maximal word length (>= 2)")
      ->required()
      ->check(CLI::Range(2, 64));
  build->add_option("--taumax", b.opts.tau_max, "drop primitive rays with period above this (0: none)");
  build->add_option("--tol-orbit", b.opts.tol_orbit, "orbit residual certification target");
  build->add_option("--tol-stab", b.opts.tol_stab, "curvature fixed-point tolerance");
  build->add_option("--jobs", b.jobs, "parallel workers for the orbit stage")
      ->envname("BILLIARD_ZETA_JOBS");
  build->add_option("--seed", b.opts.seed, "RNG seed for the multi-start uniqueness probe (0: off)");
  build->add_flag("--allow-partial", b.opts.allow_partial,
                  "keep going past uncertified orbits, flagging them in the records");
  build->add_option("--out", b.out_path, "database path (stdout when omitted)");
  build->callback([&] { rc = cmd_build_db(b); });

  // zeta
  auto* zeta = app.add_subcommand("zeta", "dynamical zeta function analysis");
  zeta->require_subcommand(1);

  EvalArgs ev;
  auto* eval = zeta->add_subcommand("eval", "evaluate the truncated eta and zeta series at a point");
  add_db_args(eval, ev.db);
  eval->add_option("--kind", ev.kind, "series kind: N, D, or Q:q (default N)");
  eval->add_option("--s", ev.s_text, "evaluation point RE or RE,IM")->required();
  eval->add_option("--nmax", ev.n_max, "symbolic truncation (0: inherit the database cutoff)");
  eval->add_option("--taumax", ev.tau_max, "period truncation for iterates (0: none)");
  eval->add_flag("--double-count-self", ev.double_self, "weight self-reversible rays twice");
  eval->add_option("--scan", ev.scan_text, "also write a real-axis CSV table: re0,re1,count");
  eval->add_option("--csv", ev.csv_path, "CSV destination for --scan");
  eval->callback([&] { rc = cmd_zeta_eval(ev); });

  ZerosArgs zr;
  auto* zeros = zeta->add_subcommand("zeros", "locate zeros of the cycle-expanded zeta function");
  add_db_args(zeros, zr.db);
  zeros->add_option("--kind", zr.kind, "series kind: N or D (cycle expansion)");
  zeros->add_option("--region", zr.region_text,
                    "search rectangle re0,re1,im0,im1 (default: around the abscissa estimate)");
  zeros->add_option("--nmax", zr.n_max, "expansion order (0: inherit the database cutoff)");
  zeros->add_option("--kmax", zr.k_max, "eigenvalue-tower depth of the cycle expansion");
  zeros->add_option("--grid", zr.grid, "boundary/real-line sampling density")
      ->check(CLI::Range(8, 1000000));
  zeros->add_flag("--double-count-self", zr.double_self, "weight self-reversible rays twice");
  zeros->add_option("--csv", zr.csv_path, "write a real-axis table s,f_re,f_im for plotting");
  zeros->callback([&] { rc = cmd_zeta_zeros(zr); });

  // count
  auto* count = app.add_subcommand("count", "length-spectrum counting analysis");
  count->require_subcommand(1);
  CountArgs ct;
  auto* fit = count->add_subcommand("fit", "fit N(x) ~ e^{ax}/(ax) over the primitive lengths");
  add_db_args(fit, ct.db);
  fit->add_option("--csv", ct.csv_path, "write the counting curve x,count for plotting");
  fit->callback([&] { rc = cmd_count_fit(ct); });

  // probe
  auto* probe = app.add_subcommand("probe", "length-spectrum probe pairings");
  probe->require_subcommand(1);

  PairArgs pp;
  auto* pair = probe->add_subcommand("pair", "pair one window against the ray length spectrum");
  add_db_args(pair, pp.db);
  pair->add_option("--ell", pp.ell, "window center (must exceed the scene's minimal gap)")
      ->required();
  pair->add_option("--m", pp.m, "window concentration scale (>= max(1, 1/d0))")->required();
  pair->add_flag("--neumann", pp.neumann, "drop the reflection-parity sign");
  pair->callback([&] { rc = cmd_probe_pair(pp); });

  SweepArgs sw;
  auto* sweep = probe->add_subcommand("sweep", "CSV comb of pairings over a range of window centers");
  add_db_args(sweep, sw.db);
  sweep->add_option("--ell0", sw.ell0, "first window center")->required();
  sweep->add_option("--ell1", sw.ell1, "last window center")->required();
  sweep->add_option("--step", sw.step, "center increment (default: range/200)");
  sweep->add_option("--m", sw.m, "window concentration scale")->required();
  sweep->add_flag("--neumann", sw.neumann, "drop the reflection-parity sign");
  sweep->add_option("--csv", sw.csv_path, "CSV destination (stdout when omitted)");
  sweep->callback([&] { rc = cmd_probe_sweep(sw); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the diagnostic; the contract pins the code below
    return 3;
  } catch (const error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return exit_code_for(fault::internal);
  }
  return rc;
}
