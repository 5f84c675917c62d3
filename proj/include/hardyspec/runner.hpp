#pragma once

// Task dispatch behind the command-line front end.  Every number emitted here
// comes from a library operation; this layer only selects parameters, runs
// the operation, and serialises the outcome (JSON reports, CSV fields).
//
// Exit codes: 0 all checks passed, 1 a bound check failed or a computation
// could not finish, 2 configuration/usage error.

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hardyspec/config.hpp"
#include "hardyspec/delta.hpp"
#include "hardyspec/geometry.hpp"
#include "hardyspec/measure.hpp"
#include "hardyspec/packing.hpp"
#include "hardyspec/report.hpp"
#include "hardyspec/spectral.hpp"

namespace hardyspec {

struct TaskResult {
  bool pass = true;
  nlohmann::json data;
};

namespace detail {

inline std::string iso_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline double task_h(const RunConfig& cfg, const Domain& dom) {
  if (cfg.h > 0) return cfg.h;
  return dom.max_side() / 128;
}

inline SphereRule task_rule(const RunConfig& cfg, int dim) {
  return cfg.rule_n > 0 ? sphere_rule(dim, cfg.rule_n) : default_rule(dim);
}

inline int64_t task_samples(const RunConfig& cfg) {
  return cfg.samples > 0 ? cfg.samples : 20'000;
}

inline double or_default(double v, double dflt) { return v > 0 ? v : dflt; }

inline DeltaField task_field(const RunConfig& cfg, const Domain& dom, double h) {
  DeltaField f = delta_field(dom, h, task_rule(cfg, dom.dim));
  if (f.interior.empty())
    cfg_fail("domain has no interior grid nodes at h = " + format_sig(h, 6));
  return f;
}

/// Smallest spectrum whose top eigenvalue exceeds `target`, doubling k.
inline SpectralResult eigens_covering(const GridOperator& op, double target, int k0 = 16) {
  int k = static_cast<int>(std::min<int64_t>(std::max(k0, 8), op.n()));
  for (;;) {
    SpectralResult res = eigenvalues(op, k);
    if (res.eigenvalues.back() > target) return res;
    if (k >= op.n())
      throw std::runtime_error("spectrum: the grid has only " + std::to_string(op.n()) +
                               " modes, none above lambda = " + format_sig(target, 6));
    k = static_cast<int>(std::min<int64_t>(int64_t(2) * k, op.n()));
  }
}

inline std::vector<double> full_grid_mode(const SpectralResult& res, int col) {
  std::vector<double> u(res.grid.total(), 0.0);
  for (int64_t r = 0; r < static_cast<int64_t>(res.interior.size()); ++r)
    u[res.interior[r]] = res.vectors(r, col);
  return u;
}

inline std::vector<double> default_rho_sweep(const Domain& dom, int count, double top) {
  std::vector<double> rho(count);
  for (int i = 0; i < count; ++i) rho[i] = dom.diam() * top * (i + 1) / count;
  return rho;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

inline nlohmann::json spectrum_json(const SpectralResult& res) {
  nlohmann::json j;
  j["h"] = jnum(res.h);
  j["k"] = res.k;
  j["domain_hash"] = res.domain_hash;
  j["eigenvalues"] = nlohmann::json::array();
  for (double v : res.eigenvalues) j["eigenvalues"].push_back(jnum(v));
  j["residuals"] = nlohmann::json::array();
  for (double v : res.residuals) j["residuals"].push_back(jnum(v));
  return j;
}

inline nlohmann::json rho_theta_json(const RhoTheta& rt) {
  nlohmann::json j;
  j["theta"] = jnum(rt.theta);
  j["value"] = jnum(rt.value);
  j["found"] = rt.found;
  j["sweep"] = nlohmann::json::array();
  for (size_t i = 0; i < rt.sweep_rho.size(); ++i) {
    nlohmann::json row;
    row["rho"] = jnum(rt.sweep_rho[i]);
    row["ratio"] = jnum(rt.sweep[i].value);
    row["stderr"] = jnum(rt.sweep[i].std_err);
    row["samples"] = rt.sweep[i].samples;
    j["sweep"].push_back(row);
  }
  j["later_violations"] = nlohmann::json::array();
  for (double v : rt.later_violations) j["later_violations"].push_back(jnum(v));
  return j;
}

}  // namespace detail

// --- individual tasks -------------------------------------------------------

inline TaskResult run_delta(const RunConfig& cfg, const Domain& dom,
                            const std::filesystem::path& out) {
  const double h = detail::task_h(cfg, dom);
  DeltaField field = detail::task_field(cfg, dom, h);
  {
    std::ofstream os(out / "delta.csv");
    if (!os) throw std::runtime_error("cannot write " + (out / "delta.csv").string());
    write_delta_csv(field, os);
  }
  TaskResult t;
  t.data["h"] = detail::jnum(h);
  t.data["rule_n"] = field.rule_n;
  t.data["quad_error"] = detail::jnum(field.quad_error);
  t.data["interior_nodes"] = field.interior.size();
  t.data["grid"] = {field.grid.npts[0], field.grid.npts[1], field.grid.npts[2]};
  t.data["csv"] = "delta.csv";
  return t;
}

inline TaskResult run_hardy(const RunConfig& cfg, const Domain& dom) {
  const double h = detail::task_h(cfg, dom);
  const int k = cfg.k > 0 ? cfg.k : 5;
  DeltaField coarse = detail::task_field(cfg, dom, h);
  DeltaField fine = detail::task_field(cfg, dom, h / 2);
  SpectralResult res_c = eigenvalues(assemble(dom, h), k);
  SpectralResult res_f = eigenvalues(assemble(dom, h / 2), k);

  TaskResult t;
  t.data = nlohmann::json::array();
  for (int j = 0; j < k; ++j) {
    BoundReport rep = hardy_check_calibrated(coarse, detail::full_grid_mode(res_c, j),
                                             fine, detail::full_grid_mode(res_f, j));
    rep.params["eigenfunction"] = j + 1;
    rep.seed = cfg.seed;
    t.pass = t.pass && rep.pass;
    t.data.push_back(rep);
  }
  return t;
}

inline TaskResult run_lieb(const RunConfig& cfg, const Domain& dom,
                           double lambda1 = 0.0) {
  const double h = detail::task_h(cfg, dom);
  if (lambda1 <= 0) lambda1 = lambda_min(dom, h);
  const std::vector<double> sweep =
      cfg.rho.empty() ? detail::default_rho_sweep(dom, 20, 0.5) : cfg.rho;
  const int64_t samples = detail::task_samples(cfg);

  TaskResult t;
  t.data["lambda1"] = detail::jnum(lambda1);
  t.data["reports"] = nlohmann::json::array();
  for (size_t i = 0; i < sweep.size(); ++i) {
    BoundReport rep = lieb_bound(dom, sweep[i], lambda1, samples,
                                 derive_seed(cfg.seed, "lieb", i));
    rep.seed = cfg.seed;
    t.pass = t.pass && rep.pass;
    t.data["reports"].push_back(rep);
  }
  return t;
}

inline TaskResult run_rho_theta(const RunConfig& cfg, const Domain& dom) {
  if (!(cfg.theta > 0)) detail::cfg_fail("task \"rho-theta\" requires \"theta\"");
  const std::vector<double> grid =
      cfg.rho.empty() ? detail::default_rho_sweep(dom, 32, 1.0) : cfg.rho;
  RhoTheta rt = rho_theta(dom, cfg.theta, grid, detail::task_samples(cfg),
                          derive_seed(cfg.seed, "rho-theta"));
  TaskResult t;
  t.pass = rt.found;
  t.data = detail::rho_theta_json(rt);
  t.data["seed"] = cfg.seed;
  return t;
}

inline TaskResult run_spectrum(const RunConfig& cfg, const Domain& dom,
                               const std::filesystem::path& out) {
  const double h = detail::task_h(cfg, dom);
  const int k = cfg.k > 0 ? cfg.k : 8;
  SpectralResult res = eigenvalues(assemble(dom, h), k);
  res.domain_hash = dom.hash;
  write_spectrum_csv(res, (out / "spectrum.csv").string());
  TaskResult t;
  t.data = detail::spectrum_json(res);
  t.data["csv"] = "spectrum.csv";
  return t;
}

inline TaskResult run_count(const RunConfig& cfg, const Domain& dom) {
  if (!(cfg.lambda > 0)) detail::cfg_fail("task \"count\" requires \"lambda\"");
  const double h = detail::task_h(cfg, dom);
  SpectralResult res = detail::eigens_covering(assemble(dom, h), cfg.lambda,
                                               cfg.k > 0 ? cfg.k : 16);
  const int count = count_leq(res, cfg.lambda);
  VolumeEstimate vol = volume_mc(dom, detail::task_samples(cfg),
                                 derive_seed(cfg.seed, "volume"));
  const double weyl = weyl_prediction(dom, cfg.lambda, vol.value);

  TaskResult t;
  t.data["lambda"] = detail::jnum(cfg.lambda);
  t.data["h"] = detail::jnum(h);
  t.data["count"] = count;
  t.data["weyl"] = detail::jnum(weyl);
  t.data["count_over_weyl"] = detail::jnum(weyl > 0 ? count / weyl : kNaN);
  t.data["volume"] = detail::jnum(vol.value);
  t.data["volume_stderr"] = detail::jnum(vol.std_err);
  t.data["seed"] = cfg.seed;
  return t;
}

inline TaskResult run_floss(const RunConfig& cfg, const Domain& dom) {
  if (!(cfg.lambda > 0)) detail::cfg_fail("task \"floss\" requires \"lambda\"");
  const double h = detail::task_h(cfg, dom);
  DeltaField field = detail::task_field(cfg, dom, h);
  SpectralResult res = detail::eigens_covering(assemble(dom, h), cfg.lambda,
                                               cfg.k > 0 ? cfg.k : 16);
  BoundReport rep = floss_rhs(field, cfg.lambda, detail::or_default(cfg.constant, 1.0), &res);
  rep.seed = cfg.seed;
  TaskResult t;
  t.pass = rep.pass;
  t.data = rep;
  return t;
}

inline TaskResult run_riesz(const RunConfig& cfg, const Domain& dom) {
  const double chain = detail::or_default(cfg.chain_factor, 2.0);
  double mu = cfg.mu;
  if (!(mu > 0)) {
    if (!(cfg.lambda > 0))
      detail::cfg_fail("task \"riesz\" requires \"mu\" (or \"lambda\", giving mu = 2 lambda)");
    mu = chain * cfg.lambda;
  }
  const double h = detail::task_h(cfg, dom);
  DeltaField field = detail::task_field(cfg, dom, h);
  SpectralResult res = detail::eigens_covering(assemble(dom, h), mu, cfg.k > 0 ? cfg.k : 16);
  BoundReport rep = riesz_bound_rhs_2d(field, mu, detail::or_default(cfg.gamma, 1.0),
                                       detail::or_default(cfg.constant, 1.0), &res, chain);
  rep.seed = cfg.seed;
  TaskResult t;
  t.pass = rep.pass;
  t.data = rep;
  return t;
}

inline TaskResult run_rozenblum(const RunConfig& cfg, const Domain& dom,
                                const std::filesystem::path& out,
                                const SpectralResult* res = nullptr) {
  if (!(cfg.lambda > 0)) detail::cfg_fail("task \"rozenblum\" requires \"lambda\"");
  const double theta = cfg.theta > 0 ? cfg.theta : 0.5;
  const double rho = packing_radius(dom.dim, cfg.lambda, theta);

  double h = detail::task_h(cfg, dom);
  if (cfg.h <= 0)  // auto-refine the default grid until extraction is allowed
    while (h > rho / 4) h /= 2;
  DeltaField field = detail::task_field(cfg, dom, h);
  BallPacking pk = rozenblum_extract(dom, field, cfg.lambda, theta,
                                     detail::task_samples(cfg),
                                     derive_seed(cfg.seed, "rozenblum"));

  // A spectrum makes the implied constant available; computing one is only
  // reasonable when the eigenvalue count up to lambda stays modest.
  SpectralResult local;
  if (!res) {
    VolumeEstimate vol = volume_mc(dom, detail::task_samples(cfg),
                                   derive_seed(cfg.seed, "volume"));
    const double expect = weyl_prediction(dom, cfg.lambda, vol.value);
    if (expect <= 256) {
      local = detail::eigens_covering(assemble(dom, detail::task_h(cfg, dom)), cfg.lambda,
                                      cfg.k > 0 ? cfg.k : 16);
      res = &local;
    }
  }
  BoundReport rep = verify_packing(pk, dom, res);
  rep.seed = cfg.seed;
  {
    std::ofstream os(out / "packing.csv");
    if (!os) throw std::runtime_error("cannot write " + (out / "packing.csv").string());
    const auto it = rep.params.find("c2_implied");
    write_packing_csv(pk, os, it != rep.params.end() ? it->second : kNaN);
  }
  TaskResult t;
  t.pass = rep.pass;
  t.data = rep;
  t.data["csv"] = "packing.csv";
  return t;
}

/// Full suite on one domain: delta field, Hardy check, Lieb sweep, rho_theta,
/// spectrum, counting vs. Weyl, Eq.-(3) implied constant, ball extraction +
/// verification.  Sections fail independently; the task fails if any does.
inline TaskResult run_report(const RunConfig& cfg, const Domain& dom,
                             const std::filesystem::path& out) {
  TaskResult t;
  nlohmann::json& sections = t.data["sections"];
  nlohmann::json& status = t.data["status"];

  const auto section = [&](const char* name, auto&& fn) {
    try {
      TaskResult r = fn();
      sections[name] = std::move(r.data);
      status[name] = r.pass;
      t.pass = t.pass && r.pass;
    } catch (const std::exception& e) {
      sections[name] = nlohmann::json{{"error", e.what()}};
      status[name] = false;
      t.pass = false;
    }
  };

  section("delta", [&] { return run_delta(cfg, dom, out); });
  section("hardy", [&] { return run_hardy(cfg, dom); });

  // One spectrum serves lambda_1, the default lambda scale, the count, the
  // implied constant, and the packing verification.
  double lambda = cfg.lambda;
  double lambda1 = 0;
  SpectralResult res;
  bool have_res = false;
  try {
    const double h = detail::task_h(cfg, dom);
    res = eigenvalues(assemble(dom, h), std::max(cfg.k, 16));
    lambda1 = res.eigenvalues.front();
    if (!(lambda > 0)) lambda = 0.5 * (res.eigenvalues[7] + res.eigenvalues[8]);
    if (res.eigenvalues.back() <= lambda)
      res = detail::eigens_covering(assemble(dom, h), lambda, 2 * res.k);
    res.domain_hash = dom.hash;
    have_res = true;
    write_spectrum_csv(res, (out / "spectrum.csv").string());
    sections["spectrum"] = detail::spectrum_json(res);
    sections["spectrum"]["csv"] = "spectrum.csv";
    status["spectrum"] = true;
  } catch (const std::exception& e) {
    sections["spectrum"] = nlohmann::json{{"error", e.what()}};
    status["spectrum"] = false;
    t.pass = false;
  }

  section("lieb", [&] { return run_lieb(cfg, dom, lambda1); });
  section("rho_theta", [&] {
    RunConfig c = cfg;
    if (!(c.theta > 0)) c.theta = 0.5;
    return run_rho_theta(c, dom);
  });

  if (have_res) {
    section("count", [&] {
      const int count = count_leq(res, lambda);
      VolumeEstimate vol = volume_mc(dom, detail::task_samples(cfg),
                                     derive_seed(cfg.seed, "volume"));
      const double weyl = weyl_prediction(dom, lambda, vol.value);
      TaskResult r;
      r.data["lambda"] = detail::jnum(lambda);
      r.data["count"] = count;
      r.data["weyl"] = detail::jnum(weyl);
      r.data["count_over_weyl"] = detail::jnum(weyl > 0 ? count / weyl : kNaN);
      r.data["volume"] = detail::jnum(vol.value);
      r.data["volume_stderr"] = detail::jnum(vol.std_err);
      return r;
    });
    section("floss", [&] {
      const double h = detail::task_h(cfg, dom);
      DeltaField field = detail::task_field(cfg, dom, h);
      BoundReport rep = floss_rhs(field, lambda, detail::or_default(cfg.constant, 1.0), &res);
      rep.seed = cfg.seed;
      TaskResult r;
      r.pass = rep.pass;
      r.data = rep;
      return r;
    });
    section("rozenblum", [&] {
      RunConfig c = cfg;
      c.lambda = lambda;
      return run_rozenblum(c, dom, out, &res);
    });
  } else {
    for (const char* name : {"count", "floss", "rozenblum"}) {
      sections[name] = nlohmann::json{{"error", "no spectrum available"}};
      status[name] = false;
    }
    t.pass = false;
  }
  return t;
}

// --- dispatch ---------------------------------------------------------------

inline const std::vector<std::string>& task_names() {
  static const std::vector<std::string> names = {
      "delta", "hardy-check", "lieb",  "rho-theta", "spectrum",
      "count", "riesz",       "floss", "rozenblum", "report"};
  return names;
}

/// Runs one task end to end and writes `<task>.json` (plus task CSVs) into
/// cfg.out_dir.  Returns the process exit code.
inline int run_task(const RunConfig& cfg) {
  bool known = false;
  for (const auto& name : task_names()) known = known || cfg.task == name;
  if (!known) detail::cfg_fail("unknown task \"" + cfg.task + "\"");

  const Domain dom = cfg.domain();
  if (!(dom.max_side() > 0)) detail::cfg_fail("domain bounding box is empty");

  const std::filesystem::path out(cfg.out_dir);
  std::filesystem::create_directories(out);

  TaskResult tr;
  if (cfg.task == "delta") tr = run_delta(cfg, dom, out);
  else if (cfg.task == "hardy-check") tr = run_hardy(cfg, dom);
  else if (cfg.task == "lieb") tr = run_lieb(cfg, dom);
  else if (cfg.task == "rho-theta") tr = run_rho_theta(cfg, dom);
  else if (cfg.task == "spectrum") tr = run_spectrum(cfg, dom, out);
  else if (cfg.task == "count") tr = run_count(cfg, dom);
  else if (cfg.task == "riesz") tr = run_riesz(cfg, dom);
  else if (cfg.task == "floss") tr = run_floss(cfg, dom);
  else if (cfg.task == "rozenblum") tr = run_rozenblum(cfg, dom, out);
  else tr = run_report(cfg, dom, out);

  nlohmann::json doc;
  doc["header"] = {{"tool", "hardy-spectral"},
                   {"task", cfg.task},
                   {"seed", cfg.seed},
                   {"domain_hash", dom.hash},
                   {"timestamp", detail::iso_timestamp()}};
  doc["pass"] = tr.pass;
  doc["result"] = std::move(tr.data);

  std::string fname = cfg.task;
  for (char& ch : fname)
    if (ch == '-') ch = '_';
  detail::write_file(out / (fname + ".json"), doc.dump(2) + "\n");
  return tr.pass ? 0 : 1;
}

}  // namespace hardyspec
