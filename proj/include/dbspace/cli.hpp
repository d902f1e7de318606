#pragma once

#include "dbspace/serialize.hpp"

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace dbspace::cli {

/// Bad command line / config shape. Mapped to exit code 1 by the tool;
/// numeric and validation failures are embedded in reports with exit code 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

inline const std::vector<std::string>& known_commands() {
  static const std::vector<std::string> cmds = {
      "validate",       "kernel-eval",     "gram",       "positivity",
      "subspace-kernel", "recover-e",      "spectrum",   "eigenfunctions",
      "reconstruct",    "canonical-identity", "inner-check", "isometry-check"};
  return cmds;
}

struct RunConfig {
  Json raw;
  std::string hash;
  Tolerances tol;
  ValidationConfig vcfg;
  std::uint64_t seed = 1;
  std::string output_dir = ".";

  bool canonical = false;
  std::optional<CanonicalSystemSpec> canon_spec;
  double canon_r = 0.0;
  Complex canon_xi0{0.0, 1.0};
  std::optional<EFun> eminus, eplus;
};

namespace detail {

inline Complex get_complex(const Json& j, const char* key) {
  if (!j.contains(key)) throw UsageError(std::string("missing parameter: ") + key);
  return complex_from_json(j.at(key));
}

inline Complex get_complex(const Json& j, const char* key, Complex dflt) {
  return j.contains(key) ? complex_from_json(j.at(key)) : dflt;
}

inline double get_double(const Json& j, const char* key, double dflt) {
  return j.contains(key) ? j.at(key).get<double>() : dflt;
}

inline int get_int(const Json& j, const char* key, int dflt) {
  return j.contains(key) ? j.at(key).get<int>() : dflt;
}

}  // namespace detail

inline RunConfig parse_config(const Json& j, const std::string& raw_bytes) {
  RunConfig cfg;
  cfg.raw = j;
  cfg.hash = hash_hex(raw_bytes);
  if (j.contains("tolerances")) {
    const Json& t = j["tolerances"];
    cfg.tol.psd_tol = detail::get_double(t, "psd_tol", cfg.tol.psd_tol);
    cfg.tol.rank_rel_tol = detail::get_double(t, "rank_rel_tol", cfg.tol.rank_rel_tol);
    cfg.tol.unitary_tol = detail::get_double(t, "unitary_tol", cfg.tol.unitary_tol);
    cfg.tol.singular_accept = detail::get_double(t, "singular_accept", cfg.tol.singular_accept);
  }
  if (j.contains("validation")) {
    const Json& v = j["validation"];
    cfg.vcfg.symmetry_tol = detail::get_double(v, "symmetry_tol", cfg.vcfg.symmetry_tol);
    cfg.vcfg.inner_tol = detail::get_double(v, "inner_tol", cfg.vcfg.inner_tol);
    cfg.vcfg.sym_nre = detail::get_int(v, "sym_nre", cfg.vcfg.sym_nre);
    cfg.vcfg.sym_nim = detail::get_int(v, "sym_nim", cfg.vcfg.sym_nim);
    cfg.vcfg.upper_count = detail::get_int(v, "upper_count", cfg.vcfg.upper_count);
    cfg.vcfg.real_count = detail::get_int(v, "real_count", cfg.vcfg.real_count);
    if (v.contains("witness_hint")) cfg.vcfg.witness_hint = complex_from_json(v["witness_hint"]);
  }
  cfg.seed = j.value("seed", 1u);
  if (const char* env = std::getenv("DBSPACE_OUTPUT_DIR")) cfg.output_dir = env;
  cfg.output_dir = j.value("output_dir", cfg.output_dir);

  if (!j.contains("construction")) throw UsageError("config lacks a construction");
  const Json& c = j["construction"];
  if (c.contains("pair") == c.contains("canonical"))
    throw UsageError("construction must be exactly one of pair / canonical");
  if (c.contains("pair")) {
    cfg.eminus = efun_from_json(c["pair"].at("Eminus"));
    cfg.eplus = efun_from_json(c["pair"].at("Eplus"));
  } else {
    const Json& k = c["canonical"];
    cfg.canonical = true;
    cfg.canon_spec = canonical_spec_from_json(k.at("system"));
    cfg.canon_r = detail::get_double(k, "r", cfg.canon_spec->a);
    cfg.canon_xi0 = detail::get_complex(k, "xi0", Complex(0.0, 1.0));
  }
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open config file: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Json j;
  try {
    j = Json::parse(bytes);
  } catch (const Json::parse_error& e) {
    throw UsageError(std::string("config parse error: ") + e.what());
  }
  return parse_config(j, bytes);
}

namespace detail {

struct Reporter {
  const RunConfig& cfg;
  std::string command;

  std::string path(const std::string& name) const {
    return (std::filesystem::path(cfg.output_dir) / name).string();
  }

  void write(Json data, bool passed) const {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.output_dir);
    Json rep{{"schema_version", 1},
             {"toolkit_version", kVersion},
             {"config_hash", cfg.hash},
             {"command", command},
             {"passed", passed},
             {"data", std::move(data)}};
    std::ofstream out(path(command + ".json"), std::ios::binary);
    out << rep.dump(2) << "\n";
  }
};

inline DeBrangesOperator build_db(const RunConfig& cfg) {
  if (cfg.canonical)
    return to_debranges(*cfg.canon_spec, cfg.canon_r, cfg.vcfg, cfg.tol, cfg.canon_xi0);
  return validate(*cfg.eminus, *cfg.eplus, cfg.vcfg, cfg.tol);
}

inline CMat parse_v(const Json& p, const DeBrangesOperator& db) {
  if (!p.contains("V")) throw UsageError("spectrum: missing parameter V");
  const Json& v = p["V"];
  const Index n = db.dim();
  if (v.is_string()) {
    std::string s = v.get<std::string>();
    if (s == "identity") return CMat::Identity(n, n);
    if (s == "minus_identity") return CMat(-CMat::Identity(n, n));
    throw UsageError("unknown V builtin: " + s);
  }
  if (v.is_object() && v.contains("v_mu")) return v_mu(db, v["v_mu"].get<double>());
  return mat_from_json(v);
}

inline ExtensionSpectrum run_spectrum(const Json& p, const DeBrangesOperator& db) {
  if (!p.contains("interval")) throw UsageError("spectrum: missing interval");
  double lo = p["interval"][0].get<double>();
  double hi = p["interval"][1].get<double>();
  ScanConfig scan;
  scan.grid_count = get_int(p, "grid_count", scan.grid_count);
  scan.refine_iters = get_int(p, "refine_iters", scan.refine_iters);
  return spectrum(db, parse_v(p, db), lo, hi, scan);
}

}  // namespace detail

/// Execute one named command against a parsed config. Returns the process
/// exit status: 0 pass, 2 validation/property failure. Usage problems throw
/// UsageError (exit 1 in the tool).
inline int run(const RunConfig& cfg, const std::string& command) {
  const auto& cmds = known_commands();
  if (std::find(cmds.begin(), cmds.end(), command) == cmds.end())
    throw UsageError("unknown command: " + command);
  if ((command == "positivity" || command == "recover-e") && !cfg.raw.contains("seed"))
    throw UsageError(command + " samples pseudo-randomly and needs an explicit seed");
  detail::Reporter rep{cfg, command};
  const Json params = cfg.raw.contains("commands") && cfg.raw["commands"].contains(command)
                          ? cfg.raw["commands"][command]
                          : Json::object();

  if (command == "validate") {
    ValidationReport vr;
    if (cfg.canonical) {
      try {
        vr = detail::build_db(cfg).report();
      } catch (const ValidationFailure& e) {
        vr = e.report;
      }
    } else {
      vr = validation_report(*cfg.eminus, *cfg.eplus, cfg.vcfg, cfg.tol);
    }
    rep.write(validation_report_to_json(vr), vr.passed);
    return vr.passed ? 0 : 2;
  }

  std::optional<DeBrangesOperator> db;
  try {
    db.emplace(detail::build_db(cfg));
  } catch (const ValidationFailure& e) {
    rep.write(Json{{"validation", validation_report_to_json(e.report)}}, false);
    return 2;
  }

  try {
    if (command == "kernel-eval") {
      Complex xi = detail::get_complex(params, "xi");
      Complex z = detail::get_complex(params, "z");
      CMat k = kernel(*db, xi, z);
      write_matrix_csv(rep.path("kernel-eval.csv"), k);
      rep.write(Json{{"xi", complex_to_json(xi)}, {"z", complex_to_json(z)},
                     {"kernel", mat_to_json(k)}},
                true);
      return 0;
    }

    if (command == "gram") {
      if (!params.contains("points") || !params.contains("vectors"))
        throw UsageError("gram: needs points and vectors");
      std::vector<Complex> pts;
      for (const Json& p : params["points"]) pts.push_back(complex_from_json(p));
      std::vector<CVec> vecs;
      for (const Json& v : params["vectors"]) vecs.push_back(vec_from_json(v));
      CMat g = gram(*db, pts, vecs);
      Eigen::SelfAdjointEigenSolver<CMat> es(CMat(0.5 * (g + g.adjoint())),
                                             Eigen::EigenvaluesOnly);
      write_matrix_csv(rep.path("gram.csv"), g);
      rep.write(Json{{"gram", mat_to_json(g)},
                     {"hermiticity_defect", opnorm(g - g.adjoint())},
                     {"min_eigenvalue", es.eigenvalues()(0)}},
                true);
      return 0;
    }

    if (command == "positivity") {
      PositivitySampler sampler;
      sampler.count = detail::get_int(params, "count", sampler.count);
      sampler.draws = detail::get_int(params, "draws", sampler.draws);
      sampler.seed = cfg.seed;
      if (params.contains("box")) {
        sampler.re_lo = params["box"][0].get<double>();
        sampler.re_hi = params["box"][1].get<double>();
        sampler.im_lo = params["box"][2].get<double>();
        sampler.im_hi = params["box"][3].get<double>();
      }
      double tol = detail::get_double(params, "tol", cfg.tol.psd_tol);
      PositivityReport pr = verify_positivity(*db, sampler, tol);
      rep.write(Json{{"draws", pr.draws},
                     {"worst_min_eig", pr.worst_min_eig},
                     {"worst_gram_norm", pr.worst_gram_norm},
                     {"worst_margin", pr.worst_margin},
                     {"tol", tol}},
                pr.passed);
      return pr.passed ? 0 : 2;
    }

    if (command == "subspace-kernel") {
      Complex beta = detail::get_complex(params, "beta");
      Complex xi = detail::get_complex(params, "xi");
      Complex z = detail::get_complex(params, "z");
      CMat k = subspace_kernel(*db, beta, xi, z);
      write_matrix_csv(rep.path("subspace-kernel.csv"), k);
      rep.write(Json{{"beta", complex_to_json(beta)}, {"xi", complex_to_json(xi)},
                     {"z", complex_to_json(z)}, {"kernel", mat_to_json(k)}},
                true);
      return 0;
    }

    if (command == "recover-e") {
      Complex beta = detail::get_complex(params, "beta", Complex(0.0, 1.0));
      int pairs = detail::get_int(params, "check_pairs", 50);
      double tol = detail::get_double(params, "tol", 1e-8);
      RecoveredPair rec = recover_E(*db, beta);
      SplitMix64 rng(cfg.seed);
      double max_err = 0.0, scale = 0.0;
      for (int k = 0; k < pairs; ++k) {
        Complex xi = rng.complex_in_box(-2.0, 2.0, -1.0, 1.0);
        Complex z = rng.complex_in_box(-2.0, 2.0, -1.0, 1.0);
        CMat orig = kernel(*db, xi, z);
        max_err = std::max(max_err, opnorm(kernel_from_pair(rec, xi, z) - orig));
        scale = std::max(scale, opnorm(orig));
      }
      bool passed = max_err <= tol * std::max(1.0, scale);
      rep.write(Json{{"beta", complex_to_json(beta)}, {"check_pairs", pairs},
                     {"max_rebuild_error", max_err}, {"scale", scale}, {"tol", tol}},
                passed);
      return passed ? 0 : 2;
    }

    if (command == "spectrum") {
      ExtensionSpectrum sp = detail::run_spectrum(params, *db);
      write_spectrum_csv(rep.path("spectrum.csv"), sp);
      write_sigma_profile_csv(rep.path("sigma_profile.csv"), sp);
      rep.write(spectrum_to_json(sp), true);
      return 0;
    }

    if (command == "eigenfunctions") {
      ExtensionSpectrum sp = detail::run_spectrum(params, *db);
      Json nodes = Json::array();
      for (std::size_t i = 0; i < sp.nodes.size(); ++i) {
        Json coeffs = Json::array();
        for (Index c = 0; c < sp.nullspaces[i].cols(); ++c) {
          KernelCombo g = eigenfunction(*db, sp.nodes[i], CVec(sp.nullspaces[i].col(c)));
          coeffs.push_back(vec_to_json(g.coeffs().front()));
        }
        nodes.push_back(Json{{"mu", sp.nodes[i]}, {"coefficients", coeffs}});
      }
      rep.write(Json{{"nodes", nodes}}, true);
      return 0;
    }

    if (command == "reconstruct") {
      if (!params.contains("spectrum") || !params.contains("f"))
        throw UsageError("reconstruct: needs spectrum and f");
      ExtensionSpectrum sp = detail::run_spectrum(params["spectrum"], *db);
      std::vector<Complex> pts;
      std::vector<CVec> coeffs;
      for (const Json& p : params["f"].at("points")) pts.push_back(complex_from_json(p));
      for (const Json& c : params["f"].at("coeffs")) coeffs.push_back(vec_from_json(c));
      KernelCombo f(*db, pts, coeffs);
      std::vector<Complex> eval;
      if (params.contains("eval")) {
        for (const Json& e : params["eval"]) eval.push_back(complex_from_json(e));
      } else {
        for (int k = 0; k <= 100; ++k) eval.emplace_back(-5.0 + 0.1 * k, 0.0);
      }
      std::vector<CVec> samples;
      for (double mu : sp.nodes) samples.push_back(f.evaluate(Complex(mu, 0.0)));
      double sup_err = 0.0, sup_f = 0.0;
      std::vector<std::vector<double>> rows;
      for (Complex z : eval) {
        CVec rec = kramer_reconstruct(*db, sp, samples, z);
        CVec fv = f.evaluate(z);
        double err = (rec - fv).norm();
        sup_err = std::max(sup_err, err);
        sup_f = std::max(sup_f, fv.norm());
        rows.push_back({z.real(), z.imag(), fv.norm(), rec.norm(), err});
      }
      write_csv(rep.path("reconstruct.csv"), {"z_re", "z_im", "f_norm", "rec_norm", "error"},
                rows);
      Json data{{"nodes_used", sp.nodes.size()},
                {"sup_error", sup_err},
                {"sup_f", sup_f},
                {"relative_sup_error", sup_f > 0.0 ? sup_err / sup_f : 0.0}};
      bool passed = true;
      if (params.contains("levels")) {
        std::vector<int> levels = params["levels"].get<std::vector<int>>();
        auto shared = std::make_shared<const KernelCombo>(f);
        ConvergenceReport cr = sampling_convergence(
            *db, sp, [shared](Complex z) { return shared->evaluate(z); }, eval, levels);
        data["levels"] = cr.levels;
        data["level_sup_errors"] = cr.sup_errors;
        data["monotone_trend"] = cr.monotone_trend;
      }
      if (params.contains("tol")) {
        double tol = params["tol"].get<double>();
        passed = sup_f > 0.0 ? sup_err <= tol * sup_f : sup_err <= tol;
        data["tol"] = tol;
      }
      rep.write(data, passed);
      return passed ? 0 : 2;
    }

    if (command == "canonical-identity") {
      if (!cfg.canonical)
        throw UsageError("canonical-identity requires a canonical construction");
      double r = detail::get_double(params, "r", cfg.canon_r);
      Complex z = detail::get_complex(params, "z", Complex(0.0, 1.0));
      Complex xi = detail::get_complex(params, "xi", Complex(0.0, 1.0));
      double tol = detail::get_double(params, "tol", 1e-6);
      double res = integral_identity_residual(*cfg.canon_spec, r, z, xi);
      auto trace = canonical_trace(*cfg.canon_spec, r, z);
      std::vector<std::vector<double>> rows;
      for (const auto& [rr, nrm] : trace) rows.push_back({rr, nrm});
      write_csv(rep.path("canonical-trace.csv"), {"r", "state_norm"}, rows);
      bool passed = res <= tol;
      rep.write(Json{{"r", r}, {"z", complex_to_json(z)}, {"xi", complex_to_json(xi)},
                     {"residual", res}, {"tol", tol}},
                passed);
      return passed ? 0 : 2;
    }

    if (command == "inner-check") {
      double tol = detail::get_double(params, "tol", cfg.vcfg.inner_tol);
      MatFn f = [&db, &cfg](Complex z) {
        return ratio_evaluate(db->Eplus(), db->Eminus(), z, cfg.tol.singular_accept);
      };
      InnerCheckReport ir = inner_check(f, cfg.vcfg.upper_grid(), cfg.vcfg.real_grid(), tol);
      rep.write(inner_report_to_json(ir), ir.pass_two_sided());
      return ir.pass_two_sided() ? 0 : 2;
    }

    if (command == "isometry-check") {
      Complex beta = detail::get_complex(params, "beta", Complex(0.0, 1.0));
      Complex w = detail::get_complex(params, "w", Complex(0.4, 0.0));
      CVec u = params.contains("u") ? vec_from_json(params["u"])
                                    : CVec(CVec::Ones(db->dim()) / std::sqrt(double(db->dim())));
      double tol = detail::get_double(params, "tol", 1e-9);
      IsometryReport ir = isometry_check(*db, beta, w, u);
      bool passed = ir.difference <= tol;
      rep.write(Json{{"beta", complex_to_json(beta)}, {"w", complex_to_json(w)},
                     {"norm_f_sq", ir.norm_f_sq}, {"norm_h_sq", ir.norm_h_sq},
                     {"difference", ir.difference}, {"tol", tol}},
                passed);
      return passed ? 0 : 2;
    }
  } catch (const UsageError&) {
    throw;
  } catch (const Error& e) {
    rep.write(Json{{"error", e.what()}}, false);
    return 2;
  }

  throw UsageError("unknown command: " + command);  // unreachable
}

}  // namespace dbspace::cli
