#pragma once

#include "dbspace/canonical.hpp"
#include "dbspace/debranges.hpp"
#include "dbspace/efun.hpp"
#include "dbspace/extensions.hpp"

#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace dbspace {

using Json = nlohmann::json;

inline Json complex_to_json(Complex z) { return Json::array({z.real(), z.imag()}); }

inline Complex complex_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 2)
    throw PreconditionError("expected complex as [re, im]: " + j.dump());
  return {j[0].get<double>(), j[1].get<double>()};
}

inline Json vec_to_json(const CVec& v) {
  Json out = Json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(complex_to_json(v(i)));
  return out;
}

inline CVec vec_from_json(const Json& j) {
  if (!j.is_array()) throw PreconditionError("expected vector as array of [re, im]");
  CVec v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = complex_from_json(j[i]);
  return v;
}

inline Json mat_to_json(const CMat& m) {
  Json out = Json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(complex_to_json(m(r, c)));
    out.push_back(row);
  }
  return out;
}

inline CMat mat_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) throw PreconditionError("expected matrix as array of rows");
  Index rows = static_cast<Index>(j.size());
  Index cols = static_cast<Index>(j[0].size());
  CMat m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    if (static_cast<Index>(j[r].size()) != cols)
      throw PreconditionError("ragged matrix rows in JSON");
    for (Index c = 0; c < cols; ++c) m(r, c) = complex_from_json(j[r][c]);
  }
  if (!all_finite(m)) throw PreconditionError("non-finite matrix entry in JSON");
  return m;
}

/// Load a sampled potential from CSV: each row is r followed by the n^2
/// entries of q(r) in row-major order as re,im pairs.
inline void load_potential_csv(const std::string& path, Index n, std::vector<double>& rs,
                               std::vector<CMat>& qs) {
  std::ifstream in(path);
  if (!in) throw PreconditionError("cannot open potential CSV: " + path);
  std::string line;
  bool header_skipped = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        vals.push_back(std::stod(cell));
      } catch (...) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (!header_skipped) {
        header_skipped = true;
        continue;
      }
      throw PreconditionError("non-numeric potential CSV row: " + line);
    }
    if (static_cast<Index>(vals.size()) != 1 + 2 * n * n)
      throw PreconditionError("potential CSV row has wrong arity");
    rs.push_back(vals[0]);
    CMat q(n, n);
    for (Index r = 0; r < n; ++r)
      for (Index c = 0; c < n; ++c) {
        std::size_t k = 1 + 2 * static_cast<std::size_t>(r * n + c);
        q(r, c) = Complex(vals[k], vals[k + 1]);
      }
    qs.push_back(q);
  }
  if (rs.empty()) throw PreconditionError("empty potential CSV: " + path);
}

inline Json canonical_spec_to_json(const CanonicalSystemSpec& s) {
  Json j;
  j["n"] = s.n;
  j["a"] = s.a;
  j["step"] = s.step;
  switch (s.potential) {
    case CanonicalSystemSpec::Potential::Zero:
      j["potential"] = "zero";
      break;
    case CanonicalSystemSpec::Potential::Constant:
      j["potential"] = Json{{"constant_matrix", mat_to_json(s.constant_q)}};
      break;
    case CanonicalSystemSpec::Potential::Sampled: {
      Json samples;
      samples["r"] = s.sample_r;
      Json qs = Json::array();
      for (const CMat& q : s.sample_q) qs.push_back(mat_to_json(q));
      samples["q"] = qs;
      j["potential"] = Json{{"samples", samples}};
      break;
    }
  }
  return j;
}

inline CanonicalSystemSpec canonical_spec_from_json(const Json& j) {
  Index n = j.at("n").get<Index>();
  double a = j.at("a").get<double>();
  double step = j.value("step", a / 1000.0);
  const Json& pot = j.at("potential");
  if (pot.is_string()) {
    std::string s = pot.get<std::string>();
    if (s == "zero") return CanonicalSystemSpec::zero(n, a, step);
    if (s.rfind("constant:", 0) == 0) {
      double c = std::stod(s.substr(9));
      return CanonicalSystemSpec::constant(CMat(c * CMat::Identity(n, n)), a, step);
    }
    if (s.rfind("csv:", 0) == 0) {
      std::vector<double> rs;
      std::vector<CMat> qs;
      load_potential_csv(s.substr(4), n, rs, qs);
      return CanonicalSystemSpec::sampled(std::move(rs), std::move(qs), a, step);
    }
    throw PreconditionError("unknown potential builtin: " + s);
  }
  if (pot.contains("constant_matrix"))
    return CanonicalSystemSpec::constant(mat_from_json(pot["constant_matrix"]), a, step);
  if (pot.contains("samples")) {
    std::vector<double> rs = pot["samples"].at("r").get<std::vector<double>>();
    std::vector<CMat> qs;
    for (const Json& q : pot["samples"].at("q")) qs.push_back(mat_from_json(q));
    return CanonicalSystemSpec::sampled(std::move(rs), std::move(qs), a, step);
  }
  throw PreconditionError("unrecognized potential spec");
}

inline Json efun_to_json(const EFun& f) {
  Json j;
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, EFun::Exponential>) {
          j["type"] = "exponential";
          j["c"] = complex_to_json(v.c);
          j["M"] = mat_to_json(v.M);
        } else if constexpr (std::is_same_v<T, EFun::ExponentialSum>) {
          j["type"] = "exponential_sum";
          Json terms = Json::array();
          for (const auto& t : v.terms)
            terms.push_back(Json{{"c", complex_to_json(t.c)}, {"M", mat_to_json(t.M)}});
          j["terms"] = terms;
        } else if constexpr (std::is_same_v<T, EFun::Pencil>) {
          j["type"] = "pencil";
          j["A"] = mat_to_json(v.A);
          j["B"] = mat_to_json(v.B);
        } else if constexpr (std::is_same_v<T, EFun::Polynomial>) {
          j["type"] = "polynomial";
          Json cs = Json::array();
          for (const CMat& c : v.coeffs) cs.push_back(mat_to_json(c));
          j["coeffs"] = cs;
        } else if constexpr (std::is_same_v<T, EFun::CanonicalBacked>) {
          j["type"] = "canonical";
          j["system"] = canonical_spec_to_json(v.system);
          j["r"] = v.r;
          j["component"] = v.component == Component::Minus ? "minus" : "plus";
        } else if constexpr (std::is_same_v<T, EFun::PotapovHalfPlane>) {
          j["type"] = "potapov_halfplane";
          j["A"] = mat_to_json(v.A);
        } else {
          j["type"] = "characteristic_halfplane";
          j["A"] = mat_to_json(v.A);
        }
      },
      f.storage());
  return j;
}

inline EFun efun_from_json(const Json& j) {
  std::string type = j.at("type").get<std::string>();
  if (type == "exponential")
    return EFun::exponential(complex_from_json(j.at("c")), mat_from_json(j.at("M")));
  if (type == "exponential_sum") {
    std::vector<ExponentialTerm> terms;
    for (const Json& t : j.at("terms"))
      terms.push_back({complex_from_json(t.at("c")), mat_from_json(t.at("M"))});
    return EFun::exponential_sum(std::move(terms));
  }
  if (type == "pencil") return EFun::pencil(mat_from_json(j.at("A")), mat_from_json(j.at("B")));
  if (type == "polynomial") {
    std::vector<CMat> coeffs;
    for (const Json& c : j.at("coeffs")) coeffs.push_back(mat_from_json(c));
    return EFun::polynomial(std::move(coeffs));
  }
  if (type == "canonical") {
    Component comp = j.at("component").get<std::string>() == "minus" ? Component::Minus
                                                                     : Component::Plus;
    return EFun::canonical(canonical_spec_from_json(j.at("system")), j.at("r").get<double>(),
                           comp);
  }
  if (type == "potapov_halfplane") return EFun::potapov_halfplane(mat_from_json(j.at("A")));
  if (type == "characteristic_halfplane")
    return EFun::characteristic_halfplane(mat_from_json(j.at("A")));
  throw PreconditionError("unknown EFun type tag: " + type);
}

inline Json inner_report_to_json(const InnerCheckReport& r) {
  return Json{{"contractive_excess", r.contractive_excess},
              {"isometry_defect", r.isometry_defect},
              {"coisometry_defect", r.coisometry_defect},
              {"eval_failures", r.eval_failures},
              {"tol", r.tol},
              {"pass_contractive", r.pass_contractive},
              {"pass_inner", r.pass_inner},
              {"pass_star_inner", r.pass_star_inner}};
}

inline Json validation_report_to_json(const ValidationReport& r) {
  Json j{{"conjugate_symmetry_residual", r.symmetry_residual},
         {"inner", inner_report_to_json(r.inner)},
         {"witness_minus", complex_to_json(r.witness_minus)},
         {"witness_plus", complex_to_json(r.witness_plus)},
         {"witness_ratio_minus", r.witness_ratio_minus},
         {"witness_ratio_plus", r.witness_ratio_plus},
         {"index_pair", Json::array({r.index_pair.first, r.index_pair.second})},
         {"degenerate_kernel", r.degenerate_kernel},
         {"passed", r.passed}};
  if (!r.failure.empty()) j["failure"] = r.failure;
  if (r.proviso) {
    j["canonical_proviso"] = Json{{"xi0", complex_to_json(r.proviso->xi0)},
                                  {"gram_min_eig_upper", r.proviso->gram_min_eig_upper},
                                  {"gram_min_eig_lower", r.proviso->gram_min_eig_lower},
                                  {"selfadjoint_defect_plus", r.proviso->selfadjoint_defect_plus},
                                  {"selfadjoint_defect_minus", r.proviso->selfadjoint_defect_minus},
                                  {"positivity_witnessed", r.proviso->positivity_witnessed},
                                  {"selfadjoint_witnessed", r.proviso->selfadjoint_witnessed}};
  }
  return j;
}

inline Json spectrum_to_json(const ExtensionSpectrum& s) {
  Json nodes = Json::array();
  for (std::size_t i = 0; i < s.nodes.size(); ++i) {
    nodes.push_back(Json{{"mu", s.nodes[i]},
                         {"multiplicity", s.multiplicity(i)},
                         {"sigma_residual", s.residuals[i]},
                         {"nullspace", mat_to_json(s.nullspaces[i])}});
  }
  return Json{{"V", mat_to_json(s.V)},
              {"interval", Json::array({s.lo, s.hi})},
              {"nodes", nodes}};
}

// ---- CSV helpers (comma separated, header row, LF endings) ----

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_csv(const std::string& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw PreconditionError("cannot open CSV for writing: " + path);
  for (std::size_t i = 0; i < header.size(); ++i)
    out << (i ? "," : "") << header[i];
  out << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i)
      out << (i ? "," : "") << format_double(row[i]);
    out << "\n";
  }
}

/// Matrix dump: header names each entry's re/im pair, one CSV row per matrix row.
inline void write_matrix_csv(const std::string& path, const CMat& m) {
  std::vector<std::string> header;
  for (Index c = 0; c < m.cols(); ++c) {
    header.push_back("c" + std::to_string(c) + "_re");
    header.push_back("c" + std::to_string(c) + "_im");
  }
  std::vector<std::vector<double>> rows;
  for (Index r = 0; r < m.rows(); ++r) {
    std::vector<double> row;
    for (Index c = 0; c < m.cols(); ++c) {
      row.push_back(m(r, c).real());
      row.push_back(m(r, c).imag());
    }
    rows.push_back(std::move(row));
  }
  write_csv(path, header, rows);
}

inline void write_spectrum_csv(const std::string& path, const ExtensionSpectrum& s) {
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < s.nodes.size(); ++i)
    rows.push_back({s.nodes[i], static_cast<double>(s.multiplicity(i)), s.residuals[i]});
  write_csv(path, {"node", "multiplicity", "sigma_residual"}, rows);
}

inline void write_sigma_profile_csv(const std::string& path, const ExtensionSpectrum& s) {
  std::vector<std::vector<double>> rows;
  for (const auto& [mu, sg] : s.sigma_profile) rows.push_back({mu, sg});
  write_csv(path, {"mu", "sigma_min"}, rows);
}

inline std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hash_hex(const std::string& bytes) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a(bytes)));
  return buf;
}

}  // namespace dbspace
