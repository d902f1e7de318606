#pragma once

#include "dbspace/debranges.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

namespace dbspace {

/// Unitary parameter selecting the self-adjoint extension with eigenvalue mu:
/// V_mu = Eminus(mu)^{-1} Eplus(mu). Unitary whenever the pair validated.
inline CMat v_mu(const DeBrangesOperator& db, double mu) {
  CMat em = db.Eminus()(Complex(mu, 0.0));
  if (sigma_min(em) <= db.tolerances().singular_accept * std::max(1.0, opnorm(em)))
    throw SingularityError("v_mu: Eminus(mu) numerically singular");
  return em.partialPivLu().solve(db.Eplus()(Complex(mu, 0.0)));
}

struct ScanConfig {
  int grid_count = 2000;
  int refine_iters = 100;
};

/// Real spectrum of the extension parametrized by V on [lo, hi]: the nodes are
/// the mu with Eplus(mu) - Eminus(mu) V singular, located by a sigma_min scan
/// plus golden-section refinement. Empty node list = empty spectrum (the
/// sigma profile stays available for inspection).
struct ExtensionSpectrum {
  CMat V;
  double lo = 0.0, hi = 0.0;
  std::vector<double> nodes;                           // strictly increasing
  std::vector<CMat> nullspaces;                        // per node, orthonormal columns
  std::vector<double> residuals;                       // sigma_min at each node
  std::vector<std::pair<double, double>> sigma_profile;  // (mu, sigma) scan samples

  bool empty() const { return nodes.empty(); }
  int multiplicity(std::size_t i) const { return static_cast<int>(nullspaces[i].cols()); }
};

namespace detail {

inline double pencil_sigma(const DeBrangesOperator& db, const CMat& v, double mu) {
  Complex z(mu, 0.0);
  return sigma_min(db.Eplus()(z) - db.Eminus()(z) * v);
}

inline double golden_section_min(const std::function<double(double)>& f, double a, double b,
                                 int iters) {
  const double gr = 0.6180339887498949;
  double c = b - gr * (b - a);
  double d = a + gr * (b - a);
  double fc = f(c), fd = f(d);
  for (int k = 0; k < iters && (b - a) > 1e-15 * (1.0 + std::abs(a) + std::abs(b)); ++k) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = f(d);
    }
  }
  return fc < fd ? c : d;
}

}  // namespace detail

inline ExtensionSpectrum spectrum(const DeBrangesOperator& db, const CMat& v, double lo, double hi,
                                  const ScanConfig& scan = {}) {
  if (!(lo < hi)) throw PreconditionError("spectrum: empty interval");
  if (!is_unitary(v, db.tolerances().unitary_tol))
    throw PreconditionError("spectrum: parameter V is not unitary within tolerance");
  if (v.rows() != db.dim()) throw DimensionError("spectrum: V dimension mismatch");

  ExtensionSpectrum out;
  out.V = v;
  out.lo = lo;
  out.hi = hi;

  const int n = std::max(scan.grid_count, 3);
  std::vector<double> mu(n), sg(n);
  for (int k = 0; k < n; ++k) {
    mu[k] = lo + (hi - lo) * k / (n - 1.0);
    sg[k] = detail::pencil_sigma(db, v, mu[k]);
    out.sigma_profile.emplace_back(mu[k], sg[k]);
  }

  auto f = [&](double m) { return detail::pencil_sigma(db, v, m); };
  std::vector<std::pair<double, double>> found;  // (node, sigma)
  // interior local minima only: a dip at lo/hi itself cannot be bracketed and
  // boundary eigenvalues are not certified as members of the interval
  for (int k = 1; k + 1 < n; ++k) {
    if (!(sg[k] < sg[k - 1] && sg[k] <= sg[k + 1])) continue;
    double a = mu[k - 1];
    double b = mu[k + 1];
    double m = detail::golden_section_min(f, a, b, scan.refine_iters);
    double s = f(m);
    Complex z(m, 0.0);
    double scale = 1.0 + opnorm(db.Eplus()(z));
    if (s <= db.tolerances().singular_accept * scale) found.emplace_back(m, s);
  }

  std::sort(found.begin(), found.end());
  for (const auto& [m, s] : found) {
    if (!out.nodes.empty() && m - out.nodes.back() <= 1e-9 * (1.0 + std::abs(m))) {
      if (s < out.residuals.back()) {
        out.nodes.back() = m;
        out.residuals.back() = s;
      }
      continue;
    }
    out.nodes.push_back(m);
    out.residuals.push_back(s);
  }

  for (std::size_t i = 0; i < out.nodes.size(); ++i) {
    Complex z(out.nodes[i], 0.0);
    CMat pencil = db.Eplus()(z) - db.Eminus()(z) * v;
    Eigen::JacobiSVD<CMat> svd(pencil, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    double thresh = db.tolerances().singular_accept * (1.0 + opnorm(db.Eplus()(z)));
    Index nullity = 0;
    for (Index j = sv.size() - 1; j >= 0 && sv(j) <= thresh; --j) ++nullity;
    nullity = std::max<Index>(nullity, 1);
    out.nullspaces.push_back(svd.matrixV().rightCols(nullity));
  }
  return out;
}

/// Eigenfunction of the extension at node mu for null vector u, normalized
/// with lambda = 1: the kernel section at mu with coefficient (Eplus(mu)*)^{-1} u.
inline KernelCombo eigenfunction(const DeBrangesOperator& db, double mu, const CVec& u) {
  if (u.size() != db.dim()) throw DimensionError("eigenfunction: vector dimension");
  CMat ep = db.Eplus()(Complex(mu, 0.0));
  if (sigma_min(ep) <= db.tolerances().singular_accept * std::max(1.0, opnorm(ep)))
    throw SingularityError("eigenfunction: Eplus(mu) numerically singular");
  CVec coeff = CMat(ep.adjoint()).partialPivLu().solve(u);
  return KernelCombo(db, {mu}, {coeff});
}

struct OrthogonalityReport {
  double max_cross = 0.0;  // max inter-node |<K_{mu_j}(mu_i) u~_j, u~_i>|
  double scale = 0.0;      // max diagonal <K_{mu_i}(mu_i) u~_i, u~_i>
  double tol = 0.0;
  bool passed = false;
  std::pair<double, double> worst_pair{0.0, 0.0};
};

/// Eigenfunctions at distinct nodes must be orthogonal; reports the worst
/// cross Gram entry against tol * scale.
inline OrthogonalityReport orthogonality_check(const DeBrangesOperator& db,
                                               const ExtensionSpectrum& spec, double tol) {
  if (spec.empty()) throw PreconditionError("orthogonality_check: empty spectrum");
  OrthogonalityReport rep;
  rep.tol = tol;
  std::vector<std::vector<CVec>> twisted(spec.nodes.size());
  for (std::size_t i = 0; i < spec.nodes.size(); ++i) {
    CMat ep = db.Eplus()(Complex(spec.nodes[i], 0.0));
    auto lu = CMat(ep.adjoint()).partialPivLu();
    for (Index c = 0; c < spec.nullspaces[i].cols(); ++c)
      twisted[i].push_back(lu.solve(CVec(spec.nullspaces[i].col(c))));
  }
  for (std::size_t i = 0; i < spec.nodes.size(); ++i) {
    for (const CVec& ui : twisted[i]) {
      double d = std::abs(ui.dot(kernel(db, spec.nodes[i], spec.nodes[i]) * ui));
      rep.scale = std::max(rep.scale, d);
    }
  }
  for (std::size_t i = 0; i < spec.nodes.size(); ++i)
    for (std::size_t j = 0; j < spec.nodes.size(); ++j) {
      if (i == j) continue;
      CMat kji = kernel(db, spec.nodes[j], spec.nodes[i]);
      for (const CVec& ui : twisted[i])
        for (const CVec& uj : twisted[j]) {
          double v = std::abs(ui.dot(kji * uj));
          if (v > rep.max_cross) {
            rep.max_cross = v;
            rep.worst_pair = {spec.nodes[i], spec.nodes[j]};
          }
        }
    }
  rep.passed = rep.max_cross <= tol * std::max(rep.scale, 1e-300);
  return rep;
}

/// Truncated Kramer expansion f(z) ~ sum_i K_{mu_i}(z) K_{mu_i}(mu_i)^{-1} f(mu_i)
/// from samples aligned with the spectrum nodes.
inline CVec kramer_reconstruct(const DeBrangesOperator& db, const ExtensionSpectrum& spec,
                               const std::vector<CVec>& samples, Complex z) {
  if (samples.size() != spec.nodes.size())
    throw DimensionError("kramer_reconstruct: samples must align with nodes");
  CVec out = CVec::Zero(db.dim());
  for (std::size_t i = 0; i < spec.nodes.size(); ++i) {
    if (samples[i].size() != db.dim())
      throw DimensionError("kramer_reconstruct: sample dimension");
    CMat kd = kernel(db, spec.nodes[i], spec.nodes[i]);
    if (sigma_min(kd) <= db.tolerances().singular_accept * std::max(1.0, opnorm(kd)))
      throw SingularityError("kramer_reconstruct: singular diagonal kernel at node " +
                             std::to_string(spec.nodes[i]));
    out += kernel(db, spec.nodes[i], z) * kd.partialPivLu().solve(samples[i]);
  }
  return out;
}

struct ConvergenceReport {
  std::vector<int> levels;
  std::vector<double> sup_errors;
  bool monotone_trend = false;
};

/// Empirical convergence of the truncated expansion: sup error on eval_grid
/// per truncation level N, with the N nodes nearest the origin used first.
inline ConvergenceReport sampling_convergence(const DeBrangesOperator& db,
                                              const ExtensionSpectrum& spec,
                                              const std::function<CVec(Complex)>& f,
                                              const std::vector<Complex>& eval_grid,
                                              const std::vector<int>& levels) {
  ConvergenceReport rep;
  if (eval_grid.empty()) return rep;

  std::vector<std::size_t> order(spec.nodes.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    double da = std::abs(spec.nodes[a]), db_ = std::abs(spec.nodes[b]);
    if (da != db_) return da < db_;
    return spec.nodes[a] < spec.nodes[b];
  });

  for (int level : levels) {
    std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(std::max(level, 0)),
                                             spec.nodes.size());
    ExtensionSpectrum sub;
    sub.V = spec.V;
    sub.lo = spec.lo;
    sub.hi = spec.hi;
    std::vector<std::size_t> chosen(order.begin(), order.begin() + take);
    std::sort(chosen.begin(), chosen.end(),
              [&](std::size_t a, std::size_t b) { return spec.nodes[a] < spec.nodes[b]; });
    std::vector<CVec> samples;
    for (std::size_t idx : chosen) {
      sub.nodes.push_back(spec.nodes[idx]);
      sub.nullspaces.push_back(spec.nullspaces[idx]);
      sub.residuals.push_back(spec.residuals[idx]);
      samples.push_back(f(Complex(spec.nodes[idx], 0.0)));
    }
    double err = 0.0;
    for (Complex z : eval_grid) {
      CVec rec = kramer_reconstruct(db, sub, samples, z);
      err = std::max(err, (rec - f(z)).norm());
    }
    rep.levels.push_back(level);
    rep.sup_errors.push_back(err);
  }
  rep.monotone_trend = true;
  for (std::size_t k = 1; k < rep.sup_errors.size(); ++k)
    if (rep.sup_errors[k] > rep.sup_errors[k - 1] * 1.05 + 1e-300) rep.monotone_trend = false;
  return rep;
}

}  // namespace dbspace
