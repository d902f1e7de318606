#pragma once

#include "dbspace/canonical.hpp"
#include "dbspace/efun.hpp"
#include "dbspace/linops.hpp"
#include "dbspace/types.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace dbspace {

/// Below this distance from the ray z = conj(xi) the kernel quotient loses
/// more than half its digits to cancellation, so the exact derivative branch
/// takes over. The O(1e-8) seam is accepted.
inline constexpr double kDiagonalSwitch = 1e-8;

struct CanonicalProvisoReport {
  Complex xi0;
  double gram_min_eig_upper = 0.0;  // min eig of \int F F* ds at xi0
  double gram_min_eig_lower = 0.0;  // same at conj(xi0)
  double selfadjoint_defect_plus = 0.0;   // ||Eplus(xi0) - Eplus(xi0)*||
  double selfadjoint_defect_minus = 0.0;  // ||Eminus(conj xi0) - Eminus(conj xi0)*||
  bool positivity_witnessed = false;
  bool selfadjoint_witnessed = false;
};

struct ValidationConfig {
  // grid for the conjugate-symmetry identity E+(z)E+(conj z)* = E-(z)E-(conj z)*
  double sym_re_lo = -3.0, sym_re_hi = 3.0;
  double sym_im_lo = -3.0, sym_im_hi = 3.0;
  int sym_nre = 11, sym_nim = 11;
  // inner-check grids
  int upper_count = 64;
  double upper_re_lo = -3.0, upper_re_hi = 3.0, upper_im_hi = 3.0;
  int real_count = 64;
  double real_lo = -10.0, real_hi = 10.0;
  double symmetry_tol = 1e-10;
  double inner_tol = 1e-8;
  std::optional<Complex> witness_hint;  // invertibility witness, grid-searched if absent

  std::vector<Complex> symmetry_grid() const {
    std::vector<Complex> g;
    g.reserve(static_cast<std::size_t>(sym_nre) * sym_nim);
    for (int i = 0; i < sym_nre; ++i)
      for (int j = 0; j < sym_nim; ++j) {
        double re = sym_nre > 1 ? sym_re_lo + (sym_re_hi - sym_re_lo) * i / (sym_nre - 1.0)
                                : 0.5 * (sym_re_lo + sym_re_hi);
        double im = sym_nim > 1 ? sym_im_lo + (sym_im_hi - sym_im_lo) * j / (sym_nim - 1.0)
                                : 0.5 * (sym_im_lo + sym_im_hi);
        g.emplace_back(re, im);
      }
    return g;
  }

  std::vector<Complex> upper_grid() const {
    std::vector<Complex> g;
    int nre = std::max(1, static_cast<int>(std::floor(std::sqrt(double(upper_count)))));
    int nim = (upper_count + nre - 1) / nre;
    for (int j = 0; j < nim && static_cast<int>(g.size()) < upper_count; ++j)
      for (int i = 0; i < nre && static_cast<int>(g.size()) < upper_count; ++i) {
        double re = nre > 1 ? upper_re_lo + (upper_re_hi - upper_re_lo) * i / (nre - 1.0)
                            : 0.5 * (upper_re_lo + upper_re_hi);
        double im = upper_im_hi * (j + 1.0) / nim;
        g.emplace_back(re, im);
      }
    return g;
  }

  std::vector<double> real_grid() const {
    std::vector<double> g;
    for (int i = 0; i < real_count; ++i)
      g.push_back(real_count > 1 ? real_lo + (real_hi - real_lo) * i / (real_count - 1.0)
                                 : 0.5 * (real_lo + real_hi));
    return g;
  }
};

struct ValidationReport {
  double symmetry_residual = std::numeric_limits<double>::infinity();
  InnerCheckReport inner;
  Complex witness_minus{0, 0}, witness_plus{0, 0};
  double witness_ratio_minus = 0.0, witness_ratio_plus = 0.0;  // sigma_min/sigma_max there
  std::pair<int, int> index_pair{0, 0};
  bool degenerate_kernel = false;  // kernel vanishes identically (E- ~ E+ up to co-isometry)
  bool passed = false;
  std::string failure;  // first failing check
  std::optional<CanonicalProvisoReport> proviso;
};

class ValidationFailure : public Error {
 public:
  ValidationFailure(const std::string& msg, ValidationReport rep)
      : Error(msg), report(std::move(rep)) {}
  ValidationReport report;
};

namespace detail {

/// Kernel straight from a component pair, usable before a DeBrangesOperator
/// exists (validation probes it for degeneracy).
inline CMat kernel_raw(const EFun& eminus, const EFun& eplus, Complex xi, Complex z) {
  Complex delta = z - std::conj(xi);
  CMat pa = eplus(xi).adjoint();
  CMat ma = eminus(xi).adjoint();
  if (std::abs(delta) <= kDiagonalSwitch) {
    Complex cxi = std::conj(xi);
    CMat num = eplus.derivative(cxi) * pa - eminus.derivative(cxi) * ma;
    return num / Complex(0.0, -2.0 * kPi);
  }
  CMat num = eplus(z) * pa - eminus(z) * ma;
  return num / rho(xi, z);
}

inline CMat kernel_raw_dz(const EFun& eminus, const EFun& eplus, Complex xi, Complex z) {
  Complex delta = z - std::conj(xi);
  CMat pa = eplus(xi).adjoint();
  CMat ma = eminus(xi).adjoint();
  if (std::abs(delta) <= kDiagonalSwitch) {
    Complex cxi = std::conj(xi);
    CMat num2 = eplus.second_derivative(cxi) * pa - eminus.second_derivative(cxi) * ma;
    return num2 / Complex(0.0, -4.0 * kPi);
  }
  Complex r = rho(xi, z);
  Complex dr(0.0, -2.0 * kPi);
  CMat num = eplus(z) * pa - eminus(z) * ma;
  CMat dnum = eplus.derivative(z) * pa - eminus.derivative(z) * ma;
  return dnum / r - (dr / (r * r)) * num;
}

}  // namespace detail

/// Run all de Branges pair checks without throwing; the returned report holds
/// every diagnostic whether or not the pair passes.
inline ValidationReport validation_report(const EFun& eminus, const EFun& eplus,
                                          const ValidationConfig& cfg = {},
                                          const Tolerances& tol = {}) {
  ValidationReport rep;
  auto fail = [&rep](const std::string& what) {
    if (rep.failure.empty()) rep.failure = what;
  };

  if (!eminus.entire() || !eplus.entire()) {
    fail("component is not entire (half-plane variants are rejected)");
    return rep;
  }
  if (eminus.dim() != eplus.dim()) {
    fail("component dimensions differ");
    return rep;
  }

  // conjugate-symmetry identity on the grid
  rep.symmetry_residual = 0.0;
  for (Complex z : cfg.symmetry_grid()) {
    Complex zc = std::conj(z);
    CMat lhs = eplus(z) * eplus(zc).adjoint();
    CMat rhs = eminus(z) * eminus(zc).adjoint();
    rep.symmetry_residual = std::max(rep.symmetry_residual, opnorm(lhs - rhs));
  }
  if (rep.symmetry_residual > cfg.symmetry_tol)
    fail("conjugate-symmetry residual " + std::to_string(rep.symmetry_residual) +
         " exceeds tolerance");

  // inner check of F = Eplus^{-1} Eminus
  MatFn f = [&eminus, &eplus, &tol](Complex z) {
    return ratio_evaluate(eplus, eminus, z, tol.singular_accept);
  };
  rep.inner = inner_check(f, cfg.upper_grid(), cfg.real_grid(), cfg.inner_tol);
  if (!rep.inner.pass_two_sided()) fail("ratio fails the two-sided inner check");

  // invertibility witnesses
  auto best_witness = [&cfg](const EFun& e) -> std::pair<Complex, double> {
    if (cfg.witness_hint) {
      CMat v = e(*cfg.witness_hint);
      double top = opnorm(v);
      return {*cfg.witness_hint, top > 0.0 ? sigma_min(v) / top : 0.0};
    }
    Complex best_z{0, 0};
    double best_ratio = -1.0;
    for (Complex z : cfg.symmetry_grid()) {
      CMat v = e(z);
      double top = opnorm(v);
      double ratio = top > 0.0 ? sigma_min(v) / top : 0.0;
      if (ratio > best_ratio) {
        best_ratio = ratio;
        best_z = z;
      }
    }
    return {best_z, best_ratio};
  };
  std::tie(rep.witness_minus, rep.witness_ratio_minus) = best_witness(eminus);
  std::tie(rep.witness_plus, rep.witness_ratio_plus) = best_witness(eplus);
  if (rep.witness_ratio_minus <= tol.singular_accept)
    fail("no invertibility witness found for Eminus");
  if (rep.witness_ratio_plus <= tol.singular_accept)
    fail("no invertibility witness found for Eplus");

  rep.index_pair = {fredholm_index(eminus(rep.witness_minus), tol.rank_rel_tol),
                    fredholm_index(eplus(rep.witness_plus), tol.rank_rel_tol)};
  if (rep.index_pair != std::pair<int, int>{0, 0}) fail("index pair is not (0, 0)");

  // degenerate-kernel probe
  const Complex probes[] = {{0.37, 0.41}, {-1.31, 0.57}};
  double kmax = 0.0, scale = 0.0;
  for (Complex w : probes) {
    kmax = std::max(kmax, opnorm(detail::kernel_raw(eminus, eplus, w, w)));
    double en = opnorm(eplus(w));
    scale = std::max(scale, en * en);
  }
  rep.degenerate_kernel = kmax <= 1e-12 * (1.0 + scale);

  rep.passed = rep.failure.empty();
  return rep;
}

/// A validated pair (Eminus, Eplus). Construction is only possible through
/// validate() / to_debranges(), so kernel users always see a filled report.
class DeBrangesOperator {
 public:
  const EFun& Eminus() const { return eminus_; }
  const EFun& Eplus() const { return eplus_; }
  Index dim() const { return dim_; }
  const ValidationReport& report() const { return report_; }
  const Tolerances& tolerances() const { return tol_; }

  friend DeBrangesOperator validate(EFun eminus, EFun eplus, const ValidationConfig& cfg,
                                    const Tolerances& tol);
  friend DeBrangesOperator to_debranges(const CanonicalSystemSpec& spec, double r,
                                        const ValidationConfig& cfg, const Tolerances& tol,
                                        Complex xi0);

 private:
  DeBrangesOperator(EFun eminus, EFun eplus, ValidationReport rep, Tolerances tol)
      : eminus_(std::move(eminus)),
        eplus_(std::move(eplus)),
        dim_(eminus_.dim()),
        report_(std::move(rep)),
        tol_(tol) {}

  EFun eminus_;
  EFun eplus_;
  Index dim_;
  ValidationReport report_;
  Tolerances tol_;
};

inline DeBrangesOperator validate(EFun eminus, EFun eplus, const ValidationConfig& cfg = {},
                                  const Tolerances& tol = {}) {
  ValidationReport rep = validation_report(eminus, eplus, cfg, tol);
  if (!rep.passed) throw ValidationFailure("de Branges validation failed: " + rep.failure, rep);
  return DeBrangesOperator(std::move(eminus), std::move(eplus), std::move(rep), tol);
}

/// Reproducing kernel K_xi(z), derivative branch on |z - conj(xi)| <= 1e-8.
inline CMat kernel(const DeBrangesOperator& db, Complex xi, Complex z) {
  return detail::kernel_raw(db.Eminus(), db.Eplus(), xi, z);
}

/// d/dz K_xi(z), with the same confluent machinery near z = conj(xi).
inline CMat kernel_dz(const DeBrangesOperator& db, Complex xi, Complex z) {
  return detail::kernel_raw_dz(db.Eminus(), db.Eplus(), xi, z);
}

/// Scalar Gram matrix: entry (l, m) = <K_{xi_m}(xi_l) u_m, u_l>.
inline CMat gram(const DeBrangesOperator& db, const std::vector<Complex>& points,
                 const std::vector<CVec>& vectors) {
  if (points.size() != vectors.size() || points.empty())
    throw DimensionError("gram: points/vectors must be equal-length and nonempty");
  const Index m = static_cast<Index>(points.size());
  for (const CVec& u : vectors)
    if (u.size() != db.dim()) throw DimensionError("gram: vector dimension mismatch");
  CMat g(m, m);
  for (Index l = 0; l < m; ++l)
    for (Index k = 0; k < m; ++k)
      g(l, k) = vectors[l].dot(kernel(db, points[k], points[l]) * vectors[k]);
  return g;
}

struct PositivitySampler {
  int count = 20;
  double re_lo = -2.0, re_hi = 2.0, im_lo = -2.0, im_hi = 2.0;
  std::uint64_t seed = 1;
  int draws = 1;
};

struct PositivityReport {
  int draws = 0;
  double worst_min_eig = 0.0;
  double worst_gram_norm = 0.0;
  double worst_margin = 0.0;  // min over draws of lambda_min + tol (1 + ||G||)
  bool passed = false;
};

/// Deterministic positivity sampling: Gram spectra of seeded random
/// (point, vector) draws must clear -tol (1 + ||G||).
inline PositivityReport verify_positivity(const DeBrangesOperator& db,
                                          const PositivitySampler& sampler, double tol) {
  PositivityReport rep;
  rep.draws = sampler.draws;
  rep.worst_margin = std::numeric_limits<double>::infinity();
  SplitMix64 rng(sampler.seed);
  for (int d = 0; d < sampler.draws; ++d) {
    std::vector<Complex> pts;
    std::vector<CVec> vecs;
    for (int k = 0; k < sampler.count; ++k) {
      pts.push_back(rng.complex_in_box(sampler.re_lo, sampler.re_hi, sampler.im_lo, sampler.im_hi));
      vecs.push_back(rng.unit_vector(db.dim()));
    }
    CMat g = gram(db, pts, vecs);
    CMat h = 0.5 * (g + g.adjoint());
    Eigen::SelfAdjointEigenSolver<CMat> es(h, Eigen::EigenvaluesOnly);
    double lmin = es.eigenvalues()(0);
    double gnorm = std::max(std::abs(es.eigenvalues()(0)),
                            std::abs(es.eigenvalues()(es.eigenvalues().size() - 1)));
    double margin = lmin + tol * (1.0 + gnorm);
    if (margin < rep.worst_margin) {
      rep.worst_margin = margin;
      rep.worst_min_eig = lmin;
      rep.worst_gram_norm = gnorm;
    }
  }
  rep.passed = rep.worst_margin >= 0.0;
  return rep;
}

/// Kernel of the subspace of functions vanishing at beta:
/// K^beta_xi(z) = K_xi(z) - K_beta(z) K_beta(beta)^+ K_xi(beta).
inline CMat subspace_kernel(const DeBrangesOperator& db, Complex beta, Complex xi, Complex z) {
  CMat kbb = kernel(db, beta, beta);
  return kernel(db, xi, z) -
         kernel(db, beta, z) * pinv(kbb, db.tolerances().rank_rel_tol) * kernel(db, xi, beta);
}

/// A member of the space given as a finite combination sum_j K_{w_j}(.) c_j.
/// Immutable; carries its base pair by value (component caches are shared).
class KernelCombo {
 public:
  KernelCombo(DeBrangesOperator base, std::vector<Complex> points, std::vector<CVec> coeffs)
      : base_(std::move(base)), points_(std::move(points)), coeffs_(std::move(coeffs)) {
    if (points_.size() != coeffs_.size())
      throw DimensionError("KernelCombo: points/coeffs length mismatch");
    for (const CVec& c : coeffs_)
      if (c.size() != base_.dim()) throw DimensionError("KernelCombo: coefficient dimension");
  }

  static KernelCombo zero(DeBrangesOperator base) { return KernelCombo(std::move(base), {}, {}); }

  const DeBrangesOperator& base() const { return base_; }
  const std::vector<Complex>& points() const { return points_; }
  const std::vector<CVec>& coeffs() const { return coeffs_; }
  bool empty() const { return points_.empty(); }
  Index dim() const { return base_.dim(); }

  CVec evaluate(Complex z) const {
    CVec out = CVec::Zero(base_.dim());
    for (std::size_t j = 0; j < points_.size(); ++j)
      out += kernel(base_, points_[j], z) * coeffs_[j];
    return out;
  }

  CVec derivative(Complex z) const {
    CVec out = CVec::Zero(base_.dim());
    for (std::size_t j = 0; j < points_.size(); ++j)
      out += kernel_dz(base_, points_[j], z) * coeffs_[j];
    return out;
  }

  CVec operator()(Complex z) const { return evaluate(z); }

 private:
  DeBrangesOperator base_;
  std::vector<Complex> points_;
  std::vector<CVec> coeffs_;
};

/// Exact squared-norm quadratic form of a combo via the reproducing property.
inline double gram_quadratic_form(const KernelCombo& f) {
  if (f.empty()) return 0.0;
  CMat g = gram(f.base(), f.points(), f.coeffs());
  Complex s = 0.0;
  for (Index l = 0; l < g.rows(); ++l)
    for (Index m = 0; m < g.cols(); ++m) s += g(l, m);
  return std::max(0.0, s.real());
}

/// RKHS norm of a combo (exact, via the Gram quadratic form).
inline double gram_norm(const KernelCombo& f) { return std::sqrt(gram_quadratic_form(f)); }

/// Orthogonal projection onto the complement of the vanishing-at-beta
/// subspace: a single kernel section at beta with coefficient
/// K_beta(beta)^+ f(beta).
inline KernelCombo project_orthocomplement(const KernelCombo& f, Complex beta) {
  CMat kbb = kernel(f.base(), beta, beta);
  CVec coeff = pinv(kbb, f.base().tolerances().rank_rel_tol) * f.evaluate(beta);
  return KernelCombo(f.base(), {beta}, {coeff});
}

struct VectorFunction {
  std::function<CVec(Complex)> value;
  std::function<CVec(Complex)> deriv;  // optional
};

inline VectorFunction to_function(const KernelCombo& f) {
  auto shared = std::make_shared<const KernelCombo>(f);
  return {[shared](Complex z) { return shared->evaluate(z); },
          [shared](Complex z) { return shared->derivative(z); }};
}

/// Generalized backward shift (R_{z0} f)(xi); derivative branch on the
/// confluent diagonal.
inline CVec backward_shift_eval(const VectorFunction& f, Complex z0, Complex xi) {
  if (std::abs(xi - z0) <= kDiagonalSwitch) {
    if (!f.deriv)
      throw DomainError("backward_shift_eval: diagonal evaluation needs a derivative");
    return f.deriv(z0);
  }
  return (f.value(xi) - f.value(z0)) / (xi - z0);
}

/// Evaluators for a pair recovered from the kernel at a base point beta in the
/// upper half-plane. The rebuilt kernel must reproduce the original one.
struct RecoveredPair {
  MatFn Eminus, Eplus;
  MatFn Eminus_dz, Eplus_dz;
  Index dim = 0;
};

inline RecoveredPair recover_E(const DeBrangesOperator& db, Complex beta) {
  if (beta.imag() <= 0.0) throw PreconditionError("recover_E: beta must lie in C+");
  CMat kbb = kernel(db, beta, beta);
  CMat kcc = kernel(db, std::conj(beta), std::conj(beta));
  double rel = db.tolerances().singular_accept;
  if (sigma_min(kbb) <= rel * std::max(1.0, opnorm(kbb)))
    throw SingularityError("recover_E: K_beta(beta) numerically singular");
  if (sigma_min(kcc) <= rel * std::max(1.0, opnorm(kcc)))
    throw SingularityError("recover_E: K_conj(beta)(conj beta) numerically singular");

  struct Payload {
    DeBrangesOperator db;
    Complex beta;
    double scale;  // rho_beta(beta)^{-1/2}, real positive for beta in C+
    CMat nplus;    // K_beta(beta)^{-1/2}
    CMat nminus;   // K_conj(beta)(conj beta)^{-1/2}
  };
  auto p = std::make_shared<const Payload>(
      Payload{db, beta, 1.0 / std::sqrt(rho(beta, beta).real()), pd_inv_sqrt(kbb),
              pd_inv_sqrt(kcc)});

  RecoveredPair out;
  out.dim = db.dim();
  out.Eplus = [p](Complex z) -> CMat {
    return rho(p->beta, z) * p->scale * kernel(p->db, p->beta, z) * p->nplus;
  };
  out.Eplus_dz = [p](Complex z) -> CMat {
    Complex drho(0.0, -2.0 * kPi);
    return p->scale *
           (drho * kernel(p->db, p->beta, z) + rho(p->beta, z) * kernel_dz(p->db, p->beta, z)) *
           p->nplus;
  };
  out.Eminus = [p](Complex z) -> CMat {
    Complex bc = std::conj(p->beta);
    return -rho(bc, z) * p->scale * kernel(p->db, bc, z) * p->nminus;
  };
  out.Eminus_dz = [p](Complex z) -> CMat {
    Complex bc = std::conj(p->beta);
    Complex drho(0.0, -2.0 * kPi);
    return -p->scale * (drho * kernel(p->db, bc, z) + rho(bc, z) * kernel_dz(p->db, bc, z)) *
           p->nminus;
  };
  return out;
}

/// Kernel rebuilt from recovered evaluators (derivative branch included).
inline CMat kernel_from_pair(const RecoveredPair& pair, Complex xi, Complex z) {
  CMat pa = pair.Eplus(xi).adjoint();
  CMat ma = pair.Eminus(xi).adjoint();
  Complex delta = z - std::conj(xi);
  if (std::abs(delta) <= kDiagonalSwitch) {
    Complex cxi = std::conj(xi);
    return (pair.Eplus_dz(cxi) * pa - pair.Eminus_dz(cxi) * ma) / Complex(0.0, -2.0 * kPi);
  }
  return (pair.Eplus(z) * pa - pair.Eminus(z) * ma) / rho(xi, z);
}

/// An inner-from-both-sides function with its reflection extension below the
/// real axis.
class ExtendedInner {
 public:
  ExtendedInner(MatFn value, MatFn deriv, double singular_accept = 1e-12)
      : value_(std::move(value)), deriv_(std::move(deriv)), singular_accept_(singular_accept) {}

  /// F = Eplus^{-1} Eminus of a validated pair; F' = Eplus^{-1}(Eminus' - Eplus' F).
  static ExtendedInner from_pair(const DeBrangesOperator& db) {
    auto shared = std::make_shared<const DeBrangesOperator>(db);
    double acc = db.tolerances().singular_accept;
    MatFn value = [shared, acc](Complex z) {
      return ratio_evaluate(shared->Eplus(), shared->Eminus(), z, acc);
    };
    MatFn deriv = [shared, acc](Complex z) -> CMat {
      CMat f = ratio_evaluate(shared->Eplus(), shared->Eminus(), z, acc);
      CMat rhs = shared->Eminus().derivative(z) - shared->Eplus().derivative(z) * f;
      return shared->Eplus()(z).partialPivLu().solve(rhs);
    };
    return ExtendedInner(std::move(value), std::move(deriv));
  }

  CMat value(Complex z) const {
    if (z.imag() >= 0.0) return value_(z);
    return extend_inner(value_, z, singular_accept_);
  }

  CMat derivative(Complex z) const {
    if (z.imag() >= 0.0) return deriv_(z);
    // d/dz {F(conj z)*}^{-1} = -Fext(z) (F'(conj z))* Fext(z)
    CMat ext = extend_inner(value_, z, singular_accept_);
    return -ext * deriv_(std::conj(z)).adjoint() * ext;
  }

 private:
  MatFn value_;
  MatFn deriv_;
  double singular_accept_;
};

/// Kernel of the space attached to an extended inner function:
/// (I - F(z)F(xi)*) / rho_xi(z), with diagonal branch F'(conj xi)F(xi)*/(2 pi i).
inline CMat inner_kernel(const ExtendedInner& f, Complex xi, Complex z) {
  CMat fxia = f.value(xi).adjoint();
  Complex delta = z - std::conj(xi);
  if (std::abs(delta) <= kDiagonalSwitch)
    return f.derivative(std::conj(xi)) * fxia / Complex(0.0, 2.0 * kPi);
  CMat id = CMat::Identity(fxia.rows(), fxia.cols());
  return (id - f.value(z) * fxia) / rho(xi, z);
}

struct QuadratureResult {
  double value = 0.0;
  double tail_estimate = 0.0;
  bool tail_known = false;  // combo inputs decay like 1/x^2; general f does not report a tail
  int skipped_points = 0;   // grid points where Eplus(x) was singular
};

/// Composite-Simpson value of \int_{-T}^{T} ||Eplus(x)^{-1} f(x)||^2 dx plus a
/// tail estimate under the 1/x^2 decay model of kernel combinations.
inline QuadratureResult bnorm_line_quadrature(const DeBrangesOperator& db,
                                              const std::function<CVec(Complex)>& f, double T,
                                              int steps, bool combo_decay = false) {
  if (T <= 0.0 || steps < 2) throw PreconditionError("bnorm_line_quadrature: bad T or steps");
  if (steps % 2 != 0) ++steps;
  QuadratureResult out;
  out.tail_known = combo_decay;
  double h = 2.0 * T / steps;
  std::vector<double> g(static_cast<std::size_t>(steps) + 1, 0.0);
  double acc = db.tolerances().singular_accept;
  for (int k = 0; k <= steps; ++k) {
    double x = -T + k * h;
    CMat ep = db.Eplus()(Complex(x, 0.0));
    if (sigma_min(ep) <= acc * std::max(1.0, opnorm(ep))) {
      ++out.skipped_points;
      continue;
    }
    CVec y = ep.partialPivLu().solve(f(Complex(x, 0.0)));
    g[static_cast<std::size_t>(k)] = y.squaredNorm();
  }
  out.value = detail::simpson(g, h, 0.0);
  if (combo_decay) {
    double c = 0.0;
    for (int k = 0; k <= steps; ++k) {
      double x = -T + k * h;
      if (std::abs(x) >= 0.9 * T) c = std::max(c, g[static_cast<std::size_t>(k)] * x * x);
    }
    out.tail_estimate = 2.0 * c / T;
  }
  return out;
}

inline QuadratureResult bnorm_line_quadrature(const KernelCombo& f, double T, int steps) {
  auto shared = std::make_shared<const KernelCombo>(f);
  return bnorm_line_quadrature(
      f.base(), [shared](Complex z) { return shared->evaluate(z); }, T, steps, true);
}

struct IsometryReport {
  double norm_f_sq = 0.0;  // ||K^beta_w u||^2
  double norm_h_sq = 0.0;  // ||((conj w - conj b)/(conj w - b)) K^{conj b}_w u||^2
  double difference = 0.0;
};

/// Numeric content of the multiplication-operator symmetry: the twisted
/// subspace sections at mirror base points have equal norms.
inline IsometryReport isometry_check(const DeBrangesOperator& db, Complex beta, Complex w,
                                     const CVec& u) {
  if (beta.imag() <= 0.0) throw PreconditionError("isometry_check: beta must lie in C+");
  if (u.size() != db.dim()) throw DimensionError("isometry_check: vector dimension");
  CMat kbb = kernel(db, beta, beta);
  CMat kcc = kernel(db, std::conj(beta), std::conj(beta));
  double rel = db.tolerances().singular_accept;
  if (sigma_min(kbb) <= rel * std::max(1.0, opnorm(kbb)) ||
      sigma_min(kcc) <= rel * std::max(1.0, opnorm(kcc)))
    throw PreconditionError("isometry_check: singular diagonal kernel at beta");
  IsometryReport rep;
  rep.norm_f_sq = std::max(0.0, u.dot(subspace_kernel(db, beta, w, w) * u).real());
  Complex wc = std::conj(w);
  Complex c = (wc - std::conj(beta)) / (wc - beta);
  rep.norm_h_sq =
      std::norm(c) * std::max(0.0, u.dot(subspace_kernel(db, std::conj(beta), w, w) * u).real());
  rep.difference = std::abs(rep.norm_h_sq - rep.norm_f_sq);
  return rep;
}

/// Wrap a canonical system at radius r as a validated de Branges pair. The
/// construction's provisos (positive gram integral on both half-planes,
/// self-adjoint component values) are witnessed at xi0 and recorded — not
/// proven for all xi.
inline DeBrangesOperator to_debranges(const CanonicalSystemSpec& spec, double r,
                                      const ValidationConfig& cfg = {}, const Tolerances& tol = {},
                                      Complex xi0 = Complex(0, 1)) {
  if (r <= 0.0 || r > spec.a)
    throw PreconditionError("to_debranges: r must lie in (0, a]");
  EFun eminus = EFun::canonical(spec, r, Component::Minus);
  EFun eplus = EFun::canonical(spec, r, Component::Plus);
  ValidationReport rep = validation_report(eminus, eplus, cfg, tol);

  CanonicalProvisoReport prov;
  prov.xi0 = xi0;
  auto min_eig = [](const CMat& m) {
    Eigen::SelfAdjointEigenSolver<CMat> es(CMat(0.5 * (m + m.adjoint())), Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
  };
  prov.gram_min_eig_upper = min_eig(canonical_gram_integral(spec, r, xi0));
  prov.gram_min_eig_lower = min_eig(canonical_gram_integral(spec, r, std::conj(xi0)));
  CMat ep = eplus(xi0);
  CMat em = eminus(std::conj(xi0));
  prov.selfadjoint_defect_plus = opnorm(ep - ep.adjoint());
  prov.selfadjoint_defect_minus = opnorm(em - em.adjoint());
  prov.positivity_witnessed = prov.gram_min_eig_upper > 0.0 && prov.gram_min_eig_lower > 0.0;
  double sc = 1.0 + std::max(opnorm(ep), opnorm(em));
  prov.selfadjoint_witnessed = prov.selfadjoint_defect_plus <= 1e-8 * sc &&
                               prov.selfadjoint_defect_minus <= 1e-8 * sc;
  rep.proviso = prov;

  if (!rep.passed)
    throw ValidationFailure("canonical pair failed validation: " + rep.failure, rep);
  return DeBrangesOperator(std::move(eminus), std::move(eplus), std::move(rep), tol);
}

}  // namespace dbspace
