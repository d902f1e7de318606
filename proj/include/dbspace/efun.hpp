#pragma once

#include "dbspace/canonical.hpp"
#include "dbspace/linops.hpp"
#include "dbspace/types.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <bit>
#include <cmath>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

namespace dbspace {

using MatFn = std::function<CMat(Complex)>;

inline Complex cayley_to_disc(Complex z) {
  if (z == Complex(0, -1)) throw DomainError("cayley_to_disc: pole at -i");
  return (z - Complex(0, 1)) / (z + Complex(0, 1));
}

inline Complex cayley_to_halfplane(Complex w) {
  if (w == Complex(1, 0)) throw DomainError("cayley_to_halfplane: pole at 1");
  return Complex(0, 1) * (Complex(1, 0) + w) / (Complex(1, 0) - w);
}

inline double spectral_radius(const CMat& a) {
  require_square(a, "spectral_radius");
  Eigen::ComplexEigenSolver<CMat> es(a, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// Potapov inner function V_A(w) = -A* + w (I-A*A)^{1/2} (I-wA)^{-1} (I-AA*)^{1/2},
/// analytic on the closed unit disc when r(A) < 1.
inline CMat potapov(const CMat& a, Complex w) {
  require_square(a, "potapov");
  double r = spectral_radius(a);
  if (r >= 1.0)
    throw PreconditionError("potapov: spectral radius " + std::to_string(r) + " >= 1");
  double nrm = opnorm(a);
  if (nrm > 1.0 + 1e-12)
    throw PreconditionError("potapov: ||A|| = " + std::to_string(nrm) + " > 1");
  const Index n = a.rows();
  CMat id = CMat::Identity(n, n);
  if (opnorm(a * a.adjoint() - id) <= 1e-14)
    throw PreconditionError("potapov: AA* = I (degenerate defect)");
  if (std::abs(w) > 1.0 + 1e-12)
    throw DomainError("potapov: |w| = " + std::to_string(std::abs(w)) + " outside closed disc");
  CMat dl = psd_sqrt(CMat(id - a.adjoint() * a));
  CMat dr = psd_sqrt(CMat(id - a * a.adjoint()));
  CMat resolvent = (id - w * a).partialPivLu().solve(id);
  return -a.adjoint() + w * dl * resolvent * dr;
}

struct CharacteristicValue {
  CMat value;            // full-space matrix of the bracketed formula
  CMat defect;           // orthogonal projector onto cl rng (I-A*A)^{1/2}
  CMat defect_star;      // orthogonal projector onto cl rng (I-AA*)^{1/2}
  bool degenerate = false;  // both defect spaces trivial (A unitary)
};

namespace detail {

inline CMat range_projector(const CMat& h, double rank_tol) {
  Eigen::SelfAdjointEigenSolver<CMat> es(h);
  const auto& ev = es.eigenvalues();
  double top = std::max(ev.cwiseAbs().maxCoeff(), 0.0);
  CMat p = CMat::Zero(h.rows(), h.cols());
  for (Index i = 0; i < ev.size(); ++i)
    if (ev(i) > rank_tol * std::max(1.0, top))
      p += es.eigenvectors().col(i) * es.eigenvectors().col(i).adjoint();
  return p;
}

}  // namespace detail

/// Characteristic function of a contraction, C_A(w) = -A + w (I-AA*)^{1/2}
/// (I-wA*)^{-1} (I-A*A)^{1/2}, together with the orthogonal projectors onto
/// the numerical defect spaces. Callers compose defect_star * value * defect.
inline CharacteristicValue characteristic_function(const CMat& a, Complex w,
                                                   double rank_tol = 1e-12) {
  require_square(a, "characteristic_function");
  double nrm = opnorm(a);
  if (nrm > 1.0 + 1e-12)
    throw PreconditionError("characteristic_function: ||A|| = " + std::to_string(nrm) + " > 1");
  const Index n = a.rows();
  CMat id = CMat::Identity(n, n);
  CMat d2 = id - a.adjoint() * a;
  CMat dstar2 = id - a * a.adjoint();
  CMat iwa = id - w * a.adjoint();
  if (sigma_min(iwa) <= 1e-14 * std::max(1.0, opnorm(iwa)))
    throw SingularityError("characteristic_function: I - wA* numerically singular");
  CharacteristicValue out;
  out.value = -a + w * psd_sqrt(dstar2) * iwa.partialPivLu().solve(CMat(psd_sqrt(d2)));
  out.defect = detail::range_projector(d2, rank_tol);
  out.defect_star = detail::range_projector(dstar2, rank_tol);
  out.degenerate = out.defect.norm() == 0.0 && out.defect_star.norm() == 0.0;
  return out;
}

enum class Component { Minus, Plus };

struct ExponentialTerm {
  Complex c;
  CMat M;
};

namespace detail {

struct CanonicalCacheKey {
  std::uint64_t re, im;
  bool operator==(const CanonicalCacheKey&) const = default;
};

struct CanonicalCacheHash {
  std::size_t operator()(const CanonicalCacheKey& k) const {
    std::uint64_t h = k.re * 0x9e3779b97f4a7c15ull;
    h ^= k.im + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

// z -> solution memo shared by copies of a CanonicalBacked function. Values
// are deterministic, so a racing duplicate insert is harmless.
struct CanonicalCache {
  std::mutex mu;
  std::unordered_map<CanonicalCacheKey, CanonicalSolution, CanonicalCacheHash> map;

  CanonicalSolution get(const CanonicalSystemSpec& spec, double r, Complex z) {
    CanonicalCacheKey key{std::bit_cast<std::uint64_t>(z.real()),
                          std::bit_cast<std::uint64_t>(z.imag())};
    {
      std::lock_guard<std::mutex> lock(mu);
      auto it = map.find(key);
      if (it != map.end()) return it->second;
    }
    CanonicalSolution sol = canonical_solve_with_zderiv(spec, r, z);
    std::lock_guard<std::mutex> lock(mu);
    map[key] = sol;
    return sol;
  }
};

}  // namespace detail

/// A representable operator-valued function of one complex variable. The
/// entire variants admit exact derivatives; the two half-plane variants are
/// flagged non-entire and are rejected as de Branges components.
class EFun {
 public:
  enum class Kind {
    Exponential,
    ExponentialSum,
    Pencil,
    Polynomial,
    CanonicalBacked,
    PotapovHalfPlane,
    CharacteristicHalfPlane,
  };

  struct Exponential {
    Complex c;
    CMat M;
  };
  struct ExponentialSum {
    std::vector<ExponentialTerm> terms;
  };
  struct Pencil {  // z -> A - z B
    CMat A, B;
  };
  struct Polynomial {  // z -> sum coeffs[k] z^k
    std::vector<CMat> coeffs;
  };
  struct CanonicalBacked {
    CanonicalSystemSpec system;
    double r;
    Component component;
    std::shared_ptr<detail::CanonicalCache> cache;
  };
  struct PotapovHalfPlane {
    CMat A;
  };
  struct CharacteristicHalfPlane {
    CMat A;
  };

  using Storage = std::variant<Exponential, ExponentialSum, Pencil, Polynomial, CanonicalBacked,
                               PotapovHalfPlane, CharacteristicHalfPlane>;

  static EFun exponential(Complex c, CMat m) {
    require_square(m, "EFun::exponential");
    if (!all_finite(m)) throw PreconditionError("EFun::exponential: non-finite matrix");
    return EFun(Exponential{c, std::move(m)});
  }

  static EFun exponential_sum(std::vector<ExponentialTerm> terms) {
    if (terms.empty()) throw PreconditionError("EFun::exponential_sum: no terms");
    Index n = terms.front().M.rows();
    for (const auto& t : terms) {
      require_square(t.M, "EFun::exponential_sum");
      if (t.M.rows() != n) throw DimensionError("EFun::exponential_sum: mixed dimensions");
    }
    return EFun(ExponentialSum{std::move(terms)});
  }

  static EFun pencil(CMat a, CMat b) {
    require_square(a, "EFun::pencil");
    require_square(b, "EFun::pencil");
    if (a.rows() != b.rows()) throw DimensionError("EFun::pencil: mixed dimensions");
    return EFun(Pencil{std::move(a), std::move(b)});
  }

  static EFun polynomial(std::vector<CMat> coeffs) {
    if (coeffs.empty()) throw PreconditionError("EFun::polynomial: no coefficients");
    Index n = coeffs.front().rows();
    for (const auto& c : coeffs) {
      require_square(c, "EFun::polynomial");
      if (c.rows() != n) throw DimensionError("EFun::polynomial: mixed dimensions");
    }
    return EFun(Polynomial{std::move(coeffs)});
  }

  static EFun canonical(CanonicalSystemSpec system, double r, Component component) {
    system.check();
    if (r < 0.0 || r > system.a)
      throw PreconditionError("EFun::canonical: endpoint r outside [0, a]");
    return EFun(CanonicalBacked{std::move(system), r, component,
                                std::make_shared<detail::CanonicalCache>()});
  }

  static EFun potapov_halfplane(CMat a) {
    require_square(a, "EFun::potapov_halfplane");
    double r = spectral_radius(a);
    if (r >= 1.0)
      throw PreconditionError("EFun::potapov_halfplane: spectral radius " + std::to_string(r) +
                              " >= 1");
    return EFun(PotapovHalfPlane{std::move(a)});
  }

  static EFun characteristic_halfplane(CMat a) {
    require_square(a, "EFun::characteristic_halfplane");
    if (opnorm(a) > 1.0 + 1e-12)
      throw PreconditionError("EFun::characteristic_halfplane: ||A|| > 1");
    return EFun(CharacteristicHalfPlane{std::move(a)});
  }

  Kind kind() const { return static_cast<Kind>(storage_.index()); }

  bool entire() const {
    Kind k = kind();
    return k != Kind::PotapovHalfPlane && k != Kind::CharacteristicHalfPlane;
  }

  Index dim() const {
    return std::visit(
        [](const auto& v) -> Index {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, Exponential>) return v.M.rows();
          if constexpr (std::is_same_v<T, ExponentialSum>) return v.terms.front().M.rows();
          if constexpr (std::is_same_v<T, Pencil>) return v.A.rows();
          if constexpr (std::is_same_v<T, Polynomial>) return v.coeffs.front().rows();
          if constexpr (std::is_same_v<T, CanonicalBacked>) return v.system.n;
          if constexpr (std::is_same_v<T, PotapovHalfPlane>) return v.A.rows();
          if constexpr (std::is_same_v<T, CharacteristicHalfPlane>) return v.A.rows();
        },
        storage_);
  }

  CMat operator()(Complex z) const { return evaluate(z); }

  CMat evaluate(Complex z) const {
    return std::visit(
        [&](const auto& v) -> CMat {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, Exponential>) {
            return std::exp(v.c * z) * v.M;
          } else if constexpr (std::is_same_v<T, ExponentialSum>) {
            CMat out = CMat::Zero(v.terms.front().M.rows(), v.terms.front().M.cols());
            for (const auto& t : v.terms) out += std::exp(t.c * z) * t.M;
            return out;
          } else if constexpr (std::is_same_v<T, Pencil>) {
            return v.A - z * v.B;
          } else if constexpr (std::is_same_v<T, Polynomial>) {
            CMat out = CMat::Zero(v.coeffs.front().rows(), v.coeffs.front().cols());
            Complex zk = 1.0;
            for (const auto& c : v.coeffs) {
              out += zk * c;
              zk *= z;
            }
            return out;
          } else if constexpr (std::is_same_v<T, CanonicalBacked>) {
            CanonicalSolution sol = v.cache->get(v.system, v.r, z);
            return v.component == Component::Minus ? sol.value.Eminus : sol.value.Eplus;
          } else if constexpr (std::is_same_v<T, PotapovHalfPlane>) {
            if (z.imag() < 0.0)
              throw DomainError("PotapovHalfPlane: evaluation below the real axis");
            return potapov(v.A, cayley_to_disc(z));
          } else {
            if (z.imag() < 0.0)
              throw DomainError("CharacteristicHalfPlane: evaluation below the real axis");
            return characteristic_function(v.A, cayley_to_disc(z)).value;
          }
        },
        storage_);
  }

  /// Exact analytic derivative per variant (never finite differences).
  CMat derivative(Complex z) const {
    return std::visit(
        [&](const auto& v) -> CMat {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, Exponential>) {
            return v.c * std::exp(v.c * z) * v.M;
          } else if constexpr (std::is_same_v<T, ExponentialSum>) {
            CMat out = CMat::Zero(v.terms.front().M.rows(), v.terms.front().M.cols());
            for (const auto& t : v.terms) out += t.c * std::exp(t.c * z) * t.M;
            return out;
          } else if constexpr (std::is_same_v<T, Pencil>) {
            return -v.B;
          } else if constexpr (std::is_same_v<T, Polynomial>) {
            CMat out = CMat::Zero(v.coeffs.front().rows(), v.coeffs.front().cols());
            Complex zk = 1.0;
            for (std::size_t k = 1; k < v.coeffs.size(); ++k) {
              out += static_cast<double>(k) * zk * v.coeffs[k];
              zk *= z;
            }
            return out;
          } else if constexpr (std::is_same_v<T, CanonicalBacked>) {
            CanonicalSolution sol = v.cache->get(v.system, v.r, z);
            return v.component == Component::Minus ? sol.zderiv.Eminus : sol.zderiv.Eplus;
          } else if constexpr (std::is_same_v<T, PotapovHalfPlane>) {
            if (z.imag() < 0.0)
              throw DomainError("PotapovHalfPlane: evaluation below the real axis");
            return potapov_dw(v.A, cayley_to_disc(z)) * cayley_dz(z);
          } else {
            if (z.imag() < 0.0)
              throw DomainError("CharacteristicHalfPlane: evaluation below the real axis");
            return characteristic_dw(v.A, cayley_to_disc(z)) * cayley_dz(z);
          }
        },
        storage_);
  }

  /// Second derivative; entire variants only (half-plane variants never feed
  /// the kernel's confluent branch).
  CMat second_derivative(Complex z) const {
    return std::visit(
        [&](const auto& v) -> CMat {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, Exponential>) {
            return v.c * v.c * std::exp(v.c * z) * v.M;
          } else if constexpr (std::is_same_v<T, ExponentialSum>) {
            CMat out = CMat::Zero(v.terms.front().M.rows(), v.terms.front().M.cols());
            for (const auto& t : v.terms) out += t.c * t.c * std::exp(t.c * z) * t.M;
            return out;
          } else if constexpr (std::is_same_v<T, Pencil>) {
            return CMat::Zero(v.A.rows(), v.A.cols());
          } else if constexpr (std::is_same_v<T, Polynomial>) {
            CMat out = CMat::Zero(v.coeffs.front().rows(), v.coeffs.front().cols());
            Complex zk = 1.0;
            for (std::size_t k = 2; k < v.coeffs.size(); ++k) {
              out += static_cast<double>(k * (k - 1)) * zk * v.coeffs[k];
              zk *= z;
            }
            return out;
          } else if constexpr (std::is_same_v<T, CanonicalBacked>) {
            CanonicalSolution sol = v.cache->get(v.system, v.r, z);
            return v.component == Component::Minus ? sol.zderiv2.Eminus : sol.zderiv2.Eplus;
          } else {
            throw DomainError("second_derivative: unsupported for half-plane variants");
          }
        },
        storage_);
  }

  const Storage& storage() const { return storage_; }

 private:
  explicit EFun(Storage s) : storage_(std::move(s)) {}

  static Complex cayley_dz(Complex z) {
    Complex d = z + Complex(0, 1);
    return Complex(0, 2) / (d * d);
  }

  static CMat potapov_dw(const CMat& a, Complex w) {
    const Index n = a.rows();
    CMat id = CMat::Identity(n, n);
    CMat dl = psd_sqrt(CMat(id - a.adjoint() * a));
    CMat dr = psd_sqrt(CMat(id - a * a.adjoint()));
    CMat res = (id - w * a).partialPivLu().solve(id);
    return dl * res * res * dr;
  }

  static CMat characteristic_dw(const CMat& a, Complex w) {
    const Index n = a.rows();
    CMat id = CMat::Identity(n, n);
    CMat dl = psd_sqrt(CMat(id - a * a.adjoint()));
    CMat dr = psd_sqrt(CMat(id - a.adjoint() * a));
    CMat res = (id - w * a.adjoint()).partialPivLu().solve(id);
    return dl * res * res * dr;
  }

  Storage storage_;
};

/// X solving Eplus(z) X = Eminus(z), i.e. the function F = Eplus^{-1} Eminus
/// pointwise. Throws SingularityError inside the discrete invertibility
/// failure set of Eplus.
inline CMat ratio_evaluate(const EFun& eplus, const EFun& eminus, Complex z,
                           double singular_accept = 1e-8) {
  if (eplus.dim() != eminus.dim()) throw DimensionError("ratio_evaluate: mixed dimensions");
  CMat p = eplus(z);
  CMat m = eminus(z);
  Eigen::JacobiSVD<CMat> svd(p);
  const auto& sv = svd.singularValues();
  if (sv(sv.size() - 1) <= singular_accept * sv(0))
    throw SingularityError("ratio_evaluate: Eplus(z) numerically singular at z = (" +
                           std::to_string(z.real()) + ", " + std::to_string(z.imag()) + ")");
  return p.partialPivLu().solve(m);
}

/// Holomorphic extension of an inner-from-both-sides F below the axis:
/// F(z) = {F(conj z)*}^{-1} for Im z < 0.
inline CMat extend_inner(const MatFn& f, Complex z, double singular_accept = 1e-12) {
  if (z.imag() >= 0.0) throw DomainError("extend_inner: Im z must be negative");
  CMat fw = f(std::conj(z));
  Eigen::JacobiSVD<CMat> svd(fw);
  const auto& sv = svd.singularValues();
  if (sv(0) == 0.0 || sv(sv.size() - 1) <= singular_accept * sv(0))
    throw SingularityError("extend_inner: F(conj z) numerically singular");
  CMat id = CMat::Identity(fw.rows(), fw.cols());
  return CMat(fw.adjoint()).partialPivLu().solve(id);
}

struct InnerCheckReport {
  double contractive_excess = 0.0;   // max over the upper grid of lambda_max(F*F) - 1
  double isometry_defect = 0.0;      // max over the real grid of ||F*F - I||
  double coisometry_defect = 0.0;    // max over the real grid of ||FF* - I||
  int eval_failures = 0;
  std::vector<std::string> failure_notes;
  double tol = 0.0;
  bool pass_contractive = false;  // Schur class membership on the grid
  bool pass_inner = false;        // contractive + boundary isometry
  bool pass_star_inner = false;   // contractive + boundary co-isometry

  bool pass_two_sided() const { return pass_inner && pass_star_inner; }
};

/// Grid test of Schur-class membership and inner / *-inner boundary behaviour.
/// Per-point evaluation failures are recorded, not fatal.
inline InnerCheckReport inner_check(const MatFn& f, const std::vector<Complex>& upper_grid,
                                    const std::vector<double>& real_grid, double tol) {
  if (upper_grid.empty() || real_grid.empty())
    throw PreconditionError("inner_check: grids must be nonempty");
  InnerCheckReport rep;
  rep.tol = tol;
  for (Complex z : upper_grid) {
    try {
      CMat v = f(z);
      Eigen::SelfAdjointEigenSolver<CMat> es(CMat(v.adjoint() * v), Eigen::EigenvaluesOnly);
      double excess = es.eigenvalues().maxCoeff() - 1.0;
      rep.contractive_excess = std::max(rep.contractive_excess, excess);
    } catch (const Error& e) {
      ++rep.eval_failures;
      rep.failure_notes.push_back(e.what());
    }
  }
  for (double x : real_grid) {
    try {
      CMat v = f(Complex(x, 0.0));
      CMat id = CMat::Identity(v.rows(), v.cols());
      rep.isometry_defect = std::max(rep.isometry_defect, opnorm(v.adjoint() * v - id));
      rep.coisometry_defect = std::max(rep.coisometry_defect, opnorm(v * v.adjoint() - id));
    } catch (const Error& e) {
      ++rep.eval_failures;
      rep.failure_notes.push_back(e.what());
    }
  }
  rep.pass_contractive = rep.contractive_excess <= tol;
  rep.pass_inner = rep.pass_contractive && rep.isometry_defect <= tol;
  rep.pass_star_inner = rep.pass_contractive && rep.coisometry_defect <= tol;
  return rep;
}

}  // namespace dbspace
