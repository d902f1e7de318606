#pragma once

#include "dbspace/linops.hpp"
#include "dbspace/types.hpp"

#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace dbspace {

/// Canonical system dF_r/dr = i z F_r j + F_r Q(r) on [0, a], F_0 = [I  I],
/// with j = diag(I, -I) and Q(r) = [[0, q(r)], [q(r)*, 0]].  The solution row
/// block F_r = [Eminus  Eplus] generates a de Branges pair for each r.
struct CanonicalSystemSpec {
  enum class Potential { Zero, Constant, Sampled };

  Index n = 1;       // dimension of the underlying space H
  double a = 1.0;    // right endpoint, > 0
  double step = 1e-3;
  Potential potential = Potential::Zero;
  CMat constant_q;                 // Potential::Constant
  std::vector<double> sample_r;    // Potential::Sampled, increasing grid on [0, a]
  std::vector<CMat> sample_q;      // piecewise-linear between samples

  static CanonicalSystemSpec zero(Index n, double a, double step) {
    CanonicalSystemSpec s;
    s.n = n;
    s.a = a;
    s.step = step;
    s.potential = Potential::Zero;
    return s;
  }

  static CanonicalSystemSpec constant(CMat q, double a, double step) {
    require_square(q, "CanonicalSystemSpec::constant");
    CanonicalSystemSpec s;
    s.n = q.rows();
    s.a = a;
    s.step = step;
    s.potential = Potential::Constant;
    s.constant_q = std::move(q);
    return s;
  }

  static CanonicalSystemSpec sampled(std::vector<double> r, std::vector<CMat> q,
                                     double a, double step) {
    if (r.size() != q.size() || r.empty())
      throw DimensionError("CanonicalSystemSpec::sampled: mismatched sample arrays");
    CanonicalSystemSpec s;
    s.n = q.front().rows();
    s.a = a;
    s.step = step;
    s.potential = Potential::Sampled;
    s.sample_r = std::move(r);
    s.sample_q = std::move(q);
    for (const CMat& m : s.sample_q) {
      require_square(m, "CanonicalSystemSpec::sampled");
      if (m.rows() != s.n) throw DimensionError("CanonicalSystemSpec::sampled: ragged samples");
      if (!all_finite(m)) throw PreconditionError("CanonicalSystemSpec: non-finite sample");
    }
    return s;
  }

  void check() const {
    if (a <= 0.0) throw PreconditionError("CanonicalSystemSpec: endpoint a must be > 0");
    if (step <= 0.0) throw PreconditionError("CanonicalSystemSpec: step must be > 0");
    if (potential == Potential::Constant && constant_q.rows() != n)
      throw DimensionError("CanonicalSystemSpec: constant q dimension mismatch");
  }

  /// q(r), piecewise linear for sampled potentials, clamped at the grid ends.
  CMat q(double r) const {
    switch (potential) {
      case Potential::Zero:
        return CMat::Zero(n, n);
      case Potential::Constant:
        return constant_q;
      case Potential::Sampled: {
        if (r <= sample_r.front()) return sample_q.front();
        if (r >= sample_r.back()) return sample_q.back();
        auto hi = std::upper_bound(sample_r.begin(), sample_r.end(), r);
        std::size_t k = static_cast<std::size_t>(hi - sample_r.begin());
        double r0 = sample_r[k - 1], r1 = sample_r[k];
        double t = (r - r0) / (r1 - r0);
        return (1.0 - t) * sample_q[k - 1] + t * sample_q[k];
      }
    }
    return CMat::Zero(n, n);
  }

  bool has_potential() const { return potential != Potential::Zero; }
};

/// F_r(z) split into its two n x n blocks.
struct CanonicalState {
  CMat Eminus;
  CMat Eplus;
};

struct CanonicalSolution {
  CanonicalState value;    // F_r(z)
  CanonicalState zderiv;   // dF_r/dz
  CanonicalState zderiv2;  // d^2F_r/dz^2
};

namespace detail {

// The integration state is one n x 6n matrix of column blocks
// [A  B  Ad  Bd  Ad2  Bd2]: F = [A B] and its first two z-derivatives.
struct CanonState {
  CMat A, B;
  CMat Ad, Bd;
  CMat Ad2, Bd2;
};

// Right-hand sides, from F' = izFj + FQ differentiated twice in z:
//   dF/dr   = izFj + FQ
//   dFd/dr  = iFj + izFdj + FdQ
//   dFd2/dr = 2iFdj + izFd2j + Fd2Q
// With F = [A B]: Fj = [A  -B] and FQ = [B q*  A q].
inline void canon_rhs(const CMat& s, CMat& out, Complex z, const CMat* q, const CMat* qa,
                      Index n) {
  const Complex iz = Complex(0, 1) * z;
  const Complex i1 = Complex(0, 1);
  auto blk = [n](const CMat& m, int j) { return m.middleCols(j * n, n); };
  out.middleCols(0 * n, n).noalias() = iz * blk(s, 0);
  out.middleCols(1 * n, n).noalias() = -iz * blk(s, 1);
  out.middleCols(2 * n, n).noalias() = i1 * blk(s, 0) + iz * blk(s, 2);
  out.middleCols(3 * n, n).noalias() = -i1 * blk(s, 1) - iz * blk(s, 3);
  out.middleCols(4 * n, n).noalias() = (2.0 * i1) * blk(s, 2) + iz * blk(s, 4);
  out.middleCols(5 * n, n).noalias() = (-2.0 * i1) * blk(s, 3) - iz * blk(s, 5);
  if (q) {
    out.middleCols(0 * n, n).noalias() += blk(s, 1) * (*qa);
    out.middleCols(1 * n, n).noalias() += blk(s, 0) * (*q);
    out.middleCols(2 * n, n).noalias() += blk(s, 3) * (*qa);
    out.middleCols(3 * n, n).noalias() += blk(s, 2) * (*q);
    out.middleCols(4 * n, n).noalias() += blk(s, 5) * (*qa);
    out.middleCols(5 * n, n).noalias() += blk(s, 4) * (*q);
  }
}

struct CanonTrajectory {
  std::vector<double> r;
  std::vector<CMat> A, B;  // F_s blocks at each stored step
};

inline CanonState canon_integrate(const CanonicalSystemSpec& spec, double r, Complex z,
                                  CanonTrajectory* record) {
  spec.check();
  if (r < 0.0 || r > spec.a + 1e-12 * spec.a)
    throw PreconditionError("canonical solve: r outside [0, a]");
  const Index n = spec.n;
  CMat s = CMat::Zero(n, 6 * n);
  s.middleCols(0, n).setIdentity();
  s.middleCols(n, n).setIdentity();
  int steps = std::max(1, static_cast<int>(std::lround(r / spec.step)));
  if (r == 0.0) steps = 0;
  double h = steps > 0 ? r / steps : 0.0;
  const bool with_q = spec.has_potential();
  const bool q_varies = spec.potential == CanonicalSystemSpec::Potential::Sampled;

  if (record) {
    record->r.clear();
    record->A.clear();
    record->B.clear();
    record->r.push_back(0.0);
    record->A.push_back(s.middleCols(0, n));
    record->B.push_back(s.middleCols(n, n));
  }

  CMat k1(n, 6 * n), k2(n, 6 * n), k3(n, 6 * n), k4(n, 6 * n), stage(n, 6 * n);
  CMat q0, q0a, qh, qha, q1, q1a;
  if (with_q && !q_varies) {
    q0 = spec.q(0.0);
    q0a = q0.adjoint();
    qh = q0;
    qha = q0a;
    q1 = q0;
    q1a = q0a;
  }

  for (int k = 0; k < steps; ++k) {
    if (q_varies) {
      double rk = k * h;
      q0 = spec.q(rk);
      q0a = q0.adjoint();
      qh = spec.q(rk + 0.5 * h);
      qha = qh.adjoint();
      q1 = spec.q(rk + h);
      q1a = q1.adjoint();
    }
    const CMat* pq0 = with_q ? &q0 : nullptr;
    const CMat* pq0a = with_q ? &q0a : nullptr;
    const CMat* pqh = with_q ? &qh : nullptr;
    const CMat* pqha = with_q ? &qha : nullptr;
    const CMat* pq1 = with_q ? &q1 : nullptr;
    const CMat* pq1a = with_q ? &q1a : nullptr;

    canon_rhs(s, k1, z, pq0, pq0a, n);
    stage = s + (0.5 * h) * k1;
    canon_rhs(stage, k2, z, pqh, pqha, n);
    stage = s + (0.5 * h) * k2;
    canon_rhs(stage, k3, z, pqh, pqha, n);
    stage = s + h * k3;
    canon_rhs(stage, k4, z, pq1, pq1a, n);
    s += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

    if (!s.allFinite())
      throw SingularityError("canonical solve: non-finite state at step " + std::to_string(k + 1) +
                             " of " + std::to_string(steps));
    if (record) {
      record->r.push_back((k + 1) * h);
      record->A.push_back(s.middleCols(0, n));
      record->B.push_back(s.middleCols(n, n));
    }
  }
  return {s.middleCols(0, n),     s.middleCols(n, n),     s.middleCols(2 * n, n),
          s.middleCols(3 * n, n), s.middleCols(4 * n, n), s.middleCols(5 * n, n)};
}

/// Composite Simpson over equally spaced samples (3/8 rule on the tail when
/// the interval count is odd, trapezoid for a single interval).
template <typename T>
T simpson(const std::vector<T>& f, double h, T zero) {
  std::size_t n = f.size();
  if (n < 2) return zero;
  std::size_t m = n - 1;  // interval count
  if (m == 1) return (f[0] + f[1]) * (h / 2.0);
  T acc = zero;
  std::size_t even_end = (m % 2 == 0) ? m : m - 3;
  for (std::size_t k = 0; k + 2 <= even_end; k += 2)
    acc = acc + (f[k] + f[k + 1] * 4.0 + f[k + 2]) * (h / 3.0);
  if (m % 2 == 1) {
    std::size_t s = m - 3;
    acc = acc + (f[s] + f[s + 1] * 3.0 + f[s + 2] * 3.0 + f[s + 3]) * (3.0 * h / 8.0);
  }
  return acc;
}

}  // namespace detail

/// Integrate the system to radius r at spectral parameter z.
inline CanonicalState canonical_solve(const CanonicalSystemSpec& spec, double r, Complex z) {
  detail::CanonState s = detail::canon_integrate(spec, r, z, nullptr);
  return {s.A, s.B};
}

/// One co-integrated pass producing F_r and its first two z-derivatives.
inline CanonicalSolution canonical_solve_with_zderiv(const CanonicalSystemSpec& spec, double r,
                                                     Complex z) {
  detail::CanonState s = detail::canon_integrate(spec, r, z, nullptr);
  return {{s.A, s.B}, {s.Ad, s.Bd}, {s.Ad2, s.Bd2}};
}

/// Residual of F_r(z) j F_r(xi)* = i (z - conj(xi)) \int_0^r F_s(z) F_s(xi)* ds,
/// with the integral taken by Simpson on the solver's own step grid.
inline double integral_identity_residual(const CanonicalSystemSpec& spec, double r, Complex z,
                                         Complex xi) {
  detail::CanonTrajectory tz, txi;
  detail::CanonState sz = detail::canon_integrate(spec, r, z, &tz);
  detail::CanonState sxi = detail::canon_integrate(spec, r, xi, &txi);
  const Index n = spec.n;
  CMat lhs = sz.A * sxi.A.adjoint() - sz.B * sxi.B.adjoint();
  if (tz.r.size() < 2) return opnorm(lhs);
  std::vector<CMat> prod(tz.r.size());
  for (std::size_t k = 0; k < tz.r.size(); ++k)
    prod[k] = tz.A[k] * txi.A[k].adjoint() + tz.B[k] * txi.B[k].adjoint();
  double h = tz.r[1] - tz.r[0];
  CMat integral = detail::simpson(prod, h, CMat(CMat::Zero(n, n)));
  CMat rhs = Complex(0, 1) * (z - std::conj(xi)) * integral;
  return opnorm(lhs - rhs);
}

/// \int_0^r F_s(xi) F_s(xi)* ds on the solver grid; the positivity witness of
/// the canonical construction.
inline CMat canonical_gram_integral(const CanonicalSystemSpec& spec, double r, Complex xi) {
  detail::CanonTrajectory t;
  detail::canon_integrate(spec, r, xi, &t);
  const Index n = spec.n;
  if (t.r.size() < 2) return CMat::Zero(n, n);
  std::vector<CMat> prod(t.r.size());
  for (std::size_t k = 0; k < t.r.size(); ++k)
    prod[k] = t.A[k] * t.A[k].adjoint() + t.B[k] * t.B[k].adjoint();
  double h = t.r[1] - t.r[0];
  return detail::simpson(prod, h, CMat(CMat::Zero(n, n)));
}

/// (r, ||F_r||) trace along the integration, for CSV export.
inline std::vector<std::pair<double, double>> canonical_trace(const CanonicalSystemSpec& spec,
                                                              double r, Complex z) {
  detail::CanonTrajectory t;
  detail::canon_integrate(spec, r, z, &t);
  std::vector<std::pair<double, double>> out;
  out.reserve(t.r.size());
  for (std::size_t k = 0; k < t.r.size(); ++k) {
    CMat f(spec.n, 2 * spec.n);
    f << t.A[k], t.B[k];
    out.emplace_back(t.r[k], f.norm());
  }
  return out;
}

}  // namespace dbspace
