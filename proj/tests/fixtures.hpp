#pragma once

// Shared example pairs and closed-form oracles for the test suites.

#include "dbspace/dbspace.hpp"

#include <cmath>
#include <functional>

namespace fixtures {

using namespace dbspace;

// ---- shipped example pairs ----

// Paley-Wiener exponential pair: Eminus = e^{iaz} I, Eplus = e^{-iaz} I.
inline EFun exp_minus(double a, Index n = 1) {
  return EFun::exponential(Complex(0.0, a), CMat::Identity(n, n));
}
inline EFun exp_plus(double a, Index n = 1) {
  return EFun::exponential(Complex(0.0, -a), CMat::Identity(n, n));
}
inline DeBrangesOperator pw_db(double a, Index n = 1) {
  return validate(exp_minus(a, n), exp_plus(a, n));
}

// Diagonal linear pencil pair built from the half-plane factors z +- i k.
inline DeBrangesOperator pencil_db() {
  CMat a(2, 2), b(2, 2), c(2, 2), d(2, 2);
  a << Complex(0, 1), 0, 0, Complex(0, 2);
  b = -CMat::Identity(2, 2);
  c << Complex(0, -1), 0, 0, Complex(0, -2);
  d = -CMat::Identity(2, 2);
  return validate(EFun::pencil(c, d), EFun::pencil(a, b));
}

// Scalar degree-2 polynomial pair from E(z) = (z+i)(z+2i) and its conjugate.
inline DeBrangesOperator poly_db() {
  auto c1 = [](Complex v) {
    CMat m(1, 1);
    m(0, 0) = v;
    return m;
  };
  std::vector<CMat> plus = {c1(-2.0), c1(Complex(0, 3)), c1(1.0)};
  std::vector<CMat> minus = {c1(-2.0), c1(Complex(0, -3)), c1(1.0)};
  return validate(EFun::polynomial(minus), EFun::polynomial(plus));
}

// Block-diagonal two-rate exponential pair diag(e^{-iaz}, e^{-ibz}).
inline DeBrangesOperator expsum_db(double a, double b) {
  CMat p1 = CMat::Zero(2, 2), p2 = CMat::Zero(2, 2);
  p1(0, 0) = 1.0;
  p2(1, 1) = 1.0;
  EFun eplus = EFun::exponential_sum({{Complex(0, -a), p1}, {Complex(0, -b), p2}});
  EFun eminus = EFun::exponential_sum({{Complex(0, a), p1}, {Complex(0, b), p2}});
  return validate(eminus, eplus);
}

inline CanonicalSystemSpec canon_zero_spec(double h = 1e-3) {
  return CanonicalSystemSpec::zero(1, 1.0, h);
}

inline CanonicalSystemSpec canon_q_spec(double q = 0.2, double h = 1e-3) {
  CMat m(1, 1);
  m(0, 0) = q;
  return CanonicalSystemSpec::constant(m, 1.0, h);
}

// ---- closed-form oracles ----

// Paley-Wiener kernel sin(a(z - conj(xi))) / (pi (z - conj(xi))), with a series
// branch so the oracle itself is stable through the confluent point.
inline Complex pw_kernel(double a, Complex xi, Complex z) {
  Complex w = z - std::conj(xi);
  Complex aw = a * w;
  if (std::abs(aw) < 1e-4) {
    Complex aw2 = aw * aw;
    return (a / kPi) * (1.0 - aw2 / 6.0 + aw2 * aw2 / 120.0);
  }
  return std::sin(aw) / (kPi * w);
}

// ---- random generators (deterministic) ----

inline CMat random_matrix(Index rows, Index cols, SplitMix64& rng, double scale = 1.0) {
  CMat m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c)
      m(r, c) = scale * rng.complex_in_box(-1.0, 1.0, -1.0, 1.0);
  return m;
}

inline CMat random_unitary(Index n, SplitMix64& rng) {
  Eigen::HouseholderQR<CMat> qr(random_matrix(n, n, rng));
  return qr.householderQ() * CMat::Identity(n, n);
}

inline CMat random_contraction(Index n, SplitMix64& rng, double norm_bound = 0.9) {
  CMat a = random_matrix(n, n, rng);
  double top = opnorm(a);
  if (top > 0.0) a *= norm_bound / top;
  return a;
}

// ---- finite differences ----

inline CMat central_diff(const std::function<CMat(Complex)>& f, Complex z, double h = 1e-5) {
  return (f(z + Complex(h, 0)) - f(z - Complex(h, 0))) / (2.0 * h);
}

}  // namespace fixtures
