#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

namespace dbspace {

inline constexpr const char* kVersion = "0.1.0";

using Complex = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using Index = Eigen::Index;

inline constexpr double kPi = std::numbers::pi;

/// rho_xi(z) = -2*pi*i*(z - conj(xi)), the half-plane kernel normalization.
inline Complex rho(Complex xi, Complex z) {
  return Complex(0.0, -2.0 * kPi) * (z - std::conj(xi));
}

struct Tolerances {
  double psd_tol = 1e-10;         // PSD acceptance, scaled by spectral norm
  double rank_rel_tol = 1e-12;    // singular values below this * sigma_max count as zero
  double unitary_tol = 1e-8;      // ||UU* - I|| acceptance
  double singular_accept = 1e-8;  // sigma_min below this * scale counts as singular
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the domain of a non-entire function (e.g. lower half-plane).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Numerically singular matrix where invertibility was required.
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// Violated operation precondition; message names the failing quantity.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

inline bool all_finite(const CMat& m) {
  return m.allFinite();
}

inline void require_square(const CMat& m, const char* who) {
  if (m.rows() != m.cols())
    throw DimensionError(std::string(who) + ": matrix must be square, got " +
                         std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
}

/// splitmix64; used instead of std:: distributions so that seeded sampling is
/// bit-identical across standard libraries.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// uniform in [0, 1)
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  Complex complex_in_box(double re_lo, double re_hi, double im_lo, double im_hi) {
    double re = uniform(re_lo, re_hi);
    double im = uniform(im_lo, im_hi);
    return {re, im};
  }

  CVec unit_vector(Index n) {
    CVec v(n);
    for (Index i = 0; i < n; ++i) v(i) = complex_in_box(-1.0, 1.0, -1.0, 1.0);
    double nrm = v.norm();
    if (nrm == 0.0) {
      v.setZero();
      v(0) = 1.0;
      return v;
    }
    return v / nrm;
  }

 private:
  std::uint64_t state_;
};

}  // namespace dbspace
