#pragma once

#include "dbspace/types.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace dbspace {

/// Spectral norm (largest singular value).
inline double opnorm(const CMat& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<CMat> svd(m);
  return svd.singularValues()(0);
}

/// Smallest singular value. Nonnegative; 0 for an empty matrix.
inline double sigma_min(const CMat& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<CMat> svd(m);
  return svd.singularValues()(svd.singularValues().size() - 1);
}

inline bool is_hermitian(const CMat& m, double tol) {
  require_square(m, "is_hermitian");
  double scale = m.cwiseAbs().maxCoeff();
  double dev = (m - m.adjoint()).cwiseAbs().maxCoeff();
  return dev <= tol * (1.0 + scale);
}

namespace detail {

inline Eigen::VectorXd hermitian_eigenvalues(const CMat& m) {
  CMat h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<CMat> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

}  // namespace detail

/// PSD test on the Hermitian part: lambda_min >= -tol * (1 + spectral norm).
/// Rejects inputs that are not Hermitian within tol.
inline bool is_psd(const CMat& m, double tol) {
  require_square(m, "is_psd");
  if (!is_hermitian(m, tol))
    throw PreconditionError("is_psd: input is not Hermitian within tolerance");
  if (m.size() == 0) return true;
  Eigen::VectorXd ev = detail::hermitian_eigenvalues(m);
  double norm = std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
  return ev(0) >= -tol * (1.0 + norm);
}

/// Hermitian PSD square root by eigendecomposition; small negative eigenvalues
/// are clamped to zero, indefinite input beyond psd_tol is rejected.
inline CMat psd_sqrt(const CMat& m, double psd_tol = 1e-10) {
  require_square(m, "psd_sqrt");
  CMat h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<CMat> es(h);
  Eigen::VectorXd ev = es.eigenvalues();
  double norm = 0.0;
  if (ev.size() > 0) norm = std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
  Eigen::VectorXd root(ev.size());
  for (Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < -psd_tol * (1.0 + norm))
      throw PreconditionError("psd_sqrt: indefinite input, lambda_min = " + std::to_string(ev(i)));
    root(i) = ev(i) > 0.0 ? std::sqrt(ev(i)) : 0.0;
  }
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().adjoint();
}

/// Hermitian positive-definite inverse square root (all eigenvalues must clear
/// rel_tol * lambda_max).
inline CMat pd_inv_sqrt(const CMat& m, double rel_tol = 1e-12) {
  require_square(m, "pd_inv_sqrt");
  CMat h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<CMat> es(h);
  Eigen::VectorXd ev = es.eigenvalues();
  double top = ev(ev.size() - 1);
  Eigen::VectorXd root(ev.size());
  for (Index i = 0; i < ev.size(); ++i) {
    if (ev(i) <= rel_tol * std::max(top, 0.0) || ev(i) <= 0.0)
      throw SingularityError("pd_inv_sqrt: matrix not positive definite, lambda = " +
                             std::to_string(ev(i)));
    root(i) = 1.0 / std::sqrt(ev(i));
  }
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().adjoint();
}

/// Moore-Penrose pseudoinverse; singular values below rank_rel_tol * sigma_max
/// are treated as zero.
inline CMat pinv(const CMat& m, double rank_rel_tol = 1e-12) {
  if (m.size() == 0) return CMat(m.cols(), m.rows());
  Eigen::JacobiSVD<CMat> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  double cut = rank_rel_tol * sv(0);
  Eigen::VectorXd inv(sv.size());
  for (Index i = 0; i < sv.size(); ++i) inv(i) = sv(i) > cut ? 1.0 / sv(i) : 0.0;
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().adjoint();
}

inline int numerical_rank(const CMat& m, double rank_rel_tol = 1e-12) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<CMat> svd(m);
  const auto& sv = svd.singularValues();
  double cut = rank_rel_tol * sv(0);
  int r = 0;
  for (Index i = 0; i < sv.size(); ++i)
    if (sv(i) > cut) ++r;
  return r;
}

inline bool is_unitary(const CMat& m, double tol) {
  require_square(m, "is_unitary");
  Index n = m.rows();
  CMat id = CMat::Identity(n, n);
  return opnorm(m * m.adjoint() - id) <= tol && opnorm(m.adjoint() * m - id) <= tol;
}

/// dim ker - dim coker from the SVD rank. Always 0 for square input: the
/// finite truncation collapses the index pair to (0, 0).
inline int fredholm_index(const CMat& m, double rank_rel_tol = 1e-12) {
  int r = numerical_rank(m, rank_rel_tol);
  return static_cast<int>(m.cols() - r) - static_cast<int>(m.rows() - r);
}

}  // namespace dbspace
