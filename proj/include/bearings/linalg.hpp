#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <string>

#include "bearings/errors.hpp"

namespace bearings {

/// Numerical rank and orthonormal null-space basis of a dense matrix.
struct RankNullspace {
  int rank = 0;
  Eigen::MatrixXd nullspace;  // cols(M) x (cols(M) - rank), orthonormal columns
};

/// Rank decision: singular values sigma_k > tol * sigma_max * max(rows, cols)
/// count toward the rank. With sigma_max = 0 the matrix is all zeros and the
/// rank is 0.
inline RankNullspace rank_nullspace(const Eigen::MatrixXd& m, double rel_tol = 1e-10) {
  if (m.rows() == 0 || m.cols() == 0)
    throw ValidationError("rank_nullspace: matrix is empty (" + std::to_string(m.rows()) + "x" +
                          std::to_string(m.cols()) + ")");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
  const auto& sigma = svd.singularValues();
  const double sigma_max = sigma.size() > 0 ? sigma(0) : 0.0;
  const double threshold = rel_tol * sigma_max * static_cast<double>(std::max(m.rows(), m.cols()));

  int rank = 0;
  for (Eigen::Index k = 0; k < sigma.size(); ++k)
    if (sigma(k) > threshold) ++rank;

  RankNullspace out;
  out.rank = rank;
  out.nullspace = svd.matrixV().rightCols(m.cols() - rank);
  return out;
}

inline int matrix_rank(const Eigen::MatrixXd& m, double rel_tol = 1e-10) {
  return rank_nullspace(m, rel_tol).rank;
}

/// Eigenvalues of a symmetric matrix, ascending. The input is symmetrized
/// first so that small asymmetries from accumulated roundoff do not spill
/// into complex arithmetic.
inline Eigen::VectorXd symmetric_eigenvalues(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols())
    throw ValidationError("symmetric_eigenvalues: matrix is not square");
  Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericError("symmetric eigenvalue solve failed");
  return es.eigenvalues();
}

/// Spectral norm (largest singular value).
inline double spectral_norm(const Eigen::MatrixXd& m) {
  if (m.rows() == 0 || m.cols() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(0);
}

/// Kronecker product, used to lift vertex-space operators to stacked
/// configuration space.
inline Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace bearings
