#pragma once

// Plug-in covariance of the normalized mean estimator,
//   Sigma = Sigma1 + Sigma2,
// with Sigma1 collecting within-subject cross products (j != j') and Sigma2
// the diagonal j == j' terms. Both are sandwiched by the inverse Gram matrix.

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "scband/basis.hpp"
#include "scband/error.hpp"
#include "scband/fit.hpp"
#include "scband/observations.hpp"

namespace scband {

struct CovarianceStructure {
  Eigen::MatrixXd sigma1;
  Eigen::MatrixXd sigma2;
  Eigen::MatrixXd sigma;
  Eigen::MatrixXd sqrt_sigma;
  int K = 0;
  std::size_t n = 0;
  double mean_count = 0.0;
};

/// Maximum absolute row sum.
inline double op_inf_norm(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().rowwise().sum().maxCoeff();
}

/// Largest absolute entry.
inline double max_norm(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().maxCoeff();
}

/// Symmetric square root U diag(sqrt(max(lambda, 0))) U^T. Eigenvalues below
/// 1e-12 * lambda_max are treated as zero; anything below
/// -1e-8 * max|lambda| is rejected.
inline Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) fail(ErrorCode::InvalidArgument, "psd_sqrt: matrix is not square");
  if (m.size() == 0) return m;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  if (eig.info() != Eigen::Success) fail(ErrorCode::NotPSD, "psd_sqrt: eigendecomposition failed");
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  const double lmax = lambda.maxCoeff();
  const double amax = lambda.cwiseAbs().maxCoeff();
  if (lambda.minCoeff() < -1e-8 * amax)
    fail(ErrorCode::NotPSD, "psd_sqrt: matrix has eigenvalue " + std::to_string(lambda.minCoeff()) +
                                " below the PSD tolerance");
  const double floor = 1e-12 * std::max(lmax, 0.0);
  Eigen::VectorXd root(lambda.size());
  for (Eigen::Index k = 0; k < lambda.size(); ++k)
    root[k] = lambda[k] > floor ? std::sqrt(lambda[k]) : 0.0;
  const Eigen::MatrixXd& u = eig.eigenvectors();
  Eigen::MatrixXd out = u * root.asDiagonal() * u.transpose();
  return 0.5 * (out + out.transpose());
}

namespace detail {

inline Eigen::MatrixXd sandwich(const MeanFit& fit, const Eigen::MatrixXd& middle) {
  // V^{-1} M V^{-1}
  const Eigen::MatrixXd left = fit.gram_chol.solve(middle);
  Eigen::MatrixXd out = fit.gram_chol.solve(left.transpose());
  return 0.5 * (out + out.transpose());
}

}  // namespace detail

inline CovarianceStructure estimate_covariance(const MeanFit& fit, const ObservationSet& data) {
  if (fit.gram_chol.info() != Eigen::Success || fit.gram_chol.rows() != fit.dim())
    fail(ErrorCode::DesignSingular, "estimate_covariance: fit carries no Gram factor");
  const int K = fit.dim();
  const RaggedArray u = residuals(fit, data);

  // Per subject: s_i = sum_j B(X_ij) U_ij and D_i = sum_j B B^T U_ij^2.
  Eigen::MatrixXd outer = Eigen::MatrixXd::Zero(K, K);
  Eigen::MatrixXd diag = Eigen::MatrixXd::Zero(K, K);
  Eigen::VectorXd s(K);
  for (std::size_t i = 0; i < data.n(); ++i) {
    const Subject& subj = data[i];
    s.setZero();
    for (std::size_t j = 0; j < subj.size(); ++j) {
      const BasisSegment seg = basis_segment(fit.spec, subj.x[j]);
      const double uij = u[i][j];
      const auto w = seg.values.size();
      s.segment(seg.offset, w) += seg.values * uij;
      diag.block(seg.offset, seg.offset, w, w).noalias() +=
          (uij * uij) * seg.values * seg.values.transpose();
    }
    outer.selfadjointView<Eigen::Lower>().rankUpdate(s);
  }
  outer = outer.selfadjointView<Eigen::Lower>();

  const double total = static_cast<double>(data.total_obs());
  // n * Nbar^2 = (sum N_i)^2 / n
  const double denom = total * total / static_cast<double>(data.n());

  CovarianceStructure cov;
  cov.K = K;
  cov.n = data.n();
  cov.mean_count = data.mean_count();
  cov.sigma1 = detail::sandwich(fit, (outer - diag) / denom);
  cov.sigma2 = detail::sandwich(fit, diag / denom);
  cov.sigma = cov.sigma1 + cov.sigma2;
  cov.sqrt_sigma = psd_sqrt(cov.sigma);
  return cov;
}

/// ||Sigma^{1/2} B(x)||_2 computed from an already evaluated basis vector.
inline double scale_from_basis(const CovarianceStructure& cov, const BasisVector& b) {
  return (cov.sqrt_sigma * b).norm();
}

inline double pointwise_scale(const MeanFit& fit, const CovarianceStructure& cov, double x) {
  const double v = scale_from_basis(cov, eval_basis(fit.spec, x));
  if (!(v >= 1e-14))
    fail(ErrorCode::DegenerateScale, "pointwise scale vanishes at x = " + std::to_string(x));
  return v;
}

}  // namespace scband
