#pragma once

// Pooled least-squares fit of the mean function over every subject and
// design point.

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "scband/basis.hpp"
#include "scband/error.hpp"
#include "scband/observations.hpp"

namespace scband {

/// Neumaier-compensated running sums over a dense matrix.
class CompensatedMatrix {
 public:
  CompensatedMatrix(Eigen::Index rows, Eigen::Index cols)
      : sum_(Eigen::MatrixXd::Zero(rows, cols)), comp_(Eigen::MatrixXd::Zero(rows, cols)) {}

  void add(Eigen::Index i, Eigen::Index j, double v) {
    double& s = sum_(i, j);
    const double t = s + v;
    if (std::abs(s) >= std::abs(v))
      comp_(i, j) += (s - t) + v;
    else
      comp_(i, j) += (v - t) + s;
    s = t;
  }

  Eigen::MatrixXd value() const { return sum_ + comp_; }

 private:
  Eigen::MatrixXd sum_;
  Eigen::MatrixXd comp_;
};

struct MeanFit {
  BasisSpec spec;
  Eigen::VectorXd theta;
  /// (1/(n Nbar)) sum_ij B(X_ij) B(X_ij)^T
  Eigen::MatrixXd gram;
  Eigen::LLT<Eigen::MatrixXd> gram_chol;
  std::size_t n = 0;
  std::size_t total_obs = 0;
  double mean_count = 0.0;

  int dim() const { return spec.dim(); }
};

namespace detail {

inline Eigen::LLT<Eigen::MatrixXd> factor_gram(const Eigen::MatrixXd& gram) {
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  const double max_diag = gram.diagonal().maxCoeff();
  bool ok = llt.info() == Eigen::Success && max_diag > 0.0;
  if (ok) {
    const Eigen::VectorXd pivots = llt.matrixL().toDenseMatrix().diagonal().array().square();
    ok = pivots.minCoeff() >= 1e-12 * max_diag;
  }
  if (!ok)
    fail(ErrorCode::DesignSingular,
         "Gram matrix is not numerically positive definite (K = " + std::to_string(gram.rows()) +
             "); too many basis functions for the observed design points");
  return llt;
}

}  // namespace detail

inline MeanFit fit_mean(const ObservationSet& data, const BasisSpec& spec) {
  const int K = spec.dim();
  if (static_cast<std::size_t>(K) > data.total_obs())
    fail(ErrorCode::DesignSingular, "basis dimension " + std::to_string(K) +
                                        " exceeds the number of observations " +
                                        std::to_string(data.total_obs()));

  CompensatedMatrix gram_acc(K, K);
  CompensatedMatrix rhs_acc(K, 1);
  for (const Subject& s : data.subjects()) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      const BasisSegment seg = basis_segment(spec, s.x[j]);
      const auto w = seg.values.size();
      for (Eigen::Index a = 0; a < w; ++a) {
        const double ba = seg.values[a];
        rhs_acc.add(seg.offset + a, 0, ba * s.y[j]);
        for (Eigen::Index b = 0; b <= a; ++b)
          gram_acc.add(seg.offset + a, seg.offset + b, ba * seg.values[b]);
      }
    }
  }

  const double scale = 1.0 / static_cast<double>(data.total_obs());
  Eigen::MatrixXd lower = gram_acc.value() * scale;
  MeanFit fit{spec, {}, {}, {}, data.n(), data.total_obs(), data.mean_count()};
  fit.gram = lower.selfadjointView<Eigen::Lower>();
  const Eigen::VectorXd rhs = rhs_acc.value().col(0) * scale;
  fit.gram_chol = detail::factor_gram(fit.gram);
  fit.theta = fit.gram_chol.solve(rhs);
  return fit;
}

inline double predict(const MeanFit& fit, double x) {
  const BasisSegment seg = basis_segment(fit.spec, x);
  return seg.values.dot(fit.theta.segment(seg.offset, seg.values.size()));
}

using RaggedArray = std::vector<std::vector<double>>;

/// U_ij = Y_ij - mhat(X_ij), in the ragged shape of `data`.
inline RaggedArray residuals(const MeanFit& fit, const ObservationSet& data) {
  RaggedArray out;
  out.reserve(data.n());
  for (const Subject& s : data.subjects()) {
    std::vector<double> u(s.size());
    for (std::size_t j = 0; j < s.size(); ++j) u[j] = s.y[j] - predict(fit, s.x[j]);
    out.push_back(std::move(u));
  }
  return out;
}

}  // namespace scband
