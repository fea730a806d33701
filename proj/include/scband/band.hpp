#pragma once

// Simultaneous confidence band: simulate the sup-norm of the standardized
// Gaussian process x -> B(x)^T Z / ||Sigma^{1/2} B(x)||, Z ~ N(0, Sigma),
// and scale the resulting quantile by the pointwise standard deviation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "scband/basis.hpp"
#include "scband/covariance.hpp"
#include "scband/error.hpp"
#include "scband/fit.hpp"
#include "scband/log.hpp"
#include "scband/observations.hpp"
#include "scband/parallel.hpp"
#include "scband/random.hpp"

namespace scband {

struct BandConfig {
  double alpha = 0.05;
  int replications = 500;
  int grid_size = 1000;
  std::uint64_t seed = 20240101;
  /// Worker threads for the replications; the result does not depend on it.
  unsigned threads = 1;

  void validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorCode::Config, "alpha must lie in (0,1)");
    if (replications < 100) fail(ErrorCode::Config, "replications (B) must be >= 100");
    if (grid_size < 50) fail(ErrorCode::Config, "grid size (M) must be >= 50");
  }
};

struct BandResult {
  std::vector<double> grid;
  std::vector<double> mhat;
  std::vector<double> scale;
  /// False where the scale is degenerate and the band is undefined.
  std::vector<char> defined;
  std::vector<double> lower;
  std::vector<double> upper;
  double qhat = 0.0;
  double alpha = 0.0;
  int replications = 0;
  std::uint64_t seed = 0;
  std::size_t n = 0;
};

/// Midpoint grid {(m - 0.5)/M : m = 1..M}.
inline std::vector<double> band_grid(int size) {
  std::vector<double> g(static_cast<std::size_t>(size));
  for (int m = 0; m < size; ++m) g[static_cast<std::size_t>(m)] = (m + 0.5) / size;
  return g;
}

/// Index (1-based) of the order statistic used as the empirical upper-alpha
/// quantile: ceil((1 - alpha) B).
inline int quantile_rank(double alpha, int replications) {
  const double r = (1.0 - alpha) * replications;
  // guard against (1 - 0.05) * 500 = 475.00000000000006
  const int k = static_cast<int>(std::ceil(r - 1e-9 * std::max(1.0, r)));
  return std::clamp(k, 1, replications);
}

namespace detail {

struct GridScales {
  Eigen::MatrixXd basis;     // M x K
  Eigen::VectorXd scale;     // M
  std::vector<char> defined; // M
};

inline GridScales grid_scales(const MeanFit& fit, const CovarianceStructure& cov,
                              const std::vector<double>& grid) {
  GridScales gs;
  gs.basis = basis_matrix(fit.spec, grid);
  const Eigen::MatrixXd root_rows = gs.basis * cov.sqrt_sigma;
  gs.scale = root_rows.rowwise().norm();
  gs.defined.resize(grid.size());
  std::size_t degenerate = 0;
  for (std::size_t m = 0; m < grid.size(); ++m) {
    gs.defined[m] = gs.scale[static_cast<Eigen::Index>(m)] >= 1e-14;
    if (!gs.defined[m]) ++degenerate;
  }
  if (degenerate == grid.size())
    fail(ErrorCode::AllDegenerate, "pointwise scale is degenerate at every grid point");
  if (degenerate > 0)
    warn(std::to_string(degenerate) + " grid point(s) have degenerate scale; band undefined there");
  return gs;
}

inline double simulate_quantile_on_grid(const CovarianceStructure& cov, const GridScales& gs,
                                        const BandConfig& cfg) {
  const Eigen::Index K = cov.sqrt_sigma.rows();
  // Rows B(x)^T Sigma^{1/2} / scale(x) on defined points only.
  std::vector<Eigen::Index> keep;
  for (std::size_t m = 0; m < gs.defined.size(); ++m)
    if (gs.defined[m]) keep.push_back(static_cast<Eigen::Index>(m));
  Eigen::MatrixXd normalized(static_cast<Eigen::Index>(keep.size()), K);
  for (std::size_t r = 0; r < keep.size(); ++r)
    normalized.row(static_cast<Eigen::Index>(r)) =
        gs.basis.row(keep[r]) * cov.sqrt_sigma / gs.scale[keep[r]];

  std::vector<double> sup(static_cast<std::size_t>(cfg.replications));
  parallel_for(sup.size(), cfg.threads, [&](std::size_t b) {
    RandomStream rng(cfg.seed, b);
    Eigen::VectorXd w(K);
    for (Eigen::Index k = 0; k < K; ++k) w[k] = rng.normal();
    const Eigen::VectorXd path = normalized * w;
    sup[b] = path.cwiseAbs().maxCoeff();
  });
  const auto k = static_cast<std::size_t>(quantile_rank(cfg.alpha, cfg.replications));
  std::nth_element(sup.begin(), sup.begin() + static_cast<std::ptrdiff_t>(k - 1), sup.end());
  return sup[k - 1];
}

}  // namespace detail

/// Empirical upper-alpha quantile of sup_x |zeta_b(x)| over the band grid.
/// Replication b draws its K standard normals from stream (seed, b).
inline double simulate_quantile(const MeanFit& fit, const CovarianceStructure& cov,
                                const BandConfig& cfg) {
  cfg.validate();
  const auto grid = band_grid(cfg.grid_size);
  return detail::simulate_quantile_on_grid(cov, detail::grid_scales(fit, cov, grid), cfg);
}

inline BandResult build_band(const MeanFit& fit, const CovarianceStructure& cov,
                             const BandConfig& cfg, const ObservationSet& data) {
  cfg.validate();
  BandResult band;
  band.grid = band_grid(cfg.grid_size);
  const detail::GridScales gs = detail::grid_scales(fit, cov, band.grid);
  band.qhat = detail::simulate_quantile_on_grid(cov, gs, cfg);
  band.alpha = cfg.alpha;
  band.replications = cfg.replications;
  band.seed = cfg.seed;
  band.n = data.n();
  band.defined = gs.defined;

  const std::size_t M = band.grid.size();
  const Eigen::VectorXd mhat = gs.basis * fit.theta;
  const double root_n = std::sqrt(static_cast<double>(data.n()));
  band.mhat.resize(M);
  band.scale.resize(M);
  band.lower.resize(M);
  band.upper.resize(M);
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t m = 0; m < M; ++m) {
    const auto i = static_cast<Eigen::Index>(m);
    band.mhat[m] = mhat[i];
    band.scale[m] = gs.scale[i];
    if (gs.defined[m]) {
      const double half = band.qhat * gs.scale[i] / root_n;
      band.lower[m] = mhat[i] - half;
      band.upper[m] = mhat[i] + half;
    } else {
      band.lower[m] = nan;
      band.upper[m] = nan;
    }
  }
  return band;
}

/// True iff lower <= f <= upper at every grid point where the band is defined.
inline bool covers(const BandResult& band, const std::function<double(double)>& f) {
  for (std::size_t m = 0; m < band.grid.size(); ++m) {
    if (!band.defined[m]) continue;
    const double v = f(band.grid[m]);
    if (!(band.lower[m] <= v && v <= band.upper[m])) return false;
  }
  return true;
}

}  // namespace scband
