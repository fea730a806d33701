#pragma once

// Synthetic functional data from the Karhunen-Loeve model
//   Y_ij = m(X_ij) + sum_k sqrt(lambda_k) xi_ik psi_k(X_ij) + sigma(X_ij) eps_ij
// and Monte Carlo coverage campaigns for the simultaneous band.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "scband/band.hpp"
#include "scband/basis.hpp"
#include "scband/covariance.hpp"
#include "scband/error.hpp"
#include "scband/fit.hpp"
#include "scband/observations.hpp"
#include "scband/parallel.hpp"
#include "scband/random.hpp"
#include "scband/select.hpp"

namespace scband {

inline std::string to_string(ScoreDistribution d) {
  switch (d) {
    case ScoreDistribution::Normal01: return "normal";
    case ScoreDistribution::UniformSym: return "uniform";
    case ScoreDistribution::LaplaceStd: return "laplace";
  }
  return "unknown";
}

inline ScoreDistribution parse_distribution(const std::string& name) {
  if (name == "normal") return ScoreDistribution::Normal01;
  if (name == "uniform") return ScoreDistribution::UniformSym;
  if (name == "laplace") return ScoreDistribution::LaplaceStd;
  fail(ErrorCode::Config, "unknown distribution '" + name + "' (expected normal|uniform|laplace)");
}

/// m(x) = 1.5 sin(3 pi (x + 1/2)) + 2 x^3
inline double true_mean(double x) {
  return 1.5 * std::sin(3.0 * std::numbers::pi * (x + 0.5)) + 2.0 * x * x * x;
}

/// psi_{2k-1} = sqrt2 sin(2k pi x), psi_{2k} = sqrt2 cos(2k pi x); k is 1-based.
inline double eigenfunction(int k, double x) {
  const int freq = (k + 1) / 2;
  const double w = 2.0 * freq * std::numbers::pi * x;
  return std::numbers::sqrt2 * (k % 2 == 1 ? std::sin(w) : std::cos(w));
}

inline double noise_sd(double x, double sigma_eps, bool heteroscedastic) {
  if (!heteroscedastic) return sigma_eps;
  const double e = std::exp(-x);
  return 1.2 * sigma_eps * (5.0 - e) / (5.0 + e);
}

struct SimulationConfig {
  int setting = 1;
  int n = 100;
  ScoreDistribution score_dist = ScoreDistribution::Normal01;
  ScoreDistribution error_dist = ScoreDistribution::Normal01;
  bool heteroscedastic = false;
  double sigma_eps = 0.1;
  int reps = 500;
  BandConfig band;
  std::uint64_t seed = 1;
  std::array<double, 4> lambdas{1.0, 0.5, 0.25, 0.125};
  BasisKind basis = BasisKind::BSpline;
  int order = 4;
  /// Fixed basis size J; BIC selection when empty.
  std::optional<int> fixed_size;
  SelectOptions select;
  unsigned threads = 1;

  void validate() const {
    if (setting < 1 || setting > 4) fail(ErrorCode::Config, "setting must be 1, 2, 3 or 4");
    if (n < 10) fail(ErrorCode::Config, "n must be >= 10");
    if (reps < 1) fail(ErrorCode::Config, "reps must be >= 1");
    if (!(sigma_eps >= 0.0)) fail(ErrorCode::Config, "sigma_eps must be >= 0");
    if (order < 1) fail(ErrorCode::Config, "order must be >= 1");
    for (double l : lambdas)
      if (!(l >= 0.0)) fail(ErrorCode::Config, "lambdas must be >= 0");
    band.validate();
  }

  BasisSpec basis_family() const {
    switch (basis) {
      case BasisKind::BSpline: return BasisSpec::bspline(1, order);
      case BasisKind::Fourier: return BasisSpec::fourier(1);
      case BasisKind::Legendre: return BasisSpec::legendre(1);
    }
    return BasisSpec::bspline(1, order);
  }
};

struct CountSupport {
  int lo = 0;
  int hi = 0;
};

namespace detail {

// max{k >= 0 : k^e <= bound}
inline long long integer_root_floor(long double bound, int e) {
  auto k = static_cast<long long>(std::floor(std::pow(bound, 1.0L / e)));
  auto pw = [e](long long b) {
    long double r = 1;
    for (int i = 0; i < e; ++i) r *= b;
    return r;
  };
  while (k > 0 && pw(k) > bound) --k;
  while (pw(k + 1) <= bound) ++k;
  return k;
}

}  // namespace detail

/// Support of N_i for the four sampling schemes, sparse (1) to dense (4).
inline CountSupport count_support(int setting, int n) {
  CountSupport s;
  const auto nn = static_cast<long double>(n);
  switch (setting) {
    case 1: s = {3, 6}; break;
    case 2:  // floor(2 n^{1/5}) .. floor(4 n^{1/5})
      s = {static_cast<int>(detail::integer_root_floor(32.0L * nn, 5)),
           static_cast<int>(detail::integer_root_floor(1024.0L * nn, 5))};
      break;
    case 3:  // floor(n^{1/2}) .. floor(2 n^{1/2})
      s = {static_cast<int>(detail::integer_root_floor(nn, 2)),
           static_cast<int>(detail::integer_root_floor(4.0L * nn, 2))};
      break;
    case 4: s = {n / 4, n / 2}; break;
    default: fail(ErrorCode::Config, "setting must be 1, 2, 3 or 4");
  }
  if (s.lo < 1 || s.lo > s.hi)
    fail(ErrorCode::EmptySupport, "setting " + std::to_string(setting) + " with n = " +
                                      std::to_string(n) + " has an empty count support");
  return s;
}

inline std::vector<int> sample_counts(int setting, int n, RandomStream& rng) {
  const CountSupport s = count_support(setting, n);
  std::vector<int> counts(static_cast<std::size_t>(n));
  for (int& c : counts) c = static_cast<int>(rng.uniform_int(s.lo, s.hi));
  return counts;
}

struct SimulatedData {
  ObservationSet data;
  std::function<double(double)> mean;
};

/// Replication `rep` draws from stream (cfg.seed, rep): all counts first, then
/// per subject its four scores followed by (X_ij, eps_ij) pairs.
inline SimulatedData gen_dataset(const SimulationConfig& cfg, std::uint64_t rep) {
  RandomStream rng(cfg.seed, rep);
  const std::vector<int> counts = sample_counts(cfg.setting, cfg.n, rng);
  std::array<double, 4> root_lambda{};
  for (std::size_t k = 0; k < 4; ++k) root_lambda[k] = std::sqrt(cfg.lambdas[k]);

  std::vector<Subject> subjects(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    std::array<double, 4> xi{};
    for (double& v : xi) v = draw(cfg.score_dist, rng);
    Subject& s = subjects[i];
    s.x.resize(static_cast<std::size_t>(counts[i]));
    s.y.resize(s.x.size());
    for (std::size_t j = 0; j < s.x.size(); ++j) {
      const double x = rng.uniform();
      const double eps = draw(cfg.error_dist, rng);
      double y = true_mean(x);
      for (int k = 0; k < 4; ++k) y += root_lambda[static_cast<std::size_t>(k)] * xi[static_cast<std::size_t>(k)] * eigenfunction(k + 1, x);
      y += noise_sd(x, cfg.sigma_eps, cfg.heteroscedastic) * eps;
      s.x[j] = x;
      s.y[j] = y;
    }
  }
  return {ObservationSet(std::move(subjects)), true_mean};
}

enum class RepStatus { Ok, NoFeasibleKnots, Failed };

inline std::string to_string(RepStatus s) {
  switch (s) {
    case RepStatus::Ok: return "ok";
    case RepStatus::NoFeasibleKnots: return "no_feasible_knots";
    case RepStatus::Failed: return "failed";
  }
  return "unknown";
}

struct RepRecord {
  int rep = 0;
  RepStatus status = RepStatus::Ok;
  int J = 0;
  int K = 0;
  double qhat = 0.0;
  bool covered = false;
  /// Max-entry norms of Sigma1 / Sigma2 (the phase-transition diagnostic).
  double norm_sigma1 = 0.0;
  double norm_sigma2 = 0.0;
  /// Operator infinity norms (max absolute row sum).
  double opnorm_sigma1 = 0.0;
  double opnorm_sigma2 = 0.0;
  std::string message;
};

struct SimulationReport {
  double coverage = 0.0;
  double mean_norm_sigma1 = 0.0;
  double mean_norm_sigma2 = 0.0;
  double mean_opnorm_sigma1 = 0.0;
  double mean_opnorm_sigma2 = 0.0;
  int successes = 0;
  int no_feasible = 0;
  int failures = 0;
  std::vector<RepRecord> records;
};

/// Key of the multiplier-bootstrap stream for replication `rep`.
inline std::uint64_t band_seed_for(std::uint64_t seed, std::uint64_t rep) {
  return mix64(seed ^ mix64(rep + 0x51ED270B0A5E1ull));
}

/// One full pipeline pass: generate, select, fit, estimate, band, check.
inline RepRecord run_replication(const SimulationConfig& cfg, int rep) {
  RepRecord rec;
  rec.rep = rep;
  try {
    const SimulatedData sim = gen_dataset(cfg, static_cast<std::uint64_t>(rep));
    const BasisSpec family = cfg.basis_family();
    const int J = cfg.fixed_size ? *cfg.fixed_size : select_knots(sim.data, family, cfg.select).chosen;
    const MeanFit fit = fit_mean(sim.data, family.with_size(J));
    const CovarianceStructure cov = estimate_covariance(fit, sim.data);
    BandConfig bc = cfg.band;
    bc.seed = band_seed_for(cfg.seed, static_cast<std::uint64_t>(rep));
    bc.threads = 1;
    const BandResult band = build_band(fit, cov, bc, sim.data);
    rec.J = J;
    rec.K = fit.dim();
    rec.qhat = band.qhat;
    rec.covered = covers(band, sim.mean);
    rec.norm_sigma1 = max_norm(cov.sigma1);
    rec.norm_sigma2 = max_norm(cov.sigma2);
    rec.opnorm_sigma1 = op_inf_norm(cov.sigma1);
    rec.opnorm_sigma2 = op_inf_norm(cov.sigma2);
  } catch (const Error& e) {
    rec.status = e.code() == ErrorCode::NoFeasibleKnots ? RepStatus::NoFeasibleKnots : RepStatus::Failed;
    rec.message = e.what();
  }
  return rec;
}

inline SimulationReport run_coverage(const SimulationConfig& cfg) {
  cfg.validate();
  SimulationReport report;
  report.records.resize(static_cast<std::size_t>(cfg.reps));
  parallel_for(report.records.size(), cfg.threads, [&](std::size_t r) {
    report.records[r] = run_replication(cfg, static_cast<int>(r));
  });

  int covered = 0;
  double sum1 = 0.0, sum2 = 0.0, op1 = 0.0, op2 = 0.0;
  for (const RepRecord& rec : report.records) {
    switch (rec.status) {
      case RepStatus::Ok:
        ++report.successes;
        covered += rec.covered ? 1 : 0;
        sum1 += rec.norm_sigma1;
        sum2 += rec.norm_sigma2;
        op1 += rec.opnorm_sigma1;
        op2 += rec.opnorm_sigma2;
        break;
      case RepStatus::NoFeasibleKnots: ++report.no_feasible; break;
      case RepStatus::Failed: ++report.failures; break;
    }
  }
  if (report.successes > 0) {
    report.coverage = static_cast<double>(covered) / report.successes;
    report.mean_norm_sigma1 = sum1 / report.successes;
    report.mean_norm_sigma2 = sum2 / report.successes;
    report.mean_opnorm_sigma1 = op1 / report.successes;
    report.mean_opnorm_sigma2 = op2 / report.successes;
  }
  return report;
}

}  // namespace scband
