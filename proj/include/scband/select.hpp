#pragma once

// BIC choice of the basis size J over [ceil(0.5 (nNbar)^{1/6}), floor(2 (nNbar)^{1/4})].

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "scband/basis.hpp"
#include "scband/error.hpp"
#include "scband/fit.hpp"
#include "scband/observations.hpp"

namespace scband {

struct SelectOptions {
  /// Penalize with K = J + p instead of J.
  bool penalize_dimension = false;
};

enum class CandidateStatus { Ok, Singular, Skipped };

inline std::string to_string(CandidateStatus s) {
  switch (s) {
    case CandidateStatus::Ok: return "ok";
    case CandidateStatus::Singular: return "singular";
    case CandidateStatus::Skipped: return "skipped";
  }
  return "unknown";
}

struct Candidate {
  int J = 0;
  double bic = std::numeric_limits<double>::quiet_NaN();
  CandidateStatus status = CandidateStatus::Ok;
};

struct SelectionResult {
  std::vector<Candidate> candidates;
  int chosen = 0;
  int j_min = 0;
  int j_max = 0;
};

struct KnotRange {
  int lo = 0;
  int hi = 0;
};

/// Exact integer bounds for a total observation count T = n Nbar:
/// lo = min{J : (2J)^6 >= T}, hi = max{J : J^4 <= 16 T}.
inline KnotRange knot_range(std::size_t total_obs) {
  using u128 = unsigned __int128;
  const u128 T = total_obs;
  auto pow_u = [](u128 b, int e) {
    u128 r = 1;
    for (int i = 0; i < e; ++i) r *= b;
    return r;
  };
  const double t = static_cast<double>(total_obs);
  int lo = std::max(1, static_cast<int>(std::ceil(0.5 * std::pow(t, 1.0 / 6.0))) - 1);
  while (pow_u(2 * static_cast<u128>(lo), 6) < T) ++lo;
  while (lo > 1 && pow_u(2 * static_cast<u128>(lo - 1), 6) >= T) --lo;
  int hi = static_cast<int>(std::floor(2.0 * std::pow(t, 0.25))) + 1;
  while (hi > 0 && pow_u(static_cast<u128>(hi), 4) > 16 * T) --hi;
  while (pow_u(static_cast<u128>(hi + 1), 4) <= 16 * T) ++hi;
  return {lo, hi};
}

/// log[(nNbar)^{-1} sum U_ij^2] + P log(nNbar)/(nNbar), with P = J (or K)
/// and the mean square floored at 1e-300.
inline double bic(const MeanFit& fit, const ObservationSet& data,
                  const SelectOptions& opts = {}) {
  const RaggedArray u = residuals(fit, data);
  double sse = 0.0;
  for (const auto& row : u)
    for (double v : row) sse += v * v;
  const double T = static_cast<double>(data.total_obs());
  const double mse = std::max(sse / T, 1e-300);
  const double params = opts.penalize_dimension ? fit.spec.dim() : fit.spec.size_param();
  return std::log(mse) + params * std::log(T) / T;
}

/// Fits every candidate size in the knot range with the family of `family`
/// and returns the BIC minimizer (ties toward smaller J). Fourier candidates
/// with even J are skipped since the series needs an odd dimension.
inline SelectionResult select_knots(const ObservationSet& data, const BasisSpec& family,
                                    const SelectOptions& opts = {}) {
  const KnotRange range = knot_range(data.total_obs());
  SelectionResult result;
  result.j_min = range.lo;
  result.j_max = range.hi;
  std::optional<std::size_t> best;
  for (int J = range.lo; J <= range.hi; ++J) {
    Candidate c;
    c.J = J;
    if (family.kind() == BasisKind::Fourier && J % 2 == 0) {
      c.status = CandidateStatus::Skipped;
      result.candidates.push_back(c);
      continue;
    }
    try {
      const MeanFit fit = fit_mean(data, family.with_size(J));
      c.bic = bic(fit, data, opts);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DesignSingular) throw;
      c.status = CandidateStatus::Singular;
    }
    result.candidates.push_back(c);
    if (c.status == CandidateStatus::Ok &&
        (!best || c.bic < result.candidates[*best].bic))
      best = result.candidates.size() - 1;
  }
  if (!best)
    fail(ErrorCode::NoFeasibleKnots,
         "no candidate J in [" + std::to_string(range.lo) + ", " + std::to_string(range.hi) +
             "] produced a nonsingular fit; collect more design points per subject or use a "
             "smaller basis");
  result.chosen = result.candidates[*best].J;
  return result;
}

}  // namespace scband
