#pragma once

// Basis systems on [0,1]: B-splines on equally spaced knots, and the
// orthonormal Fourier and shifted-Legendre series.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "scband/error.hpp"

namespace scband {

using BasisVector = Eigen::VectorXd;

/// Equally spaced knots 0 = t_0 < t_1 < ... < t_{J+1} = 1 with t_l = l/(J+1).
struct KnotGrid {
  int interior = 0;
  std::vector<double> knots;

  int intervals() const { return interior + 1; }
};

inline KnotGrid make_knot_grid(int interior) {
  if (interior < 0) fail(ErrorCode::InvalidArgument, "knot count must be nonnegative");
  KnotGrid grid;
  grid.interior = interior;
  grid.knots.resize(static_cast<std::size_t>(interior) + 2);
  for (int l = 0; l <= interior + 1; ++l)
    grid.knots[static_cast<std::size_t>(l)] = static_cast<double>(l) / (interior + 1);
  return grid;
}

struct BSplineBasis {
  int order = 4;
  KnotGrid grid;
};

struct FourierBasis {
  int dim = 1;
};

struct LegendreBasis {
  int dim = 1;
};

enum class BasisKind { BSpline, Fourier, Legendre };

inline std::string to_string(BasisKind kind) {
  switch (kind) {
    case BasisKind::BSpline: return "bspline";
    case BasisKind::Fourier: return "fourier";
    case BasisKind::Legendre: return "legendre";
  }
  return "unknown";
}

inline BasisKind parse_basis_kind(const std::string& name) {
  if (name == "bspline") return BasisKind::BSpline;
  if (name == "fourier") return BasisKind::Fourier;
  if (name == "legendre") return BasisKind::Legendre;
  fail(ErrorCode::Config, "unknown basis '" + name + "' (expected bspline|fourier|legendre)");
}

class BasisSpec {
 public:
  static BasisSpec bspline(int interior_knots, int order = 4) {
    if (order < 1) fail(ErrorCode::InvalidArgument, "B-spline order must be >= 1");
    return BasisSpec(BSplineBasis{order, make_knot_grid(interior_knots)});
  }
  static BasisSpec fourier(int dim) {
    if (dim < 1 || dim % 2 == 0)
      fail(ErrorCode::InvalidArgument, "Fourier dimension must be a positive odd integer");
    return BasisSpec(FourierBasis{dim});
  }
  static BasisSpec legendre(int dim) {
    if (dim < 1) fail(ErrorCode::InvalidArgument, "Legendre dimension must be >= 1");
    return BasisSpec(LegendreBasis{dim});
  }

  /// Same family as `*this` with a different size parameter J (interior
  /// knots for B-splines, series dimension otherwise).
  BasisSpec with_size(int J) const {
    switch (kind()) {
      case BasisKind::BSpline: return bspline(J, order());
      case BasisKind::Fourier: return fourier(J);
      case BasisKind::Legendre: return legendre(J);
    }
    return *this;
  }

  BasisKind kind() const { return static_cast<BasisKind>(impl_.index()); }

  /// Basis dimension K.
  int dim() const {
    if (auto* b = std::get_if<BSplineBasis>(&impl_)) return b->grid.interior + b->order;
    if (auto* f = std::get_if<FourierBasis>(&impl_)) return f->dim;
    return std::get<LegendreBasis>(impl_).dim;
  }

  /// The paper-level size parameter J.
  int size_param() const {
    if (auto* b = std::get_if<BSplineBasis>(&impl_)) return b->grid.interior;
    return dim();
  }

  /// Spline order p (0 for series bases).
  int order() const {
    if (auto* b = std::get_if<BSplineBasis>(&impl_)) return b->order;
    return 0;
  }

  const BSplineBasis* as_bspline() const { return std::get_if<BSplineBasis>(&impl_); }
  const FourierBasis* as_fourier() const { return std::get_if<FourierBasis>(&impl_); }
  const LegendreBasis* as_legendre() const { return std::get_if<LegendreBasis>(&impl_); }

 private:
  using Impl = std::variant<BSplineBasis, FourierBasis, LegendreBasis>;
  explicit BasisSpec(Impl impl) : impl_(std::move(impl)) {}
  Impl impl_;
};

inline void check_unit_interval(double x) {
  if (!(x >= 0.0 && x <= 1.0))
    fail(ErrorCode::Domain, "evaluation point " + std::to_string(x) + " outside [0,1]");
}

/// Nonzero block of a basis vector: entries [offset, offset + values.size()).
struct BasisSegment {
  int offset = 0;
  Eigen::VectorXd values;
};

namespace detail {

// Knot interval containing x; right-continuous, with x = 1 closed into the
// last interval.
inline int knot_interval(const KnotGrid& grid, double x) {
  const int last = grid.interior;
  int l = static_cast<int>(std::floor(x * grid.intervals()));
  l = std::clamp(l, 0, last);
  const auto& t = grid.knots;
  while (l > 0 && x < t[static_cast<std::size_t>(l)]) --l;
  while (l < last && x >= t[static_cast<std::size_t>(l) + 1]) ++l;
  return l;
}

// Knot of the extended sequence that repeats 0 and 1 exactly p times.
// Index i runs over [0, J + 2p).
inline double extended_knot(const KnotGrid& grid, int order, int i) {
  const int idx = std::clamp(i - order + 1, 0, grid.interior + 1);
  return grid.knots[static_cast<std::size_t>(idx)];
}

}  // namespace detail

/// Nonzero B-spline values at x: `order` consecutive entries via the
/// triangular Cox-de Boor scheme.
inline BasisSegment bspline_segment(const BSplineBasis& basis, double x) {
  check_unit_interval(x);
  const int p = basis.order;
  const int l = detail::knot_interval(basis.grid, x);
  // In extended indexing the interval [t_l, t_{l+1}) is [u_{l+p-1}, u_{l+p}).
  const int span = l + p - 1;

  BasisSegment seg;
  seg.offset = l;
  seg.values.setZero(p);
  seg.values[0] = 1.0;
  std::vector<double> left(static_cast<std::size_t>(p)), right(static_cast<std::size_t>(p));
  for (int d = 1; d < p; ++d) {
    left[static_cast<std::size_t>(d)] = x - detail::extended_knot(basis.grid, p, span + 1 - d);
    right[static_cast<std::size_t>(d)] = detail::extended_knot(basis.grid, p, span + d) - x;
    double saved = 0.0;
    for (int r = 0; r < d; ++r) {
      const double denom = right[static_cast<std::size_t>(r) + 1] + left[static_cast<std::size_t>(d - r)];
      const double tmp = seg.values[r] / denom;
      seg.values[r] = saved + right[static_cast<std::size_t>(r) + 1] * tmp;
      saved = left[static_cast<std::size_t>(d - r)] * tmp;
    }
    seg.values[d] = saved;
  }
  return seg;
}

inline BasisVector eval_bspline(const BSplineBasis& basis, double x) {
  const BasisSegment seg = bspline_segment(basis, x);
  BasisVector out = BasisVector::Zero(basis.grid.interior + basis.order);
  out.segment(seg.offset, seg.values.size()) = seg.values;
  return out;
}

/// (1, sqrt2 cos 2pi x, sqrt2 sin 2pi x, sqrt2 cos 4pi x, ...), unit L2 norm.
inline BasisVector eval_fourier(const FourierBasis& basis, double x) {
  check_unit_interval(x);
  BasisVector out(basis.dim);
  out[0] = 1.0;
  for (int k = 1; 2 * k <= basis.dim; ++k) {
    const double w = 2.0 * k * std::numbers::pi * x;
    out[2 * k - 1] = std::numbers::sqrt2 * std::cos(w);
    if (2 * k < basis.dim) out[2 * k] = std::numbers::sqrt2 * std::sin(w);
  }
  return out;
}

/// Shifted Legendre polynomials sqrt(2k+1) P_k(2x-1), orthonormal on [0,1].
inline BasisVector eval_legendre(const LegendreBasis& basis, double x) {
  check_unit_interval(x);
  const double u = 2.0 * x - 1.0;
  BasisVector out(basis.dim);
  double prev = 0.0, cur = 1.0;
  for (int k = 0; k < basis.dim; ++k) {
    out[k] = std::sqrt(2.0 * k + 1.0) * cur;
    const double next = ((2.0 * k + 1.0) * u * cur - k * prev) / (k + 1.0);
    prev = cur;
    cur = next;
  }
  return out;
}

inline BasisVector eval_basis(const BasisSpec& spec, double x) {
  if (auto* b = spec.as_bspline()) return eval_bspline(*b, x);
  if (auto* f = spec.as_fourier()) return eval_fourier(*f, x);
  return eval_legendre(*spec.as_legendre(), x);
}

/// Nonzero part of eval_basis; the full vector for series bases.
inline BasisSegment basis_segment(const BasisSpec& spec, double x) {
  if (auto* b = spec.as_bspline()) return bspline_segment(*b, x);
  return BasisSegment{0, eval_basis(spec, x)};
}

/// Rows are B(x_m)^T for each point.
inline Eigen::MatrixXd basis_matrix(const BasisSpec& spec, const std::vector<double>& xs) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(xs.size()), spec.dim());
  for (std::size_t m = 0; m < xs.size(); ++m) {
    const BasisSegment seg = basis_segment(spec, xs[m]);
    out.row(static_cast<Eigen::Index>(m)).segment(seg.offset, seg.values.size()) = seg.values.transpose();
  }
  return out;
}

}  // namespace scband
