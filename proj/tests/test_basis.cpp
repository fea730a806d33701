#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "scband/basis.hpp"

using namespace scband;

namespace {

void expect_vector_near(const BasisVector& got, const oracle::Vector& want, double tol) {
  ASSERT_EQ(static_cast<std::size_t>(got.size()), want.size());
  for (std::size_t k = 0; k < want.size(); ++k)
    EXPECT_NEAR(got[static_cast<Eigen::Index>(k)], want[k], tol) << "entry " << k;
}

}  // namespace

TEST(KnotGrid, EquallySpacedKnots) {
  EXPECT_EQ(make_knot_grid(0).knots, (std::vector<double>{0.0, 1.0}));
  EXPECT_EQ(make_knot_grid(1).knots, (std::vector<double>{0.0, 0.5, 1.0}));
  EXPECT_EQ(make_knot_grid(3).knots, (std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0}));
  EXPECT_THROW(make_knot_grid(-1), Error);
}

TEST(BSpline, PiecewiseConstantIndicator) {
  const auto b = eval_basis(BasisSpec::bspline(3, 1), 0.1);
  expect_vector_near(b, {1, 0, 0, 0}, 0.0);
}

TEST(BSpline, LinearHatsHandValue) {
  const auto b = eval_basis(BasisSpec::bspline(1, 2), 0.25);
  expect_vector_near(b, {0.5, 0.5, 0.0}, 1e-15);
}

TEST(BSpline, CubicLocalPartitionOfUnity) {
  const auto b = eval_basis(BasisSpec::bspline(5, 4), 0.37);
  EXPECT_EQ(b.size(), 9);
  EXPECT_NEAR(b.sum(), 1.0, 1e-14);
  EXPECT_LE((b.array() != 0.0).count(), 4);
}

TEST(BSpline, MatchesRecursiveDefinition) {
  for (int p : {1, 2, 3, 4, 5})
    for (int J : {0, 1, 2, 5, 9}) {
      const BasisSpec spec = BasisSpec::bspline(J, p);
      for (int m = 0; m <= 200; ++m) {
        const double x = m / 200.0;
        expect_vector_near(eval_basis(spec, x), oracle::bspline(J, p, x), 1e-13);
      }
    }
}

TEST(BSpline, PartitionOfUnityAndSupport) {
  for (int p : {1, 2, 3, 4})
    for (int J : {0, 1, 5, 20}) {
      const BasisSpec spec = BasisSpec::bspline(J, p);
      const KnotGrid& grid = spec.as_bspline()->grid;
      for (int m = 0; m < 1000; ++m) {
        const double x = (m + 0.5) / 1000.0;
        const auto b = eval_basis(spec, x);
        EXPECT_LE(std::abs(b.sum() - 1.0), 1e-12);
        for (Eigen::Index l = 0; l < b.size(); ++l) {
          EXPECT_GE(b[l], 0.0);
          // support of B_l is [t_{l-p}, t_l] in extended indexing
          const double lo = detail::extended_knot(grid, p, static_cast<int>(l));
          const double hi = detail::extended_knot(grid, p, static_cast<int>(l) + p);
          if (x < lo || x > hi) {
            EXPECT_EQ(b[l], 0.0) << "p=" << p << " J=" << J << " l=" << l;
          }
        }
      }
    }
}

TEST(BSpline, ContinuousAcrossInteriorKnots) {
  const double h = 1e-8;
  for (int p : {2, 3, 4})
    for (int J : {1, 4, 9}) {
      const BasisSpec spec = BasisSpec::bspline(J, p);
      // |B'| <= 2 (p - 1) / (knot spacing)
      const double C = 2.0 * (p - 1) * (J + 1);
      for (double t : spec.as_bspline()->grid.knots) {
        if (t <= 0.0 || t >= 1.0) continue;
        const auto diff = (eval_basis(spec, t + h) - eval_basis(spec, t - h)).cwiseAbs().maxCoeff();
        EXPECT_LE(diff, C * 2.0 * h);
      }
    }
}

TEST(BSpline, RightEndpointClosure) {
  const auto b = eval_basis(BasisSpec::bspline(3, 4), 1.0);
  EXPECT_DOUBLE_EQ(b[b.size() - 1], 1.0);
  EXPECT_NEAR(b.sum(), 1.0, 1e-15);
}

TEST(BSpline, RejectsOutsideUnitInterval) {
  const BasisSpec spec = BasisSpec::bspline(2);
  EXPECT_THROW(eval_basis(spec, -1e-9), Error);
  EXPECT_THROW(eval_basis(spec, 1.0 + 1e-9), Error);
  EXPECT_THROW(eval_basis(spec, std::nan("")), Error);
}

TEST(Fourier, KnownValues) {
  const double r2 = std::numbers::sqrt2;
  expect_vector_near(eval_basis(BasisSpec::fourier(3), 0.0), {1, r2, 0}, 1e-15);
  expect_vector_near(eval_basis(BasisSpec::fourier(3), 0.5), {1, -r2, 0}, 1e-15);
  for (int J : {1, 3, 7, 15})
    for (double x : {0.0, 0.13, 0.5, 0.99, 1.0}) EXPECT_EQ(eval_basis(BasisSpec::fourier(J), x)[0], 1.0);
}

TEST(Fourier, RequiresOddDimension) {
  EXPECT_THROW(BasisSpec::fourier(4), Error);
  EXPECT_THROW(BasisSpec::fourier(0), Error);
}

TEST(Fourier, MatchesClosedForm) {
  for (int J : {1, 3, 9})
    for (int m = 0; m <= 50; ++m)
      expect_vector_near(eval_basis(BasisSpec::fourier(J), m / 50.0), oracle::fourier(J, m / 50.0), 1e-13);
}

TEST(Fourier, SimpsonOrthonormality) {
  const int J = 15;
  const BasisSpec spec = BasisSpec::fourier(J);
  for (int a = 0; a < J; ++a)
    for (int b = 0; b < J; ++b) {
      const double v = oracle::simpson([&](double x) {
        const auto phi = eval_basis(spec, x);
        return phi[a] * phi[b];
      });
      EXPECT_NEAR(v, a == b ? 1.0 : 0.0, 1e-8) << a << "," << b;
    }
}

TEST(Legendre, KnownValues) {
  expect_vector_near(eval_basis(BasisSpec::legendre(2), 0.5), {1, 0}, 1e-15);
  expect_vector_near(eval_basis(BasisSpec::legendre(3), 1.0), {1, std::sqrt(3.0), std::sqrt(5.0)}, 1e-14);
}

TEST(Legendre, MatchesExplicitSum) {
  for (int m = 0; m <= 40; ++m)
    expect_vector_near(eval_basis(BasisSpec::legendre(10), m / 40.0), oracle::legendre(10, m / 40.0), 1e-9);
}

TEST(Legendre, GaussOrthonormality) {
  const auto [nodes, weights] = oracle::gauss_legendre(40);
  for (int J : {1, 5, 10, 15}) {
    const BasisSpec spec = BasisSpec::legendre(J);
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(J, J);
    for (std::size_t q = 0; q < nodes.size(); ++q) {
      const auto phi = eval_basis(spec, nodes[q]);
      gram += weights[q] * phi * phi.transpose();
    }
    const double tol = J <= 10 ? 1e-10 : 1e-8;
    EXPECT_LE((gram - Eigen::MatrixXd::Identity(J, J)).cwiseAbs().maxCoeff(), tol) << "J=" << J;
  }
}

TEST(BasisSpec, DispatchAndSizes) {
  const BasisSpec bs = BasisSpec::bspline(5, 4);
  EXPECT_EQ(bs.dim(), 9);
  EXPECT_EQ(bs.size_param(), 5);
  EXPECT_EQ(bs.order(), 4);
  EXPECT_EQ(eval_basis(bs, 0.3), eval_bspline(*bs.as_bspline(), 0.3));
  const BasisSpec fs = BasisSpec::fourier(5);
  EXPECT_EQ(fs.dim(), 5);
  EXPECT_EQ(eval_basis(fs, 0.3), eval_fourier(*fs.as_fourier(), 0.3));
  const BasisSpec ls = BasisSpec::legendre(4);
  EXPECT_EQ(eval_basis(ls, 0.3), eval_legendre(*ls.as_legendre(), 0.3));
  EXPECT_EQ(bs.with_size(7).dim(), 11);
  EXPECT_EQ(parse_basis_kind("legendre"), BasisKind::Legendre);
  EXPECT_THROW(parse_basis_kind("wavelet"), Error);
}

TEST(BasisSpec, SegmentAgreesWithFullVector) {
  for (const BasisSpec& spec : {BasisSpec::bspline(6, 4), BasisSpec::bspline(3, 2), BasisSpec::fourier(5),
                                BasisSpec::legendre(6)}) {
    for (int m = 0; m <= 100; ++m) {
      const double x = m / 100.0;
      const auto full = eval_basis(spec, x);
      const BasisSegment seg = basis_segment(spec, x);
      BasisVector rebuilt = BasisVector::Zero(full.size());
      rebuilt.segment(seg.offset, seg.values.size()) = seg.values;
      EXPECT_LE((rebuilt - full).cwiseAbs().maxCoeff(), 1e-15);
    }
  }
}

TEST(BasisSpec, MatrixRowsAreBasisVectors) {
  const BasisSpec spec = BasisSpec::bspline(4, 3);
  const std::vector<double> xs{0.0, 0.2, 0.77, 1.0};
  const Eigen::MatrixXd m = basis_matrix(spec, xs);
  ASSERT_EQ(m.rows(), 4);
  ASSERT_EQ(m.cols(), spec.dim());
  for (std::size_t i = 0; i < xs.size(); ++i)
    EXPECT_EQ(Eigen::VectorXd(m.row(static_cast<Eigen::Index>(i)).transpose()), eval_basis(spec, xs[i]));
}
