#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "scband/select.hpp"

using namespace scband;

namespace {

ObservationSet with_responses(std::mt19937_64& gen, int n, int lo, int hi, double (*mean)(double)) {
  std::vector<Subject> subjects = oracle::random_sample(gen, n, lo, hi).subjects();
  std::normal_distribution<double> noise(0.0, 0.5);
  for (Subject& s : subjects)
    for (std::size_t j = 0; j < s.size(); ++j) s.y[j] = mean(s.x[j]) + noise(gen);
  return ObservationSet(std::move(subjects));
}

}  // namespace

TEST(KnotRange, ExactBounds) {
  EXPECT_EQ(knot_range(4096).lo, 2);
  EXPECT_EQ(knot_range(4096).hi, 16);
  // ceil(0.5 * 100^(1/6)) = ceil(1.077) = 2, floor(2 * 100^(1/4)) = floor(6.32) = 6
  EXPECT_EQ(knot_range(100).lo, 2);
  EXPECT_EQ(knot_range(100).hi, 6);
  // 64^(1/6) = 2 exactly: lower bound lands on 1
  EXPECT_EQ(knot_range(64).lo, 1);
  EXPECT_EQ(knot_range(64).hi, 5);
  // 16 * 81 / 16: 81^(1/4) = 3 exactly so the upper bound is 6
  EXPECT_EQ(knot_range(81).hi, 6);
  EXPECT_EQ(knot_range(1).lo, 1);
  EXPECT_EQ(knot_range(1).hi, 2);
}

TEST(KnotRange, AgreesWithRealBoundsAwayFromTies) {
  for (std::size_t T = 2; T < 200000; T = T * 3 / 2 + 1) {
    const long double t = static_cast<long double>(T);
    const long double lo_real = 0.5L * std::pow(t, 1.0L / 6.0L);
    const long double hi_real = 2.0L * std::pow(t, 0.25L);
    if (std::abs(lo_real - std::round(lo_real)) < 1e-9L || std::abs(hi_real - std::round(hi_real)) < 1e-9L) continue;
    const KnotRange r = knot_range(T);
    EXPECT_EQ(r.lo, std::max(1, static_cast<int>(std::ceil(lo_real)))) << T;
    EXPECT_EQ(r.hi, static_cast<int>(std::floor(hi_real))) << T;
  }
}

TEST(Bic, UnitMeanSquareExample) {
  std::vector<Subject> subjects(20);
  for (std::size_t i = 0; i < subjects.size(); ++i)
    for (int j = 0; j < 5; ++j) {
      subjects[i].x.push_back((static_cast<double>(i) * 5 + j + 0.5) / 100.0);
      subjects[i].y.push_back(j % 2 ? 1.0 : -1.0);
    }
  const ObservationSet data(std::move(subjects));
  ASSERT_EQ(data.total_obs(), 100u);
  MeanFit fit = fit_mean(data, BasisSpec::bspline(2));
  fit.theta.setZero();
  EXPECT_NEAR(bic(fit, data), 2.0 * std::log(100.0) / 100.0, 1e-15);
  EXPECT_NEAR(bic(fit, data), 0.09210, 5e-6);
  // K-penalized variant uses K = J + p = 6
  EXPECT_NEAR(bic(fit, data, SelectOptions{true}), 6.0 * std::log(100.0) / 100.0, 1e-15);
}

TEST(Bic, PerfectFitUsesFloor) {
  const ObservationSet data({Subject{{0.1, 0.4, 0.7}, {2.0, 2.0, 2.0}}, Subject{{0.2, 0.9}, {2.0, 2.0}}});
  const MeanFit fit = fit_mean(data, BasisSpec::legendre(1));
  const double b = bic(fit, data);
  EXPECT_TRUE(std::isfinite(b));
  EXPECT_NEAR(b, std::log(1e-300) + std::log(5.0) / 5.0, 1e-9);
}

TEST(Bic, DoublingResidualsAddsLogFour) {
  std::mt19937_64 gen(1);
  const ObservationSet data = oracle::random_sample(gen, 30, 3, 6);
  const BasisSpec spec = BasisSpec::bspline(3);
  const MeanFit fit = fit_mean(data, spec);
  std::vector<Subject> doubled = data.subjects();
  for (Subject& s : doubled)
    for (std::size_t j = 0; j < s.size(); ++j) s.y[j] = predict(fit, s.x[j]) + 2.0 * (s.y[j] - predict(fit, s.x[j]));
  const ObservationSet d2(std::move(doubled));
  EXPECT_NEAR(bic(fit, d2) - bic(fit, data), std::log(4.0), 1e-12);
}

TEST(SelectKnots, ChoosesMinimumAndIsDeterministic) {
  std::mt19937_64 gen(2);
  const ObservationSet data = oracle::random_sample(gen, 80, 3, 8);
  const SelectionResult a = select_knots(data, BasisSpec::bspline(1));
  const SelectionResult b = select_knots(data, BasisSpec::bspline(1));
  const KnotRange r = knot_range(data.total_obs());
  EXPECT_EQ(a.j_min, r.lo);
  EXPECT_EQ(a.j_max, r.hi);
  ASSERT_EQ(a.candidates.size(), static_cast<std::size_t>(r.hi - r.lo + 1));
  EXPECT_EQ(a.chosen, b.chosen);
  double chosen_bic = 0.0;
  for (const Candidate& c : a.candidates)
    if (c.J == a.chosen) chosen_bic = c.bic;
  for (std::size_t k = 0; k < a.candidates.size(); ++k) {
    const Candidate& c = a.candidates[k];
    EXPECT_EQ(c.J, r.lo + static_cast<int>(k));
    EXPECT_EQ(c.bic, b.candidates[k].bic);
    if (c.status == CandidateStatus::Ok) {
      EXPECT_LE(chosen_bic, c.bic);
      if (c.J < a.chosen) {
        EXPECT_LT(chosen_bic, c.bic);
      }
    }
  }
}

TEST(SelectKnots, OscillatoryMeanNeedsMoreKnots) {
  std::mt19937_64 g1(3), g2(3);
  const ObservationSet flat = with_responses(g1, 100, 25, 50, [](double) { return 0.0; });
  const ObservationSet wavy = with_responses(g2, 100, 25, 50, [](double x) { return 2.0 * std::sin(8.0 * std::numbers::pi * x); });
  EXPECT_GT(select_knots(wavy, BasisSpec::bspline(1)).chosen, select_knots(flat, BasisSpec::bspline(1)).chosen);
}

TEST(SelectKnots, SingleFeasibleCandidate) {
  // T = 5 gives the range [1, 2]; the even Fourier size is skipped.
  const ObservationSet data({Subject{{0.1, 0.5, 0.8}, {1.0, 2.0, 0.5}}, Subject{{0.3, 0.95}, {1.5, 0.0}}});
  const SelectionResult r = select_knots(data, BasisSpec::fourier(1));
  ASSERT_EQ(r.candidates.size(), 2u);
  EXPECT_EQ(r.candidates[1].status, CandidateStatus::Skipped);
  EXPECT_EQ(r.chosen, 1);
}

TEST(SelectKnots, SingularCandidatesAreExcluded) {
  // 12 observations in [0, 0.6]: J = 1 sees both intervals, larger J leave the last one empty.
  std::vector<Subject> subjects(4);
  for (std::size_t i = 0; i < subjects.size(); ++i)
    for (int j = 0; j < 3; ++j) {
      subjects[i].x.push_back(0.6 * (static_cast<double>(i) * 3 + j + 0.5) / 12.0);
      subjects[i].y.push_back(static_cast<double>(j));
    }
  const ObservationSet data(std::move(subjects));
  const SelectionResult r = select_knots(data, BasisSpec::bspline(1, 1));
  bool singular = false;
  for (const Candidate& c : r.candidates) singular |= c.status == CandidateStatus::Singular;
  EXPECT_TRUE(singular);
  EXPECT_EQ(r.candidates[0].status, CandidateStatus::Ok);
  EXPECT_EQ(r.chosen, 1);
}

TEST(SelectKnots, NoFeasibleCandidateIsAnError) {
  const ObservationSet data({Subject{{0.5, 0.5, 0.5}, {1.0, 2.0, 3.0}}});
  try {
    select_knots(data, BasisSpec::bspline(1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoFeasibleKnots);
  }
}

TEST(SelectKnots, ConstantResponsesGiveFiniteBic) {
  std::mt19937_64 gen(4);
  std::vector<Subject> subjects = oracle::random_sample(gen, 40, 3, 6).subjects();
  for (Subject& s : subjects)
    for (double& y : s.y) y = 3.0;
  const SelectionResult r = select_knots(ObservationSet(std::move(subjects)), BasisSpec::bspline(1));
  for (const Candidate& c : r.candidates)
    if (c.status == CandidateStatus::Ok) {
      EXPECT_TRUE(std::isfinite(c.bic));
    }
  EXPECT_GE(r.chosen, r.j_min);
}
