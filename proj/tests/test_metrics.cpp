#include "helpers.hpp"
#include "ide/metrics.hpp"

#include <gtest/gtest.h>

#include <thread>

using namespace ide;

TEST(SpatialSnr, HandValues) {
  Vector s(2), e(2);
  s << 1, 0;
  e << 1, 0.1;
  EXPECT_NEAR(spatial_snr(s, e).linear, 100.0, 1e-9);
  EXPECT_NEAR(spatial_snr(s, e).db(), 20.0, 1e-9);
  EXPECT_NEAR(spatial_snr(s, Vector::Zero(2)).linear, 1.0, 0);
  EXPECT_TRUE(spatial_snr(s, s).infinite);
  EXPECT_TRUE(std::isinf(spatial_snr(s, s).db()));
}

TEST(SpatialSnr, Errors) {
  try {
    spatial_snr(Vector::Zero(3), Vector::Ones(3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::zero_truth);
  }
  EXPECT_THROW(spatial_snr(Vector::Ones(3), Vector::Ones(2)), Error);
}

TEST(SpatialSnr, ScaleInvariant) {
  const Vector s = Vector::Random(20), e = Vector::Random(20);
  for (double c : {-3.0, 0.01, 1e4})
    EXPECT_NEAR(spatial_snr(c * s, c * e).linear, spatial_snr(s, e).linear,
                1e-12 * spatial_snr(s, e).linear);
}

TEST(SpatialSnr, DbRoundTrip) {
  for (double lin : {1e-3, 0.5, 1.0, 37.0, 1e6}) {
    const SnrMeasurement m{lin, false};
    EXPECT_NEAR(SnrMeasurement::from_db(m.db()).linear, lin, 1e-9 * lin);
  }
  EXPECT_TRUE(SnrMeasurement::from_db(std::numeric_limits<double>::infinity()).infinite);
}

TEST(TemporalSnr, HandSeriesAgainstReversedAccumulation) {
  Matrix s(2, 3), e(2, 3);
  s << 1, -2, 0.5, 0, 3, 1;
  e << 1.1, -2, 0.4, 0.2, 2.5, 1;
  const auto out = temporal_snr(s, e);
  ASSERT_EQ(out.size(), 2u);
  for (Index i = 0; i < 2; ++i) {
    double sig = 0, err = 0;
    for (Index t = 2; t >= 0; --t) {
      sig += s(i, t) * s(i, t);
      err += (s(i, t) - e(i, t)) * (s(i, t) - e(i, t));
    }
    EXPECT_NEAR(out[static_cast<std::size_t>(i)].linear, sig / err, 1e-12);
  }
}

TEST(TemporalSnr, SingleSampleCollapsesToPerIndexRatio) {
  const Vector s = Vector::Random(5), e = Vector::Random(5);
  const auto out = temporal_snr(s, e);  // one column
  for (Index i = 0; i < 5; ++i)
    EXPECT_NEAR(out[static_cast<std::size_t>(i)].linear, s[i] * s[i] / ((s[i] - e[i]) * (s[i] - e[i])), 1e-9);
}

TEST(TemporalSnr, ExactAndZeroEnergy) {
  Matrix s = Matrix::Random(3, 4);
  s.row(1).setZero();
  const auto out = temporal_snr(s, s);
  EXPECT_TRUE(out[0].infinite);
  EXPECT_TRUE(std::isnan(out[1].linear));
  EXPECT_TRUE(out[2].infinite);
  EXPECT_THROW(temporal_snr(s, Matrix::Zero(3, 3)), Error);
}

TEST(RelativeError, Values) {
  const auto p = test::random_problem(4, 9, 1);
  EXPECT_LE(relative_approx_error(p, p.truth()->values), 1e-8);
  EXPECT_DOUBLE_EQ(relative_approx_error(p, Vector::Zero(9)), 1.0);
  const SparseProblem zero(p.dictionary(), Vector::Zero(4));
  EXPECT_THROW(relative_approx_error(zero, Vector::Zero(9)), Error);
}

TEST(FrobeniusSnr, Values) {
  Matrix a(3, 4), b(3, 4);
  a << 1, 2, 0, -1, 0.5, 0, 3, 1, -2, 1, 1, 0;
  b = a;
  b(1, 2) = 2.5;
  b(0, 0) = 0.0;
  EXPECT_TRUE(frobenius_snr(a, a).infinite);
  EXPECT_DOUBLE_EQ(frobenius_snr(a, Matrix::Zero(3, 4)).linear, 1.0);
  double sig = 0, err = 0;
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 4; ++j) {
      sig += a(i, j) * a(i, j);
      err += (a(i, j) - b(i, j)) * (a(i, j) - b(i, j));
    }
  EXPECT_NEAR(frobenius_snr(a, b).linear, sig / err, 1e-12);
}

TEST(Stopwatch, NonNegativeAndNested) {
  EXPECT_GE(stopwatch([] {}), 0.0);
  double inner = 0.0;
  const double outer = stopwatch([&] { inner = stopwatch([] { std::this_thread::sleep_for(std::chrono::milliseconds(2)); }); });
  EXPECT_GE(outer, inner);
  const auto timed = stopwatch([] { return 7; });
  EXPECT_EQ(timed.result, 7);
}

TEST(Stopwatch, CalibratedBusyLoop) {
  const double target = 0.05;
  const double elapsed = stopwatch([target] {
    const auto start = Clock::now();
    while (seconds_since(start) < target) {
    }
  });
  EXPECT_NEAR(elapsed, target, 0.2 * target);
}
