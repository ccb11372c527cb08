#include "helpers.hpp"
#include "ide/sdp_io.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace ide;

TEST(GenDictionary, OneDimensionalColumnsAreSigns) {
  const auto d = gen_dictionary(1, 2, 3);
  for (Index j = 0; j < 2; ++j) EXPECT_DOUBLE_EQ(std::abs(d.matrix()(0, j)), 1.0);
}

TEST(GenDictionary, FullSizeColumnsHaveUnitNorm) {
  const auto d = gen_dictionary(409, 1024, 11);
  for (Index j = 0; j < d.m(); ++j) EXPECT_NEAR(d.matrix().col(j).norm(), 1.0, 1e-12);
}

TEST(GenDictionary, GramHasUnitDiagonalAndOpenOffDiagonal) {
  const auto d = gen_dictionary(3, 8, 7);
  const Matrix g = d.matrix().transpose() * d.matrix();
  for (Index i = 0; i < 8; ++i) {
    EXPECT_NEAR(g(i, i), 1.0, 1e-12);
    for (Index j = 0; j < 8; ++j)
      if (i != j) {
        EXPECT_GT(g(i, j), -1.0);
        EXPECT_LT(g(i, j), 1.0);
      }
  }
}

TEST(GenDictionary, RejectsBadShapes) {
  for (auto [n, m] : {std::pair<Index, Index>{4, 4}, {5, 3}, {0, 3}}) {
    try {
      gen_dictionary(n, m, 1);
      FAIL() << n << "x" << m;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::invalid_dimensions);
    }
  }
}

TEST(GenDictionary, SeedDeterminism) {
  EXPECT_EQ(gen_dictionary(5, 9, 42).matrix(), gen_dictionary(5, 9, 42).matrix());
  EXPECT_NE(gen_dictionary(5, 9, 42).matrix(), gen_dictionary(5, 9, 43).matrix());
}

TEST(Dictionary, RejectsNonUnitColumns) {
  Matrix a = gen_dictionary(3, 5, 1).matrix();
  a(0, 2) += 1e-6;
  EXPECT_THROW(Dictionary{a}, Error);
  EXPECT_NO_THROW(Dictionary::normalized(a));
}

TEST(GenSourceMog, UnitPeakMagnitude) {
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto s = gen_source_mog(257, {}, seed);
    EXPECT_NEAR(s.values.cwiseAbs().maxCoeff(), 1.0, 1e-12);
    EXPECT_EQ(s.model, SourceModel::mog);
  }
}

TEST(GenSourceMog, ActiveCountNearTenPercent) {
  // Roughly 0.1 m components above 0.01 for the experiment-1 parameters.
  const auto s = gen_source_mog(1024, {}, 5);
  const auto count = (s.values.array().abs() > 0.01).count();
  EXPECT_GT(count, 60);
  EXPECT_LT(count, 150);
}

TEST(GenSourceMog, ReproducesDocumentedDrawAndMixtureFraction) {
  // Oracle: replay the documented draw (uniform selector then normal, per
  // component) and undo the peak scaling.
  const Index m = 100000;
  const MogParams p{};
  const auto s = gen_source_mog(m, p, 99);
  Rng rng(99);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal;
  Vector raw(m);
  for (Index i = 0; i < m; ++i) {
    const double sigma = unif(rng) < p.p0 ? p.sigma0 : p.sigma1;
    raw[i] = sigma * normal(rng);
  }
  const double peak = raw.cwiseAbs().maxCoeff();
  EXPECT_LT((s.values - raw / peak).cwiseAbs().maxCoeff(), 1e-15);
  const double frac = static_cast<double>((raw.array().abs() > 5 * p.sigma0).count()) / m;
  EXPECT_NEAR(frac, 0.1, 0.01);
}

TEST(MogParams, Validation) {
  EXPECT_THROW((MogParams{1.0, 0.01, 1.0}.validate()), Error);
  EXPECT_THROW((MogParams{0.9, 2.0, 1.0}.validate()), Error);
  EXPECT_NO_THROW((MogParams{0.9, 0.0, 1.0}.validate()));
}

TEST(GenSourceExactK, ExactlyKUnitEntries) {
  ExactKParams p;
  p.num_active = 100;
  const auto s = gen_source_exact_k(1000, p, 3);
  EXPECT_EQ((s.values.array() == 1.0).count(), 100);
  EXPECT_DOUBLE_EQ(s.values.cwiseAbs().maxCoeff(), 1.0);
}

TEST(GenSourceExactK, FullSupport) {
  ExactKParams p;
  p.num_active = 5;
  const auto s = gen_source_exact_k(5, p, 3);
  EXPECT_EQ(s.values, Vector::Ones(5));
}

TEST(GenSourceExactK, InactiveVariance) {
  ExactKParams p;
  p.num_active = 100;
  p.inactive_sigma = 0.1;
  const auto s = gen_source_exact_k(1000, p, 17);
  std::vector<double> rest;
  for (Index i = 0; i < s.size(); ++i)
    if (s.values[i] != 1.0) rest.push_back(s.values[i]);
  ASSERT_EQ(rest.size(), 900u);
  double mean = 0.0;
  for (double v : rest) mean += v;
  mean /= 900.0;
  double var = 0.0;
  for (double v : rest) var += (v - mean) * (v - mean);
  var /= 899.0;
  EXPECT_NEAR(var, 0.01, 0.002);
}

TEST(GenSourceExactK, RejectsTooManyActives) {
  ExactKParams p;
  p.num_active = 11;
  try {
    gen_source_exact_k(10, p, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::invalid_params);
  }
}

TEST(PerturbDictionary, SmallNoiseStaysClose) {
  const auto d = gen_dictionary(4, 9, 2);
  const auto noisy = perturb_dictionary(d, 1e-14, 5);
  EXPECT_LT((noisy.matrix() - d.matrix()).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(PerturbDictionary, ColumnsRenormalized) {
  const auto d = gen_dictionary(3, 5, 1);
  const auto noisy = perturb_dictionary(d, 0.01, 1);
  for (Index j = 0; j < 5; ++j) EXPECT_NEAR(noisy.matrix().col(j).norm(), 1.0, 1e-12);
}

TEST(PerturbDictionary, FrobeniusSnrFallsWithNoise) {
  const auto d = gen_dictionary(200, 500, 4);
  double last = std::numeric_limits<double>::infinity();
  for (double sigma : {0.001, 0.003, 0.01, 0.03, 0.1}) {
    double sum = 0.0;
    for (std::uint64_t t = 0; t < 10; ++t) {
      const auto noisy = perturb_dictionary(d, sigma, 100 + t);
      sum += (d.matrix().squaredNorm() / (d.matrix() - noisy.matrix()).squaredNorm());
    }
    EXPECT_LT(sum / 10, last);
    last = sum / 10;
  }
}

TEST(PerturbDictionary, VarianceAndStdDevReadings) {
  // With level = sigma * max|a| < 1, the variance reading injects more noise.
  const auto d = gen_dictionary(20, 40, 8);
  const auto v = perturb_dictionary(d, 0.01, 3, PerturbationScale::variance);
  const auto s = perturb_dictionary(d, 0.01, 3, PerturbationScale::std_dev);
  EXPECT_GT((v.matrix() - d.matrix()).norm(), (s.matrix() - d.matrix()).norm());
  EXPECT_THROW(perturb_dictionary(d, 0.0, 3), Error);
}

TEST(MakeProblem, HandExample) {
  Matrix a(2, 3);
  a << 1, 0, 1, 0, 1, 0;
  Vector s(3);
  s << 1, 0, 0;
  const auto p = make_problem(Dictionary(a), {s, SourceModel::external});
  EXPECT_EQ(p.mixture(), Vector::Unit(2, 0));
}

TEST(MakeProblem, MixtureIsProduct) {
  const auto p = test::random_problem(4, 8, 12);
  EXPECT_LT((p.mixture() - p.a() * p.truth()->values).norm(), 1e-14);
}

TEST(MakeProblem, DimensionMismatch) {
  try {
    make_problem(gen_dictionary(2, 4, 1), {Vector::Ones(5), SourceModel::external});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::dimension_mismatch);
  }
}

TEST(SparseProblem, RejectsInconsistentTruth) {
  const auto p = test::random_problem(3, 6, 2);
  Vector x = p.mixture();
  x[0] += 1e-3;
  EXPECT_THROW(SparseProblem(p.dictionary(), x, p.truth()), Error);
  EXPECT_NO_THROW(SparseProblem(p.dictionary(), x));
}

TEST(Sdp, RoundTripIsBitExact) {
  const auto p = test::random_problem(5, 11, 31);
  std::stringstream ss;
  write_sdp(ss, p);
  const auto q = read_sdp(ss);
  EXPECT_EQ(q.a(), p.a());
  EXPECT_EQ(q.mixture(), p.mixture());
  ASSERT_TRUE(q.truth());
  EXPECT_EQ(q.truth()->values, p.truth()->values);
  EXPECT_EQ(q.seed(), p.seed());
}

TEST(Sdp, WithoutTruth) {
  const auto p = test::random_problem(3, 7, 1);
  const SparseProblem bare(p.dictionary(), p.mixture(), std::nullopt, 9);
  std::stringstream ss;
  write_sdp(ss, bare);
  const auto q = read_sdp(ss);
  EXPECT_FALSE(q.truth());
  EXPECT_EQ(q.seed(), 9u);
}

TEST(Sdp, ParseErrorsCarryLineNumbers) {
  auto fails_at = [](const std::string& text, const std::string& where) {
    std::istringstream in(text);
    try {
      read_sdp(in);
      ADD_FAILURE() << "accepted: " << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::parse_error);
      EXPECT_NE(std::string(e.what()).find(where), std::string::npos) << e.what();
    }
  };
  fails_at("", "line 1");
  fails_at("1 2 0\n1 abc\n1\n", "line 2");
  fails_at("1 2 0\n1 1\n", "end of file");         // missing x
  fails_at("1 2 0\n1 -1\n1\n1 0 7\n", "line 4");  // trailing token
  fails_at("1 2 0\n1 0.5\n1\n", "invalid instance"); // non-unit column
  fails_at("2 2 0\n1 0\n0 1\n1 1\n", "line 1");    // n >= m
}

TEST(Sdp, FileIo) {
  const auto p = test::random_problem(3, 6, 5);
  const std::string path = ::testing::TempDir() + "/p.sdp";
  save_sdp(path, p);
  EXPECT_EQ(load_sdp(path).mixture(), p.mixture());
  EXPECT_THROW(load_sdp(path + ".missing"), std::ios_base::failure);
}
