#include <lrlasso/data.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace lrlasso;

namespace {

CsvOptions opts(std::string response = "y") {
  CsvOptions o;
  o.response_column = std::move(response);
  return o;
}

Dataset random_dataset(Index n, Index p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::lognormal_distribution<double> dist(0.0, 1.0);
  std::normal_distribution<double> normal;
  Dataset d;
  d.x.resize(n, p);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j) d.x(i, j) = dist(rng);
  d.y.resize(n);
  for (Index i = 0; i < n; ++i) d.y[i] = normal(rng);
  for (Index j = 0; j < p; ++j) d.feature_names.push_back("f" + std::to_string(j));
  return d;
}

}  // namespace

TEST(Csv, SmallPositiveFileIsReadVerbatim) {
  const Dataset d = parse_csv("a,b,y\n1.5,2,0.1\n3,4.25,0.2\n5,6,-0.3\n", opts());
  ASSERT_EQ(d.n(), 3);
  ASSERT_EQ(d.p(), 2);
  EXPECT_EQ(d.feature_names, (std::vector<std::string>{"a", "b"}));
  EXPECT_DOUBLE_EQ(d.x(0, 0), 1.5);
  EXPECT_DOUBLE_EQ(d.x(1, 1), 4.25);
  EXPECT_DOUBLE_EQ(d.y[2], -0.3);
  EXPECT_FALSE(d.group_ids.has_value());
}

TEST(Csv, ResponseColumnMayAppearAnywhere) {
  const Dataset d = parse_csv("y,a,b\n1,2,3\n4,5,6\n", opts());
  EXPECT_DOUBLE_EQ(d.y[1], 4.0);
  EXPECT_DOUBLE_EQ(d.x(1, 0), 5.0);
}

TEST(Csv, PseudocountTurnsZeroIntoOne) {
  CsvOptions o = opts();
  o.pseudocount = 1.0;
  const Dataset d = parse_csv("a,b,y\n0,2,1\n3,0,2\n", o);
  EXPECT_DOUBLE_EQ(d.x(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(d.x(0, 1), 3.0);
  EXPECT_DOUBLE_EQ(d.x(1, 1), 1.0);
}

TEST(Csv, ZeroWithoutPseudocountIsDomainError) {
  EXPECT_THROW(parse_csv("a,b,y\n0,2,1\n3,4,2\n", opts()), DomainError);
}

TEST(Csv, NegativeCellIsRejected) {
  EXPECT_THROW(parse_csv("a,b,y\n-1,2,1\n3,4,2\n", opts()), Error);
}

TEST(Csv, NonNumericCellReportsRowAndColumn) {
  try {
    parse_csv("a,b,y\n1,2,1\n3,oops,2\n", opts());
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("b"), std::string::npos) << msg;
  }
}

TEST(Csv, MissingCellIsParseError) { EXPECT_THROW(parse_csv("a,b,y\n1,,1\n3,4,2\n", opts()), ParseError); }

TEST(Csv, MissingResponseColumnIsAnError) { EXPECT_THROW(parse_csv("a,b,c\n1,2,1\n3,4,2\n", opts()), Error); }

TEST(Csv, GroupColumnIsAttachedAndNotAFeature) {
  CsvOptions o = opts();
  o.group_column = "patient";
  const Dataset d = parse_csv("a,patient,b,y\n1,p1,2,1\n3,p2,4,2\n5,p1,6,3\n", o);
  EXPECT_EQ(d.p(), 2);
  ASSERT_TRUE(d.group_ids.has_value());
  EXPECT_EQ(*d.group_ids, (std::vector<std::string>{"p1", "p2", "p1"}));
}

TEST(Csv, BinomialResponseMustBeZeroOne) {
  CsvOptions o = opts();
  o.family = Family::binomial;
  EXPECT_NO_THROW(parse_csv("a,b,y\n1,2,1\n3,4,0\n", o));
  EXPECT_THROW(parse_csv("a,b,y\n1,2,1\n3,4,2\n", o), DomainError);
}

TEST(Csv, DuplicateFeatureNamesRejected) { EXPECT_THROW(parse_csv("a,a,y\n1,2,1\n3,4,2\n", opts()), Error); }

TEST(Csv, TooFewFeaturesOrRowsRejected) {
  EXPECT_THROW(parse_csv("a,y\n1,1\n3,2\n", opts()), Error);
  EXPECT_THROW(parse_csv("a,b,y\n1,2,1\n", opts()), Error);
}

TEST(Csv, WriteThenReadRoundTripsExactly) {
  Dataset d = random_dataset(25, 6, 4);
  d.group_ids = std::vector<std::string>(25, "g");
  for (Index i = 0; i < 25; ++i) (*d.group_ids)[static_cast<std::size_t>(i)] = "g" + std::to_string(i % 4);
  CsvOptions o = opts();
  o.group_column = "group";
  const Dataset back = parse_csv(format_csv(d), o);
  EXPECT_EQ(back.feature_names, d.feature_names);
  EXPECT_TRUE((back.x.array() == d.x.array()).all());
  EXPECT_TRUE((back.y.array() == d.y.array()).all());
  EXPECT_EQ(*back.group_ids, *d.group_ids);
}

TEST(Csv, QuotedFieldsAreSupported) {
  const Dataset d = parse_csv("\"a,1\",b,y\n1,2,3\n4,5,6\n", opts());
  EXPECT_EQ(d.feature_names[0], "a,1");
}

TEST(LogDesign, AllOnesGivesZeroMatrix) {
  Dataset d = random_dataset(5, 3, 1);
  d.x.setOnes();
  const LogDesign w = log_design(d, false, false);
  EXPECT_TRUE(w.w.isZero(0.0));
}

TEST(LogDesign, EulerNumberGivesOnes) {
  Dataset d = random_dataset(5, 3, 1);
  d.x.setConstant(std::exp(1.0));
  const LogDesign w = log_design(d, false, false);
  EXPECT_NEAR((w.w.array() - 1.0).abs().maxCoeff(), 0.0, 1e-15);
}

TEST(LogDesign, CenteringAndScaling) {
  const Dataset d = random_dataset(40, 5, 2);
  const LogDesign c = log_design(d, true, false);
  EXPECT_LT(c.w.colwise().mean().cwiseAbs().maxCoeff(), 1e-10);
  const LogDesign s = log_design(d, true, true);
  for (Index j = 0; j < 5; ++j) {
    const double sd = std::sqrt(s.w.col(j).squaredNorm() / 39.0);
    EXPECT_NEAR(sd, 1.0, 1e-10);
  }
  // Stored moments undo the transform.
  const Matrix raw = d.x.array().log().matrix();
  EXPECT_NEAR(c.column_means[3], raw.col(3).mean(), 1e-12);
}

TEST(LogDesign, ConstantColumnCannotBeScaled) {
  Dataset d = random_dataset(10, 3, 3);
  d.x.col(1).setConstant(2.0);
  EXPECT_THROW(log_design(d, true, true), DomainError);
  EXPECT_NO_THROW(log_design(d, true, false));
}

TEST(ExpandRatios, ColumnCountsAndOrdering) {
  const Dataset d = random_dataset(8, 30, 5);
  const Matrix w = d.x.array().log().matrix();
  EXPECT_EQ(expand_ratios(w).z.cols(), 435);
  const RatioExpansion two = expand_ratios(w.leftCols(2));
  ASSERT_EQ(two.z.cols(), 1);
  EXPECT_TRUE(two.z.col(0).isApprox(w.col(0) - w.col(1)));

  const std::vector<Index> support{0, 1, 2};
  const RatioExpansion sub = expand_ratios(w.leftCols(4), std::span<const Index>(support));
  ASSERT_EQ(sub.pairs.size(), 3u);
  EXPECT_EQ(sub.pairs[0], (FeaturePair{0, 1}));
  EXPECT_EQ(sub.pairs[1], (FeaturePair{0, 2}));
  EXPECT_EQ(sub.pairs[2], (FeaturePair{1, 2}));
  EXPECT_TRUE(sub.z.col(2).isApprox(w.col(1) - w.col(2)));
}

TEST(ExpandRatios, OutOfRangeSupportIsAnError) {
  const Matrix w = Matrix::Random(5, 4);
  const std::vector<Index> bad{0, 4};
  EXPECT_THROW(expand_ratios(w, std::span<const Index>(bad)), DimensionError);
}

TEST(ExpandRatios, RowRescalingLeavesRatiosUnchanged) {
  Dataset d = random_dataset(12, 6, 6);
  const Matrix before = expand_ratios(d.x.array().log().matrix()).z;
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> scale(0.01, 100.0);
  for (Index i = 0; i < d.n(); ++i) d.x.row(i) *= scale(rng);
  const Matrix after = expand_ratios(d.x.array().log().matrix()).z;
  EXPECT_LT((before - after).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(AugmentOnes, AddsConstantFeatureOnce) {
  const Dataset d = random_dataset(6, 2, 7);
  const Dataset a = augment_ones(d);
  EXPECT_EQ(a.p(), 3);
  EXPECT_EQ(a.feature_names.back(), std::string(kOnesFeature));
  EXPECT_TRUE((a.x.col(2).array() == 1.0).all());
  const RatioExpansion z = expand_ratios(a.x.array().log().matrix());
  ASSERT_EQ(z.z.cols(), 3);
  // Ratios against the constant feature are plain logs.
  EXPECT_TRUE(z.z.col(1).isApprox(d.x.col(0).array().log().matrix()));
  EXPECT_TRUE(z.z.col(2).isApprox(d.x.col(1).array().log().matrix()));
  EXPECT_THROW(augment_ones(a), DomainError);
}

TEST(SelectRows, PicksRequestedRows) {
  Matrix m(3, 2);
  m << 1, 2, 3, 4, 5, 6;
  const std::vector<Index> rows{2, 0};
  const Matrix s = select_rows(m, rows);
  EXPECT_EQ(s(0, 0), 5);
  EXPECT_EQ(s(1, 1), 2);
  const Vector v = Vector::LinSpaced(3, 0, 2);
  EXPECT_EQ(select_rows(v, rows)[0], 2);
}
