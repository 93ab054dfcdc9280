#include <cmath>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "hsn/data.hpp"

namespace hsn {
namespace {

Dataset parse(const std::string& text, CsvOptions options) {
  std::istringstream in(text);
  return parse_csv(in, options);
}

CsvOptions label_options() {
  CsvOptions o;
  o.label_column = "y";
  o.positive_labels = {"yes"};
  return o;
}

std::string data_error_message(const std::string& text, const CsvOptions& options) {
  try {
    parse(text, options);
  } catch (const DataError& e) {
    return e.what();
  }
  return {};
}

TEST(ParseCsv, NumericFeaturesAndLabelMapping) {
  const auto ds = parse("x1,y,x2\n1.5,yes,2\n-3,no,0\n0,maybe,1e2\n", label_options());
  ASSERT_EQ(ds.size(), 3u);
  EXPECT_EQ(ds.feature_names, (std::vector<std::string>{"x1", "x2"}));
  EXPECT_EQ(ds.samples[0].y, 1);
  EXPECT_EQ(ds.samples[1].y, 0);
  EXPECT_EQ(ds.samples[2].y, 0);
  EXPECT_EQ(ds.samples[0].phi(0), 1.5);
  EXPECT_EQ(ds.samples[2].phi(1), 100.0);
  EXPECT_EQ(ds.split_tag, SplitTag::Full);
}

TEST(ParseCsv, CategoricalIndicatorsInSortedOrder) {
  auto o = label_options();
  o.categorical_columns = {"c"};
  const auto ds = parse("c,x,y\nb,1,yes\na,2,no\nb,3,no\n", o);
  EXPECT_EQ(ds.feature_names, (std::vector<std::string>{"c=a", "c=b", "x"}));
  ASSERT_EQ(ds.vocabularies.size(), 1u);
  EXPECT_EQ(ds.vocabularies[0].first_feature, 0);
  EXPECT_EQ(ds.samples[0].phi(0), 0.0);
  EXPECT_EQ(ds.samples[0].phi(1), 1.0);
  EXPECT_EQ(ds.samples[1].phi(0), 1.0);
  EXPECT_EQ(decode_category(ds.vocabularies[0], ds.samples[2]), "b");
}

TEST(ParseCsv, ReusedVocabularyEncodesUnseenAsZeros) {
  auto o = label_options();
  o.categorical_columns = {"c"};
  const auto train = parse("c,y\na,yes\nb,no\n", o);
  o.vocabularies = train.vocabularies;
  const auto test = parse("c,y\nz,no\nb,yes\n", o);
  EXPECT_EQ(test.feature_names, train.feature_names);
  EXPECT_EQ(test.samples[0].phi.sum(), 0.0);
  EXPECT_EQ(decode_category(test.vocabularies[0], test.samples[0]), std::nullopt);
  EXPECT_EQ(decode_category(test.vocabularies[0], test.samples[1]), "b");
}

TEST(ParseCsv, IgnoredColumnsQuotesWhitespaceAndDelimiter) {
  auto o = label_options();
  o.ignored_columns = {"id"};
  o.delimiter = ';';
  const auto ds = parse("id;\"x\";y\r\n\"a;b\"; 2 ;\"yes\"\r\n7;3;no\n\n", o);
  ASSERT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds.feature_names, (std::vector<std::string>{"x"}));
  EXPECT_EQ(ds.samples[0].phi(0), 2.0);
  EXPECT_EQ(ds.samples[0].y, 1);
}

TEST(ParseCsv, MultiplePositiveLabels) {
  CsvOptions o;
  o.label_column = "income";
  o.positive_labels = {">50K", ">50K."};
  const auto ds = parse("age,income\n30,>50K\n40,>50K.\n50,<=50K\n", o);
  EXPECT_EQ(ds.samples[0].y, 1);
  EXPECT_EQ(ds.samples[1].y, 1);
  EXPECT_EQ(ds.samples[2].y, 0);
}

TEST(ParseCsv, ErrorsNameRowAndColumn) {
  const auto msg = data_error_message("x,y\n1,yes\nabc,no\n", label_options());
  EXPECT_NE(msg.find("row 2"), std::string::npos) << msg;
  EXPECT_NE(msg.find("'x'"), std::string::npos) << msg;
  EXPECT_NE(data_error_message("x,y\n1,yes\n", [] {
              auto o = label_options();
              o.label_column = "label";
              return o;
            }()).find("label"),
            std::string::npos);
  EXPECT_NE(data_error_message("x,y\n1,yes,3\n", label_options()).find("row 1"), std::string::npos);
  EXPECT_FALSE(data_error_message("", label_options()).empty());
  EXPECT_FALSE(data_error_message("x,y\n\"1,yes\n", label_options()).empty());
  EXPECT_FALSE(data_error_message("x,y\nnan,yes\n", label_options()).empty());
  EXPECT_FALSE(data_error_message("y\nyes\n", label_options()).empty());
  EXPECT_THROW(load_csv("/nonexistent/file.csv", label_options()), DataError);
}

TEST(Standardizer, MinMaxFittedOnTrainOnly) {
  Dataset train;
  train.feature_names = {"a", "b"};
  Vector p1(2), p2(2), q(2);
  p1 << 0.0, 5.0;
  p2 << 4.0, 5.0;
  q << 8.0, 1.0;
  train.samples = {{p1, 0}, {p2, 1}};
  const Scaling sc = fit_standardizer(train);
  EXPECT_EQ(sc.min, (std::vector<double>{0.0, 5.0}));
  EXPECT_EQ(sc.max, (std::vector<double>{4.0, 5.0}));

  Dataset test = train;
  test.samples = {{q, 1}};
  const auto scaled = apply_standardizer(sc, test);
  EXPECT_EQ(scaled.samples[0].phi(0), 2.0);  // no clipping
  EXPECT_EQ(scaled.samples[0].phi(1), 0.0);  // constant training feature
  ASSERT_TRUE(scaled.scaling.has_value());
  EXPECT_THROW(fit_standardizer(Dataset{}), InvalidArgument);
}

Dataset numbered(std::size_t n) {
  Dataset ds;
  ds.feature_names = {"i"};
  for (std::size_t i = 0; i < n; ++i) ds.samples.push_back({Vector::Constant(1, static_cast<double>(i)), static_cast<int>(i % 2)});
  return ds;
}

TEST(Split, PartitionIsDeterministicAndComplete) {
  const auto ds = numbered(101);
  const auto [train, test] = split(ds, 0.9, 7);
  EXPECT_EQ(train.size(), 91u);
  EXPECT_EQ(test.size(), 10u);
  EXPECT_EQ(train.split_tag, SplitTag::Train);
  EXPECT_EQ(test.split_tag, SplitTag::Test);
  std::set<double> seen;
  for (const auto* part : {&train, &test}) {
    for (const auto& s : part->samples) seen.insert(s.phi(0));
  }
  EXPECT_EQ(seen.size(), 101u);

  const auto again = split(ds, 0.9, 7);
  for (std::size_t i = 0; i < train.size(); ++i) EXPECT_EQ(again.first.samples[i].phi, train.samples[i].phi);
  const auto other = split(ds, 0.9, 8);
  bool differs = false;
  for (std::size_t i = 0; i < train.size(); ++i) differs |= other.first.samples[i].phi != train.samples[i].phi;
  EXPECT_TRUE(differs);

  EXPECT_THROW(split(ds, 1.0, 1), InvalidArgument);
  EXPECT_THROW(split(ds, 0.0, 1), InvalidArgument);
  EXPECT_THROW(split(numbered(1), 0.5, 1), InvalidArgument);
}

TEST(GenTheta, IntegerCoordinatesInRange) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const SyntheticSpec spec{50, seed, 0, 10, std::nullopt};
    const Vector theta = gen_theta(spec);
    ASSERT_EQ(theta.size(), 50);
    for (Index i = 0; i < 50; ++i) {
      ASSERT_EQ(theta(i), std::round(theta(i)));
      ASSERT_LE(std::abs(theta(i)), 10.0);
    }
    ASSERT_EQ(gen_theta(spec), theta);
  }
  const SyntheticSpec narrow{200, 3, 0, 1, std::nullopt};
  const Vector t = gen_theta(narrow);
  EXPECT_LE(t.cwiseAbs().maxCoeff(), 1.0);
  EXPECT_GE(t.cwiseAbs().maxCoeff(), 1.0);
  const Vector fixed = Vector::Constant(3, 0.5);
  EXPECT_EQ(gen_theta(SyntheticSpec{3, 1, 1, 10, fixed}), fixed);
}

TEST(SyntheticSpec, Validation) {
  EXPECT_THROW((SyntheticSpec{0, 0, 0, 10, std::nullopt}.validate()), InvalidArgument);
  EXPECT_THROW((SyntheticSpec{2, 0, 0, -1, std::nullopt}.validate()), InvalidArgument);
  EXPECT_THROW((SyntheticSpec{2, 0, 0, 10, Vector::Ones(3)}.validate()), DimensionMismatch);
}

TEST(SyntheticStream, DeterministicBoundedAndLengthLimited) {
  const SyntheticSpec spec{4, 1, 2, 10, std::nullopt};
  auto a = gen_stream(spec, 100);
  auto b = gen_stream(spec, 100);
  Sample sa, sb;
  std::size_t count = 0;
  while (a.next(sa)) {
    ASSERT_TRUE(b.next(sb));
    ASSERT_EQ(sa.phi, sb.phi);
    ASSERT_EQ(sa.y, sb.y);
    ASSERT_TRUE(sa.y == 0 || sa.y == 1);
    ASSERT_GE(sa.phi.minCoeff(), 0.0);
    ASSERT_LT(sa.phi.maxCoeff(), 1.0);
    ++count;
  }
  EXPECT_EQ(count, 100u);
  EXPECT_FALSE(b.next(sb));
  EXPECT_EQ(a.remaining(), 0u);
}

TEST(SyntheticStream, FeaturesDoNotDependOnTheta) {
  auto a = make_uniform_stream(Vector::Constant(3, 5.0), 9, 50);
  auto b = make_uniform_stream(Vector::Constant(3, -5.0), 9, 50);
  Sample sa, sb;
  while (a.next(sa) && b.next(sb)) ASSERT_EQ(sa.phi, sb.phi);
}

TEST(SyntheticStream, LabelFrequencyMatchesModel) {
  // Constant features make the label a Bernoulli(pi(theta^T phi)) sequence.
  const Vector phi = Vector::Ones(2);
  Vector theta(2);
  theta << 0.5, 0.25;
  SyntheticStream stream(theta, std::make_shared<ConstantSampler>(phi), 11, 200000);
  Sample s;
  double positives = 0.0;
  while (stream.next(s)) positives += s.y;
  const double p = 1.0 / (1.0 + std::exp(-0.75));
  EXPECT_NEAR(positives / 200000.0, p, 5.0 * std::sqrt(p * (1.0 - p) / 200000.0));
}

TEST(SyntheticStream, DistinctSeedsGiveIndependentStreams) {
  auto a = make_uniform_stream(Vector::Zero(1), 1, 20000);
  auto b = make_uniform_stream(Vector::Zero(1), 2, 20000);
  Sample sa, sb;
  double sxy = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, syy = 0.0;
  const double n = 20000.0;
  while (a.next(sa) && b.next(sb)) {
    const double x = sa.phi(0), y = sb.phi(0);
    sx += x;
    sy += y;
    sxy += x * y;
    sxx += x * x;
    syy += y * y;
  }
  const double cov = sxy / n - sx / n * sy / n;
  const double corr = cov / std::sqrt((sxx / n - sx * sx / n / n) * (syy / n - sy * sy / n / n));
  EXPECT_LT(std::abs(corr), 5.0 / std::sqrt(n));
}

}  // namespace
}  // namespace hsn
