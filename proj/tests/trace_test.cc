#include "osap/trace.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <gtest/gtest.h>

#include "test_util.h"

namespace osap {
namespace {

struct Moments {
  double mean;
  double var;
  double excess_kurtosis;
};

// Empirical mean and variance within 3 standard errors of the analytic ones.
void ExpectMoments(const DistributionSpec& spec, const Moments& m, std::uint64_t seed) {
  constexpr std::size_t n = 100000;
  SyntheticOptions opts;
  opts.floor_mbps = 0.0;  // negligible clamping: compare against the raw law
  const Trace t = sample_synthetic(spec, n, seed, opts);
  double sum = 0.0;
  for (const auto& p : t.points()) sum += p.mbps;
  const double mean = sum / n;
  double ss = 0.0;
  for (const auto& p : t.points()) ss += (p.mbps - mean) * (p.mbps - mean);
  const double var = ss / (n - 1);
  const double se_mean = std::sqrt(m.var / n);
  const double mu4 = m.var * m.var * (3.0 + m.excess_kurtosis);
  const double se_var = std::sqrt((mu4 - m.var * m.var) / n);
  EXPECT_NEAR(mean, m.mean, 3 * se_mean) << spec.ToString();
  EXPECT_NEAR(var, m.var, 3 * se_var) << spec.ToString();
}

TEST(SampleSynthetic, ExponentialMeanWithinBand) {
  const Trace t = sample_synthetic(DistributionSpec::Exponential(1.0), 100000, 17);
  double sum = 0.0;
  for (const auto& p : t.points()) sum += p.mbps;
  const double mean = sum / 100000;
  EXPECT_GE(mean, 0.98);
  EXPECT_LE(mean, 1.02);
}

TEST(SampleSynthetic, MomentsMatchAnalyticValues) {
  const double pi2 = M_PI * M_PI;
  ExpectMoments(DistributionSpec::Gamma(1, 2), {2.0, 4.0, 6.0}, 1);
  ExpectMoments(DistributionSpec::Gamma(2, 2), {4.0, 8.0, 3.0}, 2);
  ExpectMoments(DistributionSpec::Logistic(4, 0.5), {4.0, 0.25 * pi2 / 3.0, 1.2}, 3);
  ExpectMoments(DistributionSpec::Exponential(1), {1.0, 1.0, 6.0}, 4);
}

TEST(SampleSynthetic, TimestampsFollowDt) {
  SyntheticOptions opts;
  opts.dt_s = 0.5;
  const Trace t = sample_synthetic(DistributionSpec::Gamma(2, 2), 7, 9, opts);
  ASSERT_EQ(t.size(), 7u);
  for (std::size_t i = 0; i < t.size(); ++i) EXPECT_DOUBLE_EQ(t.points()[i].time_s, 0.5 * i);
}

TEST(SampleSynthetic, SameSeedIsByteIdentical) {
  const auto spec = DistributionSpec::Logistic(4, 0.5);
  EXPECT_EQ(format_trace(sample_synthetic(spec, 500, 42)),
            format_trace(sample_synthetic(spec, 500, 42)));
  EXPECT_NE(format_trace(sample_synthetic(spec, 500, 42)),
            format_trace(sample_synthetic(spec, 500, 43)));
}

TEST(SampleSynthetic, LogisticClampsToFloor) {
  // Location 0 puts half the mass below zero.
  const Trace t = sample_synthetic(DistributionSpec::Logistic(0, 1), 1000, 5);
  for (const auto& p : t.points()) EXPECT_GE(p.mbps, 0.01);
}

TEST(SampleSynthetic, RejectsInvalidSpecs) {
  EXPECT_THROW(sample_synthetic(DistributionSpec::Gamma(0, 2), 10, 1), InvalidInput);
  EXPECT_THROW(sample_synthetic(DistributionSpec::Gamma(1, -2), 10, 1), InvalidInput);
  EXPECT_THROW(sample_synthetic(DistributionSpec::Exponential(0), 10, 1), InvalidInput);
  EXPECT_THROW(sample_synthetic(DistributionSpec::Gamma(1, 2), 0, 1), InvalidInput);
  EXPECT_NO_THROW(DistributionSpec::Gamma(2, 2).Validate());
}

TEST(DistributionSpec, ParsesTextForms) {
  const auto g = ParseDistributionSpec("gamma 1 2");
  EXPECT_EQ(g.kind, DistributionKind::kGamma);
  EXPECT_EQ(g.shape, 1.0);
  EXPECT_EQ(g.scale, 2.0);
  const auto l = ParseDistributionSpec("logistic 4 0.5");
  EXPECT_EQ(l.kind, DistributionKind::kLogistic);
  EXPECT_EQ(l.location, 4.0);
  EXPECT_EQ(l.scale, 0.5);
  EXPECT_EQ(ParseDistributionSpec("exponential 1").kind, DistributionKind::kExponential);
  EXPECT_EQ(ParseDistributionSpec("file /data/hsdpa").path, "/data/hsdpa");
  EXPECT_THROW(ParseDistributionSpec("weibull 1 2"), InvalidInput);
  EXPECT_THROW(ParseDistributionSpec("gamma 1"), InvalidInput);
  EXPECT_THROW(ParseDistributionSpec("gamma 1 2 3"), InvalidInput);
}

TEST(ParseTrace, TwoPointFile) {
  const Trace t = parse_trace("0.0 1.5\n1.0 2.0", "x");
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t.points()[0], (TracePoint{0.0, 1.5}));
  EXPECT_EQ(t.points()[1], (TracePoint{1.0, 2.0}));
}

TEST(ParseTrace, CommentsAndBlankLinesIgnored) {
  const Trace t = parse_trace("# header\n\n0 1\n  \n2 3 \n", "x");
  EXPECT_EQ(t.size(), 2u);
}

TEST(ParseTrace, RejectsMalformedInput) {
  EXPECT_THROW(parse_trace("", "x"), InvalidInput);
  EXPECT_THROW(parse_trace("# only a comment\n", "x"), InvalidInput);
  EXPECT_THROW(parse_trace("1.0 -3", "x"), InvalidInput);
  EXPECT_THROW(parse_trace("0 1\n0 2", "x"), InvalidInput);
  EXPECT_THROW(parse_trace("1 1\n0 2", "x"), InvalidInput);
  EXPECT_THROW(parse_trace("0 abc", "x"), InvalidInput);
  EXPECT_THROW(parse_trace("0 1 2", "x"), InvalidInput);
  EXPECT_THROW(parse_trace("0", "x"), InvalidInput);
}

TEST(LoadTrace, EmptyFileAndMissingFileFail) {
  const auto dir = testing::TempDir("load_trace");
  std::ofstream(dir / "empty.txt").close();
  EXPECT_THROW(load_trace(dir / "empty.txt"), InvalidInput);
  EXPECT_THROW(load_trace(dir / "missing.txt"), InvalidInput);
}

TEST(LoadTrace, RoundTripsRandomTraces) {
  const auto dir = testing::TempDir("trace_roundtrip");
  std::mt19937_64 rng(11);
  for (int i = 0; i < 50; ++i) {
    Trace t = testing::RandomTrace(rng, 1 + rng() % 40);
    t = Trace("t", t.points());
    write_trace(t, dir / "t");
    EXPECT_EQ(load_trace(dir / "t").points(), t.points());
  }
}

TEST(LoadTraceDir, SortedByFileName) {
  const auto dir = testing::TempDir("trace_dir");
  write_trace(testing::ConstantTrace(2.0, 3), dir / "b.txt");
  write_trace(testing::ConstantTrace(1.0, 3), dir / "a.txt");
  const auto traces = load_trace_dir(dir);
  ASSERT_EQ(traces.size(), 2u);
  EXPECT_EQ(traces[0].points()[0].mbps, 1.0);
  EXPECT_EQ(traces[1].points()[0].mbps, 2.0);
}

TEST(Trace, PeriodAndMean) {
  const Trace t("p", {{0, 1}, {1, 3}, {3, 2}});
  // Last segment holds for the preceding interval (2 s).
  EXPECT_DOUBLE_EQ(t.period(), 5.0);
  EXPECT_DOUBLE_EQ(t.mean_mbps(), (1 * 1 + 3 * 2 + 2 * 2) / 5.0);
  EXPECT_DOUBLE_EQ(Trace("s", {{0, 4}}).period(), 1.0);
}

std::vector<Trace> NumberedTraces(std::size_t n) {
  std::vector<Trace> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(testing::ConstantTrace(1.0 + i, 2, "t" + std::to_string(i)));
  return out;
}

TEST(SplitDataset, TenTracesSizes) {
  const auto s = split_dataset(NumberedTraces(10), 0.7, 0.3, 1);
  EXPECT_EQ(s.train.size(), 5u);
  EXPECT_EQ(s.validation.size(), 2u);
  EXPECT_EQ(s.test.size(), 3u);
}

TEST(SplitDataset, IsSeededPartition) {
  for (std::size_t n : {3u, 10u, 37u, 100u}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto input = NumberedTraces(n);
      DatasetSplit s;
      try {
        s = split_dataset(input, 0.7, 0.3, seed);
      } catch (const InvalidInput&) {
        continue;  // too few traces for three partitions
      }
      std::multiset<std::string> ids;
      for (const auto* part : {&s.train, &s.validation, &s.test})
        for (const auto& t : *part) ids.insert(t.id());
      std::multiset<std::string> expected;
      for (const auto& t : input) expected.insert(t.id());
      EXPECT_EQ(ids, expected);
      const std::size_t reserved = static_cast<std::size_t>(std::floor(n * 0.7));
      EXPECT_EQ(s.train.size() + s.validation.size(), reserved);
      EXPECT_EQ(s.validation.size(), static_cast<std::size_t>(std::floor(reserved * 0.3)));

      const auto again = split_dataset(input, 0.7, 0.3, seed);
      EXPECT_EQ(again.train, s.train);
      EXPECT_EQ(again.validation, s.validation);
      EXPECT_EQ(again.test, s.test);
    }
  }
}

TEST(SplitDataset, RejectsTooFewTraces) {
  EXPECT_THROW(split_dataset(NumberedTraces(2), 0.7, 0.3, 1), InvalidInput);
  EXPECT_THROW(split_dataset(NumberedTraces(3), 0.7, 0.3, 1), InvalidInput);
  EXPECT_THROW(split_dataset(NumberedTraces(10), 1.0, 0.3, 1), InvalidInput);
  EXPECT_THROW(split_dataset(NumberedTraces(10), 0.7, 0.0, 1), InvalidInput);
}

}  // namespace
}  // namespace osap
