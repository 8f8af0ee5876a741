#include "osap/uncertainty.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

namespace osap {
namespace {

TEST(NdFeatures, ConstantHistory) {
  const std::vector<double> h(20, 2.5);
  const auto f = nd_features(h, 5);
  ASSERT_TRUE(f);
  ASSERT_EQ(f->size(), 10u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_DOUBLE_EQ((*f)[2 * i], 2.5);
    EXPECT_DOUBLE_EQ((*f)[2 * i + 1], 0.0);
  }
}

TEST(NdFeatures, SingleWindowHandStatistics) {
  // Last 10 samples are 1..10: mean 5.5, population variance 8.25.
  std::vector<double> h = {100, 200};
  for (int i = 1; i <= 10; ++i) h.push_back(i);
  const auto f = nd_features(h, 1);
  ASSERT_TRUE(f);
  EXPECT_DOUBLE_EQ((*f)[0], 5.5);
  EXPECT_NEAR((*f)[1], std::sqrt(8.25), 1e-12);
}

TEST(NdFeatures, WindowsSlideOldestFirst) {
  std::vector<double> h(11, 0.0);
  h[0] = 10.0;  // only in the first of two windows
  const auto f = nd_features(h, 2);
  ASSERT_TRUE(f);
  EXPECT_DOUBLE_EQ((*f)[0], 1.0);
  EXPECT_DOUBLE_EQ((*f)[2], 0.0);
  EXPECT_DOUBLE_EQ((*f)[3], 0.0);
}

TEST(NdFeatures, ShortHistoryYieldsNothing) {
  EXPECT_EQ(nd_history_needed(30), 39u);
  EXPECT_FALSE(nd_features(std::vector<double>(38, 1.0), 30));
  EXPECT_TRUE(nd_features(std::vector<double>(39, 1.0), 30));
  EXPECT_THROW(nd_features(std::vector<double>(39, 1.0), 0), InvalidInput);
}

TEST(Kl, HandValue) {
  const std::vector<double> p = {0.5, 0.5}, q = {0.25, 0.75};
  EXPECT_NEAR(kl(p, q), 0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0), 1e-7);
  EXPECT_NEAR(kl(p, q), 0.14384, 1e-5);
  EXPECT_EQ(kl(p, p), 0.0);
}

TEST(Kl, NonNegativeOnRandomPairs) {
  std::mt19937_64 rng(1);
  std::gamma_distribution<double> g(0.3, 1.0);  // sparse-ish Dirichlet draws
  for (int i = 0; i < 10000; ++i) {
    const std::size_t n = 2 + rng() % 6;
    std::vector<double> p(n), q(n);
    for (auto* v : {&p, &q}) {
      for (double& x : *v) x = g(rng);
      const double s = std::accumulate(v->begin(), v->end(), 0.0);
      if (s == 0.0) (*v)[0] = 1.0;
      for (double& x : *v) x /= s == 0.0 ? 1.0 : s;
    }
    const double d = kl(p, q);
    EXPECT_GE(d, 0.0);
    EXPECT_TRUE(std::isfinite(d));
  }
  EXPECT_THROW(kl(std::vector<double>{1.0}, std::vector<double>{0.5, 0.5}), InvalidInput);
}

std::vector<ActionDistribution> Dists(std::initializer_list<std::vector<double>> ps) {
  std::vector<ActionDistribution> out;
  for (const auto& p : ps) out.push_back({p});
  return out;
}

TEST(UPi, IdenticalMembersScoreZero) {
  const auto d = Dists({{0.1, 0.2, 0.7}, {0.1, 0.2, 0.7}, {0.1, 0.2, 0.7}, {0.1, 0.2, 0.7},
                        {0.1, 0.2, 0.7}});
  EXPECT_EQ(u_pi(d).value, 0.0);
}

TEST(UPi, SingleOutlierIsDiscarded) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> base(4), odd(4);
    for (double& x : base) x = u(rng);
    for (double& x : odd) x = u(rng);
    for (auto* v : {&base, &odd}) {
      const double s = std::accumulate(v->begin(), v->end(), 0.0);
      for (double& x : *v) x /= s;
    }
    std::vector<ActionDistribution> d(4, {base});
    d.insert(d.begin() + (rng() % 5), {odd});
    EXPECT_NEAR(u_pi(d).value, 0.0, 1e-12);
  }
}

TEST(UPi, ThreeSurvivorsHandValue) {
  const auto d = Dists({{0.6, 0.4}, {0.5, 0.5}, {0.4, 0.6}});
  EnsembleOptions o;
  o.drop = 0;
  const double k1 = 0.6 * std::log(1.2) + 0.4 * std::log(0.8);
  EXPECT_NEAR(u_pi(d, o).value, 2 * k1, 1e-7);
  EXPECT_NEAR(u_pi(d, o).value, 0.0403, 1e-4);
}

TEST(UPi, RequiresThreeMembers) {
  EXPECT_THROW(u_pi(Dists({{0.5, 0.5}, {0.5, 0.5}})), InvalidInput);
}

TEST(UV, HandExamples) {
  EXPECT_EQ(u_v(std::vector<double>{3, 3, 3, 3, 3}).value, 0.0);
  EXPECT_EQ(u_v(std::vector<double>{0, 0, 0, 10, 10}).value, 0.0);
  EXPECT_EQ(u_v(std::vector<double>{0, 1, 2, 100, -100}).value, 2.0);
  EXPECT_THROW(u_v(std::vector<double>{1, 2}), InvalidInput);
}

TEST(UV, KeepMeanSwitch) {
  EnsembleOptions o;
  o.recompute_mean = false;
  // Mean of all five is 0.6; survivors 0, 1, 2 -> 0.6 + 0.4 + 1.4.
  EXPECT_NEAR(u_v(std::vector<double>{0, 1, 2, 100, -100}, o).value, 2.4, 1e-12);
}

// Permutation invariance and translation invariance over random inputs.
TEST(Ensembles, PermutationAndTranslationProperties) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z(0, 10);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int t = 0; t < 500; ++t) {
    std::vector<double> v(5);
    for (double& x : v) x = z(rng);
    const double base = u_v(v).value;
    EXPECT_GE(base, 0.0);
    auto perm = v;
    std::shuffle(perm.begin(), perm.end(), rng);
    EXPECT_NEAR(u_v(perm).value, base, 1e-9);
    const double c = z(rng) * 10;
    auto shifted = v;
    for (double& x : shifted) x += c;
    EXPECT_NEAR(u_v(shifted).value, base, 1e-9);

    std::vector<ActionDistribution> d(5);
    for (auto& a : d) {
      a.probs.resize(4);
      for (double& x : a.probs) x = u(rng);
      const double s = std::accumulate(a.probs.begin(), a.probs.end(), 0.0);
      for (double& x : a.probs) x /= s;
    }
    const double pbase = u_pi(d).value;
    EXPECT_GE(pbase, 0.0);
    auto dperm = d;
    std::shuffle(dperm.begin(), dperm.end(), rng);
    EXPECT_NEAR(u_pi(dperm).value, pbase, 1e-12);
  }
}

TEST(Scheme, NamesRoundTrip) {
  for (Scheme s : {Scheme::kNone, Scheme::kNoveltyDetection, Scheme::kAgentEnsemble,
                   Scheme::kValueEnsemble})
    EXPECT_EQ(ParseScheme(SchemeName(s)), s);
  EXPECT_THROW(ParseScheme("Q"), InvalidInput);
}

}  // namespace
}  // namespace osap
