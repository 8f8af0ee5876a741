#include "osap/episode.h"

#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "test_util.h"

namespace osap {
namespace {

using testing::RandomModels;

EpisodeConfig Learned(Scheme scheme, double alpha = std::numeric_limits<double>::infinity(),
                      std::size_t l = 1) {
  EpisodeConfig c;
  c.controller.scheme = scheme;
  c.controller.alpha = alpha;
  c.controller.l_consecutive = l;
  return c;
}

TEST(RunEpisode, BufferBasedMatchesHandLoop) {
  std::mt19937_64 rng(1);
  const auto m = testing::SmallManifest(30);
  EpisodeConfig cfg;
  cfg.policy = ActingPolicy::kBufferBased;
  for (int t = 0; t < 20; ++t) {
    const Trace trace = testing::RandomTrace(rng, 80);
    const auto r = run_episode({}, cfg, trace, m, 7);

    SessionState s = start_session(trace);
    double total = 0.0;
    std::size_t i = 0;
    while (!session_done(s, m)) {
      const std::size_t level = bb_decide(s.buffer_s, m.level_count(), cfg.bb);
      ASSERT_EQ(r.log[i].level, level);
      auto out = step(s, level, trace, m, cfg.env);
      total += out.qoe;
      s = std::move(out.next_state);
      ++i;
    }
    EXPECT_EQ(r.log.size(), m.chunk_count());
    EXPECT_DOUBLE_EQ(r.total_qoe, total);
    EXPECT_FALSE(r.default_step);
  }
}

// Total QoE equals the sum of per-chunk terms rebuilt from the log.
TEST(RunEpisode, QoeConservation) {
  std::mt19937_64 rng(2);
  const auto m = testing::SmallManifest(20);
  const RandomModels models(m);
  const ActingPolicy policies[] = {ActingPolicy::kLearned, ActingPolicy::kBufferBased,
                                   ActingPolicy::kRandom};
  for (int t = 0; t < 100; ++t) {
    EpisodeConfig cfg;
    cfg.policy = policies[t % 3];
    const auto r = run_episode(models.View(), cfg, testing::RandomTrace(rng, 60), m, t);
    double sum = 0.0;
    for (std::size_t i = 0; i < r.log.size(); ++i) {
      const auto& c = r.log[i];
      double expect = c.bitrate_mbps - 4.3 * c.rebuffer_s;
      if (i > 0) expect -= std::abs(c.bitrate_mbps - r.log[i - 1].bitrate_mbps);
      EXPECT_NEAR(c.qoe, expect, 1e-9);
      EXPECT_DOUBLE_EQ(c.bitrate_mbps, m.ladder()[c.level].mbps);
      sum += c.qoe;
    }
    EXPECT_NEAR(r.total_qoe, sum, 1e-9);
  }
}

TEST(RunEpisode, InfiniteAlphaEqualsVanilla) {
  std::mt19937_64 rng(3);
  const auto m = testing::SmallManifest(25);
  const RandomModels models(m);
  for (int t = 0; t < 10; ++t) {
    const Trace trace = testing::RandomTrace(rng, 60);
    const auto vanilla = run_episode(models.View(), Learned(Scheme::kNone), trace, m, 1);
    for (Scheme s : {Scheme::kAgentEnsemble, Scheme::kValueEnsemble}) {
      const auto r = run_episode(models.View(), Learned(s), trace, m, 1);
      EXPECT_EQ(r.total_qoe, vanilla.total_qoe);
      EXPECT_FALSE(r.default_step);
      for (std::size_t i = 0; i < r.log.size(); ++i) EXPECT_EQ(r.log[i].level, vanilla.log[i].level);
    }
  }
}

// With alpha = 0 the first full window defaults, and from then on every
// decision is the buffer-based one.
TEST(RunEpisode, StickyDefaultFollowsBufferBased) {
  std::mt19937_64 rng(4);
  const auto m = testing::SmallManifest(25);
  const RandomModels models(m);
  for (int t = 0; t < 10; ++t) {
    const Trace trace = testing::RandomTrace(rng, 60);
    for (Scheme s : {Scheme::kAgentEnsemble, Scheme::kValueEnsemble}) {
      const auto cfg = Learned(s, 0.0, 1);
      const auto r = run_episode(models.View(), cfg, trace, m, 1);
      ASSERT_TRUE(r.default_step);
      EXPECT_EQ(*r.default_step, cfg.controller.k_window - 1);
      for (std::size_t i = 0; i < r.log.size(); ++i) {
        EXPECT_EQ(r.log[i].decision == Decision::kDefault, i >= *r.default_step);
        if (i >= *r.default_step)
          EXPECT_EQ(r.log[i].level, bb_decide(r.log[i].buffer_s, m.level_count(), cfg.bb));
      }
      EXPECT_NEAR(r.default_fraction(),
                  static_cast<double>(r.log.size() - *r.default_step) / r.log.size(), 1e-12);
    }
  }
}

TEST(RunEpisode, NoveltyDetectorDefaultsAfterWarmUpAndL) {
  const auto m = testing::SmallManifest(30);
  const RandomModels models(m);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> mean(2.0, 0.3), sd(0.5, 0.1);
  std::vector<NdFeature> xs(200);
  for (auto& x : xs) x = {mean(rng), sd(rng), mean(rng), sd(rng)};
  const OcSvmModel detector = fit_ocsvm(xs, {});

  SafeguardModels view = models.View();
  view.detector = &detector;
  EpisodeConfig cfg = Learned(Scheme::kNoveltyDetection, 0.0, 3);
  cfg.controller.k_window = 2;
  // Constant 100 Mbps is far outside the fitted region, so every scored step
  // is OOD; the first score needs 11 samples, i.e. chunk index 11.
  const auto r = run_episode(view, cfg, testing::ConstantTrace(100.0), m, 1);
  ASSERT_TRUE(r.default_step);
  EXPECT_EQ(*r.default_step, 13u);
  for (std::size_t i = 0; i < 11; ++i) EXPECT_TRUE(std::isnan(r.log[i].score));
  EXPECT_FALSE(std::isnan(r.log[11].score));
}

TEST(RunEpisode, DeterministicPerSeed) {
  std::mt19937_64 rng(6);
  const auto m = testing::SmallManifest(20);
  const Trace trace = testing::RandomTrace(rng, 60);
  EpisodeConfig cfg;
  cfg.policy = ActingPolicy::kRandom;
  const auto a = run_episode({}, cfg, trace, m, 42);
  const auto b = run_episode({}, cfg, trace, m, 42);
  const auto c = run_episode({}, cfg, trace, m, 43);
  EXPECT_EQ(a.total_qoe, b.total_qoe);
  bool differs = false;
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    EXPECT_EQ(a.log[i].level, b.log[i].level);
    differs |= a.log[i].level != c.log[i].level;
  }
  EXPECT_TRUE(differs);
}

TEST(CheckModels, RejectsMissingOrMismatchedModels) {
  const auto m = testing::SmallManifest(10);
  const RandomModels models(m);
  EXPECT_THROW(CheckModels({}, Learned(Scheme::kNone), m), InvalidInput);
  EXPECT_THROW(CheckModels(models.View(), Learned(Scheme::kNoveltyDetection), m), InvalidInput);

  SafeguardModels two = models.View();
  two.agents = std::span<const AgentParams>(models.agents).first(2);
  two.values = std::span<const ValueParams>(models.values).first(2);
  EXPECT_THROW(CheckModels(two, Learned(Scheme::kAgentEnsemble), m), InvalidInput);
  EXPECT_THROW(CheckModels(two, Learned(Scheme::kValueEnsemble), m), InvalidInput);

  EpisodeConfig bb = Learned(Scheme::kValueEnsemble);
  bb.policy = ActingPolicy::kBufferBased;
  EXPECT_THROW(CheckModels(models.View(), bb, m), InvalidInput);

  ManifestOptions opts;
  opts.chunk_count = 10;
  const auto three_levels = synth_manifest({{"a", 0.3}, {"b", 1.0}, {"c", 2.0}}, opts);
  EXPECT_THROW(CheckModels(models.View(), Learned(Scheme::kNone), three_levels), InvalidInput);
  EXPECT_NO_THROW(CheckModels(models.View(), Learned(Scheme::kValueEnsemble), m));
}

TEST(RunEpisodes, SeedsDeriveFromIndex) {
  std::mt19937_64 rng(7);
  const auto m = testing::SmallManifest(10);
  std::vector<Trace> traces = {testing::RandomTrace(rng), testing::RandomTrace(rng)};
  EpisodeConfig cfg;
  cfg.policy = ActingPolicy::kRandom;
  const auto rs = run_episodes({}, cfg, traces, m, 9);
  ASSERT_EQ(rs.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(rs[i].seed, DeriveSeed(9, {i}));
    EXPECT_EQ(rs[i].total_qoe, run_episode({}, cfg, traces[i], m, DeriveSeed(9, {i})).total_qoe);
  }
  EXPECT_NEAR(mean_qoe({}, cfg, traces, m, 9), (rs[0].total_qoe + rs[1].total_qoe) / 2, 1e-12);
  EXPECT_THROW(mean_qoe({}, cfg, std::span<const Trace>(), m, 9), InvalidInput);
}

}  // namespace
}  // namespace osap
