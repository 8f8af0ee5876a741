#include "osap/safety_controller.h"

#include <optional>
#include <random>

#include <gtest/gtest.h>

namespace osap {
namespace {

ControllerConfig Nd(std::size_t l, bool sticky = true) {
  ControllerConfig c;
  c.scheme = Scheme::kNoveltyDetection;
  c.l_consecutive = l;
  c.sticky = sticky;
  return c;
}

ControllerConfig Ens(double alpha, std::size_t l, std::size_t k = 5, bool sticky = true) {
  ControllerConfig c;
  c.scheme = Scheme::kValueEnsemble;
  c.alpha = alpha;
  c.l_consecutive = l;
  c.k_window = k;
  c.sticky = sticky;
  return c;
}

std::vector<Decision> RunNd(const std::vector<bool>& flags, const ControllerConfig& cfg) {
  ControllerState s;
  std::vector<Decision> out;
  for (bool f : flags) out.push_back(nd_update(s, f, cfg));
  return out;
}

std::optional<std::size_t> FirstDefault(const std::vector<double>& scores,
                                        const ControllerConfig& cfg) {
  ControllerState s;
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (ensemble_update(s, scores[i], cfg) == Decision::kDefault) return i;
  return std::nullopt;
}

constexpr Decision U = Decision::kUseLearned;
constexpr Decision D = Decision::kDefault;

TEST(NdUpdate, ThreeConsecutiveDefaultsOnThird) {
  EXPECT_EQ(RunNd({true, true, true}, Nd(3)), (std::vector<Decision>{U, U, D}));
}

TEST(NdUpdate, InterruptedRunResets) {
  ControllerState s;
  const auto cfg = Nd(3);
  EXPECT_EQ(nd_update(s, true, cfg), U);
  EXPECT_EQ(nd_update(s, true, cfg), U);
  EXPECT_EQ(nd_update(s, false, cfg), U);
  EXPECT_EQ(s.consecutive, 0u);
  EXPECT_EQ(RunNd({true, true, false, true, true, false}, cfg), std::vector<Decision>(6, U));
}

TEST(NdUpdate, LOneDefaultsOnFirstFlag) {
  EXPECT_EQ(RunNd({false, false, true}, Nd(1)), (std::vector<Decision>{U, U, D}));
}

TEST(NdUpdate, StickyLatchesAndNonStickyRecovers) {
  EXPECT_EQ(RunNd({true, false, false}, Nd(1)), (std::vector<Decision>{D, D, D}));
  EXPECT_EQ(RunNd({true, false, true}, Nd(1, false)), (std::vector<Decision>{D, U, D}));
}

TEST(NdUpdate, CounterNeverExceedsL) {
  ControllerState s;
  const auto cfg = Nd(2, false);
  for (int i = 0; i < 10; ++i) {
    nd_update(s, true, cfg);
    EXPECT_LE(s.consecutive, 2u);
  }
}

TEST(WindowVariance, HandRing) {
  EXPECT_EQ(window_variance(std::vector<double>{0, 0, 0, 0, 5}), 4.0);
  const std::deque<double> d = {0, 0, 0, 0, 5};
  EXPECT_EQ(window_variance(d), 4.0);
}

TEST(EnsembleUpdate, RingTriggersIffAlphaBelowVariance) {
  const std::vector<double> scores = {0, 0, 0, 0, 5};
  EXPECT_EQ(FirstDefault(scores, Ens(3.999, 1)), 4u);
  EXPECT_EQ(FirstDefault(scores, Ens(4.0, 1)), std::nullopt);
}

TEST(EnsembleUpdate, ConstantScoresNeverDefault) {
  EXPECT_EQ(FirstDefault(std::vector<double>(50, 7.0), Ens(1e-12, 1)), std::nullopt);
}

TEST(EnsembleUpdate, WarmUpNeverTriggers) {
  ControllerState s;
  const auto cfg = Ens(0.0, 1);
  for (double v : {0.0, 100.0, -100.0}) EXPECT_EQ(ensemble_update(s, v, cfg), U);
  EXPECT_EQ(s.recent_scores.size(), 3u);
}

TEST(EnsembleUpdate, RingLengthBounded) {
  ControllerState s;
  const auto cfg = Ens(1e9, 1, 4);
  for (int i = 0; i < 20; ++i) {
    ensemble_update(s, i, cfg);
    EXPECT_LE(s.recent_scores.size(), 4u);
  }
}

TEST(EnsembleUpdate, WrongSchemeRejected) {
  ControllerState s;
  EXPECT_THROW(ensemble_update(s, 1.0, Nd(1)), InvalidInput);
  EXPECT_THROW(nd_update(s, true, Ens(1, 1)), InvalidInput);
}

// Raising alpha or l never moves the first default earlier.
TEST(EnsembleUpdate, MonotoneInAlphaAndL) {
  std::mt19937_64 rng(4);
  std::exponential_distribution<double> e(1.0);
  std::uniform_real_distribution<double> a(0.0, 3.0);
  auto at = [](std::optional<std::size_t> x) { return x.value_or(SIZE_MAX); };
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> scores(60);
    for (double& s : scores) s = e(rng);
    const double a1 = a(rng), a2 = a1 + a(rng);
    const std::size_t l1 = 1 + rng() % 4, l2 = l1 + rng() % 3;
    EXPECT_LE(at(FirstDefault(scores, Ens(a1, l1))), at(FirstDefault(scores, Ens(a2, l1))));
    EXPECT_LE(at(FirstDefault(scores, Ens(a1, l1))), at(FirstDefault(scores, Ens(a1, l2))));
  }
}

TEST(EnsembleUpdate, StickyDefaultPersists) {
  ControllerState s;
  const auto cfg = Ens(0.5, 1, 2);
  EXPECT_EQ(ensemble_update(s, 0, cfg), U);
  EXPECT_EQ(ensemble_update(s, 10, cfg), D);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(ensemble_update(s, 10, cfg), D);
}

TEST(ControllerConfig, Validation) {
  EXPECT_THROW(Ens(-1, 1).Validate(), InvalidInput);
  EXPECT_THROW(Ens(1, 0).Validate(), InvalidInput);
  EXPECT_THROW(Ens(1, 1, 0).Validate(), InvalidInput);
  EXPECT_NO_THROW(Ens(0, 1).Validate());
}

}  // namespace
}  // namespace osap
