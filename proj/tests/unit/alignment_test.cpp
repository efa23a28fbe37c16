#include <gtest/gtest.h>

#include <random>

#include "ata/alignment.hpp"
#include "ata/error.hpp"
#include "ata/matching.hpp"
#include "ata/synthdata.hpp"
#include "test_support.hpp"

using namespace ata;

TEST(FeatureVolume, LayoutIsTHWC) {
  std::vector<double> v(2 * 2 * 3 * 4);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
  FeatureVolume x(2, 2, 3, 4, v);
  EXPECT_EQ(x.patches(), 6u);
  EXPECT_EQ(x.frame(1)(2, 3), static_cast<double>(1 * 24 + 2 * 4 + 3));
  EXPECT_EQ(x.patch(0, 5)[0], 20.0);
  EXPECT_THROW(FeatureVolume(2, 2, 3, 4, std::vector<double>(5)), ShapeError);
  EXPECT_THROW(FeatureVolume(0, 1, 1, 1), ShapeError);
}

TEST(Align, RoundTripIsBitExact) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::size_t> t(1, 8), hw(1, 8), c(1, 16);
  for (int trial = 0; trial < 60; ++trial) {
    const auto x = oracle::random_volume(t(rng), hw(rng), hw(rng), c(rng), rng);
    const auto aligned = align_clip(x);
    aligned.plan.validate();
    EXPECT_EQ(dealign_clip(aligned.volume, aligned.plan), x) << "trial " << trial;
    EXPECT_EQ(apply_plan(x, aligned.plan), aligned.volume);
  }
}

TEST(Align, StaticClipGivesIdentityPlan) {
  const auto clip = gen_static(5, 3, 4, 8, 11);
  const auto aligned = align_clip(clip.volume);
  EXPECT_EQ(aligned.plan, AlignmentPlan::identity(5, 3, 4));
  EXPECT_EQ(aligned.volume, clip.volume);
}

TEST(Align, SingleFrameIsUntouched) {
  std::mt19937_64 rng(2);
  const auto x = oracle::random_volume(1, 3, 3, 4, rng);
  const auto aligned = align_clip(x);
  EXPECT_EQ(aligned.volume, x);
  EXPECT_TRUE(aligned.plan.perms.at(0).is_identity());
}

TEST(Align, RecoversShiftAndShuffleTruth) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto shifted = gen_shifted(4, 3, 4, 8, 1, -1, seed);
    EXPECT_EQ(align_clip(shifted.volume).plan.perms, *shifted.truth);
    const auto shuffled = gen_shuffled(shifted, seed + 100);
    const auto aligned = align_clip(shuffled.volume);
    EXPECT_EQ(aligned.plan.perms, *shuffled.truth);
    // Every aligned frame equals the base frame.
    for (std::size_t t = 1; t < 4; ++t)
      for (std::size_t s = 0; s < 12; ++s)
        for (std::size_t ch = 0; ch < 8; ++ch) EXPECT_EQ(aligned.volume.patch(t, s)[ch], aligned.volume.patch(0, s)[ch]);
  }
}

TEST(Align, ChainImprovesEveryAdjacentPair) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 40; ++trial) {
    const auto x = oracle::random_volume(4, 3, 3, 6, rng);
    const auto aligned = align_clip(x);
    for (std::size_t t = 1; t < 4; ++t) {
      const auto s = cosine_similarity_matrix(aligned.volume.frame(t - 1), x.frame(t));
      EXPECT_NEAR(matching_score(s, aligned.plan.perms[t]), oracle::brute_best_score(s), 1e-9);
      EXPECT_GE(matching_score(s, aligned.plan.perms[t]), matching_score(s, Permutation::identity(9)) - 1e-12);
    }
  }
}

TEST(Align, PermutationMatrixIsDoublyStochasticAndTransposeInverts) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + trial % 9;
    const auto p = oracle::random_permutation(n, rng);
    const auto m = permutation_matrix(p);
    const auto x = oracle::normal_vector(n * 3, rng);
    std::vector<double> mx(n * 3, 0.0), back(n * 3, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t row = 0, col = 0;
      for (std::size_t j = 0; j < n; ++j) {
        row += m[i][j];
        col += m[j][i];
        for (std::size_t c = 0; c < 3; ++c) mx[i * 3 + c] += m[i][j] * x[j * 3 + c];
      }
      EXPECT_EQ(row, 1u);
      EXPECT_EQ(col, 1u);
    }
    EXPECT_EQ(mx, gather_rows<double>(x, 3, p));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t c = 0; c < 3; ++c) back[i * 3 + c] += m[j][i] * mx[j * 3 + c];
    EXPECT_EQ(back, x);
  }
}

TEST(AlignmentPlan, ValidateRejectsMalformedPlans) {
  auto plan = AlignmentPlan::identity(3, 2, 2);
  EXPECT_NO_THROW(plan.validate());
  plan.perms[0] = Permutation::from_map({1, 0, 2, 3});
  EXPECT_THROW(plan.validate(), std::invalid_argument);
  plan = AlignmentPlan::identity(3, 2, 2);
  plan.perms.pop_back();
  EXPECT_THROW(plan.validate(), std::invalid_argument);
  plan = AlignmentPlan::identity(3, 2, 2);
  plan.perms[1] = Permutation::identity(3);
  EXPECT_THROW(plan.validate(), std::invalid_argument);
}

TEST(Align, DealignRejectsMismatchedPlan) {
  std::mt19937_64 rng(5);
  const auto x = oracle::random_volume(3, 2, 2, 2, rng);
  EXPECT_THROW(dealign_clip(x, AlignmentPlan::identity(3, 1, 4)), ShapeError);
}

TEST(Align, NonFiniteInputRejected) {
  FeatureVolume x(2, 1, 2, 1, {0, 1, std::nan(""), 2});
  EXPECT_THROW(align_clip(x), NumericError);
}
