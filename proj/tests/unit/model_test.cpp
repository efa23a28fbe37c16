#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ata/error.hpp"
#include "ata/gradcheck.hpp"
#include "ata/model.hpp"
#include "ata/ops.hpp"
#include "ata/synthdata.hpp"
#include "test_support.hpp"

using namespace ata;

namespace {

ModelConfig tiny(Variant v, std::size_t d = 8) {
  ModelConfig cfg;
  cfg.t_len = 3;
  cfg.h = 2;
  cfg.w = 3;
  cfg.c_in = 8;
  cfg.d = d;
  cfg.heads = 2;
  cfg.depth = 2;
  cfg.variant = v;
  cfg.seed = 4;
  return cfg;
}

Var tokens(Tape& tape, const FeatureVolume& v) {
  return tape.constant(Tensor({v.t_len() * v.patches(), v.c()}, std::vector<double>(v.values().begin(), v.values().end())));
}

std::vector<double> vals(Var v) {
  auto d = v.value().data();
  return {d.begin(), d.end()};
}

// Applies perms[t] to the rows of frame block t.
std::vector<double> shuffle_rows(const std::vector<double>& rows, std::size_t t_len, std::size_t n, std::size_t d,
                                 const std::vector<Permutation>& perms) {
  std::vector<double> out(rows.size());
  for (std::size_t t = 0; t < t_len; ++t)
    for (std::size_t j = 0; j < n; ++j)
      std::copy_n(rows.begin() + static_cast<std::ptrdiff_t>((t * n + perms[t][j]) * d), d,
                  out.begin() + static_cast<std::ptrdiff_t>((t * n + j) * d));
  return out;
}

// Naive pre-norm layer norm with unit gain and zero bias, for one row.
std::vector<double> ln_row(std::span<const double> x) {
  double mu = 0, var = 0;
  for (double v : x) mu += v / static_cast<double>(x.size());
  for (double v : x) var += (v - mu) * (v - mu) / static_cast<double>(x.size());
  std::vector<double> out;
  for (double v : x) out.push_back((v - mu) / std::sqrt(var + 1e-5));
  return out;
}

}  // namespace

TEST(ModelConfig, Validation) {
  ModelConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.heads = 3;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.depth = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  EXPECT_EQ(parse_variant("ata"), Variant::ata);
  EXPECT_EQ(to_string(Variant::joint), "joint");
  EXPECT_THROW(parse_variant("trajectory"), ConfigError);
}

TEST(Model, LocationMajorHandCase) {
  EXPECT_EQ(location_major({2, 1, 3}), Permutation::from_map({0, 3, 1, 4, 2, 5}));
}

TEST(PatchEmbed, ZeroAndIdentityMaps) {
  auto cfg = tiny(Variant::temporal);
  auto params = init_params(cfg);
  params.embed_w = Tensor({8, 8});
  for (std::size_t i = 0; i < 8; ++i) params.embed_w.at(i, i) = 1.0;
  std::mt19937_64 rng(1);
  const auto clip = oracle::random_volume(3, 2, 3, 8, rng);
  Tape tape;
  const auto vars = bind_params(tape, params, BindMode::constant);
  const ClipDims dims{3, 2, 3};
  EXPECT_EQ(vals(patch_embed(tokens(tape, clip), vars, dims, true)),
            std::vector<double>(clip.values().begin(), clip.values().end()));

  auto zero = init_params(cfg);
  zero.embed_w = Tensor({8, 8});
  zero.pos_spatial = Tensor({6, 8});
  zero.pos_temporal = Tensor({3, 8});
  const auto zvars = bind_params(tape, zero, BindMode::constant);
  for (double v : vals(patch_embed(tokens(tape, clip), zvars, dims))) EXPECT_EQ(v, 0.0);
}

TEST(PatchEmbed, ShapeContract) {
  ModelConfig cfg;
  cfg.t_len = 4;
  cfg.h = 2;
  cfg.w = 2;
  cfg.c_in = 3;
  cfg.d = 8;
  cfg.heads = 2;
  auto params = init_params(cfg);
  std::mt19937_64 rng(2);
  Tape tape;
  const auto vars = bind_params(tape, params, BindMode::constant);
  const Var y = patch_embed(tokens(tape, oracle::random_volume(4, 2, 2, 3, rng)), vars, {4, 2, 2});
  EXPECT_EQ(y.shape(), (Shape{16, 8}));
  EXPECT_THROW(patch_embed(tokens(tape, oracle::random_volume(3, 2, 2, 3, rng)), vars, {4, 2, 2}), ShapeError);
}

TEST(TemporalAttention, SingleFrameIsValuePath) {
  auto cfg = tiny(Variant::temporal);
  cfg.t_len = 1;
  auto params = init_params(cfg);
  std::mt19937_64 rng(3);
  const auto clip = oracle::random_volume(1, 2, 3, 8, rng);
  Tape tape;
  const auto vars = bind_params(tape, params, BindMode::constant);
  const auto y = vals(temporal_attention(tokens(tape, clip), vars.blocks[0].temporal, {1, 2, 3}, 2));
  const auto& p = params.blocks[0].temporal;
  for (std::size_t s = 0; s < 6; ++s) {
    const auto n = ln_row(clip.patch(0, s));
    std::vector<double> v(8, 0.0), o(8, 0.0);
    for (std::size_t j = 0; j < 8; ++j)
      for (std::size_t i = 0; i < 8; ++i) v[j] += n[i] * p.wv.at(i, j);
    for (std::size_t j = 0; j < 8; ++j) {
      o[j] = p.bo[j];
      for (std::size_t i = 0; i < 8; ++i) o[j] += v[i] * p.wo.at(i, j);
      EXPECT_NEAR(y[s * 8 + j], clip.patch(0, s)[j] + o[j], 1e-12);
    }
  }
}

TEST(TemporalAttention, IdenticalFramesGiveIdenticalOutputs) {
  const auto clip = gen_static(4, 2, 2, 8, 5);
  auto params = init_params(tiny(Variant::temporal));
  Tape tape;
  const auto vars = bind_params(tape, params, BindMode::constant);
  const auto y = vals(temporal_attention(tokens(tape, clip.volume), vars.blocks[0].temporal, {4, 2, 2}, 2));
  for (std::size_t t = 1; t < 4; ++t)
    for (std::size_t i = 0; i < 32; ++i) EXPECT_NEAR(y[t * 32 + i], y[i], 1e-14);
}

TEST(TemporalAttention, TimePermutationEquivariance) {
  std::mt19937_64 rng(6);
  auto params = init_params(tiny(Variant::temporal));
  const auto clip = oracle::random_volume(5, 2, 2, 8, rng);
  const std::vector<std::size_t> order{3, 0, 4, 1, 2};
  std::vector<double> permuted;
  for (std::size_t t : order) {
    auto f = clip.frame(t).data;
    permuted.insert(permuted.end(), f.begin(), f.end());
  }
  Tape tape;
  const auto vars = bind_params(tape, params, BindMode::constant);
  const auto y = vals(temporal_attention(tokens(tape, clip), vars.blocks[0].temporal, {5, 2, 2}, 2));
  const auto yp = vals(temporal_attention(tape.constant(Tensor({20, 8}, permuted)), vars.blocks[0].temporal,
                                          {5, 2, 2}, 2));
  for (std::size_t k = 0; k < 5; ++k)
    for (std::size_t i = 0; i < 32; ++i) EXPECT_NEAR(yp[k * 32 + i], y[order[k] * 32 + i], 1e-10);
}

TEST(SpatialAndJoint, SingleFrameJointEqualsSpatial) {
  std::mt19937_64 rng(7);
  auto params = init_params(tiny(Variant::joint));
  const auto clip = oracle::random_volume(1, 2, 3, 8, rng);
  Tape tape;
  const auto vars = bind_params(tape, params, BindMode::constant);
  const auto& p = vars.blocks[0].temporal;
  EXPECT_EQ(vals(joint_attention(tokens(tape, clip), p, {1, 2, 3}, 2)),
            vals(spatial_attention(tokens(tape, clip), p, {1, 2, 3}, 2)));
}

TEST(SpatialAndJoint, TwoTokenHandCase) {
  // One head, d=2, identity projections, zero out-bias: output = x + sdp(LN(x), LN(x), LN(x)).
  Tape tape;
  Tensor eye({2, 2});
  eye.at(0, 0) = eye.at(1, 1) = 1.0;
  AttentionVars p{tape.constant(Tensor({2}, 1.0)), tape.constant(Tensor({2}, 0.0)), tape.constant(eye),
                  tape.constant(eye), tape.constant(eye), tape.constant(eye), tape.constant(Tensor({2}, 0.0))};
  Var x = tape.constant(Tensor({2, 2}, std::vector<double>{1, 3, 2, -1}));
  const auto y = vals(joint_attention(x, p, {1, 1, 2}, 1));
  const double n0[2] = {-1 / std::sqrt(1 + 1e-5), 1 / std::sqrt(1 + 1e-5)};
  const double n1[2] = {1.5 / std::sqrt(2.25 + 1e-5), -1.5 / std::sqrt(2.25 + 1e-5)};
  auto dot = [](const double* a, const double* b) { return (a[0] * b[0] + a[1] * b[1]) / std::sqrt(2.0); };
  const double* rows[2] = {n0, n1};
  const double x0[4] = {1, 3, 2, -1};
  for (std::size_t i = 0; i < 2; ++i) {
    const double s0 = dot(rows[i], n0), s1 = dot(rows[i], n1);
    const double a0 = 1 / (1 + std::exp(s1 - s0));
    for (std::size_t c = 0; c < 2; ++c) EXPECT_NEAR(y[i * 2 + c], x0[i * 2 + c] + a0 * n0[c] + (1 - a0) * n1[c], 1e-12);
  }
  EXPECT_EQ(y, vals(spatial_attention(x, p, {1, 1, 2}, 1)));
}

TEST(SpatialAndJoint, IdenticalTokensStayIdentical) {
  auto params = init_params(tiny(Variant::joint));
  Tape tape;
  const auto vars = bind_params(tape, params, BindMode::constant);
  std::vector<double> row{0.3, -1, 2, 0.5, 0, 1, -0.2, 0.7};
  std::vector<double> all;
  for (int i = 0; i < 18; ++i) all.insert(all.end(), row.begin(), row.end());
  const auto y = vals(joint_attention(tape.constant(Tensor({18, 8}, all)), vars.blocks[0].temporal, {3, 2, 3}, 2));
  for (std::size_t i = 8; i < y.size(); ++i) EXPECT_NEAR(y[i], y[i % 8], 1e-14);
}

TEST(SpatialAttention, FramesAreIndependent) {
  std::mt19937_64 rng(8);
  auto params = init_params(tiny(Variant::temporal));
  const auto clip = oracle::random_volume(3, 2, 3, 8, rng);
  Tape tape;
  const auto vars = bind_params(tape, params, BindMode::constant);
  const auto& p = vars.blocks[0].spatial;
  const auto y = vals(spatial_attention(tokens(tape, clip), p, {3, 2, 3}, 2));
  auto f1 = clip.frame(1).data;
  const auto y1 = vals(spatial_attention(tape.constant(Tensor({6, 8}, std::vector<double>(f1.begin(), f1.end()))), p,
                                         {1, 2, 3}, 2));
  for (std::size_t i = 0; i < 48; ++i) EXPECT_EQ(y[48 + i], y1[i]);
}

TEST(JointAttention, TokenLimit) {
  auto params = init_params(tiny(Variant::joint));
  Tape tape;
  const auto vars = bind_params(tape, params, BindMode::constant);
  std::mt19937_64 rng(9);
  EXPECT_THROW(joint_attention(tokens(tape, oracle::random_volume(3, 2, 3, 8, rng)), vars.blocks[0].temporal,
                               {3, 2, 3}, 2, 17),
               ConfigError);
}

TEST(Averaging, HandCases) {
  Tape tape;
  Var x = tape.constant(Tensor({3, 1}, std::vector<double>{1, 2, 3}));
  EXPECT_EQ(vals(averaging_temporal(x, {3, 1, 1})), (std::vector<double>{2, 2, 2}));
  Var y = tape.constant(Tensor({4, 2}, std::vector<double>{1, 2, 3, 4, -1, -2, -3, -4}));
  EXPECT_EQ(vals(averaging_temporal(y, {2, 1, 2})), (std::vector<double>(8, 0.0)));
  Var z = tape.constant(Tensor({2, 2}, std::vector<double>{1, 2, 3, 4}));
  EXPECT_EQ(vals(averaging_temporal(z, {1, 1, 2})), (std::vector<double>{1, 2, 3, 4}));
}

TEST(Ata, IdentityHookRoundTrip) {
  std::mt19937_64 rng(10);
  auto params = init_params(tiny(Variant::ata));
  Tape tape;
  const auto vars = bind_params(tape, params, BindMode::constant);
  for (int trial = 0; trial < 10; ++trial) {
    const auto clip = oracle::random_volume(3, 2, 3, 8, rng);
    AtaOptions opts;
    opts.identity_temporal = true;
    EXPECT_EQ(vals(ata_block_temporal(tokens(tape, clip), vars.blocks[0].temporal, {3, 2, 3}, 2, opts)),
              std::vector<double>(clip.values().begin(), clip.values().end()));
  }
}

TEST(Ata, EqualsTemporalOnIdenticalFrames) {
  const auto clip = gen_static(3, 2, 3, 8, 11);
  auto params = init_params(tiny(Variant::ata));
  Tape tape;
  const auto vars = bind_params(tape, params, BindMode::constant);
  const auto& p = vars.blocks[0].temporal;
  EXPECT_EQ(vals(ata_block_temporal(tokens(tape, clip.volume), p, {3, 2, 3}, 2)),
            vals(temporal_attention(tokens(tape, clip.volume), p, {3, 2, 3}, 2)));
}

TEST(Ata, ShuffleEquivariance) {
  std::mt19937_64 rng(12);
  auto params = init_params(tiny(Variant::ata));
  Tape tape;
  const auto vars = bind_params(tape, params, BindMode::constant);
  const auto& p = vars.blocks[0].temporal;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto base = gen_static(4, 2, 3, 8, seed);
    std::vector<Permutation> perms{Permutation::identity(6)};
    for (int t = 1; t < 4; ++t) perms.push_back(oracle::random_permutation(6, rng));
    const auto shuffled = shuffle_frames(base, perms);
    const auto ref = vals(temporal_attention(tokens(tape, base.volume), p, {4, 2, 3}, 2));
    const auto got = vals(ata_block_temporal(tokens(tape, shuffled.volume), p, {4, 2, 3}, 2));
    EXPECT_LT(oracle::max_abs_diff(got, shuffle_rows(ref, 4, 6, 8, perms)), 1e-9);
  }
}

TEST(Ata, FrozenPlanIsReplayed) {
  std::mt19937_64 rng(13);
  auto params = init_params(tiny(Variant::ata));
  Tape tape;
  const auto vars = bind_params(tape, params, BindMode::constant);
  const auto clip = oracle::random_volume(3, 2, 3, 8, rng);
  AlignmentPlan recorded;
  AtaOptions rec;
  rec.recorded_plan = &recorded;
  const auto y = vals(ata_block_temporal(tokens(tape, clip), vars.blocks[0].temporal, {3, 2, 3}, 2, rec));
  EXPECT_EQ(recorded, align_clip(clip).plan);
  AtaOptions frozen;
  frozen.frozen_plan = &recorded;
  EXPECT_EQ(vals(ata_block_temporal(tokens(tape, clip), vars.blocks[0].temporal, {3, 2, 3}, 2, frozen)), y);
}

TEST(Classifier, ShapeDeterminismAndZeroHead) {
  std::mt19937_64 rng(14);
  const auto clip = oracle::random_volume(3, 2, 3, 8, rng);
  for (Variant v : {Variant::averaging, Variant::temporal, Variant::joint, Variant::ata}) {
    const auto cfg = tiny(v);
    auto params = init_params(cfg);
    const Tensor a = predict_logits(clip, params, cfg);
    EXPECT_EQ(a.shape(), (Shape{4}));
    EXPECT_EQ(a, predict_logits(clip, params, cfg));
    params.head_w = Tensor({cfg.d, 4});
    const Tensor z = predict_logits(clip, params, cfg);
    for (double l : z.data()) EXPECT_EQ(l, 0.0);
  }
}

TEST(Classifier, AtaMatchesTemporalOnStaticClips) {
  const auto clip = gen_static(3, 2, 3, 8, 15);
  auto params = init_params(tiny(Variant::ata));
  Tape tape;
  const auto vars = bind_params(tape, params, BindMode::constant);
  ForwardOptions opts;
  opts.zero_positions = true;
  std::vector<AlignmentPlan> plans;
  opts.recorded_plans = &plans;
  const auto ata = vals(forward_classifier(clip.volume, vars, tiny(Variant::ata), opts));
  for (const auto& plan : plans) EXPECT_EQ(plan, AlignmentPlan::identity(3, 2, 3));
  opts.recorded_plans = nullptr;
  const auto plain = vals(forward_classifier(clip.volume, vars, tiny(Variant::temporal), opts));
  EXPECT_LT(oracle::max_abs_diff(ata, plain), 1e-12);
}

TEST(Classifier, RejectsMismatchedClip) {
  std::mt19937_64 rng(16);
  const auto cfg = tiny(Variant::temporal);
  auto params = init_params(cfg);
  EXPECT_THROW(predict_logits(oracle::random_volume(2, 2, 3, 8, rng), params, cfg), ShapeError);
}

TEST(Classifier, EveryAtaParameterGetsAFiniteGradient) {
  std::mt19937_64 rng(17);
  const auto cfg = tiny(Variant::ata);
  auto params = init_params(cfg);
  params.for_each([](const std::string&, Tensor& t) { t.set_requires_grad(true); });
  Tape tape;
  const auto vars = bind_params(tape, params, BindMode::leaf);
  tape.backward(cross_entropy(forward_classifier(oracle::random_volume(3, 2, 3, 8, rng), vars, cfg), 1));
  params.for_each([](const std::string& name, Tensor& t) {
    ASSERT_TRUE(t.has_grad()) << name;
    double norm = 0;
    for (double g : t.grad()) {
      EXPECT_TRUE(std::isfinite(g)) << name;
      norm += g * g;
    }
    EXPECT_GT(norm, 0.0) << name;
  });
}

TEST(Classifier, FiniteDifferenceWithFrozenPlans) {
  for (Variant v : {Variant::averaging, Variant::temporal, Variant::joint, Variant::ata}) {
    auto cfg = tiny(v, 4);
    cfg.t_len = 2;
    cfg.w = 2;
    cfg.c_in = 3;
    cfg.depth = 1;
    auto params = init_params(cfg);
    const auto clip = gen_shuffled(gen_shifted(2, 2, 2, 3, 1, 0, 3), 4).volume;
    std::vector<AlignmentPlan> plans;
    {
      Tape tape;
      ForwardOptions o;
      o.recorded_plans = &plans;
      forward_classifier(clip, bind_params(tape, params, BindMode::constant), cfg, o);
    }
    std::vector<Tensor> flat;
    params.for_each([&](const std::string&, Tensor& t) { flat.push_back(t); });
    auto f = [&](Tape&, std::span<const Var> vs) {
      ModelVars mv;
      mv.blocks.resize(cfg.depth);
      std::size_t i = 0;
      mv.for_each([&](const std::string&, Var& x) { x = vs[i++]; });
      ForwardOptions o;
      if (v == Variant::ata) o.frozen_plans = &plans;
      return cross_entropy(forward_classifier(clip, mv, cfg, o), 1);
    };
    EXPECT_LT(finite_diff_check(f, flat).max_rel_error, 1e-4) << to_string(v);
  }
}
