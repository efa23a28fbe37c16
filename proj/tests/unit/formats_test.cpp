#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "ata/cli/formats.hpp"
#include "ata/error.hpp"
#include "test_support.hpp"

using namespace ata;
using namespace ata::cli;

namespace {

std::uint32_t u32_at(const std::vector<std::uint8_t>& b, std::size_t off) {
  return b[off] | (b[off + 1] << 8) | (b[off + 2] << 16) | (static_cast<std::uint32_t>(b[off + 3]) << 24);
}

}  // namespace

TEST(Fvol, HeaderLayout) {
  const FeatureVolume x(4, 4, 4, 8);
  const auto bytes = encode_fvol(x);
  ASSERT_EQ(bytes.size(), 28u + 4 * 4 * 4 * 8 * 8);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "FVOL");
  EXPECT_EQ(u32_at(bytes, 4), 1u);
  EXPECT_EQ(u32_at(bytes, 8), 1u);
  EXPECT_EQ(u32_at(bytes, 12), 4u);
  EXPECT_EQ(u32_at(bytes, 24), 8u);
  EXPECT_EQ(encode_fvol(x, Dtype::f32).size(), 28u + 4 * 4 * 4 * 8 * 4);
}

TEST(Fvol, PayloadIsLittleEndianRowMajor) {
  FeatureVolume x(1, 1, 1, 2, {1.0, -2.5});
  const auto bytes = encode_fvol(x);
  double v = 0;
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[28 + 8 + i]) << (8 * i);
  std::memcpy(&v, &bits, 8);
  EXPECT_EQ(v, -2.5);
}

TEST(Fvol, RoundTripBitExactBothDtypes) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = oracle::random_volume(1 + trial % 5, 1 + trial % 3, 2, 1 + trial % 7, rng);
    Dtype dt{};
    EXPECT_EQ(decode_fvol(encode_fvol(x), &dt), x);
    EXPECT_EQ(dt, Dtype::f64);
    const auto f32 = encode_fvol(x, Dtype::f32);
    const auto back = decode_fvol(f32, &dt);
    EXPECT_EQ(dt, Dtype::f32);
    EXPECT_EQ(encode_fvol(back, Dtype::f32), f32);
    for (std::size_t i = 0; i < x.values().size(); ++i)
      EXPECT_EQ(back.values()[i], static_cast<double>(static_cast<float>(x.values()[i])));
  }
}

TEST(Fvol, MalformedInputsRejected) {
  auto good = encode_fvol(FeatureVolume(2, 2, 2, 2));
  auto bad = good;
  bad[0] = 'X';
  EXPECT_THROW(decode_fvol(bad), FormatError);
  bad = good;
  bad[4] = 2;
  EXPECT_THROW(decode_fvol(bad), FormatError);
  bad = good;
  bad[8] = 7;
  EXPECT_THROW(decode_fvol(bad), FormatError);
  bad = good;
  bad.pop_back();
  EXPECT_THROW(decode_fvol(bad), FormatError);
  bad = good;
  bad.push_back(0);
  EXPECT_THROW(decode_fvol(bad), FormatError);
  EXPECT_THROW(decode_fvol(std::vector<std::uint8_t>(good.begin(), good.begin() + 10)), FormatError);
  bad = good;
  bad[12] = 0;
  EXPECT_THROW(decode_fvol(bad), FormatError);
}

TEST(PlanJson, RoundTripAndValidation) {
  AlignmentPlan plan = AlignmentPlan::identity(3, 1, 3);
  plan.perms[2] = Permutation::from_map({2, 0, 1});
  EXPECT_EQ(plan_from_json(plan_to_json(plan)), plan);
  EXPECT_THROW(plan_from_json(R"({"T":2,"H":1,"W":2,"perms":[[0,1],[1,1]]})"), FormatError);
  EXPECT_THROW(plan_from_json(R"({"T":2,"H":1,"W":2,"perms":[[1,0],[0,1]]})"), FormatError);
  EXPECT_THROW(plan_from_json(R"({"T":1,"H":1,"W":1,"perms":[[0]],"extra":1})"), FormatError);
  EXPECT_THROW(plan_from_json("{not json"), FormatError);
}

TEST(Sha256, KnownVectors) {
  EXPECT_EQ(sha256_hex({}), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  const std::string abc = "abc";
  EXPECT_EQ(sha256_hex({abc.begin(), abc.end()}),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(DatasetIndex, RoundTrip) {
  DatasetIndex idx{"shift", 7, 2, 1, 2, 3, {}};
  idx.clips.push_back({"clip_00000.fvol", "all", std::nullopt,
                       std::vector<Permutation>{Permutation::identity(2), Permutation::from_map({1, 0})}});
  idx.clips.push_back({"clip_00001.fvol", "val", 3, std::nullopt});
  const auto back = dataset_from_json(dataset_to_json(idx));
  EXPECT_EQ(back.kind, "shift");
  ASSERT_EQ(back.clips.size(), 2u);
  EXPECT_EQ(back.clips[0].truth, idx.clips[0].truth);
  EXPECT_EQ(back.clips[1].label, 3u);
}

namespace {

const char* kConfig = R"({
  "model": {"t_len": 8, "h": 4, "w": 4, "c_in": 8, "d": 32, "heads": 4, "depth": 2,
            "classes": 4, "variant": "ata", "seed": 1},
  "hyper": {"lr": 0.01, "epochs": 3, "batch": 16, "seed": 2},
  "data": "clips",
  "output": {"metrics_csv": "metrics.csv", "checkpoint": "model.ckpt"}
})";

}  // namespace

TEST(RunConfig, ParsesAndResolvesPaths) {
  const auto rc = parse_run_config(kConfig, "/base");
  EXPECT_EQ(rc.model.variant, Variant::ata);
  EXPECT_EQ(rc.model.d, 32u);
  EXPECT_EQ(rc.hyper.epochs, 3u);
  EXPECT_DOUBLE_EQ(rc.hyper.momentum, 0.9);
  EXPECT_EQ(rc.data, std::filesystem::path("/base/clips"));
  EXPECT_EQ(rc.output.checkpoint, std::filesystem::path("/base/model.ckpt"));
}

TEST(RunConfig, RejectsUnknownAndMissingKeys) {
  std::string text = kConfig;
  EXPECT_THROW(parse_run_config(std::string(text).replace(text.find("\"seed\": 1"), 9, "\"sede\": 1")), FormatError);
  EXPECT_THROW(parse_run_config(std::string(text).replace(text.find("\"batch\": 16, "), 13, "")), FormatError);
  EXPECT_THROW(parse_run_config(std::string(text).replace(text.find("\"ata\""), 5, "\"lstm\"")), FormatError);
  EXPECT_THROW(parse_run_config(std::string(text).replace(text.find("\"heads\": 4"), 10, "\"heads\": 5")),
               FormatError);
  EXPECT_THROW(parse_run_config(std::string(text).replace(text.find("\"lr\": 0.01"), 10, "\"lr\": \"x\"")),
               FormatError);
  EXPECT_THROW(parse_run_config(R"({"model": {}, "hyper": {}, "data": "", "output": {}, "zzz": 0})"), FormatError);
}

TEST(Checkpoint, RoundTripAndMismatch) {
  ModelConfig cfg;
  cfg.d = 8;
  cfg.heads = 2;
  cfg.depth = 1;
  auto params = init_params(cfg);
  const auto bytes = encode_checkpoint(params);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "ATCK");

  cfg.seed = 99;
  auto other = init_params(cfg);
  decode_checkpoint(bytes, other);
  std::vector<Tensor> a, b;
  params.for_each([&](const std::string&, Tensor& t) { a.push_back(t); });
  other.for_each([&](const std::string&, Tensor& t) { b.push_back(t); });
  EXPECT_EQ(a, b);

  cfg.d = 12;
  auto wrong = init_params(cfg);
  EXPECT_THROW(decode_checkpoint(bytes, wrong), FormatError);
  auto truncated = bytes;
  truncated.resize(truncated.size() - 8);
  EXPECT_THROW(decode_checkpoint(truncated, other), FormatError);
}

TEST(MetricsCsv, HeaderAndRows) {
  const auto csv = metrics_csv({{1, 0.5, 0.25, 0.75}});
  EXPECT_EQ(csv, "epoch,loss,train_acc,val_acc\n1,0.5,0.25,0.75\n");
}
