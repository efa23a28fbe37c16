#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ata/alignment.hpp"
#include "ata/model.hpp"
#include "ata/synthdata.hpp"
#include "ata/train.hpp"

// On-disk formats. Integers are little-endian throughout.
namespace ata::cli {

enum class Dtype : std::uint32_t { f32 = 0, f64 = 1 };

// FVOL: "FVOL", u32 version (1), u32 dtype, u32 T, H, W, C, then the
// row-major T->H->W->C payload.
std::vector<std::uint8_t> encode_fvol(const FeatureVolume& x, Dtype dtype = Dtype::f64);
FeatureVolume decode_fvol(const std::vector<std::uint8_t>& bytes, Dtype* dtype = nullptr);
void write_fvol(const std::filesystem::path& path, const FeatureVolume& x, Dtype dtype = Dtype::f64);
FeatureVolume read_fvol(const std::filesystem::path& path, Dtype* dtype = nullptr);

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// {"T":..,"H":..,"W":..,"perms":[[..],..]}
std::string plan_to_json(const AlignmentPlan& plan);
AlignmentPlan plan_from_json(const std::string& text);

/// Lowercase hex SHA-256.
std::string sha256_hex(const std::vector<std::uint8_t>& bytes);

/// Sidecar describing generated clips: file name, split, label, truth maps.
struct ClipRecord {
  std::string file;
  std::string split;  // "train", "val" or "all"
  std::optional<std::size_t> label;
  std::optional<std::vector<Permutation>> truth;
};

struct DatasetIndex {
  std::string kind;
  std::uint64_t seed = 0;
  std::size_t t = 0, h = 0, w = 0, c = 0;
  std::vector<ClipRecord> clips;
};

std::string dataset_to_json(const DatasetIndex& index);
DatasetIndex dataset_from_json(const std::string& text);

/// Loads every clip listed in `dir`/dataset.json, split into train and val.
MotionDataset load_dataset(const std::filesystem::path& dir);

struct OutputPaths {
  std::filesystem::path metrics_csv;
  std::filesystem::path checkpoint;
};

struct RunConfig {
  ModelConfig model;
  TrainHyper hyper;
  std::filesystem::path data;
  OutputPaths output;
};

/// Parses a JSON run config. Every key is required except model.max_joint_tokens
/// and hyper.momentum / hyper.threads; unknown keys are rejected. Relative
/// paths resolve against `base_dir`. Throws FormatError.
RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir = {});

// Checkpoint: "ATCK", u32 version (1), u64 manifest length, manifest JSON
// {"tensors":[{"name","shape","offset"}]} with byte offsets into the
// float64 payload that follows.
std::vector<std::uint8_t> encode_checkpoint(ModelParams& params);
/// Fills `params` (already shaped, e.g. by init_params) from a checkpoint;
/// names and shapes must match exactly.
void decode_checkpoint(const std::vector<std::uint8_t>& bytes, ModelParams& params);

std::string metrics_csv(const std::vector<EpochMetrics>& history);

}  // namespace ata::cli
