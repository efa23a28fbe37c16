#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "ata/cli/formats.hpp"
#include "ata/infotheory.hpp"

namespace ata::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitCheck = 4;

struct GenOptions {
  std::string kind = "static";  // static | shift | motion | shuffled-motion
  std::size_t t = 4, h = 4, w = 4, c = 8;
  int dx = 1, dy = 0;           // shift only
  std::size_t n_clips = 1000;   // motion kinds only
  bool shuffle = false;         // static/shift: also apply random per-frame shuffles
  std::uint64_t seed = 0;
  Dtype dtype = Dtype::f64;
  std::filesystem::path out_dir;
  std::size_t threads = 0;
};

/// Writes clips as FVOL files, dataset.json and manifest.json (SHA-256 per file).
void cmd_gen(const GenOptions& opts, std::ostream& out);

struct AlignOptions {
  std::filesystem::path in;
  std::filesystem::path out;
  std::filesystem::path plan;  // written by align, read by dealign
  bool dealign = false;
};

void cmd_align(const AlignOptions& opts, std::ostream& out);

struct MiOptions {
  std::filesystem::path in;
  std::size_t k = kDefaultCodebookSize;
  std::uint64_t seed = 0;
  std::filesystem::path out;  // empty: stdout
};

struct MiReport {
  std::size_t k = 0;
  std::uint64_t seed = 0;
  AdjacentInformation before;
  AdjacentInformation after;
  std::vector<double> frame_entropy_before;
  std::vector<double> frame_entropy_after;
};

MiReport measure_mi(const FeatureVolume& x, std::size_t k, std::uint64_t seed);
std::string mi_report_json(const MiReport& report);
void cmd_mi(const MiOptions& opts, std::ostream& out);

struct BenchOptions {
  std::vector<std::size_t> sizes{32, 64, 128, 256};
  std::size_t reps = 11;
  std::uint64_t seed = 0;
  std::filesystem::path out_csv;  // empty: no file
  bool check = false;
  double slope_lo = 2.0, slope_hi = 3.6;
};

struct BenchRow {
  std::size_t n = 0;
  double exact_seconds = 0.0;
  double greedy_seconds = 0.0;
};

struct BenchResult {
  std::vector<BenchRow> rows;
  double exact_slope = 0.0;
  double greedy_slope = 0.0;
};

/// Median wall time per size for the exact and greedy solvers on random cosine matrices.
BenchResult run_bench(const BenchOptions& opts);
/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);
/// Returns kExitCheck when --check is set and the exact slope is outside [slope_lo, slope_hi].
int cmd_bench(const BenchOptions& opts, std::ostream& out);

struct TrainOptions {
  std::filesystem::path config;
  std::size_t threads = 0;  // overrides hyper.threads when nonzero
};

void cmd_train(const TrainOptions& opts, std::ostream& out);

}  // namespace ata::cli
