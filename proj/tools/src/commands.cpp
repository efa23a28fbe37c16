#include "ata/cli/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ata/error.hpp"
#include "ata/matching.hpp"
#include "ata/parallel.hpp"
#include "ata/random.hpp"

namespace ata::cli {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

std::string clip_name(std::size_t i) {
  std::ostringstream s;
  s << "clip_" << std::setw(5) << std::setfill('0') << i << ".fvol";
  return s.str();
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw FormatError("cannot create directory " + dir.string());
}

std::vector<double> frame_entropies(const FeatureVolume& x, const Codebook& cb) {
  std::vector<double> h;
  for (std::size_t t = 0; t < x.t_len(); ++t) h.push_back(entropy(quantize(x.frame(t), cb)));
  return h;
}

json info_json(const AdjacentInformation& a) {
  return {{"mi", a.mi}, {"h_prev", a.h_prev}, {"h_curr", a.h_curr}, {"h_cond", a.h_cond}};
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Seconds per call, repeating until at least `min_seconds` have elapsed.
template <class F>
double seconds_per_call(F&& f, double min_seconds = 0.005) {
  using clock = std::chrono::steady_clock;
  std::size_t calls = 0;
  const auto t0 = clock::now();
  double elapsed = 0.0;
  do {
    f();
    ++calls;
    elapsed = std::chrono::duration<double>(clock::now() - t0).count();
  } while (elapsed < min_seconds);
  return elapsed / static_cast<double>(calls);
}

SimilarityMatrix random_cosine_matrix(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  const std::size_t c = 16;
  std::vector<double> a(n * c), b(n * c);
  for (auto& v : a) v = g(rng);
  for (auto& v : b) v = g(rng);
  return cosine_similarity_matrix(MatrixView(a, n, c), MatrixView(b, n, c));
}

}  // namespace

void cmd_gen(const GenOptions& opts, std::ostream& out) {
  if (opts.out_dir.empty()) throw ConfigError("gen: --out is required");
  if (opts.t == 0 || opts.h == 0 || opts.w == 0 || opts.c == 0) throw ConfigError("gen: dimensions must be positive");

  DatasetIndex index{opts.kind, opts.seed, opts.t, opts.h, opts.w, opts.c, {}};
  std::vector<std::pair<SyntheticClip, std::string>> clips;

  if (opts.kind == "static" || opts.kind == "shift") {
    SyntheticClip clip = opts.kind == "static"
                             ? gen_static(opts.t, opts.h, opts.w, opts.c, opts.seed)
                             : gen_shifted(opts.t, opts.h, opts.w, opts.c, opts.dx, opts.dy, opts.seed);
    if (opts.shuffle) clip = gen_shuffled(clip, derive_seed(opts.seed, 0x5F));
    clips.emplace_back(std::move(clip), "all");
  } else if (opts.kind == "motion" || opts.kind == "shuffled-motion") {
    MotionSpec spec;
    spec.n_clips = opts.n_clips;
    spec.t = opts.t;
    spec.h = opts.h;
    spec.w = opts.w;
    spec.c = opts.c;
    spec.shuffled = opts.kind == "shuffled-motion";
    spec.seed = opts.seed;
    spec.threads = opts.threads;
    MotionDataset ds = gen_motion_dataset(spec);
    for (auto& c : ds.train) clips.emplace_back(std::move(c), "train");
    for (auto& c : ds.val) clips.emplace_back(std::move(c), "val");
  } else {
    throw ConfigError("gen: unknown kind '" + opts.kind + "' (static|shift|motion|shuffled-motion)");
  }

  ensure_dir(opts.out_dir);
  std::vector<std::vector<std::uint8_t>> encoded(clips.size());
  parallel_for(clips.size(), resolve_threads(opts.threads),
               [&](std::size_t i) { encoded[i] = encode_fvol(clips[i].first.volume, opts.dtype); });

  json files = json::array();
  for (std::size_t i = 0; i < clips.size(); ++i) {
    const std::string name = clip_name(i);
    write_bytes(opts.out_dir / name, encoded[i]);
    files.push_back({{"path", name}, {"bytes", encoded[i].size()}, {"sha256", sha256_hex(encoded[i])}});
    index.clips.push_back({name, clips[i].second, clips[i].first.label, clips[i].first.truth});
  }
  const std::string index_text = dataset_to_json(index);
  write_text(opts.out_dir / "dataset.json", index_text);
  const std::vector<std::uint8_t> index_bytes(index_text.begin(), index_text.end());
  files.push_back({{"path", "dataset.json"}, {"bytes", index_bytes.size()}, {"sha256", sha256_hex(index_bytes)}});
  write_text(opts.out_dir / "manifest.json", json{{"files", files}}.dump(1) + "\n");
  out << "wrote " << clips.size() << " clip(s) to " << opts.out_dir.string() << "\n";
}

void cmd_align(const AlignOptions& opts, std::ostream& out) {
  if (opts.in.empty() || opts.out.empty() || opts.plan.empty())
    throw ConfigError("align: input, output and plan paths are required");
  Dtype dtype{};
  const FeatureVolume x = read_fvol(opts.in, &dtype);
  if (opts.dealign) {
    const AlignmentPlan plan = plan_from_json(read_text(opts.plan));
    if (plan.t_len != x.t_len() || plan.h != x.h() || plan.w != x.w())
      throw FormatError("dealign: plan dims do not match the volume");
    write_fvol(opts.out, dealign_clip(x, plan), dtype);
    out << "dealigned " << opts.in.string() << " -> " << opts.out.string() << "\n";
    return;
  }
  if (!x.all_finite()) throw FormatError("align: volume holds non-finite values");
  const AlignedClip aligned = align_clip(x);
  write_fvol(opts.out, aligned.volume, dtype);
  write_text(opts.plan, plan_to_json(aligned.plan));
  out << "aligned " << opts.in.string() << " -> " << opts.out.string() << " (plan " << opts.plan.string() << ")\n";
}

MiReport measure_mi(const FeatureVolume& x, std::size_t k, std::uint64_t seed) {
  if (x.t_len() < 2) throw ConfigError("mi: need at least two frames");
  const Codebook cb = fit_clip_codebook(x, k, seed);
  const FeatureVolume aligned = align_clip(x).volume;
  MiReport r;
  r.k = k;
  r.seed = seed;
  r.before = clip_adjacent_information(x, cb);
  r.after = clip_adjacent_information(aligned, cb);
  r.frame_entropy_before = frame_entropies(x, cb);
  r.frame_entropy_after = frame_entropies(aligned, cb);
  return r;
}

std::string mi_report_json(const MiReport& r) {
  json j{{"k", r.k},
         {"seed", r.seed},
         {"mi_before", r.before.mi},
         {"mi_after", r.after.mi},
         {"before", info_json(r.before)},
         {"after", info_json(r.after)},
         {"frame_entropy_before", r.frame_entropy_before},
         {"frame_entropy_after", r.frame_entropy_after}};
  return j.dump(1) + "\n";
}

void cmd_mi(const MiOptions& opts, std::ostream& out) {
  const std::string report = mi_report_json(measure_mi(read_fvol(opts.in), opts.k, opts.seed));
  if (opts.out.empty())
    out << report;
  else
    write_text(opts.out, report);
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("loglog_slope: need two or more points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

BenchResult run_bench(const BenchOptions& opts) {
  if (opts.sizes.size() < 2) throw ConfigError("bench: need at least two sizes");
  if (opts.reps == 0) throw ConfigError("bench: reps must be positive");
  for (std::size_t n : opts.sizes)
    if (n < 2) throw ConfigError("bench: sizes must be at least 2");

  std::mt19937_64 rng(derive_seed(opts.seed, 0xBE7C));
  BenchResult result;
  std::vector<double> xs, exact_t, greedy_t;
  for (std::size_t n : opts.sizes) {
    std::vector<double> exact, greedy;
    for (std::size_t r = 0; r < opts.reps; ++r) {
      const SimilarityMatrix s = random_cosine_matrix(n, rng);
      Permutation pe, pg;
      exact.push_back(seconds_per_call([&] { pe = solve_assignment_exact(s); }));
      greedy.push_back(seconds_per_call([&] { pg = solve_assignment_greedy(s); }));
      if (pe.size() != n || pg.size() != n) throw std::logic_error("bench: solver returned wrong size");
    }
    result.rows.push_back({n, median(exact), median(greedy)});
    xs.push_back(static_cast<double>(n));
    exact_t.push_back(result.rows.back().exact_seconds);
    greedy_t.push_back(result.rows.back().greedy_seconds);
  }
  result.exact_slope = loglog_slope(xs, exact_t);
  result.greedy_slope = loglog_slope(xs, greedy_t);
  return result;
}

int cmd_bench(const BenchOptions& opts, std::ostream& out) {
  const BenchResult r = run_bench(opts);
  std::ostringstream csv;
  csv << "n,exact_median_s,greedy_median_s\n" << std::setprecision(9);
  for (const auto& row : r.rows) csv << row.n << ',' << row.exact_seconds << ',' << row.greedy_seconds << '\n';
  if (!opts.out_csv.empty()) write_text(opts.out_csv, csv.str());
  out << csv.str() << std::setprecision(4) << "exact slope " << r.exact_slope << ", greedy slope " << r.greedy_slope
      << "\n";
  out << "greedy slope " << (r.greedy_slope < r.exact_slope ? "below" : "not below") << " exact slope\n";
  if (!opts.check) return kExitOk;
  const bool ok = r.exact_slope >= opts.slope_lo && r.exact_slope <= opts.slope_hi;
  out << (ok ? "check passed" : "check FAILED") << ": exact slope " << r.exact_slope << " vs [" << opts.slope_lo
      << ", " << opts.slope_hi << "]\n";
  return ok ? kExitOk : kExitCheck;
}

void cmd_train(const TrainOptions& opts, std::ostream& out) {
  RunConfig rc = parse_run_config(read_text(opts.config), opts.config.parent_path());
  if (opts.threads != 0) rc.hyper.threads = opts.threads;
  const MotionDataset ds = load_dataset(rc.data);
  if (ds.train.empty()) throw FormatError("train: dataset has no training clips");
  const SyntheticClip& first = ds.train.front();
  const ModelConfig& m = rc.model;
  if (first.volume.t_len() != m.t_len || first.volume.h() != m.h || first.volume.w() != m.w ||
      first.volume.c() != m.c_in)
    throw FormatError("train: dataset dims do not match the model config");

  TrainResult result = train(ds.train, ds.val, m, rc.hyper, [&](const EpochMetrics& e) {
    out << "epoch " << e.epoch << " loss " << e.loss << " train_acc " << e.train_acc << " val_acc " << e.val_acc
        << std::endl;
  });
  write_text(rc.output.metrics_csv, metrics_csv(result.history));
  write_bytes(rc.output.checkpoint, encode_checkpoint(result.params));
}

}  // namespace ata::cli
