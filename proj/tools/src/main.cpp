#include <iostream>

#include <CLI11.hpp>

#include "ata/cli/commands.hpp"
#include "ata/error.hpp"

using namespace ata::cli;

int main(int argc, char** argv) {
  CLI::App app{"Alignment-guided temporal attention toolkit"};
  app.require_subcommand(1);
  std::size_t threads = 0;
  app.add_option("--threads", threads, "Worker threads (ATA_THREADS overrides; 0 = all cores)");

  GenOptions gen;
  std::string dtype = "f64";
  auto* g = app.add_subcommand("gen", "Generate synthetic clips");
  g->add_option("kind", gen.kind, "static | shift | motion | shuffled-motion")->required();
  g->add_option("-T,--frames", gen.t, "Frames");
  g->add_option("-H,--height", gen.h, "Patch rows");
  g->add_option("-W,--width", gen.w, "Patch columns");
  g->add_option("-C,--channels", gen.c, "Channels");
  g->add_option("--dx", gen.dx, "Horizontal shift per frame (shift)");
  g->add_option("--dy", gen.dy, "Vertical shift per frame (shift)");
  g->add_option("--clips", gen.n_clips, "Number of clips (motion kinds)");
  g->add_flag("--shuffle", gen.shuffle, "Shuffle every frame after the first (static/shift)");
  g->add_option("--seed", gen.seed, "Seed");
  g->add_option("--dtype", dtype, "f32 | f64")->check(CLI::IsMember({"f32", "f64"}));
  g->add_option("--out", gen.out_dir, "Output directory")->required();

  AlignOptions align;
  auto* a = app.add_subcommand("align", "Align a clip, or undo an alignment with --dealign");
  a->add_option("in", align.in, "Input FVOL")->required();
  a->add_option("out", align.out, "Output FVOL")->required();
  a->add_option("--plan", align.plan, "Plan JSON (written when aligning, read with --dealign)")->required();
  a->add_flag("--dealign", align.dealign, "Invert the given plan");

  MiOptions mi;
  auto* m = app.add_subcommand("mi", "Adjacent-frame mutual information before and after alignment");
  m->add_option("in", mi.in, "Input FVOL")->required();
  m->add_option("--k", mi.k, "Codebook size");
  m->add_option("--seed", mi.seed, "Codebook seed");
  m->add_option("--out", mi.out, "Report path (default stdout)");

  BenchOptions bench;
  auto* b = app.add_subcommand("bench", "Time the exact and greedy assignment solvers");
  b->add_option("--sizes", bench.sizes, "Matrix sizes")->delimiter(',');
  b->add_option("--reps", bench.reps, "Repetitions per size");
  b->add_option("--seed", bench.seed, "Seed");
  b->add_option("--out", bench.out_csv, "CSV path");
  b->add_flag("--check", bench.check, "Exit 4 unless the exact slope lies in [lo, hi]");
  b->add_option("--slope-lo", bench.slope_lo, "Lower slope bound for --check");
  b->add_option("--slope-hi", bench.slope_hi, "Upper slope bound for --check");

  TrainOptions tr;
  auto* t = app.add_subcommand("train", "Train a classifier from a JSON run config");
  t->add_option("config", tr.config, "Run config")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*g) {
      gen.threads = threads;
      gen.dtype = dtype == "f32" ? Dtype::f32 : Dtype::f64;
      cmd_gen(gen, std::cout);
    } else if (*a) {
      cmd_align(align, std::cout);
    } else if (*m) {
      cmd_mi(mi, std::cout);
    } else if (*b) {
      return cmd_bench(bench, std::cout);
    } else if (*t) {
      tr.threads = threads;
      cmd_train(tr, std::cout);
    }
  } catch (const ata::FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}
