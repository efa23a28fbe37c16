#include "ata/model.hpp"

#include <cmath>
#include <random>
#include <string>

#include "ata/error.hpp"
#include "ata/ops.hpp"
#include "ata/random.hpp"

namespace ata {

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::averaging: return "averaging";
    case Variant::temporal: return "temporal";
    case Variant::joint: return "joint";
    case Variant::ata: return "ata";
  }
  return "unknown";
}

Variant parse_variant(std::string_view name) {
  if (name == "averaging") return Variant::averaging;
  if (name == "temporal") return Variant::temporal;
  if (name == "joint") return Variant::joint;
  if (name == "ata") return Variant::ata;
  throw ConfigError("unknown variant '" + std::string(name) + "' (expected averaging|temporal|joint|ata)");
}

void ModelConfig::validate() const {
  if (t_len == 0 || h == 0 || w == 0 || c_in == 0 || d == 0) throw ConfigError("model dims must be positive");
  if (heads == 0 || d % heads != 0)
    throw ConfigError("embedding dim " + std::to_string(d) + " not divisible by " + std::to_string(heads) + " heads");
  if (depth == 0) throw ConfigError("depth must be at least 1");
  if (classes < 2) throw ConfigError("need at least 2 classes");
}

namespace {

Tensor normal_tensor(Shape shape, double stddev, std::mt19937_64& rng) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> dist(0.0, stddev);
  for (double& v : t.data()) v = dist(rng);
  t.set_requires_grad(true);
  return t;
}

Tensor filled(Shape shape, double value) {
  Tensor t(std::move(shape), value);
  t.set_requires_grad(true);
  return t;
}

AttentionT<Tensor> init_attention(std::size_t d, std::mt19937_64& rng) {
  const double s = 1.0 / std::sqrt(static_cast<double>(d));
  return {filled({d}, 1.0),          filled({d}, 0.0),          normal_tensor({d, d}, s, rng),
          normal_tensor({d, d}, s, rng), normal_tensor({d, d}, s, rng), normal_tensor({d, d}, s, rng),
          filled({d}, 0.0)};
}

Var project(Var x, Var w) { return matmul(x, w); }

// x + out(mha(LN(x))) with rows grouped into contiguous attention windows.
Var attention_residual(Var x, const AttentionVars& p, std::size_t heads, std::size_t group,
                       const Permutation* reorder) {
  Var h = layer_norm(x, p.ln_gamma, p.ln_beta);
  if (reorder) h = gather_rows(h, *reorder);
  Var a = multihead_attention(project(h, p.wq), project(h, p.wk), project(h, p.wv), heads, group);
  Var o = add_row(matmul(a, p.wo), p.bo);
  if (reorder) o = gather_rows(o, reorder->inverse());
  return add(x, o);
}

void check_tokens(Var x, ClipDims dims, const char* who) {
  if (x.value().rank() != 2 || x.value().dim(0) != dims.tokens())
    throw ShapeError(std::string(who) + ": expected " + std::to_string(dims.tokens()) + " token rows, got " +
                     shape_string(x.shape()));
}

// Row permutation applying perms[t] inside each frame block.
Permutation clip_permutation(const AlignmentPlan& plan, bool inverse) {
  const std::size_t n = plan.h * plan.w;
  std::vector<std::size_t> map(plan.t_len * n);
  for (std::size_t t = 0; t < plan.t_len; ++t) {
    const Permutation p = inverse ? plan.perms[t].inverse() : plan.perms[t];
    for (std::size_t j = 0; j < n; ++j) map[t * n + j] = t * n + p[j];
  }
  return Permutation::from_map(std::move(map));
}

}  // namespace

ModelParams init_params(const ModelConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(derive_seed(cfg.seed, 0x1417));
  const std::size_t d = cfg.d;
  ModelParams p;
  p.embed_w = normal_tensor({cfg.c_in, d}, 1.0 / std::sqrt(static_cast<double>(cfg.c_in)), rng);
  p.embed_b = filled({d}, 0.0);
  p.pos_spatial = normal_tensor({cfg.patches(), d}, 0.02, rng);
  p.pos_temporal = normal_tensor({cfg.t_len, d}, 0.02, rng);
  for (std::size_t b = 0; b < cfg.depth; ++b) {
    BlockT<Tensor> block;
    block.temporal = init_attention(d, rng);
    block.spatial = init_attention(d, rng);
    block.mlp = {filled({d}, 1.0),
                 filled({d}, 0.0),
                 normal_tensor({d, 4 * d}, 1.0 / std::sqrt(static_cast<double>(d)), rng),
                 filled({4 * d}, 0.0),
                 normal_tensor({4 * d, d}, 1.0 / std::sqrt(static_cast<double>(4 * d)), rng),
                 filled({d}, 0.0)};
    p.blocks.push_back(std::move(block));
  }
  p.head_gamma = filled({d}, 1.0);
  p.head_beta = filled({d}, 0.0);
  p.head_w = normal_tensor({d, cfg.classes}, 1.0 / std::sqrt(static_cast<double>(d)), rng);
  p.head_b = filled({cfg.classes}, 0.0);
  return p;
}

std::size_t parameter_count(ModelParams& params) {
  std::size_t n = 0;
  params.for_each([&](const std::string&, Tensor& t) { n += t.size(); });
  return n;
}

ModelVars bind_params(Tape& tape, ModelParams& params, BindMode mode) {
  ModelVars vars;
  vars.blocks.resize(params.blocks.size());
  std::vector<Var*> slots;
  vars.for_each([&](const std::string&, Var& v) { slots.push_back(&v); });
  std::size_t i = 0;
  params.for_each([&](const std::string&, Tensor& t) {
    switch (mode) {
      case BindMode::constant: *slots[i] = tape.constant(t); break;
      case BindMode::leaf: *slots[i] = tape.leaf(t); break;
      case BindMode::variable: *slots[i] = tape.variable(t); break;
    }
    ++i;
  });
  return vars;
}

Permutation location_major(ClipDims dims) {
  const std::size_t n = dims.patches();
  std::vector<std::size_t> map(dims.tokens());
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t t = 0; t < dims.t_len; ++t) map[s * dims.t_len + t] = t * n + s;
  return Permutation::from_map(std::move(map));
}

Var patch_embed(Var clip, const ModelVars& p, ClipDims dims, bool zero_positions) {
  check_tokens(clip, dims, "patch_embed");
  Var x = add_row(matmul(clip, p.embed_w), p.embed_b);
  if (zero_positions) return x;
  std::vector<std::size_t> spatial_idx(dims.tokens()), temporal_idx(dims.tokens());
  for (std::size_t t = 0; t < dims.t_len; ++t)
    for (std::size_t s = 0; s < dims.patches(); ++s) {
      spatial_idx[t * dims.patches() + s] = s;
      temporal_idx[t * dims.patches() + s] = t;
    }
  x = add(x, index_rows(p.pos_spatial, spatial_idx));
  return add(x, index_rows(p.pos_temporal, temporal_idx));
}

Var temporal_attention(Var x, const AttentionVars& p, ClipDims dims, std::size_t heads) {
  check_tokens(x, dims, "temporal_attention");
  const Permutation reorder = location_major(dims);
  return attention_residual(x, p, heads, dims.t_len, &reorder);
}

Var spatial_attention(Var x, const AttentionVars& p, ClipDims dims, std::size_t heads) {
  check_tokens(x, dims, "spatial_attention");
  return attention_residual(x, p, heads, dims.patches(), nullptr);
}

Var joint_attention(Var x, const AttentionVars& p, ClipDims dims, std::size_t heads, std::size_t max_tokens) {
  check_tokens(x, dims, "joint_attention");
  if (dims.tokens() > max_tokens)
    throw ConfigError("joint_attention: " + std::to_string(dims.tokens()) + " tokens exceed the limit of " +
                      std::to_string(max_tokens));
  return attention_residual(x, p, heads, dims.tokens(), nullptr);
}

Var averaging_temporal(Var x, ClipDims dims) {
  check_tokens(x, dims, "averaging_temporal");
  const Permutation reorder = location_major(dims);
  return gather_rows(group_mean_rows(gather_rows(x, reorder), dims.t_len), reorder.inverse());
}

Var ata_block_temporal(Var x, const AttentionVars& p, ClipDims dims, std::size_t heads, const AtaOptions& opts) {
  check_tokens(x, dims, "ata_block_temporal");
  AlignmentPlan plan;
  if (opts.frozen_plan) {
    plan = *opts.frozen_plan;
    if (plan.t_len != dims.t_len || plan.h != dims.h || plan.w != dims.w)
      throw ShapeError("ata_block_temporal: frozen plan does not match clip dims");
    plan.validate();
  } else {
    const Tensor& v = x.value();
    FeatureVolume detached(dims.t_len, dims.h, dims.w, v.dim(1), std::vector<double>(v.data().begin(), v.data().end()));
    plan = align_clip(detached).plan;
  }
  Var aligned = gather_rows(x, clip_permutation(plan, false));
  Var y = opts.identity_temporal ? aligned : temporal_attention(aligned, p, dims, heads);
  Var out = gather_rows(y, clip_permutation(plan, true));
  if (opts.recorded_plan) *opts.recorded_plan = std::move(plan);
  return out;
}

Var mlp_block(Var x, const MlpVars& p) {
  Var h = layer_norm(x, p.ln_gamma, p.ln_beta);
  h = gelu(add_row(matmul(h, p.w1), p.b1));
  h = add_row(matmul(h, p.w2), p.b2);
  return add(x, h);
}

Var forward_classifier(const FeatureVolume& clip, const ModelVars& p, const ModelConfig& cfg,
                       const ForwardOptions& opts) {
  cfg.validate();
  if (clip.t_len() != cfg.t_len || clip.h() != cfg.h || clip.w() != cfg.w || clip.c() != cfg.c_in)
    throw ShapeError("forward_classifier: clip dims do not match the model config");
  if (p.blocks.size() != cfg.depth) throw ShapeError("forward_classifier: parameter depth does not match config");
  if (opts.frozen_plans && opts.frozen_plans->size() != cfg.depth)
    throw ShapeError("forward_classifier: need one frozen plan per block");

  Tape& tape = *p.embed_w.tape();
  const ClipDims dims{cfg.t_len, cfg.h, cfg.w};
  Var x = tape.constant(Tensor({cfg.tokens(), cfg.c_in}, std::vector<double>(clip.values().begin(), clip.values().end())));
  x = patch_embed(x, p, dims, opts.zero_positions);

  if (opts.recorded_plans) opts.recorded_plans->clear();
  for (std::size_t b = 0; b < cfg.depth; ++b) {
    const BlockT<Var>& block = p.blocks[b];
    switch (cfg.variant) {
      case Variant::averaging: x = averaging_temporal(x, dims); break;
      case Variant::temporal: x = temporal_attention(x, block.temporal, dims, cfg.heads); break;
      case Variant::joint: x = joint_attention(x, block.temporal, dims, cfg.heads, cfg.max_joint_tokens); break;
      case Variant::ata: {
        AtaOptions ao;
        AlignmentPlan plan;
        ao.frozen_plan = opts.frozen_plans ? &(*opts.frozen_plans)[b] : nullptr;
        ao.recorded_plan = &plan;
        x = ata_block_temporal(x, block.temporal, dims, cfg.heads, ao);
        if (opts.recorded_plans) opts.recorded_plans->push_back(std::move(plan));
        break;
      }
    }
    if (cfg.variant != Variant::joint) x = spatial_attention(x, block.spatial, dims, cfg.heads);
    x = mlp_block(x, block.mlp);
  }

  Var pooled = layer_norm(mean_rows(x), p.head_gamma, p.head_beta);
  Var logits = add_row(matmul(pooled, p.head_w), p.head_b);
  return reshape(logits, {cfg.classes});
}

Tensor predict_logits(const FeatureVolume& clip, ModelParams& params, const ModelConfig& cfg) {
  Tape tape;
  const ModelVars vars = bind_params(tape, params, BindMode::constant);
  return forward_classifier(clip, vars, cfg).value();
}

}  // namespace ata
