#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ata/alignment.hpp"
#include "ata/tape.hpp"
#include "ata/tensor.hpp"

namespace ata {

/// Temporal operation placed at the head of every encoder block.
enum class Variant { averaging, temporal, joint, ata };

std::string_view to_string(Variant v);
/// Throws ConfigError for names outside {averaging, temporal, joint, ata}.
Variant parse_variant(std::string_view name);

struct ModelConfig {
  std::size_t t_len = 8;
  std::size_t h = 4;
  std::size_t w = 4;
  std::size_t c_in = 8;
  std::size_t d = 64;
  std::size_t heads = 4;
  std::size_t depth = 2;
  std::size_t classes = 4;
  Variant variant = Variant::ata;
  std::uint64_t seed = 0;
  /// Joint attention refuses clips with more tokens than this.
  std::size_t max_joint_tokens = 4096;

  std::size_t patches() const { return h * w; }
  std::size_t tokens() const { return t_len * h * w; }
  void validate() const;
};

template <typename T>
struct AttentionT {
  T ln_gamma, ln_beta, wq, wk, wv, wo, bo;

  static constexpr std::array<std::string_view, 7> kNames{"ln_gamma", "ln_beta", "wq", "wk", "wv", "wo", "bo"};
  std::array<T*, 7> fields() { return {&ln_gamma, &ln_beta, &wq, &wk, &wv, &wo, &bo}; }
};

template <typename T>
struct MlpT {
  T ln_gamma, ln_beta, w1, b1, w2, b2;

  static constexpr std::array<std::string_view, 6> kNames{"ln_gamma", "ln_beta", "w1", "b1", "w2", "b2"};
  std::array<T*, 6> fields() { return {&ln_gamma, &ln_beta, &w1, &b1, &w2, &b2}; }
};

/// Temporal-slot attention (also used by the joint variant), spatial attention, MLP.
template <typename T>
struct BlockT {
  AttentionT<T> temporal;
  AttentionT<T> spatial;
  MlpT<T> mlp;
};

template <typename T>
struct ModelT {
  T embed_w, embed_b, pos_spatial, pos_temporal;
  std::vector<BlockT<T>> blocks;
  T head_gamma, head_beta, head_w, head_b;

  /// Visits every field as f(name, field) in a fixed order.
  template <typename F>
  void for_each(F&& f) {
    f(std::string("embed_w"), embed_w);
    f(std::string("embed_b"), embed_b);
    f(std::string("pos_spatial"), pos_spatial);
    f(std::string("pos_temporal"), pos_temporal);
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const std::string prefix = "blocks." + std::to_string(b) + ".";
      visit_group(prefix + "temporal.", blocks[b].temporal, f);
      visit_group(prefix + "spatial.", blocks[b].spatial, f);
      visit_group(prefix + "mlp.", blocks[b].mlp, f);
    }
    f(std::string("head_gamma"), head_gamma);
    f(std::string("head_beta"), head_beta);
    f(std::string("head_w"), head_w);
    f(std::string("head_b"), head_b);
  }

 private:
  template <typename G, typename F>
  static void visit_group(const std::string& prefix, G& group, F& f) {
    auto fields = group.fields();
    for (std::size_t i = 0; i < fields.size(); ++i) f(prefix + std::string(G::kNames[i]), *fields[i]);
  }
};

using ModelParams = ModelT<Tensor>;
using ModelVars = ModelT<Var>;
using AttentionVars = AttentionT<Var>;
using MlpVars = MlpT<Var>;

/// Seeded initialization: weights N(0, 1/fan_in), positions N(0, 0.02^2),
/// layer-norm gains 1, biases 0.
ModelParams init_params(const ModelConfig& cfg);

std::size_t parameter_count(ModelParams& params);

enum class BindMode {
  constant,  // no gradients
  leaf,      // gradients accumulate into each Tensor's grad()
  variable,  // gradients read back through Tape::grad()
};

ModelVars bind_params(Tape& tape, ModelParams& params, BindMode mode);

struct ClipDims {
  std::size_t t_len = 1;
  std::size_t h = 1;
  std::size_t w = 1;
  std::size_t patches() const { return h * w; }
  std::size_t tokens() const { return t_len * h * w; }
};

/// Options for the alignment-guided temporal op.
struct AtaOptions {
  /// Reuse this plan instead of solving matchings (holds permutations fixed).
  const AlignmentPlan* frozen_plan = nullptr;
  /// Receives the plan that was applied.
  AlignmentPlan* recorded_plan = nullptr;
  /// Test hook: skip attention so the op reduces to dealign(align(x)).
  bool identity_temporal = false;
};

// Token matrices are [T*H*W x d] with row t*HW + s.

/// Shared linear map per patch plus separable spatial and temporal positions.
Var patch_embed(Var clip, const ModelVars& p, ClipDims dims, bool zero_positions = false);
/// Pre-norm multi-head attention across the T tokens of each spatial location, with residual.
Var temporal_attention(Var x, const AttentionVars& p, ClipDims dims, std::size_t heads);
/// Pre-norm multi-head attention over the H*W tokens of each frame, with residual.
Var spatial_attention(Var x, const AttentionVars& p, ClipDims dims, std::size_t heads);
/// Pre-norm multi-head attention over all T*H*W tokens, with residual.
Var joint_attention(Var x, const AttentionVars& p, ClipDims dims, std::size_t heads,
                    std::size_t max_tokens = 4096);
/// Every frame replaced by the per-location temporal mean.
Var averaging_temporal(Var x, ClipDims dims);
/// dealign(temporal_attention(align(x))), with matchings solved on detached values.
Var ata_block_temporal(Var x, const AttentionVars& p, ClipDims dims, std::size_t heads,
                       const AtaOptions& opts = {});
Var mlp_block(Var x, const MlpVars& p);

struct ForwardOptions {
  bool zero_positions = false;
  /// One plan per block for the ata variant; when set, matchings are not re-solved.
  const std::vector<AlignmentPlan>* frozen_plans = nullptr;
  std::vector<AlignmentPlan>* recorded_plans = nullptr;
};

/// Logits of shape [classes]. Block = temporal op -> spatial attention -> MLP
/// (the joint variant replaces both attentions with one joint attention);
/// head = mean pooling + layer norm + linear.
Var forward_classifier(const FeatureVolume& clip, const ModelVars& p, const ModelConfig& cfg,
                       const ForwardOptions& opts = {});

/// Convenience inference path without gradients.
Tensor predict_logits(const FeatureVolume& clip, ModelParams& params, const ModelConfig& cfg);

/// Gather map taking frame-major rows (t*HW + s) to location-major rows (s*T + t).
Permutation location_major(ClipDims dims);

}  // namespace ata
