#pragma once

#include <cstdint>
#include <string_view>

#include "ata/model.hpp"

namespace ata {

/// Multiply-accumulates of one attention path within an encoder block.
struct AttentionPathFlops {
  std::uint64_t qkv = 0;
  std::uint64_t scores = 0;
  std::uint64_t weighted_sum = 0;
  std::uint64_t out = 0;

  std::uint64_t projection() const { return qkv + out; }
  /// Token-pair terms (q k^T and weights x v).
  std::uint64_t interaction() const { return scores + weighted_sum; }
  std::uint64_t total() const { return projection() + interaction(); }
};

/// Block layouts that can be costed. `spatial` is a spatial-attention-only block.
enum class FlopVariant { spatial, averaging, temporal, joint, ata };

FlopVariant flop_variant(Variant v);
std::string_view to_string(FlopVariant v);

struct BlockFlops {
  AttentionPathFlops temporal;
  AttentionPathFlops spatial;
  AttentionPathFlops joint;
  /// Cubic matching cost, T * (HW)^3 units; nonzero only for ata.
  std::uint64_t assignment = 0;

  /// Attention-path count: token-pair interaction MACs over all paths.
  std::uint64_t attention() const { return temporal.interaction() + spatial.interaction() + joint.interaction(); }
  std::uint64_t projection() const { return temporal.projection() + spatial.projection() + joint.projection(); }
};

/// Closed-form per-block counts (MLP excluded).
BlockFlops count_flops(const ModelConfig& cfg, FlopVariant variant);

}  // namespace ata
