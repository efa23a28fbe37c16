#include "ata/flops.hpp"

namespace ata {
namespace {

// `groups` independent attention windows of `n` tokens each, width d.
AttentionPathFlops path(std::uint64_t groups, std::uint64_t n, std::uint64_t d) {
  return {3 * groups * n * d * d, groups * n * n * d, groups * n * n * d, groups * n * d * d};
}

}  // namespace

FlopVariant flop_variant(Variant v) {
  switch (v) {
    case Variant::averaging: return FlopVariant::averaging;
    case Variant::temporal: return FlopVariant::temporal;
    case Variant::joint: return FlopVariant::joint;
    case Variant::ata: return FlopVariant::ata;
  }
  return FlopVariant::temporal;
}

std::string_view to_string(FlopVariant v) {
  switch (v) {
    case FlopVariant::spatial: return "spatial";
    case FlopVariant::averaging: return "averaging";
    case FlopVariant::temporal: return "temporal";
    case FlopVariant::joint: return "joint";
    case FlopVariant::ata: return "ata";
  }
  return "unknown";
}

BlockFlops count_flops(const ModelConfig& cfg, FlopVariant variant) {
  cfg.validate();
  const std::uint64_t t = cfg.t_len, hw = cfg.patches(), d = cfg.d;
  BlockFlops f;
  switch (variant) {
    case FlopVariant::spatial:
    case FlopVariant::averaging:
      f.spatial = path(t, hw, d);
      break;
    case FlopVariant::ata:
      f.assignment = t * hw * hw * hw;
      [[fallthrough]];
    case FlopVariant::temporal:
      f.temporal = path(hw, t, d);
      f.spatial = path(t, hw, d);
      break;
    case FlopVariant::joint:
      f.joint = path(1, t * hw, d);
      break;
  }
  return f;
}

}  // namespace ata
