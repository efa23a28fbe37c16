#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "ata/tape.hpp"

namespace ata {

/// Scalar function of parameter Vars recorded on the given tape.
using ScalarFunction = std::function<Var(Tape&, std::span<const Var>)>;

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t worst_param = 0;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
};

/// Compares reverse-mode gradients of `f` against central differences with
/// step `h`. The error per coordinate is |g_ad - g_fd| / max(1, |g_fd|).
/// Throws NumericError when any evaluation is non-finite.
GradCheckReport finite_diff_check(const ScalarFunction& f, std::span<const Tensor> params, double h = 1e-6);

}  // namespace ata
