#pragma once

#include <cstddef>
#include <span>

#include "ata/permutation.hpp"
#include "ata/tape.hpp"

// Differentiable primitives. Shapes are explicit: no broadcasting apart
// from scalar scaling and the named row-bias op. Matrix ops take rank-2
// tensors; row ops treat any tensor as [dim(0) x rest].
namespace ata {

Var matmul(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
/// x[n x d] + bias[d] on every row.
Var add_row(Var x, Var bias);
Var sum(Var x);
Var mean(Var x);
Var reshape(Var x, Shape shape);

/// Max-subtracted softmax over the last dimension.
Var softmax_lastdim(Var x);
Var layer_norm(Var x, Var gamma, Var beta, double eps = 1e-5);
/// tanh-approximated GELU.
Var gelu(Var x);

/// out[j] = x[perm[j]]; gradient scatters back through the inverse.
Var gather_rows(Var x, const Permutation& perm);
/// out[j] = x[indices[j]] for arbitrary (repeating) indices; gradient scatter-adds.
Var index_rows(Var x, std::span<const std::size_t> indices);
/// [n x d] -> [1 x d] row mean.
Var mean_rows(Var x);
/// Replaces every row by the mean of its contiguous block of `group` rows.
Var group_mean_rows(Var x, std::size_t group);

/// softmax(q k^T / sqrt(d)) v for q, k, v of shape [n x d].
Var sdp_attention(Var q, Var k, Var v);
/// Multi-head scaled dot-product attention within contiguous row groups.
/// q, k, v are [n x d]; rows [g*group, (g+1)*group) attend only to each
/// other; columns split into `heads` equal slices.
Var multihead_attention(Var q, Var k, Var v, std::size_t heads, std::size_t group);

/// Softmax cross-entropy of a logit vector against a class index.
Var cross_entropy(Var logits, std::size_t label);

}  // namespace ata
