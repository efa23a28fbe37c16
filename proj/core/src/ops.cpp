#include "ata/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "ata/error.hpp"

namespace ata {
namespace {

Tape& tape_of(Var a) {
  if (!a.valid()) throw std::invalid_argument("operation on an unbound Var");
  return *a.tape();
}

void same_tape(Var a, Var b) {
  if (a.tape() != b.tape()) throw std::invalid_argument("operands recorded on different tapes");
}

std::size_t rows_of(const Tensor& t) { return t.dim(0); }
std::size_t cols_of(const Tensor& t) { return t.size() / t.dim(0); }

void require_matrix(const char* op, const Tensor& t) {
  if (t.rank() != 2) throw ShapeError(std::string(op) + ": expected rank-2 tensor, got " + shape_string(t.shape()));
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
}

// C[m x n] (+)= A[m x k] B[k x n]
void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b, double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * k + p];
      if (aip == 0.0) continue;
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
}

// C[m x n] += A[m x k] B[n x k]^T
void gemm_nt(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b, double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = b + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
      c[i * n + j] += s;
    }
  }
}

// C[k x n] += A[m x k]^T B[m x n]
void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b, double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* brow = b + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * k + p];
      if (aip == 0.0) continue;
      double* crow = c + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
}

}  // namespace

Var matmul(Var a, Var b) {
  same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_matrix("matmul", av);
  require_matrix("matmul", bv);
  const std::size_t m = av.dim(0), k = av.dim(1), n = bv.dim(1);
  if (bv.dim(0) != k)
    throw ShapeError("matmul: inner dimensions differ " + shape_string(av.shape()) + " x " + shape_string(bv.shape()));
  Tensor out({m, n});
  gemm_nn(m, k, n, av.data().data(), bv.data().data(), out.data().data());
  return tape_of(a).record("matmul", std::move(out), {a, b}, [m, k, n](const BackwardContext& ctx) {
    const double* g = ctx.out_grad.data();
    if (!ctx.in_grads[0].empty()) gemm_nt(m, n, k, g, ctx.inputs[1]->data().data(), ctx.in_grads[0].data());
    if (!ctx.in_grads[1].empty()) gemm_tn(m, k, n, ctx.inputs[0]->data().data(), g, ctx.in_grads[1].data());
  });
}

Var transpose(Var a) {
  const Tensor& av = a.value();
  require_matrix("transpose", av);
  const std::size_t m = av.dim(0), n = av.dim(1);
  Tensor out({n, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out.at(j, i) = av.at(i, j);
  return tape_of(a).record("transpose", std::move(out), {a}, [m, n](const BackwardContext& ctx) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) ctx.in_grads[0][i * n + j] += ctx.out_grad[j * m + i];
  });
}

Var add(Var a, Var b) {
  same_tape(a, b);
  require_same_shape("add", a.value(), b.value());
  Tensor out = a.value();
  auto od = out.data();
  auto bd = b.value().data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] += bd[i];
  return tape_of(a).record("add", std::move(out), {a, b}, [](const BackwardContext& ctx) {
    for (const auto& g : ctx.in_grads)
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += ctx.out_grad[i];
  });
}

Var sub(Var a, Var b) {
  same_tape(a, b);
  require_same_shape("sub", a.value(), b.value());
  Tensor out = a.value();
  auto od = out.data();
  auto bd = b.value().data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] -= bd[i];
  return tape_of(a).record("sub", std::move(out), {a, b}, [](const BackwardContext& ctx) {
    for (std::size_t i = 0; i < ctx.in_grads[0].size(); ++i) ctx.in_grads[0][i] += ctx.out_grad[i];
    for (std::size_t i = 0; i < ctx.in_grads[1].size(); ++i) ctx.in_grads[1][i] -= ctx.out_grad[i];
  });
}

Var mul(Var a, Var b) {
  same_tape(a, b);
  require_same_shape("mul", a.value(), b.value());
  Tensor out = a.value();
  auto od = out.data();
  auto bd = b.value().data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] *= bd[i];
  return tape_of(a).record("mul", std::move(out), {a, b}, [](const BackwardContext& ctx) {
    auto ad = ctx.inputs[0]->data();
    auto bd = ctx.inputs[1]->data();
    for (std::size_t i = 0; i < ctx.in_grads[0].size(); ++i) ctx.in_grads[0][i] += ctx.out_grad[i] * bd[i];
    for (std::size_t i = 0; i < ctx.in_grads[1].size(); ++i) ctx.in_grads[1][i] += ctx.out_grad[i] * ad[i];
  });
}

Var scale(Var a, double factor) {
  Tensor out = a.value();
  for (double& v : out.data()) v *= factor;
  return tape_of(a).record("scale", std::move(out), {a}, [factor](const BackwardContext& ctx) {
    for (std::size_t i = 0; i < ctx.in_grads[0].size(); ++i) ctx.in_grads[0][i] += factor * ctx.out_grad[i];
  });
}

Var add_row(Var x, Var bias) {
  same_tape(x, bias);
  const Tensor& xv = x.value();
  const std::size_t n = rows_of(xv), d = cols_of(xv);
  if (bias.value().size() != d)
    throw ShapeError("add_row: bias " + shape_string(bias.shape()) + " does not match row width of " +
                     shape_string(xv.shape()));
  Tensor out = xv;
  auto bd = bias.value().data();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] += bd[j];
  return tape_of(x).record("add_row", std::move(out), {x, bias}, [n, d](const BackwardContext& ctx) {
    for (std::size_t i = 0; i < ctx.in_grads[0].size(); ++i) ctx.in_grads[0][i] += ctx.out_grad[i];
    if (!ctx.in_grads[1].empty())
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) ctx.in_grads[1][j] += ctx.out_grad[i * d + j];
  });
}

Var sum(Var x) {
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  return tape_of(x).record("sum", Tensor::scalar(s), {x}, [](const BackwardContext& ctx) {
    for (double& g : ctx.in_grads[0]) g += ctx.out_grad[0];
  });
}

Var mean(Var x) { return scale(sum(x), 1.0 / static_cast<double>(x.value().size())); }

Var reshape(Var x, Shape shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  return tape_of(x).record("reshape", std::move(out), {x}, [](const BackwardContext& ctx) {
    for (std::size_t i = 0; i < ctx.in_grads[0].size(); ++i) ctx.in_grads[0][i] += ctx.out_grad[i];
  });
}

Var softmax_lastdim(Var x) {
  const Tensor& xv = x.value();
  if (xv.empty()) throw ShapeError("softmax_lastdim: empty tensor");
  const std::size_t d = xv.shape().back();
  const std::size_t n = xv.size() / d;
  Tensor out(xv.shape());
  for (std::size_t r = 0; r < n; ++r) {
    const double* in = xv.data().data() + r * d;
    double* o = out.data().data() + r * d;
    const double mx = *std::max_element(in, in + d);
    double z = 0.0;
    for (std::size_t j = 0; j < d; ++j) z += (o[j] = std::exp(in[j] - mx));
    for (std::size_t j = 0; j < d; ++j) o[j] /= z;
  }
  return tape_of(x).record("softmax", std::move(out), {x}, [n, d](const BackwardContext& ctx) {
    auto y = ctx.output.data();
    for (std::size_t r = 0; r < n; ++r) {
      double dot = 0.0;
      for (std::size_t j = 0; j < d; ++j) dot += ctx.out_grad[r * d + j] * y[r * d + j];
      for (std::size_t j = 0; j < d; ++j) ctx.in_grads[0][r * d + j] += y[r * d + j] * (ctx.out_grad[r * d + j] - dot);
    }
  });
}

Var layer_norm(Var x, Var gamma, Var beta, double eps) {
  same_tape(x, gamma);
  same_tape(x, beta);
  const Tensor& xv = x.value();
  const std::size_t d = xv.shape().back();
  const std::size_t n = xv.size() / d;
  if (gamma.value().size() != d || beta.value().size() != d)
    throw ShapeError("layer_norm: gamma/beta must have length " + std::to_string(d));

  Tensor out(xv.shape());
  std::vector<double> xhat(xv.size());
  std::vector<double> rstd(n);
  auto g = gamma.value().data();
  auto b = beta.value().data();
  for (std::size_t r = 0; r < n; ++r) {
    const double* in = xv.data().data() + r * d;
    double mu = 0.0;
    for (std::size_t j = 0; j < d; ++j) mu += in[j];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (in[j] - mu) * (in[j] - mu);
    var /= static_cast<double>(d);
    rstd[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < d; ++j) {
      xhat[r * d + j] = (in[j] - mu) * rstd[r];
      out[r * d + j] = g[j] * xhat[r * d + j] + b[j];
    }
  }
  return tape_of(x).record(
      "layer_norm", std::move(out), {x, gamma, beta},
      [n, d, xhat = std::move(xhat), rstd = std::move(rstd)](const BackwardContext& ctx) {
        auto gv = ctx.inputs[1]->data();
        auto dx = ctx.in_grads[0];
        auto dgamma = ctx.in_grads[1];
        auto dbeta = ctx.in_grads[2];
        std::vector<double> dxhat(d);
        for (std::size_t r = 0; r < n; ++r) {
          const double* dy = ctx.out_grad.data() + r * d;
          const double* xh = xhat.data() + r * d;
          if (!dgamma.empty())
            for (std::size_t j = 0; j < d; ++j) dgamma[j] += dy[j] * xh[j];
          if (!dbeta.empty())
            for (std::size_t j = 0; j < d; ++j) dbeta[j] += dy[j];
          if (dx.empty()) continue;
          double m1 = 0.0, m2 = 0.0;
          for (std::size_t j = 0; j < d; ++j) {
            dxhat[j] = dy[j] * gv[j];
            m1 += dxhat[j];
            m2 += dxhat[j] * xh[j];
          }
          m1 /= static_cast<double>(d);
          m2 /= static_cast<double>(d);
          for (std::size_t j = 0; j < d; ++j) dx[r * d + j] += rstd[r] * (dxhat[j] - m1 - xh[j] * m2);
        }
      });
}

Var gelu(Var x) {
  constexpr double kAlpha = 0.7978845608028654;  // sqrt(2/pi)
  constexpr double kBeta = 0.044715;
  Tensor out = x.value();
  for (double& v : out.data()) v = 0.5 * v * (1.0 + std::tanh(kAlpha * (v + kBeta * v * v * v)));
  return tape_of(x).record("gelu", std::move(out), {x}, [](const BackwardContext& ctx) {
    auto xv = ctx.inputs[0]->data();
    for (std::size_t i = 0; i < xv.size(); ++i) {
      const double v = xv[i];
      const double th = std::tanh(kAlpha * (v + kBeta * v * v * v));
      const double dth = (1.0 - th * th) * kAlpha * (1.0 + 3.0 * kBeta * v * v);
      ctx.in_grads[0][i] += ctx.out_grad[i] * (0.5 * (1.0 + th) + 0.5 * v * dth);
    }
  });
}

Var gather_rows(Var x, const Permutation& perm) {
  const Tensor& xv = x.value();
  const std::size_t n = rows_of(xv), c = cols_of(xv);
  if (perm.size() != n)
    throw ShapeError("gather_rows: permutation of size " + std::to_string(perm.size()) + " for " +
                     std::to_string(n) + " rows");
  Tensor out(xv.shape(), gather_rows<double>(xv.data(), c, perm));
  return tape_of(x).record("gather_rows", std::move(out), {x}, [perm, c](const BackwardContext& ctx) {
    for (std::size_t j = 0; j < perm.size(); ++j) {
      double* dst = ctx.in_grads[0].data() + perm[j] * c;
      const double* src = ctx.out_grad.data() + j * c;
      for (std::size_t i = 0; i < c; ++i) dst[i] += src[i];
    }
  });
}

Var index_rows(Var x, std::span<const std::size_t> indices) {
  const Tensor& xv = x.value();
  const std::size_t n = rows_of(xv), c = cols_of(xv);
  if (indices.empty()) throw ShapeError("index_rows: empty index list");
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  Shape shape = xv.shape();
  shape[0] = idx.size();
  Tensor out(shape);
  for (std::size_t j = 0; j < idx.size(); ++j) {
    if (idx[j] >= n) throw ShapeError("index_rows: index " + std::to_string(idx[j]) + " out of range");
    std::copy_n(xv.data().data() + idx[j] * c, c, out.data().data() + j * c);
  }
  return tape_of(x).record("index_rows", std::move(out), {x}, [idx = std::move(idx), c](const BackwardContext& ctx) {
    for (std::size_t j = 0; j < idx.size(); ++j)
      for (std::size_t i = 0; i < c; ++i) ctx.in_grads[0][idx[j] * c + i] += ctx.out_grad[j * c + i];
  });
}

Var mean_rows(Var x) {
  const Tensor& xv = x.value();
  const std::size_t n = rows_of(xv), c = cols_of(xv);
  Tensor out({1, c});
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t i = 0; i < c; ++i) out[i] += xv[r * c + i];
  for (double& v : out.data()) v /= static_cast<double>(n);
  return tape_of(x).record("mean_rows", std::move(out), {x}, [n, c](const BackwardContext& ctx) {
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t i = 0; i < c; ++i) ctx.in_grads[0][r * c + i] += ctx.out_grad[i] * inv;
  });
}

Var group_mean_rows(Var x, std::size_t group) {
  const Tensor& xv = x.value();
  const std::size_t n = rows_of(xv), c = cols_of(xv);
  if (group == 0 || n % group != 0)
    throw ShapeError("group_mean_rows: " + std::to_string(n) + " rows not divisible into groups of " +
                     std::to_string(group));
  Tensor out(xv.shape());
  std::vector<double> acc(c);
  for (std::size_t g = 0; g < n / group; ++g) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t r = g * group; r < (g + 1) * group; ++r)
      for (std::size_t i = 0; i < c; ++i) acc[i] += xv[r * c + i];
    for (std::size_t r = g * group; r < (g + 1) * group; ++r)
      for (std::size_t i = 0; i < c; ++i) out[r * c + i] = acc[i] / static_cast<double>(group);
  }
  return tape_of(x).record("group_mean_rows", std::move(out), {x}, [n, c, group](const BackwardContext& ctx) {
    std::vector<double> acc(c);
    for (std::size_t g = 0; g < n / group; ++g) {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::size_t r = g * group; r < (g + 1) * group; ++r)
        for (std::size_t i = 0; i < c; ++i) acc[i] += ctx.out_grad[r * c + i];
      for (std::size_t r = g * group; r < (g + 1) * group; ++r)
        for (std::size_t i = 0; i < c; ++i) ctx.in_grads[0][r * c + i] += acc[i] / static_cast<double>(group);
    }
  });
}

Var sdp_attention(Var q, Var k, Var v) {
  const Tensor& qv = q.value();
  require_matrix("sdp_attention", qv);
  require_same_shape("sdp_attention", qv, k.value());
  require_same_shape("sdp_attention", qv, v.value());
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(qv.dim(1)));
  Var weights = softmax_lastdim(scale(matmul(q, transpose(k)), inv_sqrt_d));
  return matmul(weights, v);
}

Var multihead_attention(Var q, Var k, Var v, std::size_t heads, std::size_t group) {
  same_tape(q, k);
  same_tape(q, v);
  const Tensor& qv = q.value();
  require_matrix("multihead_attention", qv);
  require_same_shape("multihead_attention", qv, k.value());
  require_same_shape("multihead_attention", qv, v.value());
  const std::size_t n = qv.dim(0), d = qv.dim(1);
  if (heads == 0 || d % heads != 0)
    throw ShapeError("multihead_attention: width " + std::to_string(d) + " not divisible by " +
                     std::to_string(heads) + " heads");
  if (group == 0 || n % group != 0)
    throw ShapeError("multihead_attention: " + std::to_string(n) + " rows not divisible into groups of " +
                     std::to_string(group));
  const std::size_t dh = d / heads;
  const std::size_t groups = n / group;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));

  const double* Q = qv.data().data();
  const double* K = k.value().data().data();
  const double* V = v.value().data().data();
  std::vector<double> probs(groups * heads * group * group);
  Tensor out({n, d});
  double* O = out.data().data();

  for (std::size_t g = 0; g < groups; ++g) {
    for (std::size_t h = 0; h < heads; ++h) {
      double* P = probs.data() + (g * heads + h) * group * group;
      const std::size_t col = h * dh;
      for (std::size_t i = 0; i < group; ++i) {
        const double* qi = Q + (g * group + i) * d + col;
        double* prow = P + i * group;
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < group; ++j) {
          const double* kj = K + (g * group + j) * d + col;
          double s = 0.0;
          for (std::size_t p = 0; p < dh; ++p) s += qi[p] * kj[p];
          prow[j] = s * inv_sqrt;
          mx = std::max(mx, prow[j]);
        }
        double z = 0.0;
        for (std::size_t j = 0; j < group; ++j) z += (prow[j] = std::exp(prow[j] - mx));
        double* oi = O + (g * group + i) * d + col;
        for (std::size_t j = 0; j < group; ++j) {
          prow[j] /= z;
          const double* vj = V + (g * group + j) * d + col;
          for (std::size_t p = 0; p < dh; ++p) oi[p] += prow[j] * vj[p];
        }
      }
    }
  }

  return tape_of(q).record(
      "multihead_attention", std::move(out), {q, k, v},
      [=, probs = std::move(probs)](const BackwardContext& ctx) {
        const double* Qb = ctx.inputs[0]->data().data();
        const double* Kb = ctx.inputs[1]->data().data();
        const double* Vb = ctx.inputs[2]->data().data();
        const double* dO = ctx.out_grad.data();
        auto dQ = ctx.in_grads[0];
        auto dK = ctx.in_grads[1];
        auto dV = ctx.in_grads[2];
        std::vector<double> dP(group);
        for (std::size_t g = 0; g < groups; ++g) {
          for (std::size_t h = 0; h < heads; ++h) {
            const double* P = probs.data() + (g * heads + h) * group * group;
            const std::size_t col = h * dh;
            for (std::size_t i = 0; i < group; ++i) {
              const std::size_t ri = (g * group + i) * d + col;
              const double* prow = P + i * group;
              double dot = 0.0;
              for (std::size_t j = 0; j < group; ++j) {
                const std::size_t rj = (g * group + j) * d + col;
                double s = 0.0;
                for (std::size_t p = 0; p < dh; ++p) s += dO[ri + p] * Vb[rj + p];
                dP[j] = s;
                dot += s * prow[j];
                if (!dV.empty())
                  for (std::size_t p = 0; p < dh; ++p) dV[rj + p] += prow[j] * dO[ri + p];
              }
              for (std::size_t j = 0; j < group; ++j) {
                const double ds = prow[j] * (dP[j] - dot) * inv_sqrt;
                if (ds == 0.0) continue;
                const std::size_t rj = (g * group + j) * d + col;
                if (!dQ.empty())
                  for (std::size_t p = 0; p < dh; ++p) dQ[ri + p] += ds * Kb[rj + p];
                if (!dK.empty())
                  for (std::size_t p = 0; p < dh; ++p) dK[rj + p] += ds * Qb[ri + p];
              }
            }
          }
        }
      });
}

Var cross_entropy(Var logits, std::size_t label) {
  const Tensor& lv = logits.value();
  if (label >= lv.size())
    throw ShapeError("cross_entropy: label " + std::to_string(label) + " outside " + std::to_string(lv.size()) +
                     " classes");
  auto z = lv.data();
  const double mx = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp(v - mx);
  const double lse = mx + std::log(s);
  return tape_of(logits).record(
      "cross_entropy", Tensor::scalar(lse - z[label]), {logits}, [label, lse](const BackwardContext& ctx) {
        auto zin = ctx.inputs[0]->data();
        for (std::size_t i = 0; i < zin.size(); ++i)
          ctx.in_grads[0][i] += ctx.out_grad[0] * (std::exp(zin[i] - lse) - (i == label ? 1.0 : 0.0));
      });
}

}  // namespace ata
