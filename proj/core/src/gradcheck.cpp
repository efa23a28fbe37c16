#include "ata/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ata/error.hpp"

namespace ata {
namespace {

double evaluate(const ScalarFunction& f, const std::vector<Tensor>& params) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (const Tensor& p : params) vars.push_back(tape.constant(p));
  const Var out = f(tape, vars);
  const double v = out.value().item();
  if (!std::isfinite(v)) throw NumericError("finite_diff_check: non-finite function value");
  return v;
}

}  // namespace

GradCheckReport finite_diff_check(const ScalarFunction& f, std::span<const Tensor> params, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_diff_check: step must be positive");

  std::vector<std::vector<double>> analytic;
  {
    Tape tape;
    std::vector<Var> vars;
    for (const Tensor& p : params) vars.push_back(tape.variable(p));
    const Var loss = f(tape, vars);
    tape.backward(loss);
    for (const Var& v : vars) {
      auto g = tape.grad(v);
      analytic.emplace_back(v.value().size(), 0.0);
      std::copy(g.begin(), g.end(), analytic.back().begin());
    }
  }

  std::vector<Tensor> work(params.begin(), params.end());
  GradCheckReport report;
  for (std::size_t p = 0; p < work.size(); ++p) {
    for (std::size_t i = 0; i < work[p].size(); ++i) {
      const double orig = work[p][i];
      work[p][i] = orig + h;
      const double fp = evaluate(f, work);
      work[p][i] = orig - h;
      const double fm = evaluate(f, work);
      work[p][i] = orig;
      const double fd = (fp - fm) / (2.0 * h);
      const double err = std::abs(analytic[p][i] - fd) / std::max(1.0, std::abs(fd));
      ++report.checked;
      if (err > report.max_rel_error) {
        report.max_rel_error = err;
        report.worst_param = p;
        report.worst_index = i;
      }
    }
  }
  return report;
}

}  // namespace ata
