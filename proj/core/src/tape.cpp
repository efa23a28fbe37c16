#include "ata/tape.hpp"

#include <cmath>
#include <string>

#include "ata/error.hpp"

namespace ata {

const Tensor& Var::value() const { return tape_->value(id_); }

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
  if (!value.all_finite()) throw NumericError("constant (node " + std::to_string(nodes_.size()) + ") is non-finite");
  return push(Node{"constant", std::move(value), {}, {}, nullptr, false});
}

Var Tape::leaf(Tensor& param) {
  if (!param.all_finite()) throw NumericError("leaf (node " + std::to_string(nodes_.size()) + ") is non-finite");
  Tensor copy(param.shape(), std::vector<double>(param.data().begin(), param.data().end()));
  return push(Node{"leaf", std::move(copy), {}, {}, &param, param.requires_grad()});
}

Var Tape::variable(Tensor value) {
  if (!value.all_finite()) throw NumericError("variable (node " + std::to_string(nodes_.size()) + ") is non-finite");
  return push(Node{"variable", std::move(value), {}, {}, nullptr, true});
}

Var Tape::record(std::string_view op, Tensor value, std::initializer_list<Var> inputs, BackwardFn backward) {
  if (!value.all_finite())
    throw NumericError(std::string(op) + " (node " + std::to_string(nodes_.size()) + ") produced a non-finite value");
  Node node{op, std::move(value), {}, std::move(backward), nullptr, false};
  node.inputs.reserve(inputs.size());
  for (const Var& in : inputs) {
    if (in.tape() != this) throw std::invalid_argument(std::string(op) + ": input belongs to a different tape");
    node.inputs.push_back(in.id());
    node.needs_grad = node.needs_grad || nodes_[in.id()].needs_grad;
  }
  if (!node.needs_grad) node.backward = nullptr;
  return push(std::move(node));
}

void Tape::backward(Var loss) {
  if (loss.tape() != this) throw std::invalid_argument("backward: loss belongs to a different tape");
  if (loss.value().size() != 1)
    throw ShapeError("backward: loss must be scalar, got " + shape_string(loss.shape()));

  grads_.assign(nodes_.size(), {});
  grads_[loss.id()].assign(1, 1.0);

  std::vector<const Tensor*> in_values;
  std::vector<std::span<double>> in_grads;
  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (grads_[id].empty() || !node.backward) continue;
    in_values.clear();
    in_grads.clear();
    for (std::size_t in : node.inputs) {
      in_values.push_back(&nodes_[in].value);
      if (nodes_[in].needs_grad) {
        if (grads_[in].empty()) grads_[in].assign(nodes_[in].value.size(), 0.0);
        in_grads.emplace_back(grads_[in]);
      } else {
        in_grads.emplace_back();
      }
    }
    node.backward(BackwardContext{in_values, node.value, grads_[id], in_grads});
    for (const auto& g : in_grads)
      for (double v : g)
        if (!std::isfinite(v))
          throw NumericError("backward of " + std::string(node.op) + " (node " + std::to_string(id) +
                             ") produced a non-finite gradient");
  }

  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    Node& node = nodes_[id];
    if (node.bound == nullptr || !node.needs_grad || grads_[id].empty()) continue;
    auto dst = node.bound->grad();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += grads_[id][i];
  }
}

std::span<const double> Tape::grad(Var v) const {
  if (v.id() >= grads_.size()) return {};
  return grads_[v.id()];
}

}  // namespace ata
