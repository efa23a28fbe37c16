#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <span>
#include <string_view>
#include <vector>

#include "ata/tensor.hpp"

namespace ata {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while its tape lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t id() const { return id_; }
  Tape* tape() const { return tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// What a primitive's backward rule sees. `in_grads[i]` is empty when
/// input i does not need a gradient; rules must accumulate (+=) into it.
struct BackwardContext {
  std::span<const Tensor* const> inputs;
  const Tensor& output;
  std::span<const double> out_grad;
  std::span<const std::span<double>> in_grads;
};

using BackwardFn = std::function<void(const BackwardContext&)>;

/// Computation record for one forward pass. Nodes are appended in
/// execution order, so reverse id order is a valid backward schedule.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Value excluded from differentiation.
  Var constant(Tensor value);
  /// Leaf bound to an external parameter; backward() accumulates into
  /// `param.grad()` when `param.requires_grad()`.
  Var leaf(Tensor& param);
  /// Unbound leaf that needs a gradient (read back with grad()).
  Var variable(Tensor value);

  /// Appends a primitive application. Throws NumericError if `value` holds NaN/Inf.
  Var record(std::string_view op, Tensor value, std::initializer_list<Var> inputs, BackwardFn backward);

  /// Reverse sweep from a scalar loss. Gradients of earlier sweeps are discarded.
  void backward(Var loss);

  /// Gradient of the last backward() w.r.t. `v`; empty if v received none.
  std::span<const double> grad(Var v) const;

  std::size_t size() const { return nodes_.size(); }
  const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
  std::string_view op(std::size_t id) const { return nodes_.at(id).op; }
  bool needs_grad(Var v) const { return nodes_.at(v.id()).needs_grad; }

 private:
  struct Node {
    std::string_view op;
    Tensor value;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    Tensor* bound = nullptr;
    bool needs_grad = false;
  };

  Var push(Node node);

  std::deque<Node> nodes_;
  std::vector<std::vector<double>> grads_;
};

}  // namespace ata
