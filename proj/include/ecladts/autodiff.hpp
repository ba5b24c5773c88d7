#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <optional>
#include <vector>

#include "ecladts/tensor.hpp"

namespace ecladts {

class Tape;

// Handle to a node recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  // Accumulated gradient, or nullptr if backward never reached this node.
  const Tensor* grad() const;
  bool requires_grad() const;

  std::size_t id() const { return id_; }
  Tape* tape() const { return tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Passed to backward rules: read access to parent values, write access to
// parent adjoints. adjoint(i) is only legal when needs_grad(i).
class BackwardContext {
 public:
  const Tensor& input(std::size_t i) const;
  const Tensor& output() const;
  bool needs_grad(std::size_t i) const;
  Tensor& adjoint(std::size_t i);

 private:
  friend class Tape;
  BackwardContext(Tape& tape, std::size_t node) : tape_(tape), node_(node) {}
  Tape& tape_;
  std::size_t node_;
};

using BackwardFn = std::function<void(const Tensor& out_grad, BackwardContext& ctx)>;

// Reverse-mode recording. Nodes are stored in creation order, which is a
// topological order of the computation graph; backward walks it in reverse.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Tensor value, bool requires_grad = false);

  // Records an operation result. The backward rule is kept only if some
  // parent requires a gradient.
  Var record(Tensor value, std::vector<Var> parents, BackwardFn backward);

  // Accumulates d(root)/d(node) into grad() of every requires_grad node
  // reachable from root. root must hold exactly one element.
  void backward(const Var& root);

  void zero_grad();
  std::size_t size() const { return nodes_.size(); }

 private:
  friend class Var;
  friend class BackwardContext;

  struct Node {
    Tensor value;
    std::optional<Tensor> grad;
    bool requires_grad = false;
    std::vector<std::size_t> parents;
    BackwardFn backward;
  };

  const Node& node(const Var& v) const;

  std::deque<Node> nodes_;
  // Scratch adjoints, live only during backward().
  std::vector<std::optional<Tensor>> adjoints_;
};

}  // namespace ecladts
