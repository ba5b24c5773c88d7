#include "ecladts/autodiff.hpp"

#include "ecladts/error.hpp"

namespace ecladts {

const Tensor& Var::value() const { return tape_->node(*this).value; }

const Tensor* Var::grad() const {
  const auto& g = tape_->node(*this).grad;
  return g ? &*g : nullptr;
}

bool Var::requires_grad() const { return tape_->node(*this).requires_grad; }

const Tensor& BackwardContext::input(std::size_t i) const {
  return tape_.nodes_[tape_.nodes_[node_].parents.at(i)].value;
}

const Tensor& BackwardContext::output() const { return tape_.nodes_[node_].value; }

bool BackwardContext::needs_grad(std::size_t i) const {
  return tape_.nodes_[tape_.nodes_[node_].parents.at(i)].requires_grad;
}

Tensor& BackwardContext::adjoint(std::size_t i) {
  const std::size_t parent = tape_.nodes_[node_].parents.at(i);
  if (!tape_.nodes_[parent].requires_grad) {
    throw UsageError("adjoint requested for a node that does not require grad");
  }
  auto& slot = tape_.adjoints_[parent];
  if (!slot) slot.emplace(tape_.nodes_[parent].value.shape(), 0.0);
  return *slot;
}

const Tape::Node& Tape::node(const Var& v) const {
  if (v.tape_ != this || v.id_ >= nodes_.size()) {
    throw UsageError("variable does not belong to this tape");
  }
  return nodes_[v.id_];
}

Var Tape::leaf(Tensor value, bool requires_grad) {
  nodes_.push_back(Node{std::move(value), std::nullopt, requires_grad, {}, {}});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::vector<Var> parents, BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  n.parents.reserve(parents.size());
  for (const Var& p : parents) {
    node(p);
    n.parents.push_back(p.id_);
    n.requires_grad = n.requires_grad || nodes_[p.id_].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

void Tape::backward(const Var& root) {
  const Node& r = node(root);
  if (r.value.size() != 1) {
    throw UsageError("backward requires a scalar root, got shape " +
                     shape_string(r.value.shape()));
  }
  if (!r.requires_grad) return;

  adjoints_.assign(nodes_.size(), std::nullopt);
  adjoints_[root.id_].emplace(r.value.shape(), 1.0);

  for (std::size_t id = root.id_ + 1; id-- > 0;) {
    if (!adjoints_[id]) continue;
    Node& n = nodes_[id];
    if (n.backward) {
      BackwardContext ctx(*this, id);
      n.backward(*adjoints_[id], ctx);
    }
  }
  for (std::size_t id = 0; id <= root.id_; ++id) {
    Node& n = nodes_[id];
    if (!n.requires_grad || !adjoints_[id]) continue;
    if (n.grad) {
      n.grad->add_inplace(*adjoints_[id]);
    } else {
      n.grad = std::move(*adjoints_[id]);
    }
  }
  adjoints_.clear();
}

void Tape::zero_grad() {
  for (Node& n : nodes_) n.grad.reset();
}

}  // namespace ecladts
