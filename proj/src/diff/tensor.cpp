#include "glpge/diff/tensor.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <unordered_set>

#include "glpge/errors.hpp"

namespace glpge::diff {

namespace {

thread_local bool t_grad_enabled = true;
thread_local bool t_meta_mode = false;
thread_local FlopTally* t_tally = nullptr;
thread_local std::string t_scope;  // NOLINT
thread_local KinkTrace* t_kinks = nullptr;

}  // namespace

std::string Shape::str() const {
  std::ostringstream os;
  os << n << "x" << c << "x" << h << "x" << w;
  return os.str();
}

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

MetaModeGuard::MetaModeGuard() : previous_(t_meta_mode) { t_meta_mode = true; }
MetaModeGuard::~MetaModeGuard() { t_meta_mode = previous_; }

bool grad_enabled() { return t_grad_enabled && !t_meta_mode; }
bool meta_mode() { return t_meta_mode; }

FlopTally::FlopTally() : previous_(t_tally) { t_tally = this; }
FlopTally::~FlopTally() { t_tally = previous_; }

void FlopTally::add(const char* op, std::int64_t flops) {
  entries_.push_back({t_scope, op, flops});
}

std::int64_t FlopTally::total() const {
  std::int64_t sum = 0;
  for (const auto& e : entries_) sum += e.flops;
  return sum;
}

std::int64_t FlopTally::total(const std::string& scope) const {
  std::int64_t sum = 0;
  for (const auto& e : entries_)
    if (e.scope == scope) sum += e.flops;
  return sum;
}

FlopScope::FlopScope(std::string name) : previous_(std::move(t_scope)) {
  t_scope = std::move(name);
}
FlopScope::~FlopScope() { t_scope = std::move(previous_); }

void tally_flops(const char* op, std::int64_t flops) {
  if (t_tally != nullptr) t_tally->add(op, flops);
}

KinkTrace::KinkTrace() : previous_(t_kinks) { t_kinks = this; }
KinkTrace::~KinkTrace() { t_kinks = previous_; }

KinkTrace* active_kink_trace() { return t_kinks; }

// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> make_result(Shape shape, const char* op, std::vector<NodePtr<T>> inputs,
                      std::function<void(Node<T>&)> backward) {
  auto node = std::make_shared<Node<T>>();
  node->shape = shape;
  node->op = op;
  if (!t_meta_mode) node->data.resize(shape.numel());
  if (grad_enabled() && any_requires_grad(inputs)) {
    node->requires_grad = true;
    node->inputs = std::move(inputs);
    node->backward = std::move(backward);
  }
  return Tensor<T>(std::move(node));
}

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
  return full(shape, T(0), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::full(Shape shape, T value, bool requires_grad) {
  auto node = std::make_shared<Node<T>>();
  node->shape = shape;
  if (!t_meta_mode) node->data.assign(shape.numel(), value);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

template <typename T>
Tensor<T> Tensor<T>::from(Shape shape, std::vector<T> values, bool requires_grad) {
  if (values.size() != shape.numel())
    throw InvalidShape("tensor data length " + std::to_string(values.size()) +
                       " does not match shape " + shape.str());
  auto node = std::make_shared<Node<T>>();
  node->shape = shape;
  node->data = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T value, bool requires_grad) {
  return full({1, 1, 1, 1}, value, requires_grad);
}

template <typename T>
T Tensor<T>::item() const {
  if (!node_->shape.is_scalar()) throw InvalidShape("item() on non-scalar " + node_->shape.str());
  if (node_->data.empty()) throw InvalidArgument("item() on a shape-only tensor");
  return node_->data[0];
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
  auto node = std::make_shared<Node<T>>();
  node->shape = node_->shape;
  node->data = node_->data;
  node->op = "detach";
  return Tensor(std::move(node));
}

template <typename T>
Tensor<T> Tensor<T>::clone(bool requires_grad) const {
  auto node = std::make_shared<Node<T>>();
  node->shape = node_->shape;
  node->data = node_->data;
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

template <typename T>
void Tensor<T>::backward() const {
  if (!node_->shape.is_scalar())
    throw InvalidArgument("backward() requires a scalar loss, got " + node_->shape.str());
  if (!node_->requires_grad) return;

  // Iterative post-order DFS gives a topological order; walking it backwards
  // visits every node once, after all of its consumers.
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> seen;
  std::vector<std::pair<Node<T>*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node<T>* child = node->inputs[next++].get();
      if (child != nullptr && child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  node_->grad_buffer()[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* node = *it;
    if (node->backward && !node->grad.empty()) node->backward(*node);
  }
}

template <typename T>
std::vector<std::string> collect_op_kinds(const Tensor<T>& root) {
  std::set<std::string> kinds;
  std::unordered_set<const Node<T>*> seen;
  std::vector<const Node<T>*> stack{root.node()};
  while (!stack.empty()) {
    const Node<T>* node = stack.back();
    stack.pop_back();
    if (!seen.insert(node).second) continue;
    kinds.insert(node->op);
    for (const auto& in : node->inputs)
      if (in) stack.push_back(in.get());
  }
  return {kinds.begin(), kinds.end()};
}

template class Tensor<float>;
template class Tensor<double>;
template Tensor<float> make_result(Shape, const char*, std::vector<NodePtr<float>>,
                                   std::function<void(Node<float>&)>);
template Tensor<double> make_result(Shape, const char*, std::vector<NodePtr<double>>,
                                    std::function<void(Node<double>&)>);
template std::vector<std::string> collect_op_kinds(const Tensor<float>&);
template std::vector<std::string> collect_op_kinds(const Tensor<double>&);

}  // namespace glpge::diff
