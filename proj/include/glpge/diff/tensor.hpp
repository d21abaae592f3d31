#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace glpge::diff {

/// Extents of an N x C x H x W tensor. Scalars are 1x1x1x1.
struct Shape {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  [[nodiscard]] std::size_t numel() const {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  [[nodiscard]] std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  [[nodiscard]] bool is_scalar() const { return n == 1 && c == 1 && h == 1 && w == 1; }
  [[nodiscard]] std::string str() const;

  friend bool operator==(const Shape&, const Shape&) = default;
};

template <typename T>
struct Node;

template <typename T>
using NodePtr = std::shared_ptr<Node<T>>;

/// One vertex of the recorded graph. Leaves (parameters, inputs) have no
/// backward rule; op outputs keep their inputs alive until the output dies.
template <typename T>
struct Node {
  Shape shape;
  std::vector<T> data;  // empty in meta (shape-only) mode
  std::vector<T> grad;  // empty until something accumulates into it
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<NodePtr<T>> inputs;
  std::function<void(Node&)> backward;

  T* grad_buffer() {
    if (grad.empty()) grad.assign(data.size(), T(0));
    return grad.data();
  }
};

/// Shared handle to a graph node.
template <typename T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(NodePtr<T> node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, T value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<T> values, bool requires_grad = false);
  static Tensor scalar(T value, bool requires_grad = false);

  [[nodiscard]] bool defined() const { return node_ != nullptr; }
  [[nodiscard]] const Shape& shape() const { return node_->shape; }
  [[nodiscard]] std::size_t numel() const { return node_->shape.numel(); }
  [[nodiscard]] bool is_meta() const { return node_->data.empty() && numel() != 0; }

  [[nodiscard]] std::span<const T> data() const { return node_->data; }
  /// Writable view; only legitimate on leaves (parameters, freshly built inputs).
  [[nodiscard]] std::span<T> mutable_data() { return node_->data; }
  [[nodiscard]] std::span<const T> grad() const { return node_->grad; }
  [[nodiscard]] bool has_grad() const { return !node_->grad.empty(); }

  [[nodiscard]] bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool flag) { node_->requires_grad = flag; }
  void zero_grad() { node_->grad.clear(); }

  [[nodiscard]] T item() const;
  [[nodiscard]] T at(int n, int c, int h, int w) const {
    const Shape& s = node_->shape;
    return node_->data[((static_cast<std::size_t>(n) * s.c + c) * s.h + h) * s.w + w];
  }
  [[nodiscard]] const char* op() const { return node_->op; }

  /// Same values, cut from the graph.
  [[nodiscard]] Tensor detach() const;
  /// Deep copy of the values into a fresh leaf.
  [[nodiscard]] Tensor clone(bool requires_grad = false) const;

  /// Reverse-mode sweep from a scalar; accumulates into every reachable
  /// requires_grad leaf. Existing leaf gradients are added to, not replaced.
  void backward() const;

  [[nodiscard]] Node<T>* node() const { return node_.get(); }
  [[nodiscard]] const NodePtr<T>& node_ptr() const { return node_; }

 private:
  NodePtr<T> node_;
};

/// Distinct op kinds reachable from `root` (including leaves).
template <typename T>
std::vector<std::string> collect_op_kinds(const Tensor<T>& root);

// ---------------------------------------------------------------------------
// Thread-local execution modes.

/// Disables graph recording while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Shape-only execution: ops validate and propagate extents, tally FLOPs and
/// allocate nothing. Used for analytic FLOP accounting at any resolution.
class MetaModeGuard {
 public:
  MetaModeGuard();
  ~MetaModeGuard();
  MetaModeGuard(const MetaModeGuard&) = delete;
  MetaModeGuard& operator=(const MetaModeGuard&) = delete;

 private:
  bool previous_;
};

[[nodiscard]] bool grad_enabled();
[[nodiscard]] bool meta_mode();

/// One op invocation as seen by the FLOP tally.
struct FlopEntry {
  std::string scope;
  std::string op;
  std::int64_t flops = 0;
};

/// Collects FLOPs of every op executed on this thread while installed.
/// conv: 2*k*k*Cin*Cout*Hout*Wout*N; linear: 2*in*out*N; everything else:
/// one op per output element.
class FlopTally {
 public:
  FlopTally();
  ~FlopTally();
  FlopTally(const FlopTally&) = delete;
  FlopTally& operator=(const FlopTally&) = delete;

  void add(const char* op, std::int64_t flops);
  [[nodiscard]] const std::vector<FlopEntry>& entries() const { return entries_; }
  [[nodiscard]] std::int64_t total() const;
  [[nodiscard]] std::int64_t total(const std::string& scope) const;

 private:
  std::vector<FlopEntry> entries_;
  FlopTally* previous_;
};

/// Labels FLOPs recorded while alive (innermost scope wins).
class FlopScope {
 public:
  explicit FlopScope(std::string name);
  ~FlopScope();
  FlopScope(const FlopScope&) = delete;
  FlopScope& operator=(const FlopScope&) = delete;

 private:
  std::string previous_;
};

void tally_flops(const char* op, std::int64_t flops);

/// Fingerprint of the branch taken at every non-smooth point (relu sign,
/// clamp side, max-pool argmax, |x| sign) while installed. Two evaluations
/// with equal traces lie on the same smooth piece of the function.
class KinkTrace {
 public:
  KinkTrace();
  ~KinkTrace();
  KinkTrace(const KinkTrace&) = delete;
  KinkTrace& operator=(const KinkTrace&) = delete;

  void note(std::uint64_t branch) {
    hash_ = (hash_ ^ branch) * 0x100000001B3ULL;
  }
  [[nodiscard]] std::uint64_t hash() const { return hash_; }

 private:
  std::uint64_t hash_ = 0xCBF29CE484222325ULL;
  KinkTrace* previous_;
};

/// Active kink trace on this thread or nullptr.
KinkTrace* active_kink_trace();

// ---------------------------------------------------------------------------
// Op construction helper used by every differentiable op.

/// Creates an op output. In meta mode the data buffer stays empty. The graph
/// edge is recorded only when grad mode is on and some input requires grad.
template <typename T>
Tensor<T> make_result(Shape shape, const char* op, std::vector<NodePtr<T>> inputs,
                      std::function<void(Node<T>&)> backward);

template <typename T>
bool any_requires_grad(const std::vector<NodePtr<T>>& inputs) {
  for (const auto& in : inputs)
    if (in && in->requires_grad) return true;
  return false;
}

}  // namespace glpge::diff
