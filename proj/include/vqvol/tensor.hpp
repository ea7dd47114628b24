#pragma once

#include <Eigen/Core>

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace vqvol {

using Index = Eigen::Index;
using Shape = std::vector<Index>;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using RowMatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Index element_count(const Shape& shape);
std::string to_string(const Shape& shape);

namespace detail {

template <typename Scalar>
struct Node {
  Shape shape;
  VectorX<Scalar> value;
  // Empty until the first gradient contribution arrives.
  VectorX<Scalar> grad;
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  // Reads self.grad and accumulates into the input nodes.
  std::function<void(Node& self)> backward;

  template <typename Expr>
  void accumulate(const Expr& g) {
    if (!requires_grad) return;
    if (grad.size() == 0) {
      grad = g;
    } else {
      grad += g;
    }
  }
};

}  // namespace detail

/// Thread-local switch that disables graph recording (evaluation passes).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

  static bool grad_enabled();

 private:
  bool previous_;
};

/// Dense tensor with reverse-mode differentiation, channels-first.
///
/// A Tensor is a cheap handle onto a shared graph node. Values are immutable
/// once created except through mutable_values(), which is reserved for
/// initializers and the optimizer.
template <typename Scalar>
class Tensor {
 public:
  using Vector = VectorX<Scalar>;
  using NodeType = detail::Node<Scalar>;

  Tensor() = default;
  Tensor(Shape shape, Vector values, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor filled(Shape shape, Scalar value, bool requires_grad = false);
  static Tensor scalar(Scalar value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  Index rank() const { return static_cast<Index>(shape().size()); }
  Index dim(Index axis) const;
  Index size() const { return values().size(); }

  const Vector& values() const;
  Vector& mutable_values();
  Scalar item() const;

  bool requires_grad() const;
  bool has_grad() const;
  /// Gradient buffer; zeros of matching size when nothing has been accumulated.
  Vector grad() const;
  void zero_grad();

  /// Seeds d(self)/d(self) = 1 and runs reverse-mode over the recorded graph.
  void backward() const;

  /// Copy of the values as a fresh leaf without gradient tracking.
  Tensor detach() const;

  const std::shared_ptr<NodeType>& node() const { return node_; }
  explicit Tensor(std::shared_ptr<NodeType> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<NodeType> node_;
};

/// Topologically ordered view of the nodes reachable from a root that
/// participate in differentiation.
template <typename Scalar>
class Graph {
 public:
  explicit Graph(const Tensor<Scalar>& root);

  Index size() const { return static_cast<Index>(order_.size()); }
  /// Inputs precede outputs.
  const std::vector<detail::Node<Scalar>*>& order() const { return order_; }
  /// Visits nodes in reverse topological order, each exactly once.
  /// Returns the number of backward rules invoked.
  Index backward();

 private:
  std::shared_ptr<detail::Node<Scalar>> root_;
  std::vector<detail::Node<Scalar>*> order_;
};

namespace detail {

/// Creates an op result. Graph edges and the backward rule are kept only when
/// recording is enabled and at least one input requires a gradient.
template <typename Scalar>
Tensor<Scalar> make_result(Shape shape, VectorX<Scalar> value,
                           std::vector<std::shared_ptr<Node<Scalar>>> inputs,
                           std::function<void(Node<Scalar>&)> backward, const char* op);

void check_same_shape(const Shape& a, const Shape& b, const char* op);

}  // namespace detail

extern template class Tensor<float>;
extern template class Tensor<double>;
extern template class Graph<float>;
extern template class Graph<double>;

}  // namespace vqvol
