#include "vqvol/tensor.hpp"

#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace vqvol {

namespace {
thread_local bool g_grad_enabled = true;
}

Index element_count(const Shape& shape) {
  Index n = 1;
  for (Index d : shape) n *= d;
  return n;
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool NoGradGuard::grad_enabled() { return g_grad_enabled; }

template <typename Scalar>
Tensor<Scalar>::Tensor(Shape shape, Vector values, bool requires_grad)
    : node_(std::make_shared<NodeType>()) {
  for (Index d : shape) {
    if (d < 0) throw std::invalid_argument("negative dimension in shape " + to_string(shape));
  }
  if (element_count(shape) != values.size()) {
    throw std::invalid_argument("tensor data length " + std::to_string(values.size()) +
                                " does not match shape " + to_string(shape));
  }
  node_->shape = std::move(shape);
  node_->value = std::move(values);
  node_->requires_grad = requires_grad;
}

template <typename Scalar>
Tensor<Scalar> Tensor<Scalar>::zeros(Shape shape, bool requires_grad) {
  const Index n = element_count(shape);
  return Tensor(std::move(shape), Vector::Zero(n), requires_grad);
}

template <typename Scalar>
Tensor<Scalar> Tensor<Scalar>::filled(Shape shape, Scalar value, bool requires_grad) {
  const Index n = element_count(shape);
  return Tensor(std::move(shape), Vector::Constant(n, value), requires_grad);
}

template <typename Scalar>
Tensor<Scalar> Tensor<Scalar>::scalar(Scalar value, bool requires_grad) {
  return Tensor(Shape{}, Vector::Constant(1, value), requires_grad);
}

template <typename Scalar>
const Shape& Tensor<Scalar>::shape() const {
  if (!node_) throw std::logic_error("use of undefined tensor");
  return node_->shape;
}

template <typename Scalar>
Index Tensor<Scalar>::dim(Index axis) const {
  const Shape& s = shape();
  if (axis < 0) axis += static_cast<Index>(s.size());
  if (axis < 0 || axis >= static_cast<Index>(s.size())) {
    throw std::out_of_range("axis " + std::to_string(axis) + " out of range for shape " +
                            to_string(s));
  }
  return s[static_cast<std::size_t>(axis)];
}

template <typename Scalar>
const typename Tensor<Scalar>::Vector& Tensor<Scalar>::values() const {
  if (!node_) throw std::logic_error("use of undefined tensor");
  return node_->value;
}

template <typename Scalar>
typename Tensor<Scalar>::Vector& Tensor<Scalar>::mutable_values() {
  if (!node_) throw std::logic_error("use of undefined tensor");
  return node_->value;
}

template <typename Scalar>
Scalar Tensor<Scalar>::item() const {
  if (size() != 1) {
    throw std::invalid_argument("item() requires a single-element tensor, got " +
                                to_string(shape()));
  }
  return values()(0);
}

template <typename Scalar>
bool Tensor<Scalar>::requires_grad() const {
  return node_ && node_->requires_grad;
}

template <typename Scalar>
bool Tensor<Scalar>::has_grad() const {
  return node_ && node_->grad.size() != 0;
}

template <typename Scalar>
typename Tensor<Scalar>::Vector Tensor<Scalar>::grad() const {
  if (!node_) throw std::logic_error("use of undefined tensor");
  if (node_->grad.size() == 0) return Vector::Zero(node_->value.size());
  return node_->grad;
}

template <typename Scalar>
void Tensor<Scalar>::zero_grad() {
  if (node_) node_->grad.resize(0);
}

template <typename Scalar>
void Tensor<Scalar>::backward() const {
  if (size() != 1) {
    throw std::invalid_argument("backward() requires a scalar output, got " + to_string(shape()));
  }
  Graph<Scalar> graph(*this);
  graph.backward();
}

template <typename Scalar>
Tensor<Scalar> Tensor<Scalar>::detach() const {
  return Tensor(shape(), values(), false);
}

template <typename Scalar>
Graph<Scalar>::Graph(const Tensor<Scalar>& root) : root_(root.node()) {
  if (!root_) throw std::logic_error("graph of undefined tensor");
  if (!root_->requires_grad) return;

  // Iterative post-order DFS; a node is emitted after all of its inputs.
  std::unordered_set<const detail::Node<Scalar>*> visited;
  std::vector<std::pair<detail::Node<Scalar>*, std::size_t>> stack;
  stack.emplace_back(root_.get(), 0);
  visited.insert(root_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      detail::Node<Scalar>* child = node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) {
        stack.emplace_back(child, 0);
      }
    } else {
      order_.push_back(node);
      stack.pop_back();
    }
  }
}

template <typename Scalar>
Index Graph<Scalar>::backward() {
  if (order_.empty()) return 0;
  root_->accumulate(VectorX<Scalar>::Ones(root_->value.size()));
  Index invoked = 0;
  for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
    detail::Node<Scalar>* node = *it;
    if (node->backward && node->grad.size() != 0) {
      node->backward(*node);
      ++invoked;
    }
  }
  return invoked;
}

namespace detail {

template <typename Scalar>
Tensor<Scalar> make_result(Shape shape, VectorX<Scalar> value,
                           std::vector<std::shared_ptr<Node<Scalar>>> inputs,
                           std::function<void(Node<Scalar>&)> backward, const char* op) {
  auto node = std::make_shared<Node<Scalar>>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->op = op;
  bool needs = false;
  if (NoGradGuard::grad_enabled()) {
    for (const auto& in : inputs) needs = needs || (in && in->requires_grad);
  }
  if (needs) {
    node->requires_grad = true;
    node->inputs = std::move(inputs);
    node->backward = std::move(backward);
  }
  return Tensor<Scalar>(std::move(node));
}

void check_same_shape(const Shape& a, const Shape& b, const char* op) {
  if (a != b) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + to_string(a) + " vs " +
                                to_string(b));
  }
}

template Tensor<float> make_result(Shape, VectorX<float>, std::vector<std::shared_ptr<Node<float>>>,
                                   std::function<void(Node<float>&)>, const char*);
template Tensor<double> make_result(Shape, VectorX<double>,
                                    std::vector<std::shared_ptr<Node<double>>>,
                                    std::function<void(Node<double>&)>, const char*);

}  // namespace detail

template class Tensor<float>;
template class Tensor<double>;
template class Graph<float>;
template class Graph<double>;

}  // namespace vqvol
