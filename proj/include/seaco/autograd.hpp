#ifndef SEACO_AUTOGRAD_HPP
#define SEACO_AUTOGRAD_HPP

#include <functional>
#include <memory>
#include <vector>

#include "seaco/tensor.hpp"

namespace seaco::ag {

struct Node;
using NodePtr = std::shared_ptr<Node>;

// Reverse-mode tape node. Ops build a DAG; backward() walks it in reverse
// topological order. Nodes that do not require gradients carry no parents.
struct Node {
    Tensor value;
    Tensor grad;  // lazily allocated, same shape as value
    bool requires_grad = false;
    std::vector<NodePtr> parents;
    std::function<void(Node&)> backprop;

    void ensure_grad() {
        if (grad.data.empty() && !value.data.empty()) grad = Tensor(value.shape);
    }
};

bool grad_enabled();

// Disables graph recording within a scope (first-pass decoding, inference).
struct NoGradGuard {
    NoGradGuard();
    ~NoGradGuard();
    bool prev;
};

NodePtr constant(Tensor v);
NodePtr leaf(Tensor v, bool requires_grad = true);
// Custom-op factory: records parents/backprop only when gradients are being
// tracked and some parent requires them.
NodePtr make_op(Tensor value, std::vector<NodePtr> parents,
                std::function<void(Node&)> back);

// Matrix products, 2-D only. matmul_nt computes a * b^T.
NodePtr matmul(const NodePtr& a, const NodePtr& b);
NodePtr matmul_nt(const NodePtr& a, const NodePtr& b);

NodePtr add(const NodePtr& a, const NodePtr& b);
NodePtr sub(const NodePtr& a, const NodePtr& b);
NodePtr mul(const NodePtr& a, const NodePtr& b);
NodePtr scale(const NodePtr& a, double c);
NodePtr add_const(const NodePtr& a, double c);
// x is R x C, bias is a length-C vector (shape (C) or (1,C)) added to every row.
NodePtr add_rowwise(const NodePtr& x, const NodePtr& bias);

NodePtr sigmoid(const NodePtr& x);
NodePtr tanh_(const NodePtr& x);
NodePtr relu(const NodePtr& x);
NodePtr abs_(const NodePtr& x);

// Row-wise softmax over the last axis of a 2-D tensor, max-stabilized.
NodePtr softmax_rows(const NodePtr& x);

// Per-row layer normalization with learned gain/bias vectors.
NodePtr layer_norm(const NodePtr& x, const NodePtr& gamma, const NodePtr& beta,
                   double eps = 1e-6);

NodePtr cols(const NodePtr& x, size_t start, size_t n);
NodePtr rows_range(const NodePtr& x, size_t start, size_t n);
NodePtr concat_cols(const std::vector<NodePtr>& parts);
NodePtr concat_rows(const std::vector<NodePtr>& parts);
NodePtr gather_rows(const NodePtr& table, const std::vector<int>& ids);
// Copy of base with base[positions[i]] replaced by src row i.
NodePtr scatter_rows(const NodePtr& base, const NodePtr& src,
                     const std::vector<size_t>& positions);

NodePtr sum_all(const NodePtr& x);
NodePtr mean_all(const NodePtr& x);

// Mean negative log-likelihood over non-ignored positions; logits is L x V.
// All positions ignored yields a zero-valued, zero-gradient scalar.
NodePtr cross_entropy_logits(const NodePtr& logits, const std::vector<int>& targets,
                             int ignore_index = -1);

// Seeds root's grad with ones and accumulates into every reachable node
// that requires a gradient.
void backward(const NodePtr& root);

namespace detail {
// C += op(A) * op(B); shapes validated by callers.
void gemm_nn(const Tensor& a, const Tensor& b, Tensor& c);
void gemm_nt(const Tensor& a, const Tensor& b, Tensor& c);
void gemm_tn(const Tensor& a, const Tensor& b, Tensor& c);
}  // namespace detail

}  // namespace seaco::ag

#endif
