#pragma once
// Reverse-mode automatic differentiation over dense double matrices.
//
// A forward pass builds a DAG of Node objects; backward() seeds the loss
// gradient and walks the graph in reverse topological order. Parameter nodes
// are long-lived and reused across graph builds; every other node is created
// fresh each forward pass. Frozen modules are expressed as parameter nodes
// with requires_grad = false: gradients still flow *through* them to upstream
// trainable parameters, but nothing accumulates into the frozen values.

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace okgllm::ad {

using Matrix = Eigen::MatrixXd;

class Node;
using Var = std::shared_ptr<Node>;

class Node {
public:
    Matrix value;
    Matrix grad;  // same shape as value; valid during/after backward()
    bool requires_grad = false;
    std::vector<Var> parents;
    std::function<void()> backprop;  // pulls this->grad into parents' grads

    explicit Node(Matrix v) : value(std::move(v)) {}

    void ensure_grad() {
        if (grad.rows() != value.rows() || grad.cols() != value.cols())
            grad = Matrix::Zero(value.rows(), value.cols());
    }
    void zero_grad() { grad = Matrix::Zero(value.rows(), value.cols()); }
};

Var constant(Matrix v);
Var parameter(Matrix v);  // requires_grad = true

// Elementwise / structural ops
Var add(const Var& a, const Var& b);           // same shape
Var add_rowvec(const Var& a, const Var& b);    // b is 1 x cols, broadcast over rows
Var sub(const Var& a, const Var& b);
Var cmul(const Var& a, const Var& b);          // Hadamard
Var scalar_mul(const Var& a, double s);
Var relu(const Var& a);
Var transpose(const Var& a);
Var matmul(const Var& a, const Var& b);
Var vcat(const Var& a, const Var& b);          // stack rows
Var hcat(const Var& a, const Var& b);          // stack cols
Var rows(const Var& a, Eigen::Index start, Eigen::Index count);

// Row-wise softmax. `additive_mask`, when given, is added to the logits first
// (use large negative entries to exclude keys).
Var softmax_rows(const Var& a, const Matrix* additive_mask = nullptr);

// Row-wise layer normalization with learnable 1 x cols affine parameters.
// Population variance; `eps` stabilizes constant rows.
Var layernorm_rows(const Var& a, const Var& gamma, const Var& beta,
                   double eps = 1e-6);

// Reductions to 1x1 scalars
Var sum(const Var& a);
Var mean_abs(const Var& a);  // mean |a_ij|; subgradient 0 at exact zeros

inline double scalar(const Var& a) { return a->value(0, 0); }

// Seeds d(loss)/d(loss) = 1 and accumulates gradients through the graph.
// `loss` must be 1x1.
void backward(const Var& loss);

// Adam with optional external learning-rate override per step.
class Adam {
public:
    Adam(std::vector<Var> params, double lr, double beta1 = 0.9,
         double beta2 = 0.999, double eps = 1e-8);

    void zero_grad();
    void step();
    void set_lr(double lr) { lr_ = lr; }
    double lr() const { return lr_; }
    const std::vector<Var>& params() const { return params_; }

private:
    std::vector<Var> params_;
    std::vector<Matrix> m_, v_;
    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
};

}  // namespace okgllm::ad
