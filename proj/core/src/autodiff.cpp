#include "okgllm/autodiff.hpp"

#include <unordered_set>

#include "okgllm/errors.hpp"

namespace okgllm::ad {

namespace {

Var make(Matrix v, std::vector<Var> parents) {
    auto n = std::make_shared<Node>(std::move(v));
    n->parents = std::move(parents);
    for (const auto& p : n->parents)
        if (p->requires_grad) n->requires_grad = true;
    return n;
}

void check_same_shape(const Var& a, const Var& b, const char* op) {
    if (a->value.rows() != b->value.rows() || a->value.cols() != b->value.cols())
        throw ShapeError(std::string(op) + ": shape mismatch (" +
                         std::to_string(a->value.rows()) + "x" +
                         std::to_string(a->value.cols()) + " vs " +
                         std::to_string(b->value.rows()) + "x" +
                         std::to_string(b->value.cols()) + ")");
}

}  // namespace

Var constant(Matrix v) { return std::make_shared<Node>(std::move(v)); }

Var parameter(Matrix v) {
    auto n = std::make_shared<Node>(std::move(v));
    n->requires_grad = true;
    return n;
}

Var add(const Var& a, const Var& b) {
    check_same_shape(a, b, "add");
    auto out = make(a->value + b->value, {a, b});
    Node* o = out.get();
    out->backprop = [o] {
        if (o->parents[0]->requires_grad) o->parents[0]->grad += o->grad;
        if (o->parents[1]->requires_grad) o->parents[1]->grad += o->grad;
    };
    return out;
}

Var add_rowvec(const Var& a, const Var& b) {
    if (b->value.rows() != 1 || b->value.cols() != a->value.cols())
        throw ShapeError("add_rowvec: bias must be 1 x cols");
    auto out = make(a->value.rowwise() + b->value.row(0), {a, b});
    Node* o = out.get();
    out->backprop = [o] {
        if (o->parents[0]->requires_grad) o->parents[0]->grad += o->grad;
        if (o->parents[1]->requires_grad)
            o->parents[1]->grad.row(0) += o->grad.colwise().sum();
    };
    return out;
}

Var sub(const Var& a, const Var& b) {
    check_same_shape(a, b, "sub");
    auto out = make(a->value - b->value, {a, b});
    Node* o = out.get();
    out->backprop = [o] {
        if (o->parents[0]->requires_grad) o->parents[0]->grad += o->grad;
        if (o->parents[1]->requires_grad) o->parents[1]->grad -= o->grad;
    };
    return out;
}

Var cmul(const Var& a, const Var& b) {
    check_same_shape(a, b, "cmul");
    auto out = make(a->value.cwiseProduct(b->value), {a, b});
    Node* o = out.get();
    out->backprop = [o] {
        if (o->parents[0]->requires_grad)
            o->parents[0]->grad += o->grad.cwiseProduct(o->parents[1]->value);
        if (o->parents[1]->requires_grad)
            o->parents[1]->grad += o->grad.cwiseProduct(o->parents[0]->value);
    };
    return out;
}

Var scalar_mul(const Var& a, double s) {
    auto out = make(a->value * s, {a});
    Node* o = out.get();
    out->backprop = [o, s] {
        if (o->parents[0]->requires_grad) o->parents[0]->grad += o->grad * s;
    };
    return out;
}

Var relu(const Var& a) {
    auto out = make(a->value.cwiseMax(0.0), {a});
    Node* o = out.get();
    out->backprop = [o] {
        if (!o->parents[0]->requires_grad) return;
        const Matrix& x = o->parents[0]->value;
        o->parents[0]->grad +=
            o->grad.cwiseProduct((x.array() > 0.0).cast<double>().matrix());
    };
    return out;
}

Var transpose(const Var& a) {
    auto out = make(a->value.transpose(), {a});
    Node* o = out.get();
    out->backprop = [o] {
        if (o->parents[0]->requires_grad)
            o->parents[0]->grad += o->grad.transpose();
    };
    return out;
}

Var matmul(const Var& a, const Var& b) {
    if (a->value.cols() != b->value.rows())
        throw ShapeError("matmul: inner dimensions differ (" +
                         std::to_string(a->value.cols()) + " vs " +
                         std::to_string(b->value.rows()) + ")");
    auto out = make(a->value * b->value, {a, b});
    Node* o = out.get();
    out->backprop = [o] {
        if (o->parents[0]->requires_grad)
            o->parents[0]->grad += o->grad * o->parents[1]->value.transpose();
        if (o->parents[1]->requires_grad)
            o->parents[1]->grad += o->parents[0]->value.transpose() * o->grad;
    };
    return out;
}

Var vcat(const Var& a, const Var& b) {
    if (a->value.cols() != b->value.cols())
        throw ShapeError("vcat: column counts differ");
    Matrix v(a->value.rows() + b->value.rows(), a->value.cols());
    v << a->value, b->value;
    auto out = make(std::move(v), {a, b});
    Node* o = out.get();
    out->backprop = [o] {
        Eigen::Index ra = o->parents[0]->value.rows();
        if (o->parents[0]->requires_grad)
            o->parents[0]->grad += o->grad.topRows(ra);
        if (o->parents[1]->requires_grad)
            o->parents[1]->grad += o->grad.bottomRows(o->grad.rows() - ra);
    };
    return out;
}

Var hcat(const Var& a, const Var& b) {
    if (a->value.rows() != b->value.rows())
        throw ShapeError("hcat: row counts differ");
    Matrix v(a->value.rows(), a->value.cols() + b->value.cols());
    v << a->value, b->value;
    auto out = make(std::move(v), {a, b});
    Node* o = out.get();
    out->backprop = [o] {
        Eigen::Index ca = o->parents[0]->value.cols();
        if (o->parents[0]->requires_grad)
            o->parents[0]->grad += o->grad.leftCols(ca);
        if (o->parents[1]->requires_grad)
            o->parents[1]->grad += o->grad.rightCols(o->grad.cols() - ca);
    };
    return out;
}

Var rows(const Var& a, Eigen::Index start, Eigen::Index count) {
    if (start < 0 || count < 0 || start + count > a->value.rows())
        throw ShapeError("rows: slice out of range");
    auto out = make(a->value.middleRows(start, count), {a});
    Node* o = out.get();
    out->backprop = [o, start, count] {
        if (o->parents[0]->requires_grad)
            o->parents[0]->grad.middleRows(start, count) += o->grad;
    };
    return out;
}

Var softmax_rows(const Var& a, const Matrix* additive_mask) {
    Matrix logits = a->value;
    if (additive_mask) {
        if (additive_mask->rows() != logits.rows() ||
            additive_mask->cols() != logits.cols())
            throw ShapeError("softmax_rows: mask shape mismatch");
        logits += *additive_mask;
    }
    Matrix y(logits.rows(), logits.cols());
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        double mx = logits.row(i).maxCoeff();
        Eigen::ArrayXd e = (logits.row(i).array() - mx).exp();
        y.row(i) = (e / e.sum()).matrix();
    }
    auto out = make(std::move(y), {a});
    Node* o = out.get();
    out->backprop = [o] {
        if (!o->parents[0]->requires_grad) return;
        const Matrix& y = o->value;
        for (Eigen::Index i = 0; i < y.rows(); ++i) {
            double dot = o->grad.row(i).dot(y.row(i));
            o->parents[0]->grad.row(i) +=
                (y.row(i).array() * (o->grad.row(i).array() - dot)).matrix();
        }
    };
    return out;
}

Var layernorm_rows(const Var& a, const Var& gamma, const Var& beta, double eps) {
    Eigen::Index cols = a->value.cols();
    if (gamma->value.rows() != 1 || gamma->value.cols() != cols ||
        beta->value.rows() != 1 || beta->value.cols() != cols)
        throw ShapeError("layernorm_rows: affine params must be 1 x cols");

    Matrix xhat(a->value.rows(), cols);
    Eigen::VectorXd inv_sigma(a->value.rows());
    for (Eigen::Index i = 0; i < a->value.rows(); ++i) {
        double mu = a->value.row(i).mean();
        double var = (a->value.row(i).array() - mu).square().mean();
        double is = 1.0 / std::sqrt(var + eps);
        inv_sigma(i) = is;
        xhat.row(i) = ((a->value.row(i).array() - mu) * is).matrix();
    }
    Matrix y = (xhat.array().rowwise() * gamma->value.row(0).array()).matrix();
    y.rowwise() += beta->value.row(0);

    auto out = make(std::move(y), {a, gamma, beta});
    Node* o = out.get();
    auto xhat_p = std::make_shared<Matrix>(std::move(xhat));
    auto is_p = std::make_shared<Eigen::VectorXd>(std::move(inv_sigma));
    out->backprop = [o, xhat_p, is_p] {
        Node* x = o->parents[0].get();
        Node* g = o->parents[1].get();
        Node* b = o->parents[2].get();
        const Matrix& xh = *xhat_p;
        if (b->requires_grad) b->grad.row(0) += o->grad.colwise().sum();
        if (g->requires_grad)
            g->grad.row(0) += o->grad.cwiseProduct(xh).colwise().sum();
        if (x->requires_grad) {
            Eigen::Index n = xh.cols();
            for (Eigen::Index i = 0; i < xh.rows(); ++i) {
                Eigen::ArrayXd dxhat =
                    o->grad.row(i).array() * g->value.row(0).array();
                double m1 = dxhat.mean();
                double m2 = (dxhat * xh.row(i).transpose().array()).mean();
                x->grad.row(i) +=
                    ((*is_p)(i) *
                     (dxhat - m1 - xh.row(i).transpose().array() * m2))
                        .matrix()
                        .transpose();
                (void)n;
            }
        }
    };
    return out;
}

Var sum(const Var& a) {
    Matrix v(1, 1);
    v(0, 0) = a->value.sum();
    auto out = make(std::move(v), {a});
    Node* o = out.get();
    out->backprop = [o] {
        if (o->parents[0]->requires_grad)
            o->parents[0]->grad.array() += o->grad(0, 0);
    };
    return out;
}

Var mean_abs(const Var& a) {
    double n = static_cast<double>(a->value.size());
    Matrix v(1, 1);
    v(0, 0) = a->value.array().abs().mean();
    auto out = make(std::move(v), {a});
    Node* o = out.get();
    out->backprop = [o, n] {
        if (!o->parents[0]->requires_grad) return;
        const Matrix& x = o->parents[0]->value;
        o->parents[0]->grad +=
            (o->grad(0, 0) / n) * x.array().sign().matrix();
    };
    return out;
}

void backward(const Var& loss) {
    if (loss->value.rows() != 1 || loss->value.cols() != 1)
        throw ShapeError("backward: loss must be 1x1");

    // Iterative DFS to get reverse topological order.
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack{{loss.get(), 0}};
    visited.insert(loss.get());
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->parents.size()) {
            Node* p = node->parents[idx++].get();
            if (visited.insert(p).second) stack.push_back({p, 0});
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    for (Node* n : order) n->ensure_grad();
    loss->grad(0, 0) = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it)
        if ((*it)->backprop && (*it)->requires_grad) (*it)->backprop();
}

Adam::Adam(std::vector<Var> params, double lr, double beta1, double beta2,
           double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (const auto& p : params_) {
        m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
        v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    }
}

void Adam::zero_grad() {
    for (auto& p : params_) p->zero_grad();
}

void Adam::step() {
    ++t_;
    double bc1 = 1.0 - std::pow(beta1_, t_);
    double bc2 = 1.0 - std::pow(beta2_, t_);
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Node& p = *params_[i];
        p.ensure_grad();
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * p.grad;
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * p.grad.cwiseProduct(p.grad);
        Matrix mhat = m_[i] / bc1;
        Matrix vhat = v_[i] / bc2;
        p.value.array() -=
            lr_ * mhat.array() / (vhat.array().sqrt() + eps_);
    }
}

}  // namespace okgllm::ad
