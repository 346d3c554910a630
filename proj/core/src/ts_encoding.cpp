#include "okgllm/ts_encoding.hpp"

#include <cmath>

#include "okgllm/errors.hpp"

namespace okgllm {

std::pair<Eigen::VectorXd, RevinStats> revin_normalize(const Eigen::VectorXd& x,
                                                       double eps) {
    if (x.size() == 0) throw ShapeError("revin_normalize: empty series");
    if (eps <= 0.0) throw ConfigError("revin_normalize: eps must be positive");
    RevinStats stats;
    stats.eps = eps;
    stats.mean = x.mean();
    stats.std = std::sqrt((x.array() - stats.mean).square().mean());
    Eigen::VectorXd out = (x.array() - stats.mean) / (stats.std + eps);
    return {out, stats};
}

Eigen::VectorXd revin_denormalize(const Eigen::VectorXd& y, const RevinStats& stats) {
    return (y.array() * (stats.std + stats.eps) + stats.mean).matrix();
}

PatchSet patchify(const Eigen::VectorXd& x, int patch_length, int stride) {
    Eigen::Index T = x.size();
    if (patch_length < 1 || patch_length > T)
        throw ConfigError("patchify: patch length must be in [1, T]");
    if (stride < 1) throw ConfigError("patchify: stride must be >= 1");

    int P = static_cast<int>((T - patch_length) / stride) + 2;

    // End-replication padding: the padded series extends x with `stride`
    // copies of x[T-1], which is exactly enough for the extra window.
    auto padded = [&](Eigen::Index i) { return i < T ? x(i) : x(T - 1); };

    PatchSet set;
    set.patch_length = patch_length;
    set.stride = stride;
    set.patches.resize(P, patch_length);
    for (int p = 0; p < P; ++p) {
        Eigen::Index start = static_cast<Eigen::Index>(p) * stride;
        for (int j = 0; j < patch_length; ++j)
            set.patches(p, j) = padded(start + j);
    }
    return set;
}

PatchEncoder::PatchEncoder(int patch_length, int d_m, int hidden,
                           std::mt19937_64& rng)
    : patch_length_(patch_length), d_m_(d_m) {
    if (patch_length < 1 || d_m < 1)
        throw ConfigError("patch encoder: dimensions must be positive");
    int d_h = hidden > 0 ? hidden : 2 * d_m;

    auto init = [&rng](Eigen::Index r, Eigen::Index c) {
        double bound = std::sqrt(6.0 / static_cast<double>(r + c));
        std::uniform_real_distribution<double> dist(-bound, bound);
        Eigen::MatrixXd m(r, c);
        for (Eigen::Index i = 0; i < r; ++i)
            for (Eigen::Index j = 0; j < c; ++j) m(i, j) = dist(rng);
        return m;
    };

    w1_ = ad::parameter(init(patch_length, d_h));
    b1_ = ad::parameter(Eigen::MatrixXd::Zero(1, d_h));
    w2_ = ad::parameter(init(d_h, d_m));
    b2_ = ad::parameter(Eigen::MatrixXd::Zero(1, d_m));
}

ad::Var PatchEncoder::forward(const ad::Var& patches) const {
    if (patches->value.cols() != patch_length_)
        throw ShapeError("patch encoder: expected " + std::to_string(patch_length_) +
                         " columns, got " + std::to_string(patches->value.cols()));
    ad::Var h = ad::relu(ad::add_rowvec(ad::matmul(patches, w1_), b1_));
    return ad::add_rowvec(ad::matmul(h, w2_), b2_);
}

Eigen::MatrixXd PatchEncoder::forward_values(const Eigen::MatrixXd& patches) const {
    return forward(ad::constant(patches))->value;
}

}  // namespace okgllm
