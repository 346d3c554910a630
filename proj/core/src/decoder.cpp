#include "okgllm/decoder.hpp"

#include <cmath>

#include "okgllm/errors.hpp"

namespace okgllm {

namespace {

constexpr double kMaskedLogit = -1e30;

Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng,
                              double scale) {
    std::normal_distribution<double> dist(0.0, scale);
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = dist(rng);
    return m;
}

Eigen::MatrixXd causal_mask(Eigen::Index len,
                            const std::vector<std::uint8_t>& valid) {
    Eigen::MatrixXd mask = Eigen::MatrixXd::Zero(len, len);
    for (Eigen::Index i = 0; i < len; ++i)
        for (Eigen::Index j = 0; j < len; ++j)
            if (j > i || !valid[static_cast<std::size_t>(j)])
                mask(i, j) = kMaskedLogit;
    for (Eigen::Index i = 0; i < len; ++i)
        if (!valid[static_cast<std::size_t>(i)]) mask(i, i) = 0.0;
    return mask;
}

}  // namespace

DecoderParams::DecoderParams(int dim, int heads, int n_layers, std::mt19937_64& rng)
    : dim(dim), heads(heads) {
    if (dim < 1 || heads < 1 || n_layers < 1)
        throw ConfigError("decoder: dim/heads/layers must be positive");
    if (dim % heads != 0)
        throw ConfigError("decoder: model dimension " + std::to_string(dim) +
                          " not divisible by head count " + std::to_string(heads));
    int head_dim = dim / heads;
    int ff = 2 * dim;
    double ws = 1.0 / std::sqrt(static_cast<double>(dim));
    for (int l = 0; l < n_layers; ++l) {
        DecoderLayerParams blk;
        for (int h = 0; h < heads; ++h) {
            blk.w_q.push_back(ad::parameter(random_matrix(dim, head_dim, rng, ws)));
            blk.w_k.push_back(ad::parameter(random_matrix(dim, head_dim, rng, ws)));
            blk.w_v.push_back(ad::parameter(random_matrix(dim, head_dim, rng, ws)));
        }
        blk.w_o = ad::parameter(random_matrix(dim, dim, rng, ws));
        blk.ln1_g = ad::parameter(Eigen::MatrixXd::Ones(1, dim));
        blk.ln1_b = ad::parameter(Eigen::MatrixXd::Zero(1, dim));
        blk.ln2_g = ad::parameter(Eigen::MatrixXd::Ones(1, dim));
        blk.ln2_b = ad::parameter(Eigen::MatrixXd::Zero(1, dim));
        blk.ff_w1 = ad::parameter(random_matrix(dim, ff, rng, ws));
        blk.ff_b1 = ad::parameter(Eigen::MatrixXd::Zero(1, ff));
        blk.ff_w2 = ad::parameter(random_matrix(ff, dim, rng, 1.0 / std::sqrt(ff)));
        blk.ff_b2 = ad::parameter(Eigen::MatrixXd::Zero(1, dim));
        layers.push_back(std::move(blk));
    }
}

std::vector<ad::Var> DecoderParams::params() const {
    std::vector<ad::Var> out;
    for (const auto& blk : layers) {
        for (const auto& p : blk.w_q) out.push_back(p);
        for (const auto& p : blk.w_k) out.push_back(p);
        for (const auto& p : blk.w_v) out.push_back(p);
        for (const auto& p : {blk.w_o, blk.ln1_g, blk.ln1_b, blk.ln2_g, blk.ln2_b,
                              blk.ff_w1, blk.ff_b1, blk.ff_w2, blk.ff_b2})
            out.push_back(p);
    }
    return out;
}

std::size_t DecoderParams::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params()) n += static_cast<std::size_t>(p->value.size());
    return n;
}

DecodeAttention decode(const ad::Var& hidden,
                       const std::vector<std::uint8_t>& valid,
                       const DecoderParams& params) {
    Eigen::Index len = hidden->value.rows();
    if (hidden->value.cols() != params.dim)
        throw ShapeError("decode: expected dimension " + std::to_string(params.dim));
    if (valid.size() != static_cast<std::size_t>(len))
        throw ShapeError("decode: mask length mismatch");

    Eigen::MatrixXd mask = causal_mask(len, valid);
    double scale = 1.0 / std::sqrt(static_cast<double>(params.dim / params.heads));

    DecodeAttention result;
    ad::Var x = hidden;
    bool first_layer = true;
    for (const auto& blk : params.layers) {
        ad::Var h = ad::layernorm_rows(x, blk.ln1_g, blk.ln1_b);
        ad::Var heads_out;
        for (int hd = 0; hd < params.heads; ++hd) {
            ad::Var q = ad::matmul(h, blk.w_q[static_cast<std::size_t>(hd)]);
            ad::Var k = ad::matmul(h, blk.w_k[static_cast<std::size_t>(hd)]);
            ad::Var v = ad::matmul(h, blk.w_v[static_cast<std::size_t>(hd)]);
            ad::Var attn = ad::softmax_rows(
                ad::scalar_mul(ad::matmul(q, ad::transpose(k)), scale), &mask);
            if (first_layer) result.first_layer_weights.push_back(attn);
            ad::Var out = ad::matmul(attn, v);
            heads_out = heads_out ? ad::hcat(heads_out, out) : out;
        }
        x = ad::add(x, ad::matmul(heads_out, blk.w_o));
        ad::Var h2 = ad::layernorm_rows(x, blk.ln2_g, blk.ln2_b);
        ad::Var ff = ad::add_rowvec(
            ad::matmul(ad::relu(ad::add_rowvec(ad::matmul(h2, blk.ff_w1), blk.ff_b1)),
                       blk.ff_w2),
            blk.ff_b2);
        x = ad::add(x, ff);
        first_layer = false;
    }
    result.output = x;
    return result;
}

ProjectionHead::ProjectionHead(int dim, int tau, std::mt19937_64& rng) {
    if (tau < 1) throw ConfigError("projection head: horizon must be >= 1");
    w = ad::parameter(random_matrix(dim, tau, rng, 1.0 / std::sqrt(dim)));
    b = ad::parameter(Eigen::MatrixXd::Zero(1, tau));
}

ad::Var project_normalized(const ad::Var& refined,
                           const std::vector<std::uint8_t>& valid,
                           const ProjectionHead& head) {
    Eigen::Index last = -1;
    for (std::size_t i = 0; i < valid.size(); ++i)
        if (valid[i]) last = static_cast<Eigen::Index>(i);
    if (last < 0) throw ShapeError("project: no valid positions in sequence");
    ad::Var last_row = ad::rows(refined, last, 1);
    return ad::add_rowvec(ad::matmul(last_row, head.w), head.b);
}

Eigen::VectorXd denormalize_forecast(const Eigen::RowVectorXd& normalized,
                                     const RevinStats& stats) {
    return revin_denormalize(normalized.transpose(), stats);
}

ad::Var l1_loss(const ad::Var& y_hat, const Eigen::MatrixXd& y_true) {
    if (y_hat->value.rows() != y_true.rows() || y_hat->value.cols() != y_true.cols())
        throw ShapeError("l1_loss: shape mismatch");
    return ad::mean_abs(ad::sub(y_hat, ad::constant(y_true)));
}

double l1_loss_value(const Eigen::MatrixXd& y_hat, const Eigen::MatrixXd& y_true) {
    if (y_hat.rows() != y_true.rows() || y_hat.cols() != y_true.cols())
        throw ShapeError("l1_loss: shape mismatch");
    return (y_hat - y_true).array().abs().mean();
}

}  // namespace okgllm
