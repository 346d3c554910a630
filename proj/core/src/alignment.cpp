#include "okgllm/alignment.hpp"

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

// Additive attention mask: position i may attend to valid positions j <= i.
Eigen::MatrixXd causal_mask(Eigen::Index len,
                            const std::vector<std::uint8_t>& valid) {
    Eigen::MatrixXd mask = Eigen::MatrixXd::Zero(len, len);
    for (Eigen::Index i = 0; i < len; ++i)
        for (Eigen::Index j = 0; j < len; ++j)
            if (j > i || !valid[static_cast<std::size_t>(j)])
                mask(i, j) = kMaskedLogit;
    // Keep self-attention for padded rows so their softmax stays benign;
    // their outputs are never read.
    for (Eigen::Index i = 0; i < len; ++i)
        if (!valid[static_cast<std::size_t>(i)]) mask(i, i) = 0.0;
    return mask;
}

}  // namespace

LayerNormParams LayerNormParams::trainable(int dim) {
    return LayerNormParams{ad::parameter(Eigen::MatrixXd::Ones(1, dim)),
                           ad::parameter(Eigen::MatrixXd::Zero(1, dim))};
}

ad::Var build_query(const ad::Var& e_region, const ad::Var& e_ts,
                    const LayerNormParams& ln) {
    if (e_region->value.rows() != 1)
        throw ShapeError("build_query: e_region must be a single row");
    if (e_ts->value.rows() > 0 && e_ts->value.cols() != e_region->value.cols())
        throw ShapeError("build_query: e_region/e_ts dimension mismatch");
    ad::Var seq = e_ts->value.rows() > 0 ? ad::vcat(e_region, e_ts) : e_region;
    return ad::layernorm_rows(seq, ln.gamma, ln.beta);
}

AlignmentParams::AlignmentParams(int d_m, int d, int d_k, std::mt19937_64& rng)
    : ln(LayerNormParams::trainable(d_m)) {
    if (d_m < 1 || d < 1 || d_k < 1)
        throw ConfigError("alignment: dimensions must be positive");
    w_q = ad::parameter(random_matrix(d_m, d_k, rng, 1.0 / std::sqrt(d_m)));
    w_k = ad::parameter(random_matrix(d, d_k, rng, 1.0 / std::sqrt(d)));
    w_v = ad::parameter(random_matrix(d, d_k, rng, 1.0 / std::sqrt(d)));
}

CrossAttention cross_attend(const ad::Var& queries, const ad::Var& keys,
                            const AlignmentParams& params) {
    if (keys->value.rows() == 0)
        throw ShapeError("cross_attend: at least one key is required");
    double d_k = static_cast<double>(params.w_q->value.cols());
    ad::Var q = ad::matmul(queries, params.w_q);
    ad::Var k = ad::matmul(keys, params.w_k);
    ad::Var v = ad::matmul(keys, params.w_v);
    ad::Var logits = ad::scalar_mul(ad::matmul(q, ad::transpose(k)), 1.0 / std::sqrt(d_k));
    CrossAttention out;
    out.weights = ad::softmax_rows(logits);
    out.output = ad::matmul(out.weights, v);
    return out;
}

DeskBackbone::DeskBackbone(int hidden, int layers, int heads, int context_limit,
                           std::uint64_t seed)
    : hidden_(hidden),
      layers_(layers),
      heads_(heads),
      context_limit_(context_limit),
      seed_(seed) {
    if (hidden < 1 || layers < 1 || heads < 1)
        throw ConfigError("backbone: hidden/layers/heads must be positive");
    if (hidden % heads != 0)
        throw ConfigError("backbone: hidden size not divisible by head count");

    std::mt19937_64 rng(seed);
    int head_dim = hidden / heads;
    int ff = 2 * hidden;
    double ws = 1.0 / std::sqrt(static_cast<double>(hidden));

    for (int b = 0; b < layers; ++b) {
        Block blk;
        for (int h = 0; h < heads; ++h) {
            blk.w_q.push_back(ad::constant(random_matrix(hidden, head_dim, rng, ws)));
            blk.w_k.push_back(ad::constant(random_matrix(hidden, head_dim, rng, ws)));
            blk.w_v.push_back(ad::constant(random_matrix(hidden, head_dim, rng, ws)));
        }
        blk.w_o = ad::constant(random_matrix(hidden, hidden, rng, ws));
        blk.ln1_g = ad::constant(Eigen::MatrixXd::Ones(1, hidden));
        blk.ln1_b = ad::constant(Eigen::MatrixXd::Zero(1, hidden));
        blk.ln2_g = ad::constant(Eigen::MatrixXd::Ones(1, hidden));
        blk.ln2_b = ad::constant(Eigen::MatrixXd::Zero(1, hidden));
        blk.ff_w1 = ad::constant(random_matrix(hidden, ff, rng, ws));
        blk.ff_b1 = ad::constant(Eigen::MatrixXd::Zero(1, ff));
        blk.ff_w2 = ad::constant(random_matrix(ff, hidden, rng, 1.0 / std::sqrt(ff)));
        blk.ff_b2 = ad::constant(Eigen::MatrixXd::Zero(1, hidden));
        blocks_.push_back(blk);

        for (const auto& p : blk.w_q) all_params_.push_back(p);
        for (const auto& p : blk.w_k) all_params_.push_back(p);
        for (const auto& p : blk.w_v) all_params_.push_back(p);
        for (const auto& p : {blk.w_o, blk.ln1_g, blk.ln1_b, blk.ln2_g, blk.ln2_b,
                              blk.ff_w1, blk.ff_b1, blk.ff_w2, blk.ff_b2})
            all_params_.push_back(p);
    }
}

ad::Var DeskBackbone::forward(const ad::Var& inputs,
                              const std::vector<std::uint8_t>& valid) const {
    Eigen::Index len = inputs->value.rows();
    if (inputs->value.cols() != hidden_)
        throw ShapeError("backbone: expected hidden size " + std::to_string(hidden_));
    if (valid.size() != static_cast<std::size_t>(len))
        throw ShapeError("backbone: mask length mismatch");
    if (len > context_limit_)
        throw ConfigError("backbone: sequence length " + std::to_string(len) +
                          " exceeds context limit " + std::to_string(context_limit_));

    Eigen::MatrixXd mask = causal_mask(len, valid);
    double scale = 1.0 / std::sqrt(static_cast<double>(hidden_ / heads_));

    ad::Var x = inputs;
    for (const Block& blk : blocks_) {
        ad::Var h = ad::layernorm_rows(x, blk.ln1_g, blk.ln1_b);
        ad::Var heads_out;
        for (int hd = 0; hd < heads_; ++hd) {
            ad::Var q = ad::matmul(h, blk.w_q[static_cast<std::size_t>(hd)]);
            ad::Var k = ad::matmul(h, blk.w_k[static_cast<std::size_t>(hd)]);
            ad::Var v = ad::matmul(h, blk.w_v[static_cast<std::size_t>(hd)]);
            ad::Var attn = ad::softmax_rows(
                ad::scalar_mul(ad::matmul(q, ad::transpose(k)), scale), &mask);
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
    }
    return x;
}

std::uint64_t DeskBackbone::checksum() const {
    std::uint64_t h = 1469598103934665603ull;
    for (const auto& p : all_params_) {
        const auto* bytes = reinterpret_cast<const unsigned char*>(p->value.data());
        std::size_t n = sizeof(double) * static_cast<std::size_t>(p->value.size());
        for (std::size_t i = 0; i < n; ++i) {
            h ^= bytes[i];
            h *= 1099511628211ull;
        }
    }
    return h;
}

std::string DeskBackbone::identity() const {
    return "desk-backbone-v1/h=" + std::to_string(hidden_) +
           "/L=" + std::to_string(layers_) + "/heads=" + std::to_string(heads_) +
           "/seed=" + std::to_string(seed_);
}

std::size_t DeskBackbone::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : all_params_) n += static_cast<std::size_t>(p->value.size());
    return n;
}

std::vector<ad::Var> backbone_forward(
    const std::vector<ad::Var>& sequences,
    const std::vector<std::vector<std::uint8_t>>& valid_masks,
    const FrozenBackbone& backbone) {
    if (sequences.size() != valid_masks.size())
        throw ShapeError("backbone_forward: sequence/mask count mismatch");
    Eigen::Index max_len = 0;
    for (const auto& s : sequences) max_len = std::max(max_len, s->value.rows());

    std::vector<ad::Var> outputs;
    outputs.reserve(sequences.size());
    for (std::size_t i = 0; i < sequences.size(); ++i) {
        ad::Var seq = sequences[i];
        std::vector<std::uint8_t> valid = valid_masks[i];
        if (valid.size() != static_cast<std::size_t>(seq->value.rows()))
            throw ShapeError("backbone_forward: mask length mismatch");
        Eigen::Index len = seq->value.rows();
        Eigen::Index pad = max_len - len;
        if (pad > 0) {
            seq = ad::vcat(seq,
                           ad::constant(Eigen::MatrixXd::Zero(pad, seq->value.cols())));
            valid.insert(valid.end(), static_cast<std::size_t>(pad), 0);
        }
        ad::Var out = backbone.forward(seq, valid);
        if (pad > 0) out = ad::rows(out, 0, len);
        outputs.push_back(out);
    }
    return outputs;
}

}  // namespace okgllm
