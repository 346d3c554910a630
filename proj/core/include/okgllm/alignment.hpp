#pragma once
// Region-wise query construction, cross-attention alignment of temporal and
// knowledge embeddings, and the frozen causal backbone contract with a
// desk-scale seed-initialized implementation.

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "okgllm/autodiff.hpp"

namespace okgllm {

struct LayerNormParams {
    ad::Var gamma, beta;  // 1 x dim

    static LayerNormParams trainable(int dim);
};

// LayerNorm(concat[e_region, e_ts]) row-wise. e_region is 1 x d_m.
ad::Var build_query(const ad::Var& e_region, const ad::Var& e_ts,
                    const LayerNormParams& ln);

struct AlignmentParams {
    ad::Var w_q;  // d_m x d_k
    ad::Var w_k;  // d   x d_k
    ad::Var w_v;  // d   x d_k
    LayerNormParams ln;  // over d_m, applied in build_query

    AlignmentParams(int d_m, int d, int d_k, std::mt19937_64& rng);
    std::vector<ad::Var> params() const { return {w_q, w_k, w_v, ln.gamma, ln.beta}; }
};

struct CrossAttention {
    ad::Var weights;  // rows x keys, row-stochastic
    ad::Var output;   // rows x d_k
};

// softmax((Q W_q)(K W_k)^T / sqrt(d_k)) (K W_v). Requires at least one key.
CrossAttention cross_attend(const ad::Var& queries, const ad::Var& keys,
                            const AlignmentParams& params);

// Abstract causal sequence model; frozen for the entire training run.
class FrozenBackbone {
public:
    virtual ~FrozenBackbone() = default;

    // inputs: L x hidden; valid[i] == 0 marks padding. Padded positions are
    // excluded from attention in both directions. Output shape equals input.
    virtual ad::Var forward(const ad::Var& inputs,
                            const std::vector<std::uint8_t>& valid) const = 0;

    virtual int hidden_size() const = 0;
    virtual int context_limit() const = 0;
    virtual std::uint64_t checksum() const = 0;
    virtual std::string identity() const = 0;
    virtual std::size_t parameter_count() const = 0;
};

// Small frozen transformer (pre-LN blocks, causal masking) with
// seed-determined weights. Stands in for a pretrained model at desk scale.
class DeskBackbone : public FrozenBackbone {
public:
    DeskBackbone(int hidden, int layers, int heads, int context_limit,
                 std::uint64_t seed);

    ad::Var forward(const ad::Var& inputs,
                    const std::vector<std::uint8_t>& valid) const override;
    int hidden_size() const override { return hidden_; }
    int context_limit() const override { return context_limit_; }
    std::uint64_t checksum() const override;
    std::string identity() const override;
    std::size_t parameter_count() const override;

private:
    struct Block {
        std::vector<ad::Var> w_q, w_k, w_v;  // per head: hidden x head_dim
        ad::Var w_o;                          // hidden x hidden
        ad::Var ln1_g, ln1_b, ln2_g, ln2_b;   // 1 x hidden
        ad::Var ff_w1, ff_b1, ff_w2, ff_b2;
    };

    int hidden_, layers_, heads_, context_limit_;
    std::uint64_t seed_;
    std::vector<Block> blocks_;
    std::vector<ad::Var> all_params_;  // frozen constants
};

// Convenience batch wrapper: pads sequences to a uniform length with zero
// rows, forwards each through the backbone, returns per-sequence outputs.
std::vector<ad::Var> backbone_forward(
    const std::vector<ad::Var>& sequences,
    const std::vector<std::vector<std::uint8_t>>& valid_masks,
    const FrozenBackbone& backbone);

}  // namespace okgllm
