#pragma once
// Trainable multi-head self-attention decoder over the backbone's hidden
// states, linear projection to the forecast horizon, instance-norm inversion,
// and the L1 training loss.

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <vector>

#include "okgllm/autodiff.hpp"
#include "okgllm/ts_encoding.hpp"

namespace okgllm {

struct DecoderLayerParams {
    std::vector<ad::Var> w_q, w_k, w_v;  // per head: dim x head_dim
    ad::Var w_o;                          // dim x dim
    ad::Var ln1_g, ln1_b, ln2_g, ln2_b;
    ad::Var ff_w1, ff_b1, ff_w2, ff_b2;
};

struct DecoderParams {
    int dim = 0;
    int heads = 0;
    std::vector<DecoderLayerParams> layers;

    DecoderParams(int dim, int heads, int n_layers, std::mt19937_64& rng);
    std::vector<ad::Var> params() const;
    std::size_t parameter_count() const;
};

struct DecodeAttention {
    ad::Var output;
    // Attention weight matrices of the first layer, one per head (used by
    // correctness probes).
    std::vector<ad::Var> first_layer_weights;
};

// Pre-LN self-attention blocks with causal masking matching the backbone.
DecodeAttention decode(const ad::Var& hidden,
                       const std::vector<std::uint8_t>& valid,
                       const DecoderParams& params);

struct ProjectionHead {
    ad::Var w;  // dim x tau
    ad::Var b;  // 1 x tau

    ProjectionHead(int dim, int tau, std::mt19937_64& rng);
    std::vector<ad::Var> params() const { return {w, b}; }
};

// Maps the last valid position's vector to tau values (normalized space).
ad::Var project_normalized(const ad::Var& refined,
                           const std::vector<std::uint8_t>& valid,
                           const ProjectionHead& head);

// project_normalized followed by RevIN inversion into degrees Celsius.
Eigen::VectorXd denormalize_forecast(const Eigen::RowVectorXd& normalized,
                                     const RevinStats& stats);

// Mean absolute difference; gradients flow into y_hat.
ad::Var l1_loss(const ad::Var& y_hat, const Eigen::MatrixXd& y_true);

double l1_loss_value(const Eigen::MatrixXd& y_hat, const Eigen::MatrixXd& y_true);

}  // namespace okgllm
