#pragma once
// Per-series reversible instance normalization, overlapping patch
// segmentation with end-replication padding, and a two-layer perceptron that
// projects patches into the temporal embedding space.

#include <Eigen/Dense>
#include <random>
#include <vector>

#include "okgllm/autodiff.hpp"

namespace okgllm {

struct RevinStats {
    double mean = 0.0;
    double std = 0.0;  // population standard deviation
    double eps = 1e-5;
};

// (x - mean) / (std + eps); stats are kept for inversion at the prediction head.
std::pair<Eigen::VectorXd, RevinStats> revin_normalize(const Eigen::VectorXd& x,
                                                       double eps = 1e-5);

Eigen::VectorXd revin_denormalize(const Eigen::VectorXd& y, const RevinStats& stats);

struct PatchSet {
    Eigen::MatrixXd patches;  // P x L_p
    int patch_length = 0;
    int stride = 0;
};

// Right-pads the series by replicating its final value `stride` times, then
// takes windows of length L_p at the given stride starting from index 0.
// The window count is floor((T - L_p) / S) + 2 exactly.
PatchSet patchify(const Eigen::VectorXd& x, int patch_length, int stride);

// sigma(X W1 + b1) W2 + b2 applied per patch row.
class PatchEncoder {
public:
    // hidden == 0 selects the default width 2 * d_m.
    PatchEncoder(int patch_length, int d_m, int hidden, std::mt19937_64& rng);

    ad::Var forward(const ad::Var& patches) const;
    Eigen::MatrixXd forward_values(const Eigen::MatrixXd& patches) const;

    std::vector<ad::Var> params() const { return {w1_, b1_, w2_, b2_}; }
    int d_m() const { return d_m_; }
    int patch_length() const { return patch_length_; }

    ad::Var w1_, b1_, w2_, b2_;

private:
    int patch_length_;
    int d_m_;
};

}  // namespace okgllm
