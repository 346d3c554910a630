#pragma once
// Binary experiment checkpoint: config, all trainable parameters by name,
// frozen embedding table, backbone identity + checksum, RNG state, epoch and
// best validation loss. Reload reproduces forward outputs bitwise.

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>

#include "okgllm/config.hpp"
#include "okgllm/model.hpp"
#include "okgllm/transe.hpp"

namespace okgllm {

struct Checkpoint {
    ExperimentConfig config;
    std::map<std::string, Eigen::MatrixXd> params;
    EmbeddingTable table;  // empty (d == 0) for no_kg_encoding runs
    std::string backbone_identity;
    std::uint64_t backbone_checksum = 0;
    std::string rng_state;
    int epoch = 0;
    double best_val_loss = 0.0;

    void save(const std::string& path) const;
    static Checkpoint load(const std::string& path);

    static Checkpoint from_model(const OkgLlmModel& model, const EmbeddingTable* table,
                                 const std::string& rng_state, int epoch,
                                 double best_val_loss);

    // Copies parameter values into a model built from the same config.
    void apply_to(OkgLlmModel& model) const;
};

}  // namespace okgllm
