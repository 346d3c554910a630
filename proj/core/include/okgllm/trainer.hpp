#pragma once
// End-to-end training: Adam on the L1 forecast loss with the halving
// learning-rate schedule, chronological splits, early stopping on validation
// loss, best-checkpoint tracking. Deterministic given the config seed.

#include <memory>
#include <vector>

#include "okgllm/checkpoint.hpp"
#include "okgllm/metrics.hpp"
#include "okgllm/sst_data.hpp"

namespace okgllm {

struct TrainResult {
    Checkpoint checkpoint;  // best-validation parameters
    std::vector<double> train_loss_curve;  // normalized-space L1 per epoch
    std::vector<double> val_loss_curve;
    std::vector<double> lr_curve;
    int best_epoch = -1;
    int epochs_run = 0;
    bool early_stopped = false;
};

// graph/table may be null only for the no_kg_encoding variant. The text
// encoder defaults to the deterministic hash embedder when null.
TrainResult train_model(const ExperimentConfig& cfg, const KnowledgeGraph* graph,
                        const EmbeddingTable* table, const SSTMatrix& data,
                        std::shared_ptr<const TextEncoder> encoder = nullptr);

// Rebuilds the model a checkpoint was trained with and loads its parameters.
std::unique_ptr<OkgLlmModel> model_from_checkpoint(
    const Checkpoint& ckpt, const KnowledgeGraph* graph, const SSTMatrix& data,
    std::shared_ptr<const TextEncoder> encoder = nullptr);

// Normalized-space mean L1 over all windows of a segment (no updates).
double segment_loss(const OkgLlmModel& model, const SSTMatrix& segment);

}  // namespace okgllm
