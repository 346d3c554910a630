#pragma once
// End-to-end forecaster: RevIN + patching -> temporal embedding, knowledge
// encoding + cross-attention alignment, frozen backbone, trainable decoder,
// horizon projection. Ablation variants rewire exactly one stage each.

#include <Eigen/Dense>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "okgllm/alignment.hpp"
#include "okgllm/config.hpp"
#include "okgllm/decoder.hpp"
#include "okgllm/kg_encoding.hpp"
#include "okgllm/ts_encoding.hpp"

namespace okgllm {

class OkgLlmModel {
public:
    OkgLlmModel(const ExperimentConfig& cfg, const KnowledgeGraph* graph,
                const EmbeddingTable* table,
                std::shared_ptr<const TextEncoder> encoder,
                std::shared_ptr<const FrozenBackbone> backbone,
                std::vector<std::string> region_ids,
                std::map<std::string, double> region_mean_sst = {});

    struct Forward {
        ad::Var y_norm;    // 1 x tau, normalized space
        RevinStats stats;  // for inversion to degrees Celsius
        ad::Var aligned;   // aligned sequence entering the backbone (may be null)
    };

    // One training/evaluation sample: raw lookback window of one region.
    Forward forward(Eigen::Index region_index, const Eigen::VectorXd& window) const;

    Eigen::VectorXd predict_celsius(Eigen::Index region_index,
                                    const Eigen::VectorXd& window) const;

    std::vector<ad::Var> trainable_params() const;
    std::vector<std::pair<std::string, ad::Var>> named_params() const;
    std::size_t trainable_parameter_count() const;

    const FrozenBackbone& backbone() const { return *backbone_; }
    Variant variant() const { return cfg_.variant; }
    const ExperimentConfig& config() const { return cfg_; }
    const std::vector<std::string>& region_ids() const { return region_ids_; }
    const std::vector<std::string>& key_regions(Eigen::Index region_index) const;

    // Mean-pooled aligned embedding for one region's window (export path).
    Eigen::VectorXd aligned_embedding(Eigen::Index region_index,
                                      const Eigen::VectorXd& window) const;

private:
    ad::Var temporal_embedding(const Eigen::VectorXd& normalized_window) const;
    ad::Var knowledge_keys(Eigen::Index region_index) const;

    ExperimentConfig cfg_;
    const KnowledgeGraph* graph_ = nullptr;
    const EmbeddingTable* table_ = nullptr;
    std::shared_ptr<const FrozenBackbone> backbone_;
    std::vector<std::string> region_ids_;

    // Temporal stage: MLP for most variants, bare linear for no_ts_encoding.
    std::unique_ptr<PatchEncoder> patch_encoder_;
    ad::Var flat_w_, flat_b_;

    // Knowledge stage
    std::unique_ptr<KnowledgeEncoder> kg_encoder_;
    std::unique_ptr<Adapter> adapter_;
    ad::Var region_proj_;  // d -> d_m
    std::vector<std::vector<std::string>> key_regions_;  // per region index

    // Alignment stage. The aligned knowledge is added to a projection of the
    // query tokens so temporal content reaches the backbone directly rather
    // than only through attention weights.
    std::unique_ptr<AlignmentParams> align_;
    ad::Var align_res_proj_;  // d_m -> d_k
    std::optional<LayerNormParams> query_ln_;  // used by no_alignment
    ad::Var concat_kg_proj_, concat_ts_proj_;  // no_alignment projections

    // Backbone input projection and decoding stage
    ad::Var input_proj_, input_bias_;
    std::unique_ptr<DecoderParams> decoder_;
    std::unique_ptr<ProjectionHead> head_;
};

// Builds the backbone named by the config ("desk" is the only built-in).
std::shared_ptr<const FrozenBackbone> make_backbone(const ExperimentConfig& cfg);

}  // namespace okgllm
