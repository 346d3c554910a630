#pragma once
// Per-region knowledge embeddings: verbalized neighborhood text is token-
// embedded and fused with the frozen structural vector through a trainable
// single-layer adapter (row-wise [e_struct ; e_text_row] -> ReLU affine).

#include <Eigen/Dense>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "okgllm/autodiff.hpp"
#include "okgllm/graph.hpp"
#include "okgllm/text_encoder.hpp"
#include "okgllm/transe.hpp"

namespace okgllm {

class Adapter {
public:
    Adapter(int d, std::mt19937_64& rng);

    // e_struct: d-vector (frozen); e_text: l x d. Each token row is prefixed
    // with e_struct before the affine map, so W is 2d x d. Output l x d, >= 0.
    ad::Var fuse(const Eigen::VectorXd& e_struct, const ad::Var& e_text) const;
    Eigen::MatrixXd fuse_values(const Eigen::VectorXd& e_struct,
                                const Eigen::MatrixXd& e_text) const;

    std::vector<ad::Var> params() const { return {W_, b_}; }
    int d() const { return d_; }

    ad::Var W_, b_;

private:
    int d_;
};

// Verbalize -> embed -> fuse for every region, with caching of the frozen
// text embeddings and of the fused stack (invalidated when adapter params
// change).
class KnowledgeEncoder {
public:
    KnowledgeEncoder(const KnowledgeGraph& g, const EmbeddingTable& table,
                     std::shared_ptr<const TextEncoder> encoder, int k_hops,
                     int token_length,
                     std::map<std::string, double> region_mean_sst = {});

    // Frozen per-region text embedding (cached).
    const TextEmbedding& text_embedding(const std::string& region_id) const;

    // Graph-linked e_kg for one region; gradients reach the adapter.
    ad::Var encode_region(const std::string& region_id, const Adapter& adapter) const;

    // Fused stack over the given regions, cached against the adapter values.
    const std::vector<Eigen::MatrixXd>& encode_all_values(
        const std::vector<std::string>& region_ids, const Adapter& adapter) const;

    const KnowledgeGraph& graph() const { return g_; }
    const EmbeddingTable& table() const { return table_; }
    int token_length() const { return token_length_; }
    int k_hops() const { return k_hops_; }
    const std::string& encoder_identity() const { return encoder_identity_; }

private:
    const KnowledgeGraph& g_;
    const EmbeddingTable& table_;
    std::shared_ptr<const TextEncoder> encoder_;
    int k_hops_;
    int token_length_;
    std::map<std::string, double> region_mean_sst_;
    std::string encoder_identity_;

    mutable std::map<std::string, TextEmbedding> text_cache_;
    mutable std::vector<Eigen::MatrixXd> stack_cache_;
    mutable std::vector<std::string> stack_cache_regions_;
    mutable Eigen::MatrixXd stack_cache_w_;
    mutable Eigen::MatrixXd stack_cache_b_;
};

}  // namespace okgllm
