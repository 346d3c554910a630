#pragma once
// Translational knowledge-graph embedding pretraining: margin-based ranking
// loss over corrupted triples, SGD with per-epoch entity renormalization.
// The resulting table is frozen and served read-only to the rest of the
// pipeline.

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "okgllm/graph.hpp"

namespace okgllm {

struct TransEConfig {
    int d = 64;                     // embedding dimension
    double gamma = 1.0;             // ranking margin, > 0
    int p = 1;                      // norm order, 1 or 2
    int negatives_per_positive = 1;
    int epochs = 100;
    double learning_rate = 0.01;
    int batch_size = 64;
    std::uint64_t seed = 42;

    void validate() const;
};

class EmbeddingTable {
public:
    int d = 0;
    int p = 1;
    double gamma = 1.0;
    std::uint64_t seed = 0;
    int epochs_trained = 0;
    bool frozen = false;
    std::map<std::string, Eigen::VectorXd> entity_vectors;
    std::map<std::string, Eigen::VectorXd> relation_vectors;

    const Eigen::VectorXd& entity(const std::string& id) const;
    const Eigen::VectorXd& relation(const std::string& id) const;

    // FNV-1a over the raw vector bytes; used by frozen-table invariant checks.
    std::uint64_t checksum() const;

    void save(const std::string& path) const;  // binary, roundtrip-exact
    static EmbeddingTable load(const std::string& path);
};

// f(h,r,t) = ||h + r - t||_p; lower means more plausible.
double transe_score(const Eigen::VectorXd& h, const Eigen::VectorXd& r,
                    const Eigen::VectorXd& t, int p);

// Corrupts head or tail (uniform choice) with an entity drawn uniformly from
// the graph. Candidates that exist in the positive set are resampled up to
// 100 times, then accepted unfiltered; `fallback_warnings`, when given, counts
// those acceptances.
std::vector<Triple> sample_negatives(const KnowledgeGraph& g, const Triple& triple,
                                     int n, std::mt19937_64& rng,
                                     std::size_t* fallback_warnings = nullptr);

// Mean over matched pairs of max(0, gamma + pos - neg).
double margin_loss(const std::vector<double>& pos_scores,
                   const std::vector<double>& neg_scores, double gamma);

// Single-pair hinge max(0, gamma + f(h,r,t) - f(h',r,t')) and its gradient
// with respect to all five embedding vectors. The relation is shared between
// the positive and negative scores.
struct MarginPairGrad {
    double loss = 0.0;
    Eigen::VectorXd dh, dr, dt, dh_neg, dt_neg;
};
MarginPairGrad margin_pair_grad(const Eigen::VectorXd& h, const Eigen::VectorXd& r,
                                const Eigen::VectorXd& t, const Eigen::VectorXd& h_neg,
                                const Eigen::VectorXd& t_neg, double gamma, int p);

struct PretrainResult {
    EmbeddingTable table;
    std::vector<double> epoch_mean_loss;
    std::size_t negative_fallback_warnings = 0;
};

PretrainResult pretrain(const KnowledgeGraph& g, const TransEConfig& cfg);

// Filtered link-prediction evaluation: rank the true tail of each test triple
// among all entities by score, skipping candidates that form other known
// positives. Random guessing gives (|E| + 1) / 2.
double filtered_mean_rank(const KnowledgeGraph& g, const EmbeddingTable& table,
                          const std::vector<Triple>& test_triples);

}  // namespace okgllm
