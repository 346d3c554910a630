#pragma once
// Experiment configuration mirrored by the JSON config file. Unknown keys in
// the file are rejected.

#include <cstdint>
#include <string>
#include <vector>

namespace okgllm {

enum class Variant { full, no_ts_encoding, no_kg_encoding, no_alignment };

const char* to_string(Variant v);
Variant variant_from_string(const std::string& s);

struct ExperimentConfig {
    // Windows
    int lookback = 8;   // T
    int horizon = 8;    // tau, one of `horizons`
    std::vector<int> horizons = {8, 16, 32};

    // Training schedule
    int batch_size = 64;          // 64/16/16 for tau 8/16/32 by default
    double learning_rate = 1e-4;  // halved every `lr_halving_epochs` epochs
    int lr_halving_epochs = 4;
    int max_epochs = 50;
    int patience = 5;
    std::uint64_t seed = 42;

    // Patching
    int patch_length = 4;  // L_p
    int stride = 2;        // S

    // Dimensions
    int d = 32;             // knowledge (structural/text) dimension
    int d_m = 16;           // temporal embedding dimension
    int d_k = 16;           // alignment attention dimension
    int token_length = 16;  // l
    int d_h = 0;            // patch-MLP hidden; 0 = 2 * d_m

    // Graph
    int k_hops = 1;
    int max_neighbor_regions = 4;

    // Backbone (desk-scale defaults)
    std::string backbone = "desk";
    int backbone_hidden = 32;
    int backbone_layers = 4;
    int backbone_heads = 8;
    int backbone_context = 256;
    std::uint64_t backbone_seed = 1234;

    // Decoder
    int decoder_layers = 2;
    int decoder_heads = 8;

    Variant variant = Variant::full;

    // Data
    std::string sst_path;
    std::string entity_file, relation_file, triple_file;
    std::string embedding_table_path;
    double min_coverage = 0.9;
    double train_ratio = 0.7, val_ratio = 0.1, test_ratio = 0.2;

    void validate() const;

    static ExperimentConfig from_json_file(const std::string& path);
    std::string to_json() const;
};

// Per-epoch learning rates: base halved every `halving_epochs` epochs.
std::vector<double> lr_schedule(double base, int halving_epochs, int epochs);

}  // namespace okgllm
