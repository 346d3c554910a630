#pragma once
// Gridded SST series: text-grid ingestion with coverage filtering and
// temporal interpolation, chronological splitting, and synthetic dataset +
// knowledge-graph generators used by tests and trend checks.

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "okgllm/graph.hpp"

namespace okgllm {

struct SSTMatrix {
    Eigen::MatrixXd values;            // N x T, degrees Celsius
    std::vector<std::string> region_ids;  // length N, aligned to rows
    std::vector<Coordinates> coords;      // length N
    std::vector<std::string> timestamps;  // length T

    Eigen::Index regions() const { return values.rows(); }
    Eigen::Index steps() const { return values.cols(); }

    // Mean SST per region (used by the verbalizer).
    std::map<std::string, double> region_means() const;
};

constexpr double kLandSentinel = -9999.0;

// Grid file: header "lat lon t_0 ... t_{T-1}", one whitespace-separated row
// per cell. Cells with coverage below `min_coverage` (or no data at all) are
// dropped; remaining gaps are filled by linear interpolation in time with
// edge extension. Region ids are "lat_lon".
SSTMatrix ingest_sst(const std::string& path, double min_coverage = 0.9);

void save_sst(const SSTMatrix& data, const std::string& path);

struct ChronoSplit {
    SSTMatrix train, val, test;
};

// Contiguous chronological segments; floor division with the remainder
// assigned to the test segment. `min_segment_len`, when positive, enforces
// that every segment can hold at least one (input, target) window pair.
ChronoSplit chrono_split(const SSTMatrix& data, double train_ratio,
                         double val_ratio, double test_ratio,
                         Eigen::Index min_segment_len = 0);

// Synthetic fixture: per-region series = seasonal sinusoid + cluster-specific
// trend and phase + noise, where clusters correspond to synthetic "current"
// entities, making the knowledge graph genuinely predictive.
struct SyntheticConfig {
    int regions = 10;
    int currents = 3;
    int seas = 2;
    int oceans = 1;
    int monsoons = 0;
    int timesteps = 120;
    double noise = 0.01;
    double base_temp = 15.0;
    double season_amplitude = 1.0;
    double season_period = 26.0;
    double cluster_trend_step = 0.05;  // per-step slope spacing between clusters
    std::uint64_t seed = 7;
};

struct SyntheticDataset {
    KnowledgeGraph graph;
    SSTMatrix data;
    GraphStats declared_counts;                 // computed from the config, not the graph
    std::map<std::string, std::string> region_current;
    std::map<std::string, std::string> region_sea;
    std::map<std::string, std::string> region_ocean;
};

SyntheticDataset make_synthetic(const SyntheticConfig& cfg);

// Curated-scale synthetic OKG (1715 regions, 22 currents, 5 monsoons,
// 6 oceans, 81 seas) used when the curated graph is not on disk.
SyntheticDataset make_synthetic_fullsize(std::uint64_t seed = 7, int timesteps = 64);

}  // namespace okgllm
