#pragma once
// Sliding-window evaluation with MAE/MSE in both degrees-Celsius and
// normalized space, plus naive baselines for trend checks.

#include <Eigen/Dense>
#include <string>

#include "okgllm/model.hpp"
#include "okgllm/sst_data.hpp"

namespace okgllm {

struct Metrics {
    double mae = 0.0;
    double mse = 0.0;
    Eigen::VectorXd per_region_mae;
    Eigen::VectorXd per_region_mse;
    std::string scale;  // "celsius" or "normalized"
};

struct EvalResult {
    Metrics celsius;
    Metrics normalized;
    std::size_t windows = 0;
};

// Per-window metrics averaged over windows, then over regions.
EvalResult evaluate_model(const OkgLlmModel& model, const SSTMatrix& segment);

// Forecast = last observed value repeated tau times.
EvalResult persistence_baseline(const SSTMatrix& segment, int lookback, int horizon);

// Least-squares line over the lookback window, extrapolated tau steps.
EvalResult linear_baseline(const SSTMatrix& segment, int lookback, int horizon);

std::string metrics_to_json(const EvalResult& result,
                            const std::vector<std::string>& region_ids);

// (lat, lon, mae) rows for external map plotting.
void write_mae_grid(const EvalResult& result, const SSTMatrix& segment,
                    const std::string& path);

}  // namespace okgllm
