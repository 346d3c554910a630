#include "okgllm/metrics.hpp"

#include <fstream>

#include <json.hpp>

#include "okgllm/errors.hpp"
#include "okgllm/ts_encoding.hpp"

namespace okgllm {

namespace {

// Shared sliding-window loop; `predict` returns the Celsius forecast for one
// (region, window) pair.
template <typename Predict>
EvalResult sliding_eval(const SSTMatrix& segment, int lookback, int horizon,
                        Predict&& predict) {
    Eigen::Index N = segment.regions();
    Eigen::Index T = segment.steps();
    if (T < lookback + horizon)
        throw DataError("evaluation segment shorter than lookback + horizon");

    Eigen::Index n_windows = T - lookback - horizon + 1;
    EvalResult out;
    out.windows = static_cast<std::size_t>(n_windows);
    out.celsius.scale = "celsius";
    out.normalized.scale = "normalized";
    out.celsius.per_region_mae = Eigen::VectorXd::Zero(N);
    out.celsius.per_region_mse = Eigen::VectorXd::Zero(N);
    out.normalized.per_region_mae = Eigen::VectorXd::Zero(N);
    out.normalized.per_region_mse = Eigen::VectorXd::Zero(N);

    for (Eigen::Index i = 0; i < N; ++i) {
        for (Eigen::Index s = 0; s < n_windows; ++s) {
            Eigen::VectorXd window = segment.values.row(i).segment(s, lookback);
            Eigen::VectorXd target =
                segment.values.row(i).segment(s + lookback, horizon);
            Eigen::VectorXd y_hat = predict(i, window);
            if (y_hat.size() != horizon)
                throw ShapeError("predictor returned wrong horizon length");

            Eigen::ArrayXd err = (target - y_hat).array();
            out.celsius.per_region_mae(i) += err.abs().mean();
            out.celsius.per_region_mse(i) += err.square().mean();

            auto [xn, stats] = revin_normalize(window);
            (void)xn;
            double denom = stats.std + stats.eps;
            Eigen::ArrayXd err_n = err / denom;
            out.normalized.per_region_mae(i) += err_n.abs().mean();
            out.normalized.per_region_mse(i) += err_n.square().mean();
        }
        out.celsius.per_region_mae(i) /= static_cast<double>(n_windows);
        out.celsius.per_region_mse(i) /= static_cast<double>(n_windows);
        out.normalized.per_region_mae(i) /= static_cast<double>(n_windows);
        out.normalized.per_region_mse(i) /= static_cast<double>(n_windows);
    }
    out.celsius.mae = out.celsius.per_region_mae.mean();
    out.celsius.mse = out.celsius.per_region_mse.mean();
    out.normalized.mae = out.normalized.per_region_mae.mean();
    out.normalized.mse = out.normalized.per_region_mse.mean();
    return out;
}

}  // namespace

EvalResult evaluate_model(const OkgLlmModel& model, const SSTMatrix& segment) {
    const auto& cfg = model.config();
    if (segment.region_ids != model.region_ids())
        throw ConfigError("evaluate: segment regions differ from the model's regions");
    return sliding_eval(segment, cfg.lookback, cfg.horizon,
                        [&](Eigen::Index i, const Eigen::VectorXd& window) {
                            return model.predict_celsius(i, window);
                        });
}

EvalResult persistence_baseline(const SSTMatrix& segment, int lookback, int horizon) {
    return sliding_eval(segment, lookback, horizon,
                        [&](Eigen::Index, const Eigen::VectorXd& window) {
                            return Eigen::VectorXd::Constant(horizon,
                                                             window(window.size() - 1))
                                .eval();
                        });
}

EvalResult linear_baseline(const SSTMatrix& segment, int lookback, int horizon) {
    return sliding_eval(
        segment, lookback, horizon,
        [&](Eigen::Index, const Eigen::VectorXd& window) {
            Eigen::Index n = window.size();
            double tbar = static_cast<double>(n - 1) / 2.0;
            double ybar = window.mean();
            double num = 0.0, den = 0.0;
            for (Eigen::Index t = 0; t < n; ++t) {
                num += (t - tbar) * (window(t) - ybar);
                den += (t - tbar) * (t - tbar);
            }
            double slope = den > 0 ? num / den : 0.0;
            double intercept = ybar - slope * tbar;
            Eigen::VectorXd y(horizon);
            for (int h = 0; h < horizon; ++h)
                y(h) = intercept + slope * static_cast<double>(n + h);
            return y;
        });
}

std::string metrics_to_json(const EvalResult& result,
                            const std::vector<std::string>& region_ids) {
    nlohmann::json j;
    for (const Metrics* m : {&result.celsius, &result.normalized}) {
        nlohmann::json s;
        s["mae"] = m->mae;
        s["mse"] = m->mse;
        nlohmann::json per;
        for (Eigen::Index i = 0; i < m->per_region_mae.size(); ++i) {
            per[region_ids[static_cast<std::size_t>(i)]] = {
                {"mae", m->per_region_mae(i)}, {"mse", m->per_region_mse(i)}};
        }
        s["per_region"] = per;
        j[m->scale] = s;
    }
    j["windows"] = result.windows;
    return j.dump(2);
}

void write_mae_grid(const EvalResult& result, const SSTMatrix& segment,
                    const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << "lat lon mae\n";
    out.precision(10);
    for (Eigen::Index i = 0; i < segment.regions(); ++i) {
        const auto& c = segment.coords[static_cast<std::size_t>(i)];
        out << c.lat << ' ' << c.lon << ' ' << result.celsius.per_region_mae(i)
            << '\n';
    }
}

}  // namespace okgllm
