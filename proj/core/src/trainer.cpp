#include "okgllm/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "okgllm/errors.hpp"
#include "okgllm/text_encoder.hpp"

namespace okgllm {

namespace {

struct Sample {
    Eigen::Index region;
    Eigen::Index start;
};

std::vector<Sample> enumerate_windows(const SSTMatrix& segment, int lookback,
                                      int horizon) {
    std::vector<Sample> samples;
    Eigen::Index n_starts = segment.steps() - lookback - horizon + 1;
    for (Eigen::Index i = 0; i < segment.regions(); ++i)
        for (Eigen::Index s = 0; s < n_starts; ++s) samples.push_back({i, s});
    return samples;
}

// L1 between the model's normalized prediction and the normalized target.
ad::Var sample_loss(const OkgLlmModel& model, const SSTMatrix& segment,
                    const Sample& sample, int lookback, int horizon) {
    Eigen::VectorXd window =
        segment.values.row(sample.region).segment(sample.start, lookback);
    Eigen::VectorXd target =
        segment.values.row(sample.region).segment(sample.start + lookback, horizon);
    auto fwd = model.forward(sample.region, window);
    Eigen::RowVectorXd target_norm =
        ((target.array() - fwd.stats.mean) / (fwd.stats.std + fwd.stats.eps))
            .transpose();
    return l1_loss(fwd.y_norm, target_norm);
}

}  // namespace

double segment_loss(const OkgLlmModel& model, const SSTMatrix& segment) {
    const auto& cfg = model.config();
    auto samples = enumerate_windows(segment, cfg.lookback, cfg.horizon);
    if (samples.empty()) throw DataError("segment too short for any window");
    double total = 0.0;
    for (const auto& s : samples)
        total += ad::scalar(sample_loss(model, segment, s, cfg.lookback, cfg.horizon));
    return total / static_cast<double>(samples.size());
}

TrainResult train_model(const ExperimentConfig& cfg, const KnowledgeGraph* graph,
                        const EmbeddingTable* table, const SSTMatrix& data,
                        std::shared_ptr<const TextEncoder> encoder) {
    cfg.validate();
    if (cfg.variant != Variant::no_kg_encoding) {
        if (!graph || !table)
            throw ConfigError("train: variant requires a knowledge graph and table");
        if (!encoder)
            encoder = std::make_shared<HashedTextEncoder>(cfg.d, cfg.seed);
    }

    Eigen::Index min_len = cfg.lookback + cfg.horizon;
    ChronoSplit split = chrono_split(data, cfg.train_ratio, cfg.val_ratio,
                                     cfg.test_ratio, min_len);

    // Region mean SST for the verbalizer comes from the training segment only.
    auto model = std::make_unique<OkgLlmModel>(
        cfg, graph, table, encoder, make_backbone(cfg), data.region_ids,
        split.train.region_means());

    ad::Adam adam(model->trainable_params(), cfg.learning_rate);
    std::mt19937_64 rng(cfg.seed);
    auto samples = enumerate_windows(split.train, cfg.lookback, cfg.horizon);
    auto schedule = lr_schedule(cfg.learning_rate, cfg.lr_halving_epochs,
                                cfg.max_epochs);

    TrainResult result;
    double best_val = std::numeric_limits<double>::infinity();
    std::map<std::string, Eigen::MatrixXd> best_params;
    auto snapshot = [&] {
        best_params.clear();
        for (const auto& [name, v] : model->named_params()) best_params[name] = v->value;
    };
    snapshot();
    int since_best = 0;

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        adam.set_lr(schedule[static_cast<std::size_t>(epoch)]);
        result.lr_curve.push_back(adam.lr());
        std::shuffle(samples.begin(), samples.end(), rng);

        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t b = 0; b < samples.size();
             b += static_cast<std::size_t>(cfg.batch_size)) {
            std::size_t end =
                std::min(samples.size(), b + static_cast<std::size_t>(cfg.batch_size));
            adam.zero_grad();
            ad::Var batch_total;
            for (std::size_t i = b; i < end; ++i) {
                ad::Var loss = sample_loss(*model, split.train, samples[i],
                                           cfg.lookback, cfg.horizon);
                batch_total = batch_total ? ad::add(batch_total, loss) : loss;
            }
            ad::Var batch_loss =
                ad::scalar_mul(batch_total, 1.0 / static_cast<double>(end - b));
            double loss_value = ad::scalar(batch_loss);
            if (!std::isfinite(loss_value))
                throw TrainingDiverged(epoch, "non-finite training loss");
            ad::backward(batch_loss);
            adam.step();
            epoch_loss += loss_value;
            ++batches;
        }
        result.train_loss_curve.push_back(epoch_loss / static_cast<double>(batches));

        double val = segment_loss(*model, split.val);
        if (!std::isfinite(val))
            throw TrainingDiverged(epoch, "non-finite validation loss");
        result.val_loss_curve.push_back(val);
        ++result.epochs_run;

        if (val < best_val) {
            best_val = val;
            result.best_epoch = epoch;
            snapshot();
            since_best = 0;
        } else if (++since_best >= cfg.patience && cfg.patience > 0) {
            result.early_stopped = true;
            break;
        }
    }

    // Restore the best-validation parameters before checkpointing.
    for (auto& [name, v] : model->named_params()) v->value = best_params.at(name);
    if (cfg.max_epochs == 0) best_val = segment_loss(*model, split.val);

    std::ostringstream rng_state;
    rng_state << rng;
    result.checkpoint = Checkpoint::from_model(*model, table, rng_state.str(),
                                               result.epochs_run, best_val);
    return result;
}

std::unique_ptr<OkgLlmModel> model_from_checkpoint(
    const Checkpoint& ckpt, const KnowledgeGraph* graph, const SSTMatrix& data,
    std::shared_ptr<const TextEncoder> encoder) {
    const ExperimentConfig& cfg = ckpt.config;
    const EmbeddingTable* table = ckpt.table.d > 0 ? &ckpt.table : nullptr;
    if (cfg.variant != Variant::no_kg_encoding && !encoder)
        encoder = std::make_shared<HashedTextEncoder>(cfg.d, cfg.seed);

    ChronoSplit split = chrono_split(data, cfg.train_ratio, cfg.val_ratio,
                                     cfg.test_ratio, cfg.lookback + cfg.horizon);
    auto model = std::make_unique<OkgLlmModel>(
        cfg, graph, table, encoder, make_backbone(cfg), data.region_ids,
        split.train.region_means());
    if (model->backbone().identity() != ckpt.backbone_identity ||
        model->backbone().checksum() != ckpt.backbone_checksum)
        throw ConfigError("checkpoint backbone does not match the rebuilt backbone");
    ckpt.apply_to(*model);
    return model;
}

}  // namespace okgllm
