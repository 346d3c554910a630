#include "okgllm/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "okgllm/errors.hpp"

namespace okgllm {

using nlohmann::json;

const char* to_string(Variant v) {
    switch (v) {
        case Variant::full: return "full";
        case Variant::no_ts_encoding: return "no_ts_encoding";
        case Variant::no_kg_encoding: return "no_kg_encoding";
        case Variant::no_alignment: return "no_alignment";
    }
    return "?";
}

Variant variant_from_string(const std::string& s) {
    if (s == "full") return Variant::full;
    if (s == "no_ts_encoding") return Variant::no_ts_encoding;
    if (s == "no_kg_encoding") return Variant::no_kg_encoding;
    if (s == "no_alignment") return Variant::no_alignment;
    throw ConfigError("unknown ablation variant '" + s + "'");
}

void ExperimentConfig::validate() const {
    if (std::find(horizons.begin(), horizons.end(), horizon) == horizons.end())
        throw ConfigError("horizon " + std::to_string(horizon) +
                          " is not in the declared horizon set");
    if (lookback < patch_length)
        throw ConfigError("lookback T must be >= patch length L_p");
    if (patch_length < 1 || stride < 1)
        throw ConfigError("patch length and stride must be positive");
    for (int dim : {d, d_m, d_k, token_length, backbone_hidden, decoder_layers})
        if (dim < 1) throw ConfigError("all dimensions must be positive");
    if (batch_size < 1 || max_epochs < 0 || patience < 0)
        throw ConfigError("bad training schedule values");
    if (learning_rate <= 0) throw ConfigError("learning rate must be positive");
    if (lr_halving_epochs < 1) throw ConfigError("lr_halving_epochs must be >= 1");
    if (k_hops < 0) throw ConfigError("k_hops must be nonnegative");
    if (min_coverage < 0.0 || min_coverage > 1.0)
        throw ConfigError("min_coverage must be in [0, 1]");
}

namespace {

const std::set<std::string> kKnownKeys = {
    "lookback", "horizon", "horizons", "batch_size", "learning_rate",
    "lr_halving_epochs", "max_epochs", "patience", "seed", "patch_length",
    "stride", "d", "d_m", "d_k", "token_length", "d_h", "k_hops",
    "max_neighbor_regions", "backbone", "backbone_hidden", "backbone_layers",
    "backbone_heads", "backbone_context", "backbone_seed", "decoder_layers",
    "decoder_heads", "variant", "sst_path", "entity_file", "relation_file",
    "triple_file", "embedding_table_path", "min_coverage", "train_ratio",
    "val_ratio", "test_ratio"};

template <typename T>
void maybe(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("config '" + path + "': " + e.what());
    }
    for (const auto& [key, _] : j.items())
        if (!kKnownKeys.count(key))
            throw ConfigError("config '" + path + "': unknown key '" + key + "'");

    ExperimentConfig c;
    maybe(j, "lookback", c.lookback);
    maybe(j, "horizon", c.horizon);
    maybe(j, "horizons", c.horizons);
    maybe(j, "batch_size", c.batch_size);
    maybe(j, "learning_rate", c.learning_rate);
    maybe(j, "lr_halving_epochs", c.lr_halving_epochs);
    maybe(j, "max_epochs", c.max_epochs);
    maybe(j, "patience", c.patience);
    maybe(j, "seed", c.seed);
    maybe(j, "patch_length", c.patch_length);
    maybe(j, "stride", c.stride);
    maybe(j, "d", c.d);
    maybe(j, "d_m", c.d_m);
    maybe(j, "d_k", c.d_k);
    maybe(j, "token_length", c.token_length);
    maybe(j, "d_h", c.d_h);
    maybe(j, "k_hops", c.k_hops);
    maybe(j, "max_neighbor_regions", c.max_neighbor_regions);
    maybe(j, "backbone", c.backbone);
    maybe(j, "backbone_hidden", c.backbone_hidden);
    maybe(j, "backbone_layers", c.backbone_layers);
    maybe(j, "backbone_heads", c.backbone_heads);
    maybe(j, "backbone_context", c.backbone_context);
    maybe(j, "backbone_seed", c.backbone_seed);
    maybe(j, "decoder_layers", c.decoder_layers);
    maybe(j, "decoder_heads", c.decoder_heads);
    if (j.contains("variant"))
        c.variant = variant_from_string(j.at("variant").get<std::string>());
    maybe(j, "sst_path", c.sst_path);
    maybe(j, "entity_file", c.entity_file);
    maybe(j, "relation_file", c.relation_file);
    maybe(j, "triple_file", c.triple_file);
    maybe(j, "embedding_table_path", c.embedding_table_path);
    maybe(j, "min_coverage", c.min_coverage);
    maybe(j, "train_ratio", c.train_ratio);
    maybe(j, "val_ratio", c.val_ratio);
    maybe(j, "test_ratio", c.test_ratio);
    c.validate();
    return c;
}

std::string ExperimentConfig::to_json() const {
    json j;
    j["lookback"] = lookback;
    j["horizon"] = horizon;
    j["horizons"] = horizons;
    j["batch_size"] = batch_size;
    j["learning_rate"] = learning_rate;
    j["lr_halving_epochs"] = lr_halving_epochs;
    j["max_epochs"] = max_epochs;
    j["patience"] = patience;
    j["seed"] = seed;
    j["patch_length"] = patch_length;
    j["stride"] = stride;
    j["d"] = d;
    j["d_m"] = d_m;
    j["d_k"] = d_k;
    j["token_length"] = token_length;
    j["d_h"] = d_h;
    j["k_hops"] = k_hops;
    j["max_neighbor_regions"] = max_neighbor_regions;
    j["backbone"] = backbone;
    j["backbone_hidden"] = backbone_hidden;
    j["backbone_layers"] = backbone_layers;
    j["backbone_heads"] = backbone_heads;
    j["backbone_context"] = backbone_context;
    j["backbone_seed"] = backbone_seed;
    j["decoder_layers"] = decoder_layers;
    j["decoder_heads"] = decoder_heads;
    j["variant"] = to_string(variant);
    j["sst_path"] = sst_path;
    j["entity_file"] = entity_file;
    j["relation_file"] = relation_file;
    j["triple_file"] = triple_file;
    j["embedding_table_path"] = embedding_table_path;
    j["min_coverage"] = min_coverage;
    j["train_ratio"] = train_ratio;
    j["val_ratio"] = val_ratio;
    j["test_ratio"] = test_ratio;
    return j.dump(2);
}

std::vector<double> lr_schedule(double base, int halving_epochs, int epochs) {
    if (halving_epochs < 1) throw ConfigError("lr_schedule: halving period must be >= 1");
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(std::max(epochs, 0)));
    for (int e = 0; e < epochs; ++e)
        out.push_back(base * std::pow(0.5, e / halving_epochs));
    return out;
}

}  // namespace okgllm
