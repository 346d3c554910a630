#include "okgllm/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "okgllm/errors.hpp"

namespace okgllm {

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng,
                              double scale) {
    std::normal_distribution<double> dist(0.0, scale);
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = dist(rng);
    return m;
}

}  // namespace

std::shared_ptr<const FrozenBackbone> make_backbone(const ExperimentConfig& cfg) {
    if (cfg.backbone == "desk")
        return std::make_shared<DeskBackbone>(cfg.backbone_hidden, cfg.backbone_layers,
                                              cfg.backbone_heads, cfg.backbone_context,
                                              cfg.backbone_seed);
    throw ConfigError("unknown backbone '" + cfg.backbone +
                      "' (only 'desk' is built in; pretrained backbones plug in "
                      "through the FrozenBackbone interface)");
}

OkgLlmModel::OkgLlmModel(const ExperimentConfig& cfg, const KnowledgeGraph* graph,
                         const EmbeddingTable* table,
                         std::shared_ptr<const TextEncoder> encoder,
                         std::shared_ptr<const FrozenBackbone> backbone,
                         std::vector<std::string> region_ids,
                         std::map<std::string, double> region_mean_sst)
    : cfg_(cfg),
      graph_(graph),
      table_(table),
      backbone_(std::move(backbone)),
      region_ids_(std::move(region_ids)) {
    cfg_.validate();
    if (!backbone_) throw ConfigError("model: null backbone");
    if (region_ids_.empty()) throw ConfigError("model: no regions");

    bool uses_kg = cfg_.variant != Variant::no_kg_encoding;
    if (uses_kg) {
        if (!graph_ || !table_ || !encoder)
            throw ConfigError("model: variant needs graph, embedding table and encoder");
        if (!table_->frozen)
            throw ConfigError("model: embedding table must be frozen before use");
        for (const auto& id : region_ids_)
            table_->entity(id);  // throws LookupError naming the region
    }

    std::mt19937_64 rng(cfg_.seed);

    // Temporal stage
    if (cfg_.variant == Variant::no_ts_encoding) {
        flat_w_ = ad::parameter(random_matrix(cfg_.patch_length, cfg_.d_m, rng,
                                              1.0 / std::sqrt(cfg_.patch_length)));
        flat_b_ = ad::parameter(Eigen::MatrixXd::Zero(1, cfg_.d_m));
    } else {
        patch_encoder_ =
            std::make_unique<PatchEncoder>(cfg_.patch_length, cfg_.d_m, cfg_.d_h, rng);
    }

    if (uses_kg) {
        adapter_ = std::make_unique<Adapter>(cfg_.d, rng);
        kg_encoder_ = std::make_unique<KnowledgeEncoder>(
            *graph_, *table_, std::move(encoder), cfg_.k_hops, cfg_.token_length,
            std::move(region_mean_sst));
        region_proj_ = ad::parameter(
            random_matrix(cfg_.d, cfg_.d_m, rng, 1.0 / std::sqrt(cfg_.d)));

        // Key set per region: itself plus regions sharing a 1-hop entity,
        // capped for cost. Deterministic order.
        std::unordered_map<std::string, std::vector<std::string>> entity_to_regions;
        std::unordered_map<std::string, std::vector<std::string>> region_hop1;
        std::unordered_set<std::string> region_set(region_ids_.begin(),
                                                   region_ids_.end());
        for (const auto& rid : region_ids_) {
            std::set<std::string> hop1;
            for (std::size_t idx : graph_->incident(rid)) {
                const Triple& t = graph_->triples()[idx];
                hop1.insert(t.head == rid ? t.tail : t.head);
            }
            for (const auto& e : hop1) {
                entity_to_regions[e].push_back(rid);
                region_hop1[rid].push_back(e);
            }
        }
        key_regions_.resize(region_ids_.size());
        for (std::size_t i = 0; i < region_ids_.size(); ++i) {
            const auto& rid = region_ids_[i];
            std::map<std::string, int> shared;  // neighbor -> shared entity count
            for (const auto& e : region_hop1[rid])
                for (const auto& other : entity_to_regions[e])
                    if (other != rid) ++shared[other];
            std::vector<std::pair<int, std::string>> ranked;
            for (const auto& [other, n] : shared) ranked.emplace_back(-n, other);
            std::sort(ranked.begin(), ranked.end());
            key_regions_[i].push_back(rid);
            for (const auto& [neg, other] : ranked) {
                if (static_cast<int>(key_regions_[i].size()) >
                    cfg_.max_neighbor_regions)
                    break;
                key_regions_[i].push_back(other);
                (void)neg;
            }
        }
    }

    int seq_dim = cfg_.d_k;
    switch (cfg_.variant) {
        case Variant::full:
        case Variant::no_ts_encoding:
            align_ = std::make_unique<AlignmentParams>(cfg_.d_m, cfg_.d, cfg_.d_k, rng);
            align_res_proj_ = ad::parameter(
                random_matrix(cfg_.d_m, cfg_.d_k, rng, 1.0 / std::sqrt(cfg_.d_m)));
            break;
        case Variant::no_alignment:
            query_ln_ = LayerNormParams::trainable(cfg_.d_m);
            concat_kg_proj_ = ad::parameter(
                random_matrix(cfg_.d, cfg_.d_k, rng, 1.0 / std::sqrt(cfg_.d)));
            concat_ts_proj_ = ad::parameter(
                random_matrix(cfg_.d_m, cfg_.d_k, rng, 1.0 / std::sqrt(cfg_.d_m)));
            break;
        case Variant::no_kg_encoding:
            seq_dim = cfg_.d_m;
            break;
    }

    int hidden = backbone_->hidden_size();
    input_proj_ = ad::parameter(
        random_matrix(seq_dim, hidden, rng, 1.0 / std::sqrt(seq_dim)));
    input_bias_ = ad::parameter(Eigen::MatrixXd::Zero(1, hidden));
    decoder_ = std::make_unique<DecoderParams>(hidden, cfg_.decoder_heads,
                                               cfg_.decoder_layers, rng);
    head_ = std::make_unique<ProjectionHead>(hidden, cfg_.horizon, rng);
}

const std::vector<std::string>& OkgLlmModel::key_regions(
    Eigen::Index region_index) const {
    return key_regions_.at(static_cast<std::size_t>(region_index));
}

ad::Var OkgLlmModel::temporal_embedding(const Eigen::VectorXd& normalized_window) const {
    PatchSet patches = patchify(normalized_window, cfg_.patch_length, cfg_.stride);
    ad::Var p = ad::constant(patches.patches);
    if (cfg_.variant == Variant::no_ts_encoding)
        return ad::add_rowvec(ad::matmul(p, flat_w_), flat_b_);
    return patch_encoder_->forward(p);
}

ad::Var OkgLlmModel::knowledge_keys(Eigen::Index region_index) const {
    ad::Var keys;
    for (const auto& rid : key_regions_.at(static_cast<std::size_t>(region_index))) {
        ad::Var e_kg = kg_encoder_->encode_region(rid, *adapter_);
        keys = keys ? ad::vcat(keys, e_kg) : e_kg;
    }
    return keys;
}

OkgLlmModel::Forward OkgLlmModel::forward(Eigen::Index region_index,
                                          const Eigen::VectorXd& window) const {
    if (region_index < 0 ||
        region_index >= static_cast<Eigen::Index>(region_ids_.size()))
        throw LookupError("region index out of range");
    if (window.size() != cfg_.lookback)
        throw ShapeError("forward: expected lookback window of length " +
                         std::to_string(cfg_.lookback));

    Forward out;
    auto [xn, stats] = revin_normalize(window);
    out.stats = stats;
    ad::Var e_ts = temporal_embedding(xn);

    ad::Var seq;  // tokens entering the input projection
    switch (cfg_.variant) {
        case Variant::full:
        case Variant::no_ts_encoding: {
            const auto& rid = region_ids_[static_cast<std::size_t>(region_index)];
            ad::Var e_struct =
                ad::constant(table_->entity(rid).transpose());  // 1 x d
            ad::Var e_region = ad::matmul(e_struct, region_proj_);
            ad::Var e_query = build_query(e_region, e_ts, align_->ln);
            ad::Var keys = knowledge_keys(region_index);
            ad::Var attended = cross_attend(e_query, keys, *align_).output;
            seq = ad::add(ad::matmul(e_query, align_res_proj_), attended);
            out.aligned = seq;
            break;
        }
        case Variant::no_alignment: {
            const auto& rid = region_ids_[static_cast<std::size_t>(region_index)];
            ad::Var e_struct = ad::constant(table_->entity(rid).transpose());
            ad::Var e_region = ad::matmul(e_struct, region_proj_);
            ad::Var e_query = build_query(e_region, e_ts, *query_ln_);
            ad::Var kg_tokens = ad::matmul(
                kg_encoder_->encode_region(rid, *adapter_), concat_kg_proj_);
            ad::Var ts_tokens = ad::matmul(e_query, concat_ts_proj_);
            // Knowledge tokens first so the read-out position stays temporal.
            seq = ad::vcat(kg_tokens, ts_tokens);
            out.aligned = seq;
            break;
        }
        case Variant::no_kg_encoding:
            seq = e_ts;
            break;
    }

    ad::Var inputs = ad::add_rowvec(ad::matmul(seq, input_proj_), input_bias_);
    std::vector<std::uint8_t> valid(static_cast<std::size_t>(inputs->value.rows()), 1);
    ad::Var hidden = backbone_->forward(inputs, valid);
    ad::Var refined = decode(hidden, valid, *decoder_).output;
    out.y_norm = project_normalized(refined, valid, *head_);
    return out;
}

Eigen::VectorXd OkgLlmModel::predict_celsius(Eigen::Index region_index,
                                             const Eigen::VectorXd& window) const {
    Forward f = forward(region_index, window);
    return denormalize_forecast(f.y_norm->value.row(0), f.stats);
}

Eigen::VectorXd OkgLlmModel::aligned_embedding(Eigen::Index region_index,
                                               const Eigen::VectorXd& window) const {
    Forward f = forward(region_index, window);
    const ad::Var& src = f.aligned ? f.aligned : f.y_norm;
    return src->value.colwise().mean().transpose();
}

std::vector<std::pair<std::string, ad::Var>> OkgLlmModel::named_params() const {
    std::vector<std::pair<std::string, ad::Var>> out;
    auto push = [&out](const std::string& name, const ad::Var& v) {
        if (v) out.emplace_back(name, v);
    };
    if (patch_encoder_) {
        push("ts.w1", patch_encoder_->w1_);
        push("ts.b1", patch_encoder_->b1_);
        push("ts.w2", patch_encoder_->w2_);
        push("ts.b2", patch_encoder_->b2_);
    }
    push("ts.flat_w", flat_w_);
    push("ts.flat_b", flat_b_);
    if (adapter_) {
        push("kg.adapter_w", adapter_->W_);
        push("kg.adapter_b", adapter_->b_);
    }
    push("kg.region_proj", region_proj_);
    if (align_) {
        push("align.w_q", align_->w_q);
        push("align.w_k", align_->w_k);
        push("align.w_v", align_->w_v);
        push("align.ln_g", align_->ln.gamma);
        push("align.ln_b", align_->ln.beta);
        push("align.res_proj", align_res_proj_);
    }
    if (query_ln_) {
        push("concat.ln_g", query_ln_->gamma);
        push("concat.ln_b", query_ln_->beta);
    }
    push("concat.kg_proj", concat_kg_proj_);
    push("concat.ts_proj", concat_ts_proj_);
    push("backbone_in.w", input_proj_);
    push("backbone_in.b", input_bias_);
    if (decoder_) {
        int li = 0;
        for (const auto& blk : decoder_->layers) {
            std::string pre = "decoder." + std::to_string(li++) + ".";
            for (std::size_t h = 0; h < blk.w_q.size(); ++h) {
                push(pre + "w_q" + std::to_string(h), blk.w_q[h]);
                push(pre + "w_k" + std::to_string(h), blk.w_k[h]);
                push(pre + "w_v" + std::to_string(h), blk.w_v[h]);
            }
            push(pre + "w_o", blk.w_o);
            push(pre + "ln1_g", blk.ln1_g);
            push(pre + "ln1_b", blk.ln1_b);
            push(pre + "ln2_g", blk.ln2_g);
            push(pre + "ln2_b", blk.ln2_b);
            push(pre + "ff_w1", blk.ff_w1);
            push(pre + "ff_b1", blk.ff_b1);
            push(pre + "ff_w2", blk.ff_w2);
            push(pre + "ff_b2", blk.ff_b2);
        }
    }
    if (head_) {
        push("head.w", head_->w);
        push("head.b", head_->b);
    }
    return out;
}

std::vector<ad::Var> OkgLlmModel::trainable_params() const {
    std::vector<ad::Var> out;
    for (auto& [name, v] : named_params()) out.push_back(v);
    return out;
}

std::size_t OkgLlmModel::trainable_parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : trainable_params())
        n += static_cast<std::size_t>(p->value.size());
    return n;
}

}  // namespace okgllm
