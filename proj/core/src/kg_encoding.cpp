#include "okgllm/kg_encoding.hpp"

#include <cmath>

#include "okgllm/errors.hpp"

namespace okgllm {

Adapter::Adapter(int d, std::mt19937_64& rng) : d_(d) {
    if (d < 1) throw ConfigError("adapter: dimension must be positive");
    double bound = std::sqrt(6.0 / static_cast<double>(3 * d));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Eigen::MatrixXd w(2 * d, d);
    for (Eigen::Index i = 0; i < w.rows(); ++i)
        for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = dist(rng);
    W_ = ad::parameter(std::move(w));
    b_ = ad::parameter(Eigen::MatrixXd::Zero(1, d));
}

ad::Var Adapter::fuse(const Eigen::VectorXd& e_struct, const ad::Var& e_text) const {
    if (e_struct.size() != d_ || e_text->value.cols() != d_)
        throw ShapeError("adapter fuse: expected dimension " + std::to_string(d_));
    Eigen::Index l = e_text->value.rows();
    // Broadcast e_struct as a prefix of every token row.
    Eigen::MatrixXd prefix = Eigen::VectorXd::Ones(l) * e_struct.transpose();
    ad::Var both = ad::hcat(ad::constant(std::move(prefix)), e_text);
    return ad::relu(ad::add_rowvec(ad::matmul(both, W_), b_));
}

Eigen::MatrixXd Adapter::fuse_values(const Eigen::VectorXd& e_struct,
                                     const Eigen::MatrixXd& e_text) const {
    return fuse(e_struct, ad::constant(e_text))->value;
}

KnowledgeEncoder::KnowledgeEncoder(const KnowledgeGraph& g,
                                   const EmbeddingTable& table,
                                   std::shared_ptr<const TextEncoder> encoder,
                                   int k_hops, int token_length,
                                   std::map<std::string, double> region_mean_sst)
    : g_(g),
      table_(table),
      encoder_(std::move(encoder)),
      k_hops_(k_hops),
      token_length_(token_length),
      region_mean_sst_(std::move(region_mean_sst)) {
    if (!encoder_) throw ConfigError("knowledge encoder: null text encoder");
    if (encoder_->dim() != table_.d)
        throw ShapeError("knowledge encoder: text dimension " +
                         std::to_string(encoder_->dim()) +
                         " != structural dimension " + std::to_string(table_.d));
    if (token_length_ < 1)
        throw ConfigError("knowledge encoder: token length must be >= 1");
    encoder_identity_ = encoder_->identity();
}

const TextEmbedding& KnowledgeEncoder::text_embedding(
    const std::string& region_id) const {
    auto it = text_cache_.find(region_id);
    if (it != text_cache_.end()) return it->second;

    std::optional<double> mean_sst;
    if (auto s = region_mean_sst_.find(region_id); s != region_mean_sst_.end())
        mean_sst = s->second;
    std::string text = g_.verbalize(region_id, k_hops_, mean_sst);
    auto [ins, ok] =
        text_cache_.emplace(region_id, embed_text(text, *encoder_, token_length_));
    (void)ok;
    return ins->second;
}

ad::Var KnowledgeEncoder::encode_region(const std::string& region_id,
                                        const Adapter& adapter) const {
    const Eigen::VectorXd& e_struct = table_.entity(region_id);
    const TextEmbedding& text = text_embedding(region_id);
    return adapter.fuse(e_struct, ad::constant(text.rows));
}

const std::vector<Eigen::MatrixXd>& KnowledgeEncoder::encode_all_values(
    const std::vector<std::string>& region_ids, const Adapter& adapter) const {
    bool valid = stack_cache_regions_ == region_ids &&
                 stack_cache_w_ == adapter.W_->value &&
                 stack_cache_b_ == adapter.b_->value;
    if (!valid) {
        stack_cache_.clear();
        stack_cache_.reserve(region_ids.size());
        for (const auto& id : region_ids)
            stack_cache_.push_back(encode_region(id, adapter)->value);
        stack_cache_regions_ = region_ids;
        stack_cache_w_ = adapter.W_->value;
        stack_cache_b_ = adapter.b_->value;
    }
    return stack_cache_;
}

}  // namespace okgllm
