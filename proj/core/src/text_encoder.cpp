#include "okgllm/text_encoder.hpp"

#include <cctype>
#include <cmath>
#include <random>

#include "okgllm/errors.hpp"

namespace okgllm {

HashedTextEncoder::HashedTextEncoder(int d, std::uint64_t seed)
    : d_(d), seed_(seed) {
    if (d < 1) throw ConfigError("text encoder: dimension must be positive");
}

std::string HashedTextEncoder::identity() const {
    return "hashed-v1/d=" + std::to_string(d_) + "/seed=" + std::to_string(seed_);
}

std::vector<std::string> HashedTextEncoder::tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

Eigen::VectorXd HashedTextEncoder::token_vector(const std::string& token) const {
    auto it = cache_.find(token);
    if (it != cache_.end()) return it->second;

    std::uint64_t h = 1469598103934665603ull ^ seed_;
    for (unsigned char c : token) {
        h ^= c;
        h *= 1099511628211ull;
    }
    std::mt19937_64 rng(h);
    std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(d_)));
    Eigen::VectorXd v(d_);
    for (int i = 0; i < d_; ++i) v(i) = dist(rng);
    cache_.emplace(token, v);
    return v;
}

Eigen::MatrixXd HashedTextEncoder::token_embeddings(const std::string& text) const {
    auto tokens = tokenize(text);
    Eigen::MatrixXd out(static_cast<Eigen::Index>(tokens.size()), d_);
    for (std::size_t i = 0; i < tokens.size(); ++i)
        out.row(static_cast<Eigen::Index>(i)) = token_vector(tokens[i]).transpose();
    return out;
}

TextEmbedding embed_text(const std::string& text, const TextEncoder& encoder, int l) {
    if (l < 1) throw ConfigError("embed_text: target length must be >= 1");
    Eigen::MatrixXd tokens = encoder.token_embeddings(text);
    if (tokens.cols() != encoder.dim() && tokens.rows() > 0)
        throw ShapeError("embed_text: encoder returned wrong dimension");

    TextEmbedding out;
    out.rows = Eigen::MatrixXd::Zero(l, encoder.dim());
    out.mask.assign(static_cast<std::size_t>(l), 0);
    Eigen::Index keep = std::min<Eigen::Index>(tokens.rows(), l);
    if (keep > 0) out.rows.topRows(keep) = tokens.topRows(keep);
    for (Eigen::Index i = 0; i < keep; ++i) out.mask[static_cast<std::size_t>(i)] = 1;
    return out;
}

}  // namespace okgllm
