#pragma once
// Token-embedding provider contract plus the desk-scale default: a frozen,
// deterministic embedder with a hash-based tokenizer. A real pretrained
// encoder plugs in behind the same interface.

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

namespace okgllm {

struct TextEmbedding {
    Eigen::MatrixXd rows;        // tokens x d
    std::vector<std::uint8_t> mask;  // 1 = real token, 0 = padding
};

class TextEncoder {
public:
    virtual ~TextEncoder() = default;
    // Untruncated token embeddings, one row per token.
    virtual Eigen::MatrixXd token_embeddings(const std::string& text) const = 0;
    virtual int dim() const = 0;
    virtual std::string identity() const = 0;
    virtual bool deterministic() const { return true; }
};

// Tokenizes on non-alphanumeric boundaries (lowercased) and maps each token
// to a fixed pseudo-random unit-scaled vector seeded by the token's hash.
class HashedTextEncoder : public TextEncoder {
public:
    HashedTextEncoder(int d, std::uint64_t seed);

    Eigen::MatrixXd token_embeddings(const std::string& text) const override;
    int dim() const override { return d_; }
    std::string identity() const override;

    static std::vector<std::string> tokenize(const std::string& text);

private:
    Eigen::VectorXd token_vector(const std::string& token) const;

    int d_;
    std::uint64_t seed_;
    mutable std::unordered_map<std::string, Eigen::VectorXd> cache_;
};

// Truncates to the first l tokens or pads with zero rows; the mask marks
// which rows carry real tokens. Empty text yields an all-padding result.
TextEmbedding embed_text(const std::string& text, const TextEncoder& encoder, int l);

}  // namespace okgllm
