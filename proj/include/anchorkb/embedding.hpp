#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace anchorkb {

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::vector<double> embed(const std::string& text) const = 0;
    virtual std::size_t dims() const = 0;
};

// Deterministic bag-of-words embedding: lowercase, split on non-alphanumeric
// bytes, bucket each token by its 64-bit FNV-1a hash modulo the dimension,
// count, then L2-normalize. Text with no tokens embeds to the zero vector.
// Cosine similarity of two embeddings is their dot product.
class HashedBagEmbedder : public Embedder {
public:
    static constexpr std::size_t kDefaultDims = 256;

    explicit HashedBagEmbedder(std::size_t dims = kDefaultDims);

    std::vector<double> embed(const std::string& text) const override;
    std::size_t dims() const override { return dims_; }

private:
    std::size_t dims_;
};

double dot(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace anchorkb
