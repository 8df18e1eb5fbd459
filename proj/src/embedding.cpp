#include "anchorkb/embedding.hpp"

#include <cmath>
#include <stdexcept>

#include "anchorkb/text.hpp"

namespace anchorkb {

HashedBagEmbedder::HashedBagEmbedder(std::size_t dims) : dims_(dims) {
    if (dims == 0) throw std::invalid_argument("embedding dimension must be positive");
}

std::vector<double> HashedBagEmbedder::embed(const std::string& text) const {
    std::vector<double> vec(dims_, 0.0);
    for (const auto& token : tokenize(text)) {
        vec[fnv1a64(token) % dims_] += 1.0;
    }
    double norm_sq = 0.0;
    for (double v : vec) norm_sq += v * v;
    if (norm_sq > 0.0) {
        double norm = std::sqrt(norm_sq);
        for (double& v : vec) v /= norm;
    }
    return vec;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: dimension mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
    return sum;
}

}  // namespace anchorkb
