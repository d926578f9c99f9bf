#include "bexp/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bexp/compose.hpp"

namespace bexp {

void BernoulliTemplate::validate() const {
    if (probs.empty()) throw std::invalid_argument("empty template");
    if (shape.is_image() && shape.size() != probs.size()) {
        throw std::invalid_argument("template shape does not match its size");
    }
    for (double p : probs) {
        if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("template value outside [0,1]");
    }
}

void BinaryVector::validate() const {
    if (bits.empty()) throw std::invalid_argument("empty binary vector");
    if (shape.is_image() && shape.size() != bits.size()) {
        throw std::invalid_argument("binary vector shape does not match its size");
    }
    for (auto b : bits) {
        if (b > 1) throw std::invalid_argument("binary vector entry not in {0,1}");
    }
}

double log_prob_bit(std::uint8_t bit, double p) {
    const double c = std::clamp(p, kClip, 1.0 - kClip);
    return bit ? std::log(c) : std::log1p(-c);
}

double log_likelihood(const BinaryVector& x, std::span<const double> mu) {
    if (x.bits.size() != mu.size()) throw std::invalid_argument("log_likelihood: dimension mismatch");
    double ll = 0.0;
    for (std::size_t d = 0; d < mu.size(); ++d) ll += log_prob_bit(x.bits[d], mu[d]);
    return ll;
}

double log_likelihood(const BinaryVector& x, const BernoulliTemplate& mu) {
    return log_likelihood(x, std::span<const double>(mu.probs));
}

BernoulliTemplate truncate_template(const BernoulliTemplate& mu) {
    BernoulliTemplate out = mu;
    for (double& p : out.probs) p = std::max(0.5, p);
    return out;
}

BernoulliTemplate mix_uniform(const BernoulliTemplate& mu, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("mix_uniform: alpha must lie in (0,1)");
    BernoulliTemplate out = mu;
    for (double& p : out.probs) p = alpha * p + (1.0 - alpha) / 2.0;
    return out;
}

}  // namespace bexp
