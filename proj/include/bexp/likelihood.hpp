#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace bexp {

// Image shape of a template or observation; {0,0} for flat data.
struct Shape {
    int height = 0;
    int width = 0;

    bool is_image() const { return height > 0 && width > 0; }
    std::size_t size() const { return static_cast<std::size_t>(height) * static_cast<std::size_t>(width); }
    friend bool operator==(const Shape&, const Shape&) = default;
};

// A product-Bernoulli template; probs is row-major when shaped.
struct BernoulliTemplate {
    std::vector<double> probs;
    Shape shape;

    BernoulliTemplate() = default;
    explicit BernoulliTemplate(std::vector<double> p, Shape s = {}) : probs(std::move(p)), shape(s) {}
    static BernoulliTemplate filled(Shape s, double value) {
        return BernoulliTemplate(std::vector<double>(s.size(), value), s);
    }

    std::size_t dim() const { return probs.size(); }
    // Throws std::invalid_argument on an empty template, a value outside
    // [0,1], or a shape that does not cover probs.
    void validate() const;
};

struct BinaryVector {
    std::vector<std::uint8_t> bits;
    Shape shape;

    BinaryVector() = default;
    explicit BinaryVector(std::vector<std::uint8_t> b, Shape s = {}) : bits(std::move(b)), shape(s) {}

    std::size_t dim() const { return bits.size(); }
    void validate() const;
};

// Sum over dimensions of log P(x(d) | mu(d)) in nats, mu clipped to
// [kClip, 1 - kClip].
double log_likelihood(const BinaryVector& x, std::span<const double> mu);
double log_likelihood(const BinaryVector& x, const BernoulliTemplate& mu);

// Per-dimension term of log_likelihood.
double log_prob_bit(std::uint8_t bit, double p);

// max(1/2, mu(d)): the likelihood then only sees the template support.
BernoulliTemplate truncate_template(const BernoulliTemplate& mu);

// alpha * mu(d) + (1 - alpha) / 2 for alpha in (0,1).
BernoulliTemplate mix_uniform(const BernoulliTemplate& mu, double alpha);

}  // namespace bexp
