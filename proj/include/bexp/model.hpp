#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "bexp/compose.hpp"
#include "bexp/likelihood.hpp"
#include "bexp/transform.hpp"

namespace bexp {

// Gaussian over concatenated per-expert (shift_x, shift_y, degrees).
struct GeometricModel {
    std::vector<double> mean;                  // 3K
    std::vector<std::vector<double>> cov;      // 3K x 3K
    std::size_t sample_count = 0;

    std::size_t dim() const { return mean.size(); }
    // Symmetric and PSD within 1e-9, finite mean.
    void validate() const;
};

struct ExpertModel {
    RuleKind rule;
    std::vector<BernoulliTemplate> templates;
    // Effective sample sizes N_k(d) used by online updates. Pseudocounts
    // make these non-integral in general.
    std::vector<std::vector<double>> counts;
    TransformGrid grid;
    double epsilon = 1.0;
    std::optional<GeometricModel> geometry;
    bool one_transform_per_expert = true;
    // Value for pixels shifted in from outside the image. Defaults to the
    // rule's abstention value.
    std::optional<double> background;

    std::size_t size() const { return templates.size(); }
    std::size_t dim() const { return templates.empty() ? 0 : templates.front().dim(); }
    Shape shape() const { return templates.empty() ? Shape{} : templates.front().shape; }
    double fill() const { return background.value_or(rule.abstention()); }

    // Appends an expert with the given counts (zero when omitted).
    void add_expert(BernoulliTemplate mu, std::optional<std::vector<double>> n = std::nullopt);

    void validate() const;
};

}  // namespace bexp
