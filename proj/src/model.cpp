#include "bexp/model.hpp"

#include <cmath>
#include <stdexcept>

namespace bexp {

void ExpertModel::add_expert(BernoulliTemplate mu, std::optional<std::vector<double>> n) {
    std::vector<double> c = n ? std::move(*n) : std::vector<double>(mu.dim(), 0.0);
    if (c.size() != mu.dim()) throw std::invalid_argument("add_expert: counts size mismatch");
    if (!templates.empty() && (mu.dim() != dim() || !(mu.shape == shape()))) {
        throw std::invalid_argument("add_expert: template shape differs from the model");
    }
    templates.push_back(std::move(mu));
    counts.push_back(std::move(c));
}

void ExpertModel::validate() const {
    rule.validate();
    grid.validate();
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
    if (counts.size() != templates.size()) throw std::invalid_argument("counts do not match templates");
    for (std::size_t k = 0; k < templates.size(); ++k) {
        templates[k].validate();
        if (templates[k].dim() != dim() || !(templates[k].shape == shape())) {
            throw std::invalid_argument("templates must share one shape");
        }
        if (counts[k].size() != dim()) throw std::invalid_argument("counts shape mismatch");
        for (double n : counts[k]) {
            if (!(n >= 0.0) || !std::isfinite(n)) throw std::invalid_argument("counts must be nonnegative");
        }
    }
    if (grid.size() > 1 && !shape().is_image() && !templates.empty()) {
        throw std::invalid_argument("transform grids need image-shaped templates");
    }
    if (background && !(*background >= 0.0 && *background <= 1.0)) {
        throw std::invalid_argument("background outside [0,1]");
    }
    if (geometry) geometry->validate();
}

}  // namespace bexp
