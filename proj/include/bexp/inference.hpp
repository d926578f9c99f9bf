#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "bexp/model.hpp"

namespace bexp {

// Minimum log-likelihood gain (nats) for likelihood matching pursuit to accept a pick.
inline constexpr double kImprovementTolerance = 1e-9;

struct Pick {
    std::size_t expert = 0;
    TransformId transform = 0;
    friend bool operator==(const Pick&, const Pick&) = default;
};

struct Representation {
    std::vector<Pick> picks;
    double loglik = 0.0;         // nats, un-truncated composed template
    std::vector<double> trace;   // loglik after each accepted pick
};

struct InferOptions {
    // Score step-1 candidates with truncated templates. Unset means the
    // model-class default: on for write-black models, off otherwise.
    std::optional<bool> robustify_first;
    // 0 selects the default: K with one transform per expert, else 2K.
    std::size_t max_picks = 0;
    // Score the candidates of a step on worker threads.
    bool parallel = false;
};

bool default_robustify(const ExpertModel& model);
std::size_t default_max_picks(const ExpertModel& model);

// Greedy likelihood matching pursuit over all (expert, transform) pairs.
// Ties go to the lowest candidate index expert * |grid| + transform.
Representation lmp_infer(const ExpertModel& model, const BinaryVector& x, const InferOptions& opts = {});
Representation lmp_infer(const ExpertModel& model, const BinaryVector& x, bool robustify_first);

// Same, reusing a transform table built for the model's grid and shape.
Representation lmp_infer(const ExpertModel& model, const TransformTable& table, const BinaryVector& x,
                         const InferOptions& opts = {});

// Transformed template of one pick in the observation frame.
std::vector<double> transformed_template(const ExpertModel& model, const TransformTable& table, const Pick& pick);

// Composition of the picks' transformed templates; the abstention value
// everywhere for an empty pick list.
std::vector<double> composed_template(const ExpertModel& model, const TransformTable& table,
                                      std::span<const Pick> picks);
std::vector<double> composed_template(const ExpertModel& model, std::span<const Pick> picks);

// Builds the transform table matching a model (identity grid for flat data).
TransformTable make_table(const ExpertModel& model);

// Pick positions holding the most extreme opinion at each observation
// dimension: the maximum when it exceeds q, the minimum when it is below
// q. Ties resolve to the earliest pick.
struct Responsibility {
    std::optional<std::size_t> k_star;
    std::optional<std::size_t> l_star;
    friend bool operator==(const Responsibility&, const Responsibility&) = default;
};

std::vector<Responsibility> extremal_responsibilities(const ExpertModel& model, const TransformTable& table,
                                                      const Representation& rep);
std::vector<Responsibility> extremal_responsibilities(const ExpertModel& model, const Representation& rep);

}  // namespace bexp
