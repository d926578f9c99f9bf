#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "bexp/inference.hpp"
#include "bexp/model.hpp"
#include "bexp/rng.hpp"

namespace bexp {

// Raised when training produces non-finite likelihoods or parameters.
class DegenerateModel : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TrainConfig {
    double epsilon = 1.0;
    std::size_t k_max = 8;
    std::size_t epochs = 5;
    // Spawn a new expert online when the example's mean per-pixel
    // log-likelihood (nats) under its inferred composition is below this.
    double theta_add = std::log(0.6);
    RuleKind rule = RuleKind::max_minus_min();
    std::uint64_t seed = 0;
    TransformGrid grid = TransformGrid::identity();
    // Range of the i.i.d. uniform values used for random initialization.
    double init_low = 0.3;
    double init_high = 0.7;
    // Reset never-assigned cells to the prior mean, as the closed-form
    // update does literally. Off: they keep their previous value.
    bool strict_update = false;
    // Value a new expert of a write-black model takes where the current
    // composition already explains the example. The printed rule uses 1/2;
    // 0 keeps the new expert's background at "no vote".
    double max_init_explained = 0.5;

    void validate() const;
};

// Closed-form M-step: each template cell becomes the pseudocount-smoothed
// mean of the inverse-transformed data over the examples in which the
// expert held the extreme opinion (max above q or min below q) at the
// observation pixel the cell maps to.
ExpertModel m_step_batch(const ExpertModel& model, std::span<const BinaryVector> data,
                         std::span<const Representation> reps, bool strict_update = false);

// Hard E-step: one likelihood-matching-pursuit representation per example.
std::vector<Representation> e_step(const ExpertModel& model, std::span<const BinaryVector> data,
                                   const InferOptions& opts = {});

// Running-mean update of the responsible cells; N_k(d) counts the
// contributions (plus pseudocounts folded in at initialization).
ExpertModel online_update(const ExpertModel& model, const BinaryVector& x, const Representation& rep);
ExpertModel online_update(const ExpertModel& model, const TransformTable& table, const BinaryVector& x,
                          const Representation& rep);

// Template for expert K+1 fitted to the part of x the current composition
// explains worse than the smoothed example (x + eps) / (1 + 2 eps).
// With an empty model this is the smoothed example itself.
// For write-black models explained cells get `explained_value` (see
// TrainConfig::max_init_explained), otherwise 1/2.
BernoulliTemplate init_new_expert(const ExpertModel& model, const BinaryVector& x, double explained_value = 0.5);
BernoulliTemplate init_new_expert(const ExpertModel& model, const TransformTable& table, const BinaryVector& x,
                                  const Representation& rep, double explained_value = 0.5);

// Single-expert model whose template is the smoothed first example.
ExpertModel initial_model(const BinaryVector& first, const TrainConfig& cfg);

// Model with k_max random templates, values uniform in [init_low, init_high).
ExpertModel random_model(Shape shape, std::size_t dim, const TrainConfig& cfg);

struct OnlineStep {
    std::size_t index = 0;
    std::size_t experts = 0;       // after processing the example
    double loglik_per_pixel = 0.0;  // under the composition inferred before updating
    bool spawned = false;
};

struct OnlineResult {
    ExpertModel model;
    std::vector<OnlineStep> steps;
};

OnlineResult train_online(std::span<const BinaryVector> data, const TrainConfig& cfg);

struct BatchResult {
    ExpertModel model;
    // Mean train log-likelihood (nats/example) of the initial model and
    // after each epoch.
    std::vector<double> mean_loglik;
};

// Alternates e_step and m_step_batch for cfg.epochs iterations, starting
// from `init` or from random_model when no initialization is given.
BatchResult train_batch(std::span<const BinaryVector> data, const TrainConfig& cfg,
                        std::optional<ExpertModel> init = std::nullopt);

// Sample mean and covariance (n - 1 denominator) of per-expert
// (shift_x, shift_y, degrees) over representations using every one of the
// `experts` experts exactly once.
GeometricModel fit_geometry(std::span<const Representation> reps, const TransformGrid& grid, std::size_t experts);

// One draw from the fitted Gaussian (covariance regularized by 1e-6 on the diagonal).
std::vector<double> draw_geometry(const GeometricModel& g, Rng& rng);

// Snaps a drawn parameter vector to grid transforms, one pick per expert.
std::vector<Pick> snap_configuration(std::span<const double> params, const TransformGrid& grid);

// Composed template of all experts at a configuration drawn with the given seed.
BernoulliTemplate sample_configuration(const GeometricModel& g, const ExpertModel& model, std::uint64_t seed);

double mean_loglik(std::span<const Representation> reps);

}  // namespace bexp
