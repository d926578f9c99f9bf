#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "bexp/compose.hpp"
#include "bexp/learning.hpp"
#include "bexp/model.hpp"

namespace bexp {

// ---------------------------------------------------------------------------
// Quadrant model: a side x side image split into four quadrants; each is
// independently activated and then filled entirely with 1 or 0, otherwise
// it is i.i.d. Bernoulli(1/2) noise.
// ---------------------------------------------------------------------------

struct QuadrantModelCfg {
    int side = 6;
    double activation_prob = 0.5;
    double polarity_prob = 0.5;  // probability of an all-1 quadrant once activated
    std::uint64_t seed = 0;

    void validate() const;
};

struct QuadrantData {
    std::vector<BinaryVector> data;
    // Quadrant-major, black (all 1) before white (all 0): TL, TR, BL, BR.
    std::vector<BernoulliTemplate> ground_truth;
};

// Pixel indices of quadrant 0..3 (TL, TR, BL, BR), row-major.
std::vector<std::size_t> quadrant_pixels(int side, int quadrant);

std::vector<BernoulliTemplate> quadrant_ground_truth(int side);

// Ground-truth experts as a max-minus-min model.
ExpertModel quadrant_ground_truth_model(int side);

QuadrantData gen_quadrant(const QuadrantModelCfg& cfg, std::size_t n);

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t samples = 0;
};

// Negative log-likelihood (nats) of x under the best composition of
// ground-truth experts, found by enumerating the 3^4 per-quadrant choices.
double quadrant_oracle_nll(const BinaryVector& x, int side);

// Monte Carlo estimate of the ground-truth model's cross-entropy (nats/image).
McEstimate ground_truth_cross_entropy(const QuadrantModelCfg& cfg, std::size_t n_mc, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Scenes: glyphs placed at random positions on a canvas (write-black),
// then corrupted by independent pixel flips.
// ---------------------------------------------------------------------------

// Five 8x8 shapes with 0/1 values: bar, L, cross, box, diagonal.
std::vector<BernoulliTemplate> builtin_glyphs();

struct SceneCfg {
    Shape canvas{32, 32};
    std::vector<BernoulliTemplate> glyphs = builtin_glyphs();
    std::size_t count = 5;
    double flip_noise = 0.1;
    std::uint64_t seed = 0;

    void validate() const;
};

struct Placement {
    std::size_t glyph = 0;
    TransformId transform = 0;  // in scene_grid(cfg)
    friend bool operator==(const Placement&, const Placement&) = default;
};

struct Scene {
    BinaryVector clean;
    BinaryVector noisy;
    std::vector<Placement> truth;
};

// All in-bounds placements of a glyph's top-left corner.
TransformGrid scene_grid(const SceneCfg& cfg);

// Glyph g drawn at the canvas origin with `on` on its support and `off` elsewhere.
BernoulliTemplate canvas_glyph(const SceneCfg& cfg, std::size_t g, double on, double off);

Scene gen_scene(const SceneCfg& cfg);

// Max-rule model of the glyph bank on the canvas, one template per glyph,
// free to use a glyph more than once. Pixels off every glyph have
// probability `background`; glyph pixels have probability `on`.
ExpertModel scene_model(const SceneCfg& cfg, double on, double background);

struct SceneDemo {
    Scene scene;
    std::vector<Placement> detected;  // in pick order
    std::size_t recovered = 0;        // true placements among the detections
    bool exact = false;               // every placement found and nothing else
};

// Generates a scene and parses it with LMP against scene_model(cfg,
// 1 - flip_noise, flip_noise), truncating step-1 templates when robustify.
SceneDemo scene_demo(const SceneCfg& cfg, bool robustify);

// ---------------------------------------------------------------------------
// Two-bar letters: one horizontal and one vertical bar forming a T, each
// independently shifted and rotated.
// ---------------------------------------------------------------------------

struct BarLetterCfg {
    Shape canvas{56, 56};
    int bar_length = 24;
    int bar_thickness = 6;
    int max_shift = 12;         // pixels, each axis
    double max_rotation = 3.0;  // degrees
    double ink_prob = 0.95;
    double background_prob = 0.02;
    std::uint64_t seed = 0;

    void validate() const;
};

struct BarData {
    std::vector<BinaryVector> data;
    // Un-jittered horizontal then vertical bar, values 0/1.
    std::vector<BernoulliTemplate> ground_truth;
};

BarData gen_bars(const BarLetterCfg& cfg, std::size_t n);

// Unit-step shifts within +-max_shift and rotations {-10,-5,0,5,10} degrees.
TransformGrid bars_grid(const BarLetterCfg& cfg);

// Online setup for bar letters: max rule, up to 4 experts, new experts
// abstain with 0 where already explained, spawn below -0.45 nats/pixel.
TrainConfig bars_train_config(const BarLetterCfg& cfg);

// ---------------------------------------------------------------------------
// Two-expert log-likelihood landscape in the large-image limit. The data
// are all-1 images (prob 1/4), all-0 images (1/4) and Bernoulli(1/2) noise
// (1/2); every expert has one probability shared by all pixels and each
// image type uses its best subset of the two experts.
// ---------------------------------------------------------------------------

// Expected per-pixel log-likelihood (nats) at (p1, p2).
double landscape_value(const RuleKind& rule, double p1, double p2);

struct Landscape {
    std::vector<double> axis;                  // shared by p1 (rows) and p2 (columns)
    std::vector<std::vector<double>> values;   // values[i][j] at (axis[i], axis[j])

    // Grid points within `tol` of the maximum, row-major order.
    std::vector<std::pair<std::size_t, std::size_t>> argmax(double tol = 1e-12) const;
};

// Grid step*i for i = 1.. while below 1, clamped into [kClip, 1 - kClip].
std::vector<double> landscape_axis(double step);

Landscape landscape(const RuleKind& rule, double step);

}  // namespace bexp
