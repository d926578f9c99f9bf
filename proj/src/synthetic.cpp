#include "bexp/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "bexp/likelihood.hpp"
#include "bexp/rng.hpp"

namespace bexp {

// ---------------------------------------------------------------------------
// Quadrants
// ---------------------------------------------------------------------------

void QuadrantModelCfg::validate() const {
    if (side < 2 || side % 2 != 0) throw std::invalid_argument("quadrant side must be even and >= 2");
    if (!(activation_prob >= 0.0 && activation_prob <= 1.0) || !(polarity_prob >= 0.0 && polarity_prob <= 1.0)) {
        throw std::invalid_argument("quadrant probabilities must lie in [0,1]");
    }
}

std::vector<std::size_t> quadrant_pixels(int side, int quadrant) {
    const int half = side / 2;
    const int r0 = (quadrant / 2) * half;
    const int c0 = (quadrant % 2) * half;
    std::vector<std::size_t> out;
    out.reserve(static_cast<std::size_t>(half * half));
    for (int r = r0; r < r0 + half; ++r) {
        for (int c = c0; c < c0 + half; ++c) out.push_back(static_cast<std::size_t>(r * side + c));
    }
    return out;
}

std::vector<BernoulliTemplate> quadrant_ground_truth(int side) {
    const Shape shape{side, side};
    std::vector<BernoulliTemplate> out;
    for (int q = 0; q < 4; ++q) {
        for (double value : {1.0, 0.0}) {
            BernoulliTemplate t = BernoulliTemplate::filled(shape, 0.5);
            for (std::size_t d : quadrant_pixels(side, q)) t.probs[d] = value;
            out.push_back(std::move(t));
        }
    }
    return out;
}

ExpertModel quadrant_ground_truth_model(int side) {
    ExpertModel m;
    m.rule = RuleKind::max_minus_min();
    for (auto& t : quadrant_ground_truth(side)) m.add_expert(std::move(t));
    return m;
}

QuadrantData gen_quadrant(const QuadrantModelCfg& cfg, std::size_t n) {
    cfg.validate();
    if (n == 0) throw std::invalid_argument("gen_quadrant: n must be positive");
    const Shape shape{cfg.side, cfg.side};
    QuadrantData out;
    out.ground_truth = quadrant_ground_truth(cfg.side);
    out.data.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng(cfg.seed, i);
        BinaryVector x(std::vector<std::uint8_t>(shape.size(), 0), shape);
        for (int q = 0; q < 4; ++q) {
            const auto pixels = quadrant_pixels(cfg.side, q);
            if (rng.bernoulli(cfg.activation_prob)) {
                const std::uint8_t v = rng.bernoulli(cfg.polarity_prob) ? 1 : 0;
                for (std::size_t d : pixels) x.bits[d] = v;
            } else {
                for (std::size_t d : pixels) x.bits[d] = rng.bernoulli(0.5) ? 1 : 0;
            }
        }
        out.data.push_back(std::move(x));
    }
    return out;
}

double quadrant_oracle_nll(const BinaryVector& x, int side) {
    static thread_local int cached_side = -1;
    static thread_local std::vector<BernoulliTemplate> gt;
    if (cached_side != side) {
        gt = quadrant_ground_truth(side);
        cached_side = side;
    }
    const RuleKind rule = RuleKind::max_minus_min();
    double best = -std::numeric_limits<double>::infinity();
    // choice digit per quadrant: 0 none, 1 black expert, 2 white expert
    for (int code = 0; code < 81; ++code) {
        std::vector<std::vector<double>> selected;
        int c = code;
        for (int q = 0; q < 4; ++q, c /= 3) {
            const int choice = c % 3;
            if (choice != 0) selected.push_back(gt[static_cast<std::size_t>(2 * q + (choice - 1))].probs);
        }
        const std::vector<double> mu =
            selected.empty() ? std::vector<double>(x.dim(), 0.5) : compose_template(rule, selected);
        best = std::max(best, log_likelihood(x, mu));
    }
    return -best;
}

McEstimate ground_truth_cross_entropy(const QuadrantModelCfg& cfg, std::size_t n_mc, std::uint64_t seed) {
    if (n_mc < 1000) throw std::invalid_argument("ground_truth_cross_entropy: n_mc must be at least 1000");
    QuadrantModelCfg c = cfg;
    c.seed = seed;
    const QuadrantData qd = gen_quadrant(c, n_mc);
    double sum = 0.0, sum_sq = 0.0;
    for (const auto& x : qd.data) {
        const double v = quadrant_oracle_nll(x, cfg.side);
        sum += v;
        sum_sq += v * v;
    }
    const double n = static_cast<double>(n_mc);
    const double mean = sum / n;
    const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
    return {mean, std::sqrt(var / n), n_mc};
}

// ---------------------------------------------------------------------------
// Scenes
// ---------------------------------------------------------------------------

std::vector<BernoulliTemplate> builtin_glyphs() {
    constexpr int n = 8;
    const Shape shape{n, n};
    auto make = [&](auto on) {
        BernoulliTemplate t = BernoulliTemplate::filled(shape, 0.0);
        for (int r = 0; r < n; ++r) {
            for (int c = 0; c < n; ++c) {
                if (on(r, c)) t.probs[static_cast<std::size_t>(r * n + c)] = 1.0;
            }
        }
        return t;
    };
    return {
        make([](int, int c) { return c == 3 || c == 4; }),                                       // bar
        make([](int r, int c) { return c <= 1 || r >= 6; }),                                     // L
        make([](int r, int c) { return r == 3 || r == 4 || c == 3 || c == 4; }),                 // cross
        make([](int r, int c) { return r == 0 || r == n - 1 || c == 0 || c == n - 1; }),         // box
        make([](int r, int c) { return c == r || c == r + 1; }),                                 // diagonal
    };
}

void SceneCfg::validate() const {
    if (!canvas.is_image()) throw std::invalid_argument("scene canvas must be an image shape");
    if (glyphs.empty()) throw std::invalid_argument("scene glyph bank is empty");
    for (const auto& g : glyphs) {
        g.validate();
        if (!(g.shape == glyphs.front().shape) || !g.shape.is_image()) {
            throw std::invalid_argument("scene glyphs must share one image shape");
        }
    }
    const Shape gs = glyphs.front().shape;
    if (gs.height > canvas.height || gs.width > canvas.width) throw std::invalid_argument("glyph larger than canvas");
    if (count < 1) throw std::invalid_argument("scene count must be at least 1");
    if (!(flip_noise >= 0.0 && flip_noise < 0.5)) throw std::invalid_argument("flip noise must lie in [0, 0.5)");
}

TransformGrid scene_grid(const SceneCfg& cfg) {
    const Shape gs = cfg.glyphs.front().shape;
    return TransformGrid::placements(cfg.canvas.width - gs.width, cfg.canvas.height - gs.height);
}

BernoulliTemplate canvas_glyph(const SceneCfg& cfg, std::size_t g, double on, double off) {
    const BernoulliTemplate& glyph = cfg.glyphs.at(g);
    BernoulliTemplate t = BernoulliTemplate::filled(cfg.canvas, off);
    for (int r = 0; r < glyph.shape.height; ++r) {
        for (int c = 0; c < glyph.shape.width; ++c) {
            if (glyph.probs[static_cast<std::size_t>(r * glyph.shape.width + c)] >= 0.5) {
                t.probs[static_cast<std::size_t>(r * cfg.canvas.width + c)] = on;
            }
        }
    }
    return t;
}

Scene gen_scene(const SceneCfg& cfg) {
    cfg.validate();
    const TransformGrid grid = scene_grid(cfg);
    const Shape gs = cfg.glyphs.front().shape;
    Rng place(cfg.seed, 0);
    Scene s;
    s.clean = BinaryVector(std::vector<std::uint8_t>(cfg.canvas.size(), 0), cfg.canvas);
    while (s.truth.size() < cfg.count) {
        const std::size_t g = place.below(cfg.glyphs.size());
        const int x = place.between(0, cfg.canvas.width - gs.width);
        const int y = place.between(0, cfg.canvas.height - gs.height);
        const Placement p{g, grid.id_of({x, y, 0.0})};
        if (std::find(s.truth.begin(), s.truth.end(), p) != s.truth.end()) continue;
        s.truth.push_back(p);
        const BernoulliTemplate& glyph = cfg.glyphs[g];
        for (int r = 0; r < gs.height; ++r) {
            for (int c = 0; c < gs.width; ++c) {
                if (glyph.probs[static_cast<std::size_t>(r * gs.width + c)] >= 0.5) {
                    s.clean.bits[static_cast<std::size_t>((y + r) * cfg.canvas.width + x + c)] = 1;
                }
            }
        }
    }
    Rng flips(cfg.seed, 1);
    s.noisy = s.clean;
    for (auto& b : s.noisy.bits) {
        if (flips.bernoulli(cfg.flip_noise)) b ^= 1U;
    }
    return s;
}

ExpertModel scene_model(const SceneCfg& cfg, double on, double background) {
    cfg.validate();
    ExpertModel m;
    m.rule = RuleKind::of(Rule::Max);
    m.grid = scene_grid(cfg);
    m.one_transform_per_expert = false;
    m.background = background;
    for (std::size_t g = 0; g < cfg.glyphs.size(); ++g) m.add_expert(canvas_glyph(cfg, g, on, background));
    return m;
}

SceneDemo scene_demo(const SceneCfg& cfg, bool robustify) {
    SceneDemo out;
    out.scene = gen_scene(cfg);
    const ExpertModel model = scene_model(cfg, 1.0 - cfg.flip_noise, cfg.flip_noise);
    const Representation rep = lmp_infer(model, out.scene.noisy, robustify);
    for (const Pick& p : rep.picks) out.detected.push_back({p.expert, p.transform});
    for (const Placement& t : out.scene.truth) {
        out.recovered += std::find(out.detected.begin(), out.detected.end(), t) != out.detected.end();
    }
    out.exact = out.recovered == out.scene.truth.size() && out.detected.size() == out.scene.truth.size();
    return out;
}

// ---------------------------------------------------------------------------
// Bars
// ---------------------------------------------------------------------------

namespace {

struct Bar {
    double cx, cy;      // center (column, row)
    double half_along;  // half extent along the bar
    double half_across;
    bool horizontal;
};

// Largest axis-aligned half extents of the bar over rotations up to max_deg.
std::pair<double, double> rotated_extent(const Bar& bar, double max_deg) {
    double ex = 0.0, ey = 0.0;
    for (int i = 0; i <= 64; ++i) {
        const double t = max_deg * i / 64.0 * std::numbers::pi / 180.0;
        const double a = bar.horizontal ? bar.half_along : bar.half_across;
        const double b = bar.horizontal ? bar.half_across : bar.half_along;
        ex = std::max(ex, a * std::cos(t) + b * std::sin(t));
        ey = std::max(ey, a * std::sin(t) + b * std::cos(t));
    }
    return {ex, ey};
}

// A T: the stem hangs from the middle of the cross bar. The pair is placed
// so that the vertical jitter envelopes of both bars sit centered on the canvas.
std::pair<Bar, Bar> bar_layout(const BarLetterCfg& cfg) {
    const double len = cfg.bar_length;
    const double thick = cfg.bar_thickness;
    const double w = cfg.canvas.width;
    const double h = cfg.canvas.height;
    Bar horiz{0.0, 0.0, len / 2.0, thick / 2.0, true};
    Bar vert{0.0, 0.0, len / 2.0, thick / 2.0, false};
    const double top_reach = rotated_extent(horiz, cfg.max_rotation).second + cfg.max_shift;
    const double bottom_reach = rotated_extent(vert, cfg.max_rotation).second + cfg.max_shift;
    // Cross-bar rows start at `top`; the stem's center lies (thick + len) / 2 below the cross bar's.
    const double lo = top_reach - 0.5 - (thick - 1) / 2.0;
    const double hi = h - 0.5 - bottom_reach - (thick + len) / 2.0 - (thick - 1) / 2.0;
    const double top = std::round((lo + hi) / 2.0);
    const double left = std::floor((w - len) / 2.0);
    const double stem_left = std::floor((w - thick) / 2.0);
    horiz.cx = left + (len - 1) / 2.0;
    horiz.cy = top + (thick - 1) / 2.0;
    vert.cx = stem_left + (thick - 1) / 2.0;
    vert.cy = top + thick + (len - 1) / 2.0;
    return {horiz, vert};
}

void draw_bar(const Bar& bar, Shape canvas, int dx, int dy, double degrees, std::vector<std::uint8_t>& mask) {
    const double a = -degrees * std::numbers::pi / 180.0;
    const double ca = std::cos(a), sa = std::sin(a);
    const double cx = bar.cx + dx, cy = bar.cy + dy;
    for (int r = 0; r < canvas.height; ++r) {
        for (int c = 0; c < canvas.width; ++c) {
            const double x = c - cx, y = r - cy;
            const double u = ca * x - sa * y;  // bar-frame coordinates
            const double v = sa * x + ca * y;
            const double along = bar.horizontal ? u : v;
            const double across = bar.horizontal ? v : u;
            if (std::abs(along) < bar.half_along && std::abs(across) < bar.half_across) {
                mask[static_cast<std::size_t>(r * canvas.width + c)] = 1;
            }
        }
    }
}

}  // namespace

void BarLetterCfg::validate() const {
    if (!canvas.is_image()) throw std::invalid_argument("bar canvas must be an image shape");
    if (bar_length < 1 || bar_thickness < 1) throw std::invalid_argument("bar dimensions must be positive");
    if (max_shift < 0 || !(max_rotation >= 0.0)) throw std::invalid_argument("bar jitter must be nonnegative");
    if (!(ink_prob >= 0.0 && ink_prob <= 1.0) || !(background_prob >= 0.0 && background_prob <= 1.0)) {
        throw std::invalid_argument("bar pixel probabilities must lie in [0,1]");
    }
    const auto [horiz, vert] = bar_layout(*this);
    for (const Bar& b : {horiz, vert}) {
        const auto [ex, ey] = rotated_extent(b, max_rotation);
        const double lo_x = b.cx - ex - max_shift, hi_x = b.cx + ex + max_shift;
        const double lo_y = b.cy - ey - max_shift, hi_y = b.cy + ey + max_shift;
        if (lo_x < -0.5 || lo_y < -0.5 || hi_x > canvas.width - 0.5 || hi_y > canvas.height - 0.5) {
            throw std::invalid_argument("bars do not fit the canvas under the maximum jitter");
        }
    }
}

TransformGrid bars_grid(const BarLetterCfg& cfg) {
    cfg.validate();
    return TransformGrid::shifts(cfg.max_shift, 1, {-10.0, -5.0, 0.0, 5.0, 10.0});
}

TrainConfig bars_train_config(const BarLetterCfg& cfg) {
    TrainConfig t;
    t.rule = RuleKind::of(Rule::Max);
    t.k_max = 4;
    t.theta_add = -0.45;
    t.max_init_explained = 0.0;
    t.grid = bars_grid(cfg);
    t.seed = cfg.seed;
    return t;
}

BarData gen_bars(const BarLetterCfg& cfg, std::size_t n) {
    cfg.validate();
    if (n < 2) throw std::invalid_argument("gen_bars: n must be at least 2");
    const auto [horiz, vert] = bar_layout(cfg);
    BarData out;
    for (const Bar& b : {horiz, vert}) {
        std::vector<std::uint8_t> mask(cfg.canvas.size(), 0);
        draw_bar(b, cfg.canvas, 0, 0, 0.0, mask);
        std::vector<double> p(mask.begin(), mask.end());
        out.ground_truth.emplace_back(std::move(p), cfg.canvas);
    }
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng(cfg.seed, i);
        std::vector<std::uint8_t> mask(cfg.canvas.size(), 0);
        for (const Bar& b : {horiz, vert}) {
            const int dx = rng.between(-cfg.max_shift, cfg.max_shift);
            const int dy = rng.between(-cfg.max_shift, cfg.max_shift);
            const double deg = rng.uniform(-cfg.max_rotation, cfg.max_rotation);
            draw_bar(b, cfg.canvas, dx, dy, deg, mask);
        }
        BinaryVector x(std::vector<std::uint8_t>(cfg.canvas.size(), 0), cfg.canvas);
        for (std::size_t d = 0; d < mask.size(); ++d) {
            x.bits[d] = rng.bernoulli(mask[d] ? cfg.ink_prob : cfg.background_prob) ? 1 : 0;
        }
        out.data.push_back(std::move(x));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Landscape
// ---------------------------------------------------------------------------

double landscape_value(const RuleKind& rule, double p1, double p2) {
    double black = -std::numeric_limits<double>::infinity();
    double white = black;
    double noise = black;
    const std::array<std::vector<double>, 4> subsets = {
        std::vector<double>{}, std::vector<double>{p1}, std::vector<double>{p2}, std::vector<double>{p1, p2}};
    for (const auto& s : subsets) {
        if (s.empty() && rule.variant == Rule::ArithmeticMean) continue;
        const double c = compose(rule, s);
        const double l1 = log_prob_bit(1, c);
        const double l0 = log_prob_bit(0, c);
        black = std::max(black, l1);
        white = std::max(white, l0);
        noise = std::max(noise, 0.5 * l1 + 0.5 * l0);
    }
    return 0.25 * black + 0.25 * white + 0.5 * noise;
}

std::vector<double> landscape_axis(double step) {
    if (!(step > 0.0 && step <= 0.1)) throw std::invalid_argument("landscape step must lie in (0, 0.1]");
    auto n = static_cast<std::size_t>(std::floor(1.0 / step + 1e-9));
    if (static_cast<double>(n) * step >= 1.0 - 1e-12) --n;
    std::vector<double> axis(n);
    for (std::size_t i = 0; i < n; ++i) axis[i] = std::clamp(static_cast<double>(i + 1) * step, kClip, 1.0 - kClip);
    return axis;
}

Landscape landscape(const RuleKind& rule, double step) {
    Landscape l;
    l.axis = landscape_axis(step);
    l.values.assign(l.axis.size(), std::vector<double>(l.axis.size()));
    for (std::size_t i = 0; i < l.axis.size(); ++i) {
        for (std::size_t j = 0; j < l.axis.size(); ++j) l.values[i][j] = landscape_value(rule, l.axis[i], l.axis[j]);
    }
    return l;
}

std::vector<std::pair<std::size_t, std::size_t>> Landscape::argmax(double tol) const {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& row : values) {
        for (double v : row) best = std::max(best, v);
    }
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        for (std::size_t j = 0; j < values[i].size(); ++j) {
            if (values[i][j] >= best - tol) out.emplace_back(i, j);
        }
    }
    return out;
}

}  // namespace bexp
