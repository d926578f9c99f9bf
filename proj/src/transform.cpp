#include "bexp/transform.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>

namespace bexp {

namespace {

template <typename T>
bool all_distinct(const std::vector<T>& v) {
    return std::set<T>(v.begin(), v.end()).size() == v.size();
}

template <typename T>
std::size_t index_of(const std::vector<T>& v, T value) {
    auto it = std::find(v.begin(), v.end(), value);
    if (it == v.end()) throw std::invalid_argument("transform parameter not in grid");
    return static_cast<std::size_t>(it - v.begin());
}

template <typename T>
std::size_t nearest_index(const std::vector<T>& v, double value) {
    std::size_t best = 0;
    double best_dist = std::abs(static_cast<double>(v[0]) - value);
    for (std::size_t i = 1; i < v.size(); ++i) {
        const double dist = std::abs(static_cast<double>(v[i]) - value);
        if (dist < best_dist) {
            best = i;
            best_dist = dist;
        }
    }
    return best;
}

long round_half_up(double v) { return static_cast<long>(std::floor(v + 0.5)); }

void require_image(Shape s, const char* what) {
    if (!s.is_image()) throw std::invalid_argument(std::string(what) + ": data has no image shape");
}

// Maps (col,row) through rotation by `sign * degrees` about the center,
// with the shift added before (sign < 0) or after (sign > 0) rotating.
struct PixelMapper {
    Shape shape;
    TransformParams p;

    // Template pixel -> observation pixel.
    std::int32_t forward(int col, int row) const {
        const double cx = (shape.width - 1) / 2.0;
        const double cy = (shape.height - 1) / 2.0;
        long c = col, r = row;
        if (p.degrees != 0.0) {
            const double a = p.degrees * std::numbers::pi / 180.0;
            const double dx = col - cx, dy = row - cy;
            c = round_half_up(std::cos(a) * dx - std::sin(a) * dy + cx);
            r = round_half_up(std::sin(a) * dx + std::cos(a) * dy + cy);
        }
        return inside(c + p.shift_x, r + p.shift_y);
    }

    // Observation pixel -> template pixel.
    std::int32_t backward(int col, int row) const {
        const double cx = (shape.width - 1) / 2.0;
        const double cy = (shape.height - 1) / 2.0;
        long c = col - p.shift_x, r = row - p.shift_y;
        if (p.degrees != 0.0) {
            const double a = -p.degrees * std::numbers::pi / 180.0;
            const double dx = c - cx, dy = r - cy;
            c = round_half_up(std::cos(a) * dx - std::sin(a) * dy + cx);
            r = round_half_up(std::sin(a) * dx + std::cos(a) * dy + cy);
        }
        return inside(c, r);
    }

    std::int32_t inside(long c, long r) const {
        if (c < 0 || r < 0 || c >= shape.width || r >= shape.height) return -1;
        return static_cast<std::int32_t>(r * shape.width + c);
    }
};

}  // namespace

TransformGrid TransformGrid::shifts(int max_shift, int step, std::vector<double> rotations) {
    if (max_shift < 0 || step <= 0) throw std::invalid_argument("invalid shift range");
    TransformGrid g;
    g.shifts_x.clear();
    for (int s = -(max_shift / step) * step; s <= max_shift; s += step) g.shifts_x.push_back(s);
    g.shifts_y = g.shifts_x;
    g.rotations = std::move(rotations);
    g.validate();
    return g;
}

TransformGrid TransformGrid::placements(int max_x, int max_y) {
    if (max_x < 0 || max_y < 0) throw std::invalid_argument("invalid placement range");
    TransformGrid g;
    g.shifts_x.resize(static_cast<std::size_t>(max_x) + 1);
    g.shifts_y.resize(static_cast<std::size_t>(max_y) + 1);
    for (int i = 0; i <= max_x; ++i) g.shifts_x[static_cast<std::size_t>(i)] = i;
    for (int i = 0; i <= max_y; ++i) g.shifts_y[static_cast<std::size_t>(i)] = i;
    return g;
}

void TransformGrid::validate() const {
    if (shifts_x.empty() || shifts_y.empty() || rotations.empty()) {
        throw std::invalid_argument("transform grid must be nonempty");
    }
    if (!all_distinct(shifts_x) || !all_distinct(shifts_y) || !all_distinct(rotations)) {
        throw std::invalid_argument("transform grid entries must be distinct");
    }
    for (double r : rotations) {
        if (!std::isfinite(r)) throw std::invalid_argument("non-finite rotation");
    }
    (void)identity_id();
}

TransformParams TransformGrid::params(TransformId t) const {
    if (t >= size()) throw std::out_of_range("transform id out of range");
    const std::size_t nx = shifts_x.size();
    const std::size_t ny = shifts_y.size();
    return {shifts_x[t % nx], shifts_y[(t / nx) % ny], rotations[t / (nx * ny)]};
}

TransformId TransformGrid::id_of(const TransformParams& p) const {
    const std::size_t ix = index_of(shifts_x, p.shift_x);
    const std::size_t iy = index_of(shifts_y, p.shift_y);
    const std::size_t ir = index_of(rotations, p.degrees);
    return (ir * shifts_y.size() + iy) * shifts_x.size() + ix;
}

TransformId TransformGrid::identity_id() const {
    try {
        return id_of({0, 0, 0.0});
    } catch (const std::invalid_argument&) {
        throw std::invalid_argument("transform grid must contain the identity");
    }
}

TransformId TransformGrid::nearest(double shift_x, double shift_y, double degrees) const {
    const std::size_t ix = nearest_index(shifts_x, shift_x);
    const std::size_t iy = nearest_index(shifts_y, shift_y);
    const std::size_t ir = nearest_index(rotations, degrees);
    return (ir * shifts_y.size() + iy) * shifts_x.size() + ix;
}

TransformTable::TransformTable(const TransformGrid& grid, Shape shape) : grid_(grid), shape_(shape) {
    grid_.validate();
    require_image(shape, "TransformTable");
    source_.resize(grid_.size());
    forward_.resize(grid_.size());
    for (TransformId t = 0; t < grid_.size(); ++t) {
        const PixelMapper m{shape_, grid_.params(t)};
        auto& src = source_[t];
        auto& fwd = forward_[t];
        src.resize(shape_.size());
        fwd.resize(shape_.size());
        for (int r = 0; r < shape_.height; ++r) {
            for (int c = 0; c < shape_.width; ++c) {
                const auto d = static_cast<std::size_t>(r * shape_.width + c);
                src[d] = m.backward(c, r);
                fwd[d] = m.forward(c, r);
            }
        }
    }
}

void TransformTable::apply(TransformId t, std::span<const double> mu, double fill, std::span<double> out) const {
    const auto src = source(t);
    if (mu.size() != src.size() || out.size() != src.size()) {
        throw std::invalid_argument("TransformTable::apply: dimension mismatch");
    }
    for (std::size_t d = 0; d < src.size(); ++d) out[d] = src[d] < 0 ? fill : mu[static_cast<std::size_t>(src[d])];
}

BernoulliTemplate apply(const TransformGrid& grid, TransformId t, const BernoulliTemplate& mu, double fill) {
    require_image(mu.shape, "apply");
    if (mu.shape.size() != mu.probs.size()) throw std::invalid_argument("apply: template shape mismatch");
    const PixelMapper m{mu.shape, grid.params(t)};
    BernoulliTemplate out = BernoulliTemplate::filled(mu.shape, fill);
    for (int r = 0; r < mu.shape.height; ++r) {
        for (int c = 0; c < mu.shape.width; ++c) {
            const std::int32_t s = m.backward(c, r);
            if (s >= 0) out.probs[static_cast<std::size_t>(r * mu.shape.width + c)] = mu.probs[static_cast<std::size_t>(s)];
        }
    }
    return out;
}

InverseResult apply_inverse_to_data(const TransformGrid& grid, TransformId t, const BinaryVector& x) {
    require_image(x.shape, "apply_inverse_to_data");
    if (x.shape.size() != x.bits.size()) throw std::invalid_argument("apply_inverse_to_data: shape mismatch");
    const PixelMapper m{x.shape, grid.params(t)};
    InverseResult res{BinaryVector(std::vector<std::uint8_t>(x.bits.size(), 0), x.shape),
                      std::vector<std::uint8_t>(x.bits.size(), 0)};
    for (int r = 0; r < x.shape.height; ++r) {
        for (int c = 0; c < x.shape.width; ++c) {
            const std::int32_t obs = m.forward(c, r);
            if (obs < 0) continue;
            const auto d = static_cast<std::size_t>(r * x.shape.width + c);
            res.data.bits[d] = x.bits[static_cast<std::size_t>(obs)];
            res.mask[d] = 1;
        }
    }
    return res;
}

}  // namespace bexp
