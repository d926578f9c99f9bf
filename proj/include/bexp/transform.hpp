#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "bexp/likelihood.hpp"

namespace bexp {

using TransformId = std::size_t;

struct TransformParams {
    int shift_x = 0;
    int shift_y = 0;
    double degrees = 0.0;
    friend bool operator==(const TransformParams&, const TransformParams&) = default;
};

// Discrete set of shift/rotation transforms. Ids enumerate row-major over
// rotations x shifts_y x shifts_x:
//     id = (r * shifts_y.size() + iy) * shifts_x.size() + ix
// A transform rotates about the image center ((W-1)/2, (H-1)/2) and then
// shifts. In (column, row) coordinates a positive angle maps the +x axis
// towards +y, i.e. clockwise on screen.
struct TransformGrid {
    std::vector<int> shifts_x{0};
    std::vector<int> shifts_y{0};
    std::vector<double> rotations{0.0};

    static TransformGrid identity() { return {}; }
    // Symmetric shift range [-max, max] in `step` increments on both axes.
    static TransformGrid shifts(int max_shift, int step, std::vector<double> rotations = {0.0});
    // Shifts 0..max_x / 0..max_y, used for placing glyphs on a canvas.
    static TransformGrid placements(int max_x, int max_y);

    void validate() const;
    std::size_t size() const { return shifts_x.size() * shifts_y.size() * rotations.size(); }
    TransformParams params(TransformId t) const;
    TransformId id_of(const TransformParams& p) const;  // throws if absent
    TransformId identity_id() const;
    // Snap arbitrary real parameters to the closest grid element per axis.
    TransformId nearest(double shift_x, double shift_y, double degrees) const;

    friend bool operator==(const TransformGrid&, const TransformGrid&) = default;
};

// Nearest-neighbour index maps for every transform of a grid at one image
// shape. source(t)[d'] is the template pixel shown at observation pixel d'
// (or -1); forward(t)[d] is the observation pixel template pixel d lands
// on (or -1).
class TransformTable {
public:
    TransformTable(const TransformGrid& grid, Shape shape);

    const TransformGrid& grid() const { return grid_; }
    Shape shape() const { return shape_; }
    std::size_t size() const { return source_.size(); }
    std::span<const std::int32_t> source(TransformId t) const { return source_.at(t); }
    std::span<const std::int32_t> forward(TransformId t) const { return forward_.at(t); }

    void apply(TransformId t, std::span<const double> mu, double fill, std::span<double> out) const;

private:
    TransformGrid grid_;
    Shape shape_;
    std::vector<std::vector<std::int32_t>> source_;
    std::vector<std::vector<std::int32_t>> forward_;
};

struct InverseResult {
    BinaryVector data;               // template-frame values
    std::vector<std::uint8_t> mask;  // 1 where the value was observed
};

// Phi_t(mu): pixels without a source take `fill`.
BernoulliTemplate apply(const TransformGrid& grid, TransformId t, const BernoulliTemplate& mu, double fill);

// Phi_t^{-1}(x) in the template frame; masked-out values are 0 and must be ignored.
InverseResult apply_inverse_to_data(const TransformGrid& grid, TransformId t, const BinaryVector& x);

}  // namespace bexp
