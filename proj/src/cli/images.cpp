#include <algorithm>
#include <cmath>

#include "bexp/cli.hpp"

namespace bexp::cli {

namespace {

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

std::uint8_t lerp_byte(double a, double b, double t) { return static_cast<std::uint8_t>(std::lround(a + (b - a) * t)); }

void check(Shape shape, std::span<const double> values) {
    if (!shape.is_image() || shape.size() != values.size()) throw UsageError("image shape does not match the values");
}

std::string header(const char* magic, Shape shape) {
    return std::string(magic) + "\n" + std::to_string(shape.width) + " " + std::to_string(shape.height) + "\n255\n";
}

}  // namespace

std::string encode_pgm(Shape shape, std::span<const double> values) {
    check(shape, values);
    std::string s = header("P5", shape);
    for (double v : values) s.push_back(static_cast<char>(to_byte(v)));
    return s;
}

std::array<std::uint8_t, 3> diverging_color(double p) {
    p = std::clamp(p, 0.0, 1.0);
    if (p <= 0.5) {
        const double t = p / 0.5;
        return {lerp_byte(0, 128, t), lerp_byte(0, 128, t), lerp_byte(255, 128, t)};
    }
    const double t = (p - 0.5) / 0.5;
    return {lerp_byte(128, 255, t), lerp_byte(128, 255, t), lerp_byte(128, 0, t)};
}

std::string encode_ppm(Shape shape, std::span<const double> values) {
    check(shape, values);
    std::string s = header("P6", shape);
    for (double v : values) {
        for (std::uint8_t c : diverging_color(v)) s.push_back(static_cast<char>(c));
    }
    return s;
}

std::string encode_template(const RuleKind& rule, Shape shape, std::span<const double> values, std::string& ext) {
    if (rule.symmetric()) {
        ext = ".ppm";
        return encode_ppm(shape, values);
    }
    ext = ".pgm";
    return encode_pgm(shape, values);
}

}  // namespace bexp::cli
