#include "bexp/compose.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace bexp {

namespace {

constexpr std::array<Rule, 8> kRules = {
    Rule::NoisyOr,      Rule::SumOfOdds,          Rule::Max,
    Rule::ArithmeticMean, Rule::SumOfLogOdds,     Rule::NormalizedSumExact,
    Rule::NormalizedSumApprox, Rule::MaxMinusMin,
};

void check_opinions(std::span<const double> opinions) {
    for (double p : opinions) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw std::invalid_argument("opinion outside [0,1]");
        }
    }
}

double clip(double p) { return std::clamp(p, kClip, 1.0 - kClip); }

// Lattice formula at a corner of {0,1/2,1}^K given as offsets c - 1/2.
double lattice_value(double num, double den) {
    if (den == 0.0) return 0.5;
    return 0.5 * (num / den + 1.0);
}

}  // namespace

void RuleKind::validate() const {
    // q = 0 is admitted: it is the reduction of max-minus-min to Max.
    if (variant == Rule::MaxMinusMin && !(q >= 0.0 && q < 1.0)) {
        throw std::invalid_argument("max-minus-min q must lie in [0,1)");
    }
}

bool RuleKind::symmetric() const {
    switch (variant) {
        case Rule::NoisyOr:
        case Rule::SumOfOdds:
        case Rule::Max:
            return false;
        default:
            return true;
    }
}

double RuleKind::abstention() const {
    if (variant == Rule::MaxMinusMin) return q;
    return symmetric() ? 0.5 : 0.0;
}

std::string_view rule_name(Rule r) {
    switch (r) {
        case Rule::NoisyOr: return "noisyor";
        case Rule::SumOfOdds: return "sumofodds";
        case Rule::Max: return "max";
        case Rule::ArithmeticMean: return "mean";
        case Rule::SumOfLogOdds: return "sumoflogodds";
        case Rule::NormalizedSumExact: return "normsumexact";
        case Rule::NormalizedSumApprox: return "normsumapprox";
        case Rule::MaxMinusMin: return "maxminusmin";
    }
    return "?";
}

Rule parse_rule(std::string_view name) {
    for (Rule r : kRules) {
        if (rule_name(r) == name) return r;
    }
    throw std::invalid_argument("unknown composition rule: " + std::string(name));
}

std::span<const Rule> all_rules() { return kRules; }

double normalized_sum_exact(std::span<const double> opinions) {
    check_opinions(opinions);
    const std::size_t k = opinions.size();
    if (k > kMaxExactNormalizedSum) {
        throw std::invalid_argument("normalized_sum_exact: too many opinions, use the approximation");
    }

    // Each coordinate is either a lattice point (one corner) or lies strictly
    // inside [0,1/2] or [1/2,1] (two corners with linear weights).
    struct Axis {
        double lo, hi;  // corner offsets c - 1/2
        double w_hi;    // weight of the upper corner
    };
    std::vector<Axis> axes;
    axes.reserve(k);
    double fixed_num = 0.0;
    double fixed_den = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const double p = opinions[i];
        if (p == 0.0 || p == 0.5 || p == 1.0) {
            fixed_num += p - 0.5;
            fixed_den += std::abs(p - 0.5);
            continue;
        }
        if (p < 0.5) {
            axes.push_back({-0.5, 0.0, p / 0.5});
        } else {
            axes.push_back({0.0, 0.5, (p - 0.5) / 0.5});
        }
    }

    const std::size_t n = axes.size();
    double total = 0.0;
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
        double w = 1.0;
        double num = fixed_num;
        double den = fixed_den;
        for (std::size_t i = 0; i < n; ++i) {
            const Axis& a = axes[i];
            const bool upper = (mask >> i) & 1U;
            const double c = upper ? a.hi : a.lo;
            w *= upper ? a.w_hi : 1.0 - a.w_hi;
            num += c;
            den += std::abs(c);
        }
        total += w * lattice_value(num, den);
    }
    return std::clamp(total, 0.0, 1.0);
}

double normalized_sum_approx(std::span<const double> opinions) {
    check_opinions(opinions);
    double num = 0.0;
    double den = 0.0;
    for (double p : opinions) {
        num += p - 0.5;
        den += std::abs(p - 0.5);
    }
    return std::clamp(lattice_value(num, den), 0.0, 1.0);
}

double compose(const RuleKind& rule, std::span<const double> opinions) {
    check_opinions(opinions);
    if (opinions.empty()) {
        if (rule.variant == Rule::ArithmeticMean) {
            throw std::invalid_argument("arithmetic mean of zero opinions");
        }
        return rule.abstention();
    }

    if (rule.extremal()) {
        if (rule.variant == Rule::Max) return *std::max_element(opinions.begin(), opinions.end());
        const auto [lo, hi] = std::minmax_element(opinions.begin(), opinions.end());
        return compose_max_minus_min(rule.q, *hi, *lo);
    }
    // Accumulating in sorted order makes the result exactly permutation invariant.
    std::vector<double> sorted(opinions.begin(), opinions.end());
    std::sort(sorted.begin(), sorted.end());
    opinions = sorted;

    switch (rule.variant) {
        case Rule::NoisyOr: {
            double keep = 1.0;
            for (double p : opinions) keep *= 1.0 - p;
            return 1.0 - keep;
        }
        case Rule::SumOfOdds: {
            // 0 has odds 0; only the upper end needs the floor.
            double odds = 0.0;
            for (double p : opinions) {
                const double c = std::min(p, 1.0 - kClip);
                odds += c / (1.0 - c);
            }
            return 1.0 - 1.0 / (1.0 + odds);
        }
        case Rule::ArithmeticMean: {
            double s = 0.0;
            for (double p : opinions) s += p;
            return std::clamp(s / static_cast<double>(opinions.size()), 0.0, 1.0);
        }
        case Rule::SumOfLogOdds: {
            double t = 0.0;
            for (double p : opinions) {
                const double c = clip(p);
                t += std::log(c / (1.0 - c));
            }
            return 1.0 / (1.0 + std::exp(-t));
        }
        case Rule::NormalizedSumExact:
            return normalized_sum_exact(opinions);
        case Rule::NormalizedSumApprox:
            return normalized_sum_approx(opinions);
        case Rule::Max:
        case Rule::MaxMinusMin:
            break;
    }
    throw std::logic_error("unhandled rule");
}

std::vector<double> compose_template(const RuleKind& rule,
                                     std::span<const std::vector<double>> templates) {
    if (templates.empty()) {
        throw std::invalid_argument("compose_template needs at least one template");
    }
    const std::size_t d = templates.front().size();
    for (const auto& t : templates) {
        if (t.size() != d) throw std::invalid_argument("template dimension mismatch");
    }
    std::vector<double> out(d);
    std::vector<double> column(templates.size());
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t k = 0; k < templates.size(); ++k) column[k] = templates[k][i];
        out[i] = compose(rule, column);
    }
    return out;
}

}  // namespace bexp
