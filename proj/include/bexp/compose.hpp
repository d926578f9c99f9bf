#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bexp {

// Probability floor shared by every log/odds computation.
inline constexpr double kClip = 1e-7;

// Largest K for which the interpolated normalized-sum rule enumerates
// its 2^K lattice corners.
inline constexpr std::size_t kMaxExactNormalizedSum = 16;

enum class Rule {
    NoisyOr,
    SumOfOdds,
    Max,
    ArithmeticMean,
    SumOfLogOdds,
    NormalizedSumExact,
    NormalizedSumApprox,
    MaxMinusMin,
};

struct RuleKind {
    Rule variant = Rule::MaxMinusMin;
    double q = 0.5;  // only used by MaxMinusMin

    static RuleKind max_minus_min(double q = 0.5) { return {Rule::MaxMinusMin, q}; }
    static RuleKind of(Rule r) { return {r, 0.5}; }

    void validate() const;

    // Asymmetric rules abstain with 0 ("write-black"), symmetric ones with 1/2.
    bool symmetric() const;

    // The opinion value that leaves a composition unchanged. For
    // MaxMinusMin this is q; with q = 0 the rule behaves as Max.
    double abstention() const;

    // True for models whose "no vote" value is 0: Max, NoisyOr, SumOfOdds
    // and MaxMinusMin with q = 0.
    bool write_black() const { return abstention() == 0.0; }

    // Rules whose composition depends only on the extreme opinions.
    bool extremal() const { return variant == Rule::Max || variant == Rule::MaxMinusMin; }

    friend bool operator==(const RuleKind&, const RuleKind&) = default;
};

std::string_view rule_name(Rule r);
// Accepts the names produced by rule_name; throws std::invalid_argument otherwise.
Rule parse_rule(std::string_view name);
std::span<const Rule> all_rules();

// Composes K expert opinions for one dimension. K = 0 yields the rule's
// abstention value (ArithmeticMean has none and throws).
double compose(const RuleKind& rule, std::span<const double> opinions);

// Dimension-wise composition of equally sized templates.
std::vector<double> compose_template(const RuleKind& rule,
                                     std::span<const std::vector<double>> templates);

// Normalized sum, multilinearly interpolated over the {0,1/2,1}^K
// lattice cell containing the opinions. Requires K <= kMaxExactNormalizedSum.
double normalized_sum_exact(std::span<const double> opinions);

// Lattice formula evaluated directly on real-valued opinions; 1/2 when
// every opinion equals 1/2.
double normalized_sum_approx(std::span<const double> opinions);

// The two rules evaluated on their sufficient statistics. Exposed so that
// inference can track running extremes without re-walking every pick.
// The three branches are the agreeing and mixed cases of
// q + (max - q)_+ - (q - min)_+, written so agreement returns max or min exactly.
inline double compose_max_minus_min(double q, double max_p, double min_p) {
    if (min_p >= q) return max_p;
    if (max_p <= q) return min_p;
    return max_p + min_p - q;
}

}  // namespace bexp
