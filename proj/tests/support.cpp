#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace oracle {

using bexp::Rule;

namespace {

constexpr double kDelta = 1e-7;

double clamp_p(double p) { return std::min(std::max(p, kDelta), 1.0 - kDelta); }

// Lattice formula on a corner of {0,1/2,1}^K.
double lattice(const std::vector<double>& corner) {
    double num = 0.0, den = 0.0;
    for (double c : corner) {
        num += c - 0.5;
        den += std::fabs(c - 0.5);
    }
    return den == 0.0 ? 0.5 : (num / den + 1.0) / 2.0;
}

// Multilinear interpolation: sum over all corners of the cell with product weights.
double norm_sum_interp(const std::vector<double>& p) {
    const std::size_t k = p.size();
    double total = 0.0;
    for (std::size_t mask = 0; mask < (std::size_t{1} << k); ++mask) {
        std::vector<double> corner(k);
        double w = 1.0;
        for (std::size_t i = 0; i < k; ++i) {
            const double lo = p[i] < 0.5 ? 0.0 : 0.5;
            const double hi = lo + 0.5;
            const double t = (p[i] - lo) / 0.5;
            const bool up = (mask >> i) & 1U;
            corner[i] = up ? hi : lo;
            w *= up ? t : 1.0 - t;
        }
        if (w != 0.0) total += w * lattice(corner);
    }
    return total;
}

}  // namespace

double compose(const bexp::RuleKind& rule, const std::vector<double>& p) {
    switch (rule.variant) {
        case Rule::NoisyOr: {
            double prod = 1.0;
            for (double v : p) prod *= (1.0 - v);
            return 1.0 - prod;
        }
        case Rule::SumOfOdds: {
            double odds = 0.0;
            for (double v : p) {
                const double c = std::min(v, 1.0 - kDelta);
                odds += c / (1.0 - c);
            }
            return odds / (1.0 + odds);
        }
        case Rule::Max:
            return p.empty() ? 0.0 : *std::max_element(p.begin(), p.end());
        case Rule::ArithmeticMean:
            return std::accumulate(p.begin(), p.end(), 0.0) / static_cast<double>(p.size());
        case Rule::SumOfLogOdds: {
            double s = 0.0;
            for (double v : p) s += std::log(clamp_p(v)) - std::log(1.0 - clamp_p(v));
            return 1.0 / (1.0 + std::exp(-s));
        }
        case Rule::NormalizedSumExact:
            return norm_sum_interp(p);
        case Rule::NormalizedSumApprox:
            return lattice(p);
        case Rule::MaxMinusMin: {
            if (p.empty()) return rule.q;
            const double mx = *std::max_element(p.begin(), p.end());
            const double mn = *std::min_element(p.begin(), p.end());
            return rule.q + std::max(mx - rule.q, 0.0) - std::max(rule.q - mn, 0.0);
        }
    }
    return NAN;
}

std::vector<TwoExpertRow> two_expert_table() {
    // (0.5, 0.7) and (0.7, 0.01), worked by hand:
    //   noisy-or         1 - 0.5*0.3 = 0.85           1 - 0.3*0.99 = 0.703
    //   sum of odds      odds 1 + 7/3 -> 10/13        odds 7/3 + 1/99 = 232/99 -> 232/331
    //   max              0.7                          0.7
    //   mean             0.6                          0.355
    //   sum of log-odds  logit 0 + logit .7 -> 0.7    odds 7/3 * 1/99 = 7/297 -> 7/304
    //   norm. sum exact  between (.5,.5)->1/2 and (.5,1)->1 at 0.4: 0.7
    //                    cell [.5,1]x[0,.5], weights .4/.6 and .02/.98:
    //                    .6*.98*0 + .4*.98*.5 + .6*.02*.5 + .4*.02*1 = 0.21
    //   norm. sum approx 0.2/0.2 -> 1                 (-0.29/0.69 + 1)/2 = 0.2/0.69
    //   max-minus-min    0.5 + 0.2 = 0.7              0.5 + 0.2 - 0.49 = 0.21
    return {
        {Rule::NoisyOr, 0.85, 0.703},
        {Rule::SumOfOdds, 10.0 / 13.0, 232.0 / 331.0},
        {Rule::Max, 0.7, 0.7},
        {Rule::ArithmeticMean, 0.6, 0.355},
        {Rule::SumOfLogOdds, 0.7, 7.0 / 304.0},
        {Rule::NormalizedSumExact, 0.7, 0.21},
        {Rule::NormalizedSumApprox, 1.0, 0.2 / 0.69},
        {Rule::MaxMinusMin, 0.7, 0.21},
    };
}

double log_likelihood(const std::vector<std::uint8_t>& x, const std::vector<double>& mu) {
    double s = 0.0;
    for (std::size_t d = 0; d < x.size(); ++d) {
        const double p = clamp_p(mu[d]);
        s += x[d] ? std::log(p) : std::log(1.0 - p);
    }
    return s;
}

std::map<std::string, std::size_t> check_composition_axioms(std::size_t cases, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> kdist(1, 6);
    auto opinions = [&](int k) {
        std::vector<double> p(static_cast<std::size_t>(k));
        for (double& v : p) {
            // Mix lattice values in so exact corners and abstentions get hit.
            const double u = unit(gen);
            v = u < 0.1 ? 0.0 : u < 0.2 ? 0.5 : u < 0.3 ? 1.0 : unit(gen);
        }
        return p;
    };
    std::map<std::string, std::size_t> fail;
    for (const char* name : {"range", "permutation", "abstention", "mean_no_abstention", "idempotence",
                             "duplicate_changes", "mmm_agreement", "mmm_opposition", "monotonicity"}) {
        fail[name] = 0;
    }
    const auto all = bexp::all_rules();
    for (std::size_t i = 0; i < cases; ++i) {
        const auto p = opinions(kdist(gen));
        for (Rule r : all) {
            const bexp::RuleKind rk = bexp::RuleKind::of(r);
            const double v = bexp::compose(rk, p);
            if (!(v >= 0.0 && v <= 1.0)) ++fail["range"];
            auto perm = p;
            std::shuffle(perm.begin(), perm.end(), gen);
            if (bexp::compose(rk, perm) != v) ++fail["permutation"];
        }
        // Abstention: appending the "no vote" value changes nothing, exactly.
        for (Rule r : {Rule::NoisyOr, Rule::SumOfOdds, Rule::Max, Rule::SumOfLogOdds, Rule::NormalizedSumExact,
                       Rule::MaxMinusMin}) {
            const bexp::RuleKind rk = bexp::RuleKind::of(r);
            auto ext = p;
            ext.insert(ext.begin() + static_cast<long>(gen() % (p.size() + 1)), rk.abstention());
            if (bexp::compose(rk, ext) != bexp::compose(rk, p)) ++fail["abstention"];
        }
        // Mean: whatever v is appended, some opinion vector moves.
        {
            const double cand = unit(gen);
            const std::vector<double> a{cand == 0.25 ? 0.75 : 0.25};
            auto ext = a;
            ext.push_back(cand);
            const bexp::RuleKind mean = bexp::RuleKind::of(Rule::ArithmeticMean);
            auto b = std::vector<double>{std::fabs(cand - 0.9) < 1e-12 ? 0.1 : 0.9};
            auto extb = b;
            extb.push_back(cand);
            if (bexp::compose(mean, ext) == bexp::compose(mean, a) && bexp::compose(mean, extb) == bexp::compose(mean, b)) {
                ++fail["mean_no_abstention"];
            }
        }
        // Duplicates: extremal rules ignore them, accumulating rules do not.
        {
            const std::size_t j = gen() % p.size();
            auto dup = p;
            dup.push_back(p[j]);
            for (Rule r : {Rule::Max, Rule::MaxMinusMin}) {
                if (bexp::compose(bexp::RuleKind::of(r), dup) != bexp::compose(bexp::RuleKind::of(r), p)) ++fail["idempotence"];
            }
            std::vector<double> open(p.size());
            for (double& v : open) v = 0.01 + 0.98 * unit(gen);
            const double x = open[j] == 0.5 ? 0.6 : open[j];
            open[j] = x;
            auto odup = open;
            odup.push_back(x);
            for (Rule r : {Rule::NoisyOr, Rule::SumOfOdds, Rule::SumOfLogOdds}) {
                if (bexp::compose(bexp::RuleKind::of(r), odup) == bexp::compose(bexp::RuleKind::of(r), open)) {
                    ++fail["duplicate_changes"];
                }
            }
        }
        // Max-minus-min agreement and opposition at random q.
        {
            const double q = 0.05 + 0.9 * unit(gen);
            const bexp::RuleKind rk = bexp::RuleKind::max_minus_min(q);
            std::vector<double> up(p.size()), down(p.size());
            for (std::size_t k = 0; k < p.size(); ++k) {
                up[k] = q + (1.0 - q) * unit(gen);
                down[k] = q * unit(gen);
            }
            const double mx_up = *std::max_element(up.begin(), up.end());
            const double mn_down = *std::min_element(down.begin(), down.end());
            if (bexp::compose(rk, up) != mx_up) ++fail["mmm_agreement"];
            if (bexp::compose(rk, down) != mn_down) ++fail["mmm_agreement"];
            auto mixed = up;
            mixed.insert(mixed.end(), down.begin(), down.end());
            if (bexp::compose(rk, mixed) != mx_up + mn_down - q) ++fail["mmm_agreement"];
            const double a = unit(gen);
            const double o = bexp::compose(bexp::RuleKind::max_minus_min(), std::vector<double>{a, 1.0 - a});
            // 1 - a is rounded for a < 1/2; allow one unit in the last place of 1.
            if (std::fabs(o - 0.5) > 2.3e-16) ++fail["mmm_opposition"];
        }
        // Monotonicity in each argument.
        {
            const std::size_t j = gen() % p.size();
            auto hi = p;
            hi[j] = p[j] + (1.0 - p[j]) * unit(gen);
            for (Rule r : {Rule::NoisyOr, Rule::SumOfOdds, Rule::Max, Rule::ArithmeticMean, Rule::SumOfLogOdds}) {
                const bexp::RuleKind rk = bexp::RuleKind::of(r);
                if (bexp::compose(rk, hi) < bexp::compose(rk, p)) ++fail["monotonicity"];
            }
        }
    }
    return fail;
}

bexp::ExpertModel m_step(const bexp::ExpertModel& model, const std::vector<bexp::BinaryVector>& data,
                         const std::vector<bexp::Representation>& reps, bool strict_update) {
    const int h = model.shape().height, w = model.shape().width;
    const double q = model.rule.abstention();
    const std::size_t dim = model.dim();
    std::vector<std::vector<double>> num(model.size(), std::vector<double>(dim, 0.0));
    std::vector<std::vector<double>> cnt(model.size(), std::vector<double>(dim, 0.0));

    for (std::size_t n = 0; n < data.size(); ++n) {
        const auto& picks = reps[n].picks;
        // Transformed templates in the observation frame.
        std::vector<std::vector<double>> shown(picks.size(), std::vector<double>(dim, model.fill()));
        for (std::size_t j = 0; j < picks.size(); ++j) {
            const auto tp = model.grid.params(picks[j].transform);
            for (int r = 0; r < h; ++r) {
                for (int c = 0; c < w; ++c) {
                    const int rr = r + tp.shift_y, cc = c + tp.shift_x;
                    if (rr < 0 || rr >= h || cc < 0 || cc >= w) continue;
                    shown[j][static_cast<std::size_t>(rr * w + cc)] = model.templates[picks[j].expert].probs[static_cast<std::size_t>(r * w + c)];
                }
            }
        }
        for (std::size_t j = 0; j < picks.size(); ++j) {
            const auto tp = model.grid.params(picks[j].transform);
            for (int r = 0; r < h; ++r) {
                for (int c = 0; c < w; ++c) {
                    const int rr = r + tp.shift_y, cc = c + tp.shift_x;
                    if (rr < 0 || rr >= h || cc < 0 || cc >= w) continue;  // mask 0
                    const auto o = static_cast<std::size_t>(rr * w + cc);
                    // Earliest pick holding the extreme value, if it is beyond q.
                    std::size_t hi = 0, lo = 0;
                    for (std::size_t i = 1; i < picks.size(); ++i) {
                        if (shown[i][o] > shown[hi][o]) hi = i;
                        if (shown[i][o] < shown[lo][o]) lo = i;
                    }
                    const bool is_k = shown[hi][o] > q && hi == j;
                    const bool is_l = shown[lo][o] < q && lo == j;
                    if (!is_k && !is_l) continue;
                    const auto d = static_cast<std::size_t>(r * w + c);
                    num[picks[j].expert][d] += data[n].bits[o];
                    cnt[picks[j].expert][d] += 1.0;
                }
            }
        }
    }
    bexp::ExpertModel out = model;
    const double eps = model.epsilon;
    for (std::size_t k = 0; k < model.size(); ++k) {
        for (std::size_t d = 0; d < dim; ++d) {
            if (cnt[k][d] == 0.0 && !strict_update) continue;
            out.templates[k].probs[d] = (num[k][d] + eps) / (cnt[k][d] + 2.0 * eps);
            out.counts[k][d] = cnt[k][d] + 2.0 * eps;
        }
    }
    return out;
}

MStepInstance random_m_step_instance(std::mt19937_64& gen, const bexp::RuleKind& rule) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int h = 2 + static_cast<int>(gen() % 3), w = 2 + static_cast<int>(gen() % 3);  // D <= 16
    const std::size_t k = 1 + gen() % 3;
    const std::size_t n = 1 + gen() % 20;
    MStepInstance inst;
    inst.model.rule = rule;
    inst.model.epsilon = 0.5 + unit(gen);
    inst.model.grid = bexp::TransformGrid::shifts(1, 1);
    const bexp::Shape shape{h, w};
    for (std::size_t e = 0; e < k; ++e) {
        std::vector<double> p(shape.size());
        for (double& v : p) {
            const double u = unit(gen);
            v = u < 0.15 ? rule.abstention() : u < 0.25 ? 1.0 : u < 0.3 ? 0.0 : unit(gen);  // ties and abstentions
        }
        inst.model.add_expert(bexp::BernoulliTemplate(std::move(p), shape), std::vector<double>(shape.size(), 1.0));
    }
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::uint8_t> bits(shape.size());
        for (auto& b : bits) b = unit(gen) < 0.5;
        inst.data.emplace_back(std::move(bits), shape);
        bexp::Representation rep;
        std::vector<std::size_t> experts(k);
        std::iota(experts.begin(), experts.end(), 0);
        std::shuffle(experts.begin(), experts.end(), gen);
        const std::size_t picks = 1 + gen() % k;
        for (std::size_t j = 0; j < picks; ++j) rep.picks.push_back({experts[j], gen() % inst.model.grid.size()});
        inst.reps.push_back(std::move(rep));
    }
    return inst;
}

double best_subset_loglik(const bexp::ExpertModel& model, const bexp::BinaryVector& x) {
    const std::size_t k = model.size();
    double best = -INFINITY;
    for (std::size_t mask = 1; mask < (std::size_t{1} << k); ++mask) {
        std::vector<double> mu(model.dim());
        for (std::size_t d = 0; d < model.dim(); ++d) {
            std::vector<double> ops;
            for (std::size_t e = 0; e < k; ++e) {
                if ((mask >> e) & 1U) ops.push_back(model.templates[e].probs[d]);
            }
            mu[d] = compose(model.rule, ops);
        }
        best = std::max(best, log_likelihood(x.bits, mu));
    }
    return best;
}

SubsetReport compare_with_best_subset(std::size_t models, std::size_t dim, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::vector<bexp::RuleKind> rules = {
        bexp::RuleKind::max_minus_min(), bexp::RuleKind::of(Rule::Max), bexp::RuleKind::of(Rule::NoisyOr),
        bexp::RuleKind::of(Rule::SumOfLogOdds), bexp::RuleKind::of(Rule::ArithmeticMean)};
    SubsetReport rep;
    for (std::size_t m = 0; m < models; ++m) {
        bexp::ExpertModel model;
        model.rule = rules[m % rules.size()];
        const std::size_t k = 2 + gen() % 3;  // 2..4
        for (std::size_t e = 0; e < k; ++e) {
            std::vector<double> p(dim);
            for (double& v : p) v = unit(gen);
            model.add_expert(bexp::BernoulliTemplate(std::move(p)));
        }
        for (std::size_t bits = 0; bits < (std::size_t{1} << dim); ++bits) {
            std::vector<std::uint8_t> xb(dim);
            for (std::size_t d = 0; d < dim; ++d) xb[d] = (bits >> d) & 1U;
            const bexp::BinaryVector x(std::move(xb));
            const bexp::Representation r = bexp::lmp_infer(model, x);
            const double best = best_subset_loglik(model, x);
            ++rep.cases;
            if (r.loglik > best + 1e-9) ++rep.violations;
            if (std::fabs(r.loglik - best) <= 1e-9) ++rep.equal;
        }
    }
    return rep;
}

bool trace_increasing(const bexp::Representation& rep) {
    for (std::size_t i = 1; i < rep.trace.size(); ++i) {
        if (!(rep.trace[i] - rep.trace[i - 1] > bexp::kImprovementTolerance)) return false;
    }
    return true;
}

double iou(const std::vector<double>& a, const std::vector<double>& b) {
    std::size_t inter = 0, uni = 0;
    for (std::size_t d = 0; d < a.size(); ++d) {
        const bool x = a[d] > 0.5, y = b[d] > 0.5;
        inter += x && y;
        uni += x || y;
    }
    return uni ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

}  // namespace oracle
