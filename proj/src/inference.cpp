#include "bexp/inference.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "bexp/parallel.hpp"

namespace bexp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::size_t kScoreBlock = 32;

// Candidate scoring state for one inference run. For extremal rules the
// composition of the picks only depends on the running max/min, so a
// candidate changes the composed template exactly where it raises the
// max or lowers the min; elsewhere the cached per-pixel terms are reused.
// Scores are summed in pixel order and equal log_likelihood() of the full
// recomposition bit for bit.
class PursuitState {
public:
    PursuitState(const ExpertModel& model, const TransformTable& table, const BinaryVector& x)
        : model_(model), table_(table), x_(x), d_(x.dim()) {
        cur_max_.assign(d_, 0.0);
        cur_min_.assign(d_, 0.0);
        cur_c_.assign(d_, 0.0);
        cur_ll_.assign(d_, 0.0);
        if (model.rule.extremal()) build_first_pick_tables();
    }

    // Log-likelihood of the composition with the candidate added.
    double score(std::size_t expert, TransformId t, bool truncated) const {
        const auto src = table_.source(t);
        const auto& mu = model_.templates[expert].probs;
        const double fill = model_.fill();
        const RuleKind& rule = model_.rule;

        if (!rule.extremal()) {
            std::vector<double> ops(picked_.size() + 1);
            double total = 0.0;
            for (std::size_t d = 0; d < d_; ++d) {
                for (std::size_t j = 0; j < picked_.size(); ++j) ops[j] = picked_[j][d];
                ops.back() = src[d] < 0 ? fill : mu[static_cast<std::size_t>(src[d])];
                double c = compose(rule, ops);
                if (truncated) c = std::max(0.5, c);
                total += log_prob_bit(x_.bits[d], c);
            }
            return total;
        }

        const bool is_max = rule.variant == Rule::Max;
        const auto& lp = first_ll_[expert][truncated ? 1 : 0];
        const std::size_t fill_at = mu.size();
        double total = 0.0;
        for (std::size_t d = 0; d < d_; ++d) {
            const std::size_t at = src[d] < 0 ? fill_at : static_cast<std::size_t>(src[d]);
            const double v = at == fill_at ? fill : mu[at];
            if (empty_) {
                total += lp[x_.bits[d]][at];
                continue;
            }
            if (is_max) {
                // The candidate is the composition wherever it raises the max.
                total += v > cur_max_[d] ? lp[x_.bits[d]][at] : cur_ll_[d];
                continue;
            }
            const double c = compose_max_minus_min(rule.q, std::max(cur_max_[d], v), std::min(cur_min_[d], v));
            total += c == cur_c_[d] ? cur_ll_[d] : log_prob_bit(x_.bits[d], c);
        }
        return total;
    }

    // Baseline for the first step: the empty composition, or the all-1/2
    // template when scoring truncated candidates.
    void prepare_first_step(bool truncated) {
        if (!model_.rule.extremal()) return;
        const double base = truncated ? 0.5 : model_.rule.abstention();
        for (std::size_t d = 0; d < d_; ++d) {
            cur_c_[d] = base;
            cur_ll_[d] = log_prob_bit(x_.bits[d], base);
        }
    }

    void accept(const Pick& pick, std::span<const double> composed) {
        std::vector<double> v = transformed_template(model_, table_, pick);
        for (std::size_t d = 0; d < d_; ++d) {
            if (empty_) {
                cur_max_[d] = v[d];
                cur_min_[d] = v[d];
            } else {
                cur_max_[d] = std::max(cur_max_[d], v[d]);
                cur_min_[d] = std::min(cur_min_[d], v[d]);
            }
            cur_c_[d] = composed[d];
            cur_ll_[d] = log_prob_bit(x_.bits[d], composed[d]);
        }
        if (!model_.rule.extremal()) picked_.push_back(std::move(v));
        empty_ = false;
    }

private:
    const ExpertModel& model_;
    const TransformTable& table_;
    const BinaryVector& x_;
    std::size_t d_;
    bool empty_ = true;
    std::vector<double> cur_max_, cur_min_, cur_c_, cur_ll_;
    std::vector<std::vector<double>> picked_;
    // first_ll_[k][truncated][bit][cell]: log-probability of bit when expert
    // k alone sets the composition; cell == dim stands for the fill value.
    std::vector<std::array<std::array<std::vector<double>, 2>, 2>> first_ll_;

    void build_first_pick_tables() {
        const std::size_t dim = model_.dim();
        const double fill = model_.fill();
        const bool is_max = model_.rule.variant == Rule::Max;
        first_ll_.resize(model_.size());
        for (std::size_t k = 0; k < model_.size(); ++k) {
            const auto& mu = model_.templates[k].probs;
            for (int tr = 0; tr < 2; ++tr) {
                for (int bit = 0; bit < 2; ++bit) {
                    auto& row = first_ll_[k][tr][bit];
                    row.resize(dim + 1);
                    for (std::size_t i = 0; i <= dim; ++i) {
                        const double v = i == dim ? fill : mu[i];
                        double c = is_max ? v : compose_max_minus_min(model_.rule.q, v, v);
                        if (tr) c = std::max(0.5, c);
                        row[i] = log_prob_bit(static_cast<std::uint8_t>(bit), c);
                    }
                }
            }
        }
    }
};

}  // namespace

bool default_robustify(const ExpertModel& model) { return model.rule.write_black(); }

std::size_t default_max_picks(const ExpertModel& model) {
    return model.one_transform_per_expert ? model.size() : 2 * model.size();
}

TransformTable make_table(const ExpertModel& model) {
    Shape s = model.shape();
    if (!s.is_image()) {
        if (model.grid.size() != 1) throw std::invalid_argument("transforms require image-shaped templates");
        s = Shape{1, static_cast<int>(model.dim())};
    }
    return TransformTable(model.grid, s);
}

std::vector<double> transformed_template(const ExpertModel& model, const TransformTable& table, const Pick& pick) {
    std::vector<double> out(model.dim());
    table.apply(pick.transform, model.templates.at(pick.expert).probs, model.fill(), out);
    return out;
}

std::vector<double> composed_template(const ExpertModel& model, const TransformTable& table,
                                      std::span<const Pick> picks) {
    if (picks.empty()) {
        return std::vector<double>(model.dim(), compose(model.rule, std::span<const double>{}));
    }
    std::vector<std::vector<double>> vals;
    vals.reserve(picks.size());
    for (const Pick& p : picks) vals.push_back(transformed_template(model, table, p));
    return compose_template(model.rule, vals);
}

std::vector<double> composed_template(const ExpertModel& model, std::span<const Pick> picks) {
    return composed_template(model, make_table(model), picks);
}

Representation lmp_infer(const ExpertModel& model, const BinaryVector& x, const InferOptions& opts) {
    return lmp_infer(model, make_table(model), x, opts);
}

Representation lmp_infer(const ExpertModel& model, const BinaryVector& x, bool robustify_first) {
    InferOptions opts;
    opts.robustify_first = robustify_first;
    return lmp_infer(model, x, opts);
}

Representation lmp_infer(const ExpertModel& model, const TransformTable& table, const BinaryVector& x,
                         const InferOptions& opts) {
    if (model.size() == 0) throw std::invalid_argument("lmp_infer: empty model");
    if (x.dim() != model.dim()) throw std::invalid_argument("lmp_infer: dimension mismatch");
    if (table.size() != model.grid.size() || table.shape().size() != model.dim()) {
        throw std::invalid_argument("lmp_infer: transform table does not match the model");
    }

    const bool robust = opts.robustify_first.value_or(default_robustify(model));
    const std::size_t max_picks = opts.max_picks ? opts.max_picks : default_max_picks(model);
    const std::size_t n_t = table.size();
    const std::size_t n_cand = model.size() * n_t;

    PursuitState state(model, table, x);
    Representation rep;
    std::vector<char> pair_used(n_cand, 0);
    std::vector<char> expert_used(model.size(), 0);
    std::vector<double> scores(n_cand);

    for (std::size_t step = 0; step < max_picks; ++step) {
        const bool truncated = robust && step == 0;
        if (step == 0) state.prepare_first_step(truncated);

        auto score_block = [&](std::size_t b) {
            const std::size_t end = std::min(n_cand, (b + 1) * kScoreBlock);
            for (std::size_t c = b * kScoreBlock; c < end; ++c) {
                const std::size_t k = c / n_t;
                if (pair_used[c] || (model.one_transform_per_expert && expert_used[k])) {
                    scores[c] = kNegInf;
                } else {
                    scores[c] = state.score(k, c % n_t, truncated);
                }
            }
        };
        const std::size_t blocks = (n_cand + kScoreBlock - 1) / kScoreBlock;
        if (opts.parallel) {
            parallel_for(blocks, score_block);
        } else {
            for (std::size_t b = 0; b < blocks; ++b) score_block(b);
        }

        std::size_t best = n_cand;
        for (std::size_t c = 0; c < n_cand; ++c) {
            if (scores[c] == kNegInf) continue;
            if (best == n_cand || scores[c] > scores[best]) best = c;
        }
        if (best == n_cand) break;

        const Pick pick{best / n_t, best % n_t};
        std::vector<Pick> next = rep.picks;
        next.push_back(pick);
        const std::vector<double> composed = composed_template(model, table, next);
        const double ll = log_likelihood(x, composed);
        if (step > 0 && !(ll - rep.loglik > kImprovementTolerance)) break;

        rep.picks = std::move(next);
        rep.loglik = ll;
        rep.trace.push_back(ll);
        pair_used[best] = 1;
        expert_used[pick.expert] = 1;
        state.accept(pick, composed);
    }
    return rep;
}

std::vector<Responsibility> extremal_responsibilities(const ExpertModel& model, const TransformTable& table,
                                                      const Representation& rep) {
    const double q = model.rule.abstention();
    std::vector<std::vector<double>> vals;
    vals.reserve(rep.picks.size());
    for (const Pick& p : rep.picks) vals.push_back(transformed_template(model, table, p));

    std::vector<Responsibility> out(model.dim());
    for (std::size_t d = 0; d < out.size(); ++d) {
        if (vals.empty()) continue;
        std::size_t hi = 0, lo = 0;
        for (std::size_t j = 1; j < vals.size(); ++j) {
            if (vals[j][d] > vals[hi][d]) hi = j;
            if (vals[j][d] < vals[lo][d]) lo = j;
        }
        if (vals[hi][d] > q) out[d].k_star = hi;
        if (vals[lo][d] < q) out[d].l_star = lo;
    }
    return out;
}

std::vector<Responsibility> extremal_responsibilities(const ExpertModel& model, const Representation& rep) {
    return extremal_responsibilities(model, make_table(model), rep);
}

}  // namespace bexp
