#include "bexp/learning.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bexp/parallel.hpp"

namespace bexp {

void TrainConfig::validate() const {
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
    if (k_max < 1) throw std::invalid_argument("k_max must be at least 1");
    if (!(max_init_explained >= 0.0 && max_init_explained <= 0.5)) {
        throw std::invalid_argument("max_init_explained must lie in [0, 1/2]");
    }
    if (!(init_low >= 0.0 && init_low <= init_high && init_high <= 1.0)) {
        throw std::invalid_argument("random init range must lie in [0,1]");
    }
    rule.validate();
    grid.validate();
}

double mean_loglik(std::span<const Representation> reps) {
    if (reps.empty()) return 0.0;
    double s = 0.0;
    for (const auto& r : reps) s += r.loglik;
    return s / static_cast<double>(reps.size());
}

std::vector<Representation> e_step(const ExpertModel& model, std::span<const BinaryVector> data,
                                   const InferOptions& opts) {
    std::vector<Representation> reps(data.size());
    if (data.empty()) return reps;
    const TransformTable table = make_table(model);
    parallel_for(data.size(), [&](std::size_t n) { reps[n] = lmp_infer(model, table, data[n], opts); });
    return reps;
}

ExpertModel m_step_batch(const ExpertModel& model, std::span<const BinaryVector> data,
                         std::span<const Representation> reps, bool strict_update) {
    if (data.size() != reps.size()) throw std::invalid_argument("m_step_batch: reps/data length mismatch");
    const TransformTable table = make_table(model);
    const std::size_t dim = model.dim();

    std::vector<std::vector<Responsibility>> resp(data.size());
    parallel_for(data.size(), [&](std::size_t n) {
        if (data[n].dim() != dim) throw std::invalid_argument("m_step_batch: dimension mismatch");
        resp[n] = extremal_responsibilities(model, table, reps[n]);
    });

    std::vector<std::vector<double>> hits(model.size(), std::vector<double>(dim, 0.0));
    std::vector<std::vector<double>> total(model.size(), std::vector<double>(dim, 0.0));
    for (std::size_t n = 0; n < data.size(); ++n) {
        const auto& picks = reps[n].picks;
        for (std::size_t j = 0; j < picks.size(); ++j) {
            const std::size_t k = picks[j].expert;
            const auto fwd = table.forward(picks[j].transform);
            for (std::size_t d = 0; d < dim; ++d) {
                if (fwd[d] < 0) continue;
                const auto o = static_cast<std::size_t>(fwd[d]);
                const Responsibility& r = resp[n][o];
                if (r.k_star != j && r.l_star != j) continue;
                hits[k][d] += data[n].bits[o];
                total[k][d] += 1.0;
            }
        }
    }

    ExpertModel out = model;
    const double eps = model.epsilon;
    for (std::size_t k = 0; k < model.size(); ++k) {
        for (std::size_t d = 0; d < dim; ++d) {
            if (total[k][d] == 0.0 && !strict_update) continue;
            out.templates[k].probs[d] = (hits[k][d] + eps) / (total[k][d] + 2.0 * eps);
            out.counts[k][d] = total[k][d] + 2.0 * eps;
        }
    }
    return out;
}

ExpertModel online_update(const ExpertModel& model, const BinaryVector& x, const Representation& rep) {
    return online_update(model, make_table(model), x, rep);
}

ExpertModel online_update(const ExpertModel& model, const TransformTable& table, const BinaryVector& x,
                          const Representation& rep) {
    if (x.dim() != model.dim()) throw std::invalid_argument("online_update: dimension mismatch");
    const auto resp = extremal_responsibilities(model, table, rep);
    ExpertModel out = model;
    for (std::size_t j = 0; j < rep.picks.size(); ++j) {
        const std::size_t k = rep.picks[j].expert;
        const auto fwd = table.forward(rep.picks[j].transform);
        auto& mu = out.templates[k].probs;
        auto& n = out.counts[k];
        for (std::size_t d = 0; d < mu.size(); ++d) {
            if (fwd[d] < 0) continue;
            const auto o = static_cast<std::size_t>(fwd[d]);
            if (resp[o].k_star != j && resp[o].l_star != j) continue;
            mu[d] = (n[d] * mu[d] + x.bits[o]) / (n[d] + 1.0);
            n[d] += 1.0;
        }
    }
    return out;
}

namespace {

double smoothed(std::uint8_t bit, double eps) { return (bit + eps) / (1.0 + 2.0 * eps); }

double bit_prob(std::uint8_t bit, double p) { return bit ? p : 1.0 - p; }

}  // namespace

BernoulliTemplate init_new_expert(const ExpertModel& model, const BinaryVector& x, double explained_value) {
    if (model.size() == 0) {
        std::vector<double> p(x.dim());
        for (std::size_t d = 0; d < p.size(); ++d) p[d] = smoothed(x.bits[d], model.epsilon);
        return BernoulliTemplate(std::move(p), x.shape);
    }
    const TransformTable table = make_table(model);
    return init_new_expert(model, table, x, lmp_infer(model, table, x), explained_value);
}

BernoulliTemplate init_new_expert(const ExpertModel& model, const TransformTable& table, const BinaryVector& x,
                                  const Representation& rep, double explained_value) {
    if (x.dim() != model.dim()) throw std::invalid_argument("init_new_expert: dimension mismatch");
    const std::vector<double> mu = composed_template(model, table, rep.picks);
    const bool write_black = model.rule.write_black();
    const double abstain = write_black ? explained_value : 0.5;
    std::vector<double> out(x.dim());
    for (std::size_t d = 0; d < out.size(); ++d) {
        const double fresh = smoothed(x.bits[d], model.epsilon);
        const double explained = bit_prob(x.bits[d], mu[d]);
        const double bar = write_black ? 0.5 : bit_prob(x.bits[d], fresh);
        out[d] = explained >= bar ? abstain : fresh;
    }
    return BernoulliTemplate(std::move(out), x.shape);
}

ExpertModel initial_model(const BinaryVector& first, const TrainConfig& cfg) {
    ExpertModel model;
    model.rule = cfg.rule;
    model.grid = cfg.grid;
    model.epsilon = cfg.epsilon;
    // The smoothed example is the Beta(eps, eps) posterior after one
    // observation, so it carries 1 + 2 eps effective samples.
    model.add_expert(init_new_expert(model, first), std::vector<double>(first.dim(), 1.0 + 2.0 * cfg.epsilon));
    return model;
}

ExpertModel random_model(Shape shape, std::size_t dim, const TrainConfig& cfg) {
    ExpertModel model;
    model.rule = cfg.rule;
    model.grid = cfg.grid;
    model.epsilon = cfg.epsilon;
    Rng rng(cfg.seed, 0);
    for (std::size_t k = 0; k < cfg.k_max; ++k) {
        std::vector<double> p(dim);
        for (double& v : p) v = rng.uniform(cfg.init_low, cfg.init_high);
        model.add_expert(BernoulliTemplate(std::move(p), shape));
    }
    return model;
}

OnlineResult train_online(std::span<const BinaryVector> data, const TrainConfig& cfg) {
    cfg.validate();
    if (data.empty()) throw std::invalid_argument("train_online: empty stream");
    OnlineResult res{initial_model(data[0], cfg), {}};
    const TransformTable table = make_table(res.model);
    const double dim = static_cast<double>(res.model.dim());
    res.steps.push_back({0, 1, log_likelihood(data[0], res.model.templates[0]) / dim, true});

    for (std::size_t n = 1; n < data.size(); ++n) {
        const BinaryVector& x = data[n];
        if (x.dim() != res.model.dim()) throw std::invalid_argument("train_online: dimension mismatch");
        Representation rep = lmp_infer(res.model, table, x);
        const double per_pixel = rep.loglik / dim;
        if (!std::isfinite(per_pixel)) throw DegenerateModel("non-finite log-likelihood during online training");

        bool spawned = false;
        if (res.model.size() < cfg.k_max && per_pixel < cfg.theta_add) {
            BernoulliTemplate fresh = init_new_expert(res.model, table, x, rep, cfg.max_init_explained);
            const double abstain = res.model.rule.write_black() ? cfg.max_init_explained : 0.5;
            // Cells taken from the example carry its smoothed estimate;
            // abstaining cells have seen no data yet.
            std::vector<double> n0(fresh.dim());
            for (std::size_t d = 0; d < n0.size(); ++d) n0[d] = fresh.probs[d] == abstain ? 0.0 : 1.0 + 2.0 * cfg.epsilon;
            res.model.add_expert(std::move(fresh), std::move(n0));
            // The new expert explains x where it was initialized from x.
            rep.picks.push_back({res.model.size() - 1, res.model.grid.identity_id()});
            spawned = true;
        }
        res.model = online_update(res.model, table, x, rep);
        res.steps.push_back({n, res.model.size(), per_pixel, spawned});
    }
    return res;
}

BatchResult train_batch(std::span<const BinaryVector> data, const TrainConfig& cfg, std::optional<ExpertModel> init) {
    cfg.validate();
    if (data.empty()) throw std::invalid_argument("train_batch: empty data");
    BatchResult res{init ? std::move(*init) : random_model(data[0].shape, data[0].dim(), cfg), {}};
    res.model.validate();

    auto reps = e_step(res.model, data);
    res.mean_loglik.push_back(mean_loglik(reps));
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        res.model = m_step_batch(res.model, data, reps, cfg.strict_update);
        reps = e_step(res.model, data);
        const double ll = mean_loglik(reps);
        if (!std::isfinite(ll)) throw DegenerateModel("non-finite log-likelihood during batch training");
        res.mean_loglik.push_back(ll);
    }
    return res;
}

}  // namespace bexp
