#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <stdexcept>

#include "bexp/learning.hpp"

namespace bexp {

namespace {

constexpr double kCovRidge = 1e-6;

Eigen::MatrixXd to_matrix(const std::vector<std::vector<double>>& rows) {
    const auto n = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    return m;
}

}  // namespace

void GeometricModel::validate() const {
    const std::size_t n = mean.size();
    if (cov.size() != n) throw std::invalid_argument("geometry covariance has wrong size");
    for (double m : mean) {
        if (!std::isfinite(m)) throw std::invalid_argument("geometry mean not finite");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (cov[i].size() != n) throw std::invalid_argument("geometry covariance is not square");
        for (std::size_t j = 0; j < n; ++j) {
            if (!std::isfinite(cov[i][j]) || std::abs(cov[i][j] - cov[j][i]) > 1e-9) {
                throw std::invalid_argument("geometry covariance not symmetric");
            }
        }
    }
    if (n == 0) return;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(to_matrix(cov), Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -1e-9) throw std::invalid_argument("geometry covariance not PSD");
}

GeometricModel fit_geometry(std::span<const Representation> reps, const TransformGrid& grid, std::size_t experts) {
    if (experts == 0) throw std::invalid_argument("fit_geometry: no experts");
    const std::size_t dim = 3 * experts;
    std::vector<Eigen::VectorXd> rows;
    for (const Representation& rep : reps) {
        if (rep.picks.size() != experts) continue;
        std::vector<int> seen(experts, 0);
        Eigen::VectorXd v(static_cast<Eigen::Index>(dim));
        bool ok = true;
        for (const Pick& p : rep.picks) {
            if (p.expert >= experts || seen[p.expert]++) {
                ok = false;
                break;
            }
            const TransformParams tp = grid.params(p.transform);
            const auto base = static_cast<Eigen::Index>(3 * p.expert);
            v(base) = tp.shift_x;
            v(base + 1) = tp.shift_y;
            v(base + 2) = tp.degrees;
        }
        if (ok) rows.push_back(std::move(v));
    }
    if (rows.size() < 2) throw std::invalid_argument("fit_geometry: fewer than 2 representations use every expert once");

    Eigen::VectorXd mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
    for (const auto& r : rows) mean += r;
    mean /= static_cast<double>(rows.size());
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(mean.size(), mean.size());
    for (const auto& r : rows) {
        const Eigen::VectorXd c = r - mean;
        cov += c * c.transpose();
    }
    cov /= static_cast<double>(rows.size() - 1);

    GeometricModel g;
    g.sample_count = rows.size();
    g.mean.assign(mean.data(), mean.data() + mean.size());
    g.cov.assign(dim, std::vector<double>(dim));
    for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t j = 0; j < dim; ++j) {
            g.cov[i][j] = cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        }
    }
    return g;
}

std::vector<double> draw_geometry(const GeometricModel& g, Rng& rng) {
    if (g.dim() == 0) throw std::invalid_argument("geometry not fitted");
    g.validate();
    Eigen::MatrixXd cov = to_matrix(g.cov);
    cov.diagonal().array() += kCovRidge;
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) throw std::invalid_argument("geometry covariance factorization failed");
    Eigen::VectorXd z(cov.rows());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
    const Eigen::VectorXd y = llt.matrixL() * z;
    std::vector<double> out(g.mean);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += y(static_cast<Eigen::Index>(i));
    return out;
}

std::vector<Pick> snap_configuration(std::span<const double> params, const TransformGrid& grid) {
    if (params.size() % 3 != 0) throw std::invalid_argument("configuration length must be a multiple of 3");
    std::vector<Pick> picks;
    for (std::size_t k = 0; k < params.size() / 3; ++k) {
        picks.push_back({k, grid.nearest(params[3 * k], params[3 * k + 1], params[3 * k + 2])});
    }
    return picks;
}

BernoulliTemplate sample_configuration(const GeometricModel& g, const ExpertModel& model, std::uint64_t seed) {
    if (g.dim() != 3 * model.size()) throw std::invalid_argument("geometry does not match the model");
    Rng rng(seed);
    const std::vector<double> params = draw_geometry(g, rng);
    const std::vector<Pick> picks = snap_configuration(params, model.grid);
    return BernoulliTemplate(composed_template(model, picks), model.shape());
}

}  // namespace bexp
