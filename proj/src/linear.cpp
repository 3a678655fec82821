#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>

#include "ctxrec/error.hpp"
#include "ctxrec/learners.hpp"
#include "ctxrec/rng.hpp"

namespace ctxrec {

Standardizer Standardizer::fit(DesignView x) {
    Standardizer s;
    s.mean.assign(x.cols, 0.0);
    s.scale.assign(x.cols, 0.0);
    if (x.rows == 0) return s;
    for (std::size_t i = 0; i < x.rows; ++i)
        for (std::size_t j = 0; j < x.cols; ++j) s.mean[j] += x.at(i, j);
    for (auto& m : s.mean) m /= static_cast<double>(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i)
        for (std::size_t j = 0; j < x.cols; ++j) {
            const double d = x.at(i, j) - s.mean[j];
            s.scale[j] += d * d;
        }
    for (std::size_t j = 0; j < x.cols; ++j) {
        const double sd = std::sqrt(s.scale[j] / static_cast<double>(x.rows));
        // Spread below rounding noise of the mean counts as constant.
        s.scale[j] = sd > 1e-12 * std::max(1.0, std::abs(s.mean[j])) ? sd : 0.0;
    }
    return s;
}

double LinearModel::predict(std::span<const double> row) const {
    double y = bias;
    for (std::size_t j = 0; j < weights.size(); ++j)
        if (weights[j] != 0.0) y += weights[j] * standardizer.transform(j, row[j]);
    return y;
}

std::vector<double> LinearModel::coefficients() const {
    std::vector<double> c(weights.size(), 0.0);
    for (std::size_t j = 0; j < weights.size(); ++j)
        if (standardizer.scale[j] > 0) c[j] = weights[j] / standardizer.scale[j];
    return c;
}

double LinearModel::intercept() const {
    double b = bias;
    for (std::size_t j = 0; j < weights.size(); ++j)
        if (standardizer.scale[j] > 0) b -= weights[j] * standardizer.mean[j] / standardizer.scale[j];
    return b;
}

namespace {

// Standardized copy of the non-constant columns.
Eigen::MatrixXd standardized(DesignView x, const Standardizer& s, const std::vector<std::size_t>& active) {
    Eigen::MatrixXd z(static_cast<Eigen::Index>(x.rows), static_cast<Eigen::Index>(active.size()));
    for (std::size_t i = 0; i < x.rows; ++i)
        for (std::size_t k = 0; k < active.size(); ++k)
            z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = s.transform(active[k], x.at(i, active[k]));
    return z;
}

std::vector<std::size_t> active_columns(const Standardizer& s) {
    std::vector<std::size_t> active;
    for (std::size_t j = 0; j < s.scale.size(); ++j)
        if (s.scale[j] > 0) active.push_back(j);
    return active;
}

double soft_threshold(double v, double t) {
    if (v > t) return v - t;
    if (v < -t) return v + t;
    return 0.0;
}

}  // namespace

LinearModel fit_least_squares(DesignView x, std::span<const double> y, std::span<const double> sample_weights) {
    require(x.rows >= 1 && y.size() == x.rows, "least squares: target length must match rows");
    require(sample_weights.empty() || sample_weights.size() == x.rows, "least squares: weight length must match rows");
    LinearModel m;
    m.standardizer = Standardizer::fit(x);
    m.weights.assign(x.cols, 0.0);
    const auto active = active_columns(m.standardizer);
    const auto n = static_cast<Eigen::Index>(x.rows);

    Eigen::MatrixXd a(n, static_cast<Eigen::Index>(active.size()) + 1);
    a.col(0).setOnes();
    if (!active.empty()) a.rightCols(static_cast<Eigen::Index>(active.size())) = standardized(x, m.standardizer, active);
    Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(y.data(), n);
    if (!sample_weights.empty()) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const double w = std::sqrt(std::max(0.0, sample_weights[static_cast<std::size_t>(i)]));
            a.row(i) *= w;
            b(i) *= w;
        }
    }
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
    Eigen::VectorXd sol = cod.solve(b);
    m.bias = sol(0);
    for (std::size_t k = 0; k < active.size(); ++k) m.weights[active[k]] = sol(static_cast<Eigen::Index>(k) + 1);
    return m;
}

LinearModel fit_lasso(DesignView x, std::span<const double> y, double lambda) {
    require(x.rows >= 1 && y.size() == x.rows, "lasso: target length must match rows");
    require(lambda >= 0 && std::isfinite(lambda), "lasso: lambda must be finite and non-negative");
    LinearModel m;
    m.lambda = lambda;
    m.standardizer = Standardizer::fit(x);
    m.weights.assign(x.cols, 0.0);
    const auto active = active_columns(m.standardizer);
    const double n = static_cast<double>(x.rows);

    const double y_mean = std::accumulate(y.begin(), y.end(), 0.0) / n;
    m.bias = y_mean;
    if (active.empty()) return m;

    // Covariance-form coordinate descent: with centred columns the
    // intercept is the label mean and only the Gram matrix is needed.
    const Eigen::MatrixXd z = standardized(x, m.standardizer, active);
    Eigen::VectorXd yc = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(x.rows));
    yc.array() -= y_mean;
    const Eigen::MatrixXd gram = (z.transpose() * z) / n;
    const Eigen::VectorXd corr = (z.transpose() * yc) / n;

    const auto p = static_cast<Eigen::Index>(active.size());
    Eigen::VectorXd w = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd gw = Eigen::VectorXd::Zero(p);  // gram * w
    constexpr int kMaxSweeps = 100000;
    constexpr double kTolerance = 1e-12;
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        double max_delta = 0;
        for (Eigen::Index j = 0; j < p; ++j) {
            const double gjj = gram(j, j);
            if (gjj <= 0) continue;
            const double rho = corr(j) - gw(j) + gjj * w(j);
            const double updated = soft_threshold(rho, lambda) / gjj;
            const double delta = updated - w(j);
            if (delta != 0.0) {
                gw += gram.col(j) * delta;
                w(j) = updated;
                max_delta = std::max(max_delta, std::abs(delta));
            }
        }
        if (max_delta < kTolerance) break;
    }
    for (std::size_t k = 0; k < active.size(); ++k) m.weights[active[k]] = w(static_cast<Eigen::Index>(k));
    return m;
}

double select_lasso_lambda(DesignView x, std::span<const double> y, std::span<const double> grid, std::uint64_t seed,
                           std::size_t folds) {
    require(!grid.empty(), "lasso: empty lambda grid");
    folds = std::min(folds, x.rows);
    if (folds < 2) return grid.front();

    std::vector<std::size_t> order(x.rows);
    std::iota(order.begin(), order.end(), 0);
    Rng rng = make_rng(seed, "lasso-cv");
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::size_t> fold_of(x.rows);
    for (std::size_t k = 0; k < order.size(); ++k) fold_of[order[k]] = k % folds;

    std::vector<double> mse(grid.size(), 0.0);
    for (std::size_t f = 0; f < folds; ++f) {
        std::vector<double> train_x, train_y;
        std::vector<std::size_t> test;
        for (std::size_t i = 0; i < x.rows; ++i) {
            if (fold_of[i] == f) {
                test.push_back(i);
            } else {
                auto r = x.row(i);
                train_x.insert(train_x.end(), r.begin(), r.end());
                train_y.push_back(y[i]);
            }
        }
        const DesignView train{train_x, train_y.size(), x.cols};
        for (std::size_t g = 0; g < grid.size(); ++g) {
            const auto model = fit_lasso(train, train_y, grid[g]);
            for (auto i : test) {
                const double e = y[i] - model.predict(x.row(i));
                mse[g] += e * e;
            }
        }
    }
    std::size_t best = 0;
    for (std::size_t g = 1; g < grid.size(); ++g)
        if (mse[g] < mse[best]) best = g;
    return grid[best];
}

}  // namespace ctxrec
