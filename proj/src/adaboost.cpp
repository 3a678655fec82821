#include <algorithm>
#include <cmath>
#include <numeric>

#include "ctxrec/error.hpp"
#include "ctxrec/learners.hpp"

namespace ctxrec {

namespace {

constexpr double kMinError = 1e-10;

std::vector<std::vector<std::size_t>> presort(DesignView x) {
    std::vector<std::vector<std::size_t>> sorted(x.cols, std::vector<std::size_t>(x.rows));
    for (std::size_t j = 0; j < x.cols; ++j) {
        auto& order = sorted[j];
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x.at(a, j) < x.at(b, j); });
    }
    return sorted;
}

Stump search_stump(DesignView x, std::span<const int> labels, std::span<const double> w,
                   const std::vector<std::vector<std::size_t>>& sorted, double& error) {
    double total_pos = 0, total_neg = 0;
    for (std::size_t i = 0; i < x.rows; ++i) (labels[i] != 0 ? total_pos : total_neg) += w[i];

    // Fallback: a constant vote for the heavier class.
    Stump best;
    best.polarity = total_pos >= total_neg ? 1 : -1;
    error = std::min(total_pos, total_neg);
    bool have_split = false;

    for (std::size_t j = 0; j < x.cols; ++j) {
        const auto& order = sorted[j];
        double left_pos = 0, left_neg = 0;
        for (std::size_t k = 0; k + 1 < order.size(); ++k) {
            (labels[order[k]] != 0 ? left_pos : left_neg) += w[order[k]];
            const double a = x.at(order[k], j);
            const double b = x.at(order[k + 1], j);
            if (!(a < b)) continue;
            // polarity +1: right side votes positive
            const double err_plus = left_pos + (total_neg - left_neg);
            const double err_minus = left_neg + (total_pos - left_pos);
            const double err = std::min(err_plus, err_minus);
            if (!have_split || err < error - 1e-15) {
                have_split = true;
                error = err;
                best.feature = static_cast<int>(j);
                double mid = a + (b - a) / 2;
                if (!(mid < b)) mid = a;
                best.threshold = mid;
                best.polarity = err_plus <= err_minus ? 1 : -1;
            }
        }
    }
    if (have_split && std::min(total_pos, total_neg) < error - 1e-15) {
        // No split beats the constant vote.
        best = Stump{};
        best.polarity = total_pos >= total_neg ? 1 : -1;
        error = std::min(total_pos, total_neg);
    }
    const double total = total_pos + total_neg;
    if (total > 0) error /= total;
    return best;
}

double weighted_median(std::vector<std::pair<double, double>> values) {
    std::sort(values.begin(), values.end());
    double total = 0;
    for (const auto& v : values) total += v.second;
    double acc = 0;
    for (const auto& [value, weight] : values) {
        acc += weight;
        if (acc >= 0.5 * total) return value;
    }
    return values.back().first;
}

}  // namespace

Stump best_stump(DesignView x, std::span<const int> labels, std::span<const double> weights, double* error) {
    require(labels.size() == x.rows && weights.size() == x.rows, "stump: length mismatch");
    double err = 0;
    auto s = search_stump(x, labels, weights, presort(x), err);
    if (error) *error = err;
    return s;
}

double BoostedStumps::margin(std::span<const double> row) const {
    double f = 0;
    for (std::size_t t = 0; t < stumps.size(); ++t) f += alphas[t] * stumps[t].vote(row);
    return f;
}

BoostedStumps fit_adaboost_m1(DesignView x, std::span<const int> labels, int rounds) {
    require(labels.size() == x.rows && x.rows >= 1, "adaboost: label length must match rows");
    require(rounds >= 1, "adaboost: rounds must be positive");
    const auto sorted = presort(x);
    std::vector<double> w(x.rows, 1.0 / static_cast<double>(x.rows));
    BoostedStumps model;
    for (int t = 0; t < rounds; ++t) {
        double eps = 0;
        const Stump stump = search_stump(x, labels, w, sorted, eps);
        if (eps >= 0.5) break;
        const double clamped = std::max(eps, kMinError);
        const double alpha = 0.5 * std::log((1 - clamped) / clamped);
        model.stumps.push_back(stump);
        model.alphas.push_back(alpha);
        model.round_errors.push_back(eps);
        if (eps <= kMinError) break;

        double total = 0;
        for (std::size_t i = 0; i < x.rows; ++i) {
            const int y = labels[i] != 0 ? 1 : -1;
            w[i] *= std::exp(-alpha * y * stump.vote(x.row(i)));
            total += w[i];
        }
        for (auto& wi : w) wi /= total;
    }
    return model;
}

double BoostedLinear::predict(std::span<const double> row) const {
    require(!models.empty(), "adaboost.r2: empty ensemble");
    std::vector<std::pair<double, double>> votes;
    votes.reserve(models.size());
    for (std::size_t t = 0; t < models.size(); ++t) votes.emplace_back(models[t].predict(row), weights[t]);
    return weighted_median(std::move(votes));
}

BoostedLinear fit_adaboost_r2(DesignView x, std::span<const double> y, int rounds) {
    require(y.size() == x.rows && x.rows >= 1, "adaboost.r2: target length must match rows");
    require(rounds >= 1, "adaboost.r2: rounds must be positive");
    std::vector<double> w(x.rows, 1.0 / static_cast<double>(x.rows));
    BoostedLinear model;
    std::vector<double> loss(x.rows);
    for (int t = 0; t < rounds; ++t) {
        LinearModel weak = fit_least_squares(x, y, w);
        double max_err = 0;
        for (std::size_t i = 0; i < x.rows; ++i) {
            loss[i] = std::abs(y[i] - weak.predict(x.row(i)));
            max_err = std::max(max_err, loss[i]);
        }
        if (max_err <= 1e-12) {
            // Perfect fit: it alone decides.
            model.models.assign(1, std::move(weak));
            model.weights.assign(1, 1.0);
            break;
        }
        double avg = 0;
        for (std::size_t i = 0; i < x.rows; ++i) {
            loss[i] /= max_err;
            avg += w[i] * loss[i];
        }
        if (avg >= 0.5) {
            if (model.models.empty()) {
                model.models.push_back(std::move(weak));
                model.weights.push_back(1.0);
            }
            break;
        }
        const double beta = std::max(avg, kMinError) / (1 - avg);
        model.models.push_back(std::move(weak));
        model.weights.push_back(std::log(1 / beta));

        double total = 0;
        for (std::size_t i = 0; i < x.rows; ++i) {
            w[i] *= std::pow(beta, 1 - loss[i]);
            total += w[i];
        }
        for (auto& wi : w) wi /= total;
    }
    return model;
}

}  // namespace ctxrec
