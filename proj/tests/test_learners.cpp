#include <doctest.h>

#include <cmath>
#include <random>

#include "ctxrec/error.hpp"
#include "ctxrec/learners.hpp"
#include "support.hpp"

using namespace ctxrec;

namespace {

struct Data {
    std::vector<double> values;
    std::size_t rows = 0, cols = 0;
    std::vector<double> y;
    std::vector<int> labels;

    DesignView view() const { return {values, rows, cols}; }
};

Data random_regression(std::size_t n, std::size_t d, std::uint64_t seed, bool sparse_truth = false) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0, 1);
    Data out;
    out.rows = n;
    out.cols = d;
    std::vector<double> w(d);
    for (std::size_t j = 0; j < d; ++j) w[j] = sparse_truth && j % 2 ? 0.0 : g(rng) * (1 + j);
    for (std::size_t i = 0; i < n; ++i) {
        double t = 0.7;
        for (std::size_t j = 0; j < d; ++j) {
            const double v = g(rng) * (j + 1) + j;
            out.values.push_back(v);
            t += w[j] * v;
        }
        out.y.push_back(t + 0.3 * g(rng));
    }
    return out;
}

Data table(std::vector<std::vector<double>> rows, std::vector<int> labels) {
    Data d;
    d.rows = rows.size();
    d.cols = rows.front().size();
    for (const auto& r : rows) d.values.insert(d.values.end(), r.begin(), r.end());
    d.labels = std::move(labels);
    for (int l : d.labels) d.y.push_back(l);
    return d;
}

double squared_loss(const Data& d, double b, const std::vector<double>& w) {
    double s = 0;
    for (std::size_t i = 0; i < d.rows; ++i) {
        double p = b;
        for (std::size_t j = 0; j < d.cols; ++j) p += w[j] * d.values[i * d.cols + j];
        s += (d.y[i] - p) * (d.y[i] - p);
    }
    return s / (2.0 * d.rows);
}

double train_accuracy(const TreeModel& t, const Data& d) {
    std::size_t ok = 0;
    for (std::size_t i = 0; i < d.rows; ++i) ok += (t.predict(d.view().row(i)) > 0.5) == (d.labels[i] == 1);
    return static_cast<double>(ok) / d.rows;
}

FeatureMatrix as_matrix(const Data& d) {
    FeatureMatrix m;
    for (std::size_t j = 0; j < d.cols; ++j) m.columns.push_back("x" + std::to_string(j));
    m.values = d.values;
    m.labels = d.labels;
    for (std::size_t i = 0; i < d.rows; ++i) {
        m.user_ids.push_back("u");
        m.object_ids.push_back("o" + std::to_string(i));
    }
    return m;
}

}  // namespace

TEST_SUITE("learners") {

TEST_CASE("least squares recovers an exact line") {
    const auto d = table({{1}, {2}, {3}}, {0, 0, 0});
    const std::vector<double> y = {2, 4, 6};
    const auto m = fit_least_squares(d.view(), y);
    CHECK(std::abs(m.coefficients()[0] - 2) <= 1e-9);
    CHECK(std::abs(m.intercept()) <= 1e-9);
    const std::vector<double> row = {1.5};
    CHECK(m.predict(row) == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("least squares gradient vanishes at the solution (finite differences)") {
    const auto d = random_regression(60, 4, 11);
    const auto m = fit_least_squares(d.view(), d.y);
    auto w = m.coefficients();
    double b = m.intercept();
    const double h = 1e-6;
    double norm2 = 0;
    for (std::size_t j = 0; j <= d.cols; ++j) {
        auto wp = w, wm = w;
        double bp = b, bm = b;
        if (j < d.cols) wp[j] += h, wm[j] -= h;
        else bp += h, bm -= h;
        const double g = (squared_loss(d, bp, wp) - squared_loss(d, bm, wm)) / (2 * h);
        norm2 += g * g;
    }
    CHECK(std::sqrt(norm2) <= 1e-6);
}

TEST_CASE("lasso with lambda 0 equals least squares") {
    const auto d = random_regression(80, 5, 3);
    const auto ls = fit_least_squares(d.view(), d.y);
    const auto la = fit_lasso(d.view(), d.y, 0.0);
    for (std::size_t j = 0; j < d.cols; ++j) CHECK(std::abs(ls.coefficients()[j] - la.coefficients()[j]) <= 1e-6);
    CHECK(std::abs(ls.intercept() - la.intercept()) <= 1e-6);
}

TEST_CASE("lasso with a huge lambda predicts the label mean") {
    const auto d = random_regression(40, 3, 5);
    const auto la = fit_lasso(d.view(), d.y, 1e6);
    double mean = 0;
    for (double v : d.y) mean += v;
    mean /= d.y.size();
    for (double w : la.weights) CHECK(w == 0.0);
    CHECK(la.intercept() == doctest::Approx(mean).epsilon(1e-12));
}

TEST_CASE("lasso satisfies the KKT conditions") {
    const auto d = random_regression(100, 6, 9, true);
    for (double lambda : {0.001, 0.05, 0.3, 1.0, 3.0}) {
        const auto m = fit_lasso(d.view(), d.y, lambda);
        const auto& st = m.standardizer;
        std::vector<double> resid(d.rows);
        for (std::size_t i = 0; i < d.rows; ++i) resid[i] = d.y[i] - m.predict(d.view().row(i));
        std::size_t zeros = 0;
        for (std::size_t j = 0; j < d.cols; ++j) {
            double corr = 0;
            for (std::size_t i = 0; i < d.rows; ++i) corr += st.transform(j, d.values[i * d.cols + j]) * resid[i];
            corr /= static_cast<double>(d.rows);
            if (m.weights[j] == 0) {
                ++zeros;
                CHECK(std::abs(corr) <= lambda + 1e-6);
            } else {
                CHECK(std::abs(corr - lambda * (m.weights[j] > 0 ? 1 : -1)) <= 1e-6);
            }
        }
        double mean_resid = 0;
        for (double r : resid) mean_resid += r;
        CHECK(std::abs(mean_resid / d.rows) <= 1e-9);
        if (lambda >= 3.0) CHECK(zeros > 0);
    }
}

TEST_CASE("lasso lambda selection picks from the grid deterministically") {
    const auto d = random_regression(60, 4, 21, true);
    const double a = select_lasso_lambda(d.view(), d.y, kLambdaGrid, 7);
    const double b = select_lasso_lambda(d.view(), d.y, kLambdaGrid, 7);
    CHECK(a == b);
    CHECK(std::find(kLambdaGrid.begin(), kLambdaGrid.end(), a) != kLambdaGrid.end());
}

TEST_CASE("J48 splits a perfectly separable feature at depth one") {
    const auto d = table({{1, 5}, {2, 5}, {3, 5}, {7, 5}, {8, 5}, {9, 5}}, {0, 0, 0, 1, 1, 1});
    const auto t = fit_j48(d.view(), d.labels, 0.25);
    CHECK(t.depth() == 1);
    CHECK(t.nodes[0].feature == 0);
    CHECK(t.nodes[0].threshold == doctest::Approx(5.0));
    CHECK(train_accuracy(t, d) == 1.0);
}

TEST_CASE("J48 leaves a constant feature unsplit") {
    const auto d = table({{4}, {4}, {4}, {4}}, {0, 1, 0, 1});
    const auto t = fit_j48(d.view(), d.labels, 0.25);
    CHECK(t.nodes.size() == 1);
    CHECK(t.nodes[0].is_leaf());
}

TEST_CASE("J48 learns XOR at depth two") {
    // Truth table repeated so the leaves carry enough support to survive pruning.
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    for (int rep = 0; rep < 5; ++rep)
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) {
                rows.push_back({double(a), double(b)});
                labels.push_back(a ^ b);
            }
    const auto d = table(rows, labels);
    const auto t = fit_j48(d.view(), d.labels, 0.25);
    CHECK(t.depth() == 2);
    CHECK(train_accuracy(t, d) == 1.0);

    const auto single = table({{0, 0}, {0, 1}, {1, 0}, {1, 1}}, {0, 1, 1, 0});
    CHECK(train_accuracy(fit_j48(single.view(), single.labels, 1.0), single) == 1.0);
}

TEST_CASE("J48 leaf probability is Laplace smoothed") {
    TreeNode leaf;
    leaf.positives = 9;
    leaf.count = 9;
    CHECK(leaf.laplace() == doctest::Approx(10.0 / 11.0));
    const auto d = table({{1}, {1}, {1}, {1}, {1}, {1}, {1}, {1}, {1}}, {1, 1, 1, 1, 1, 1, 1, 1, 1});
    const auto t = fit_j48(d.view(), d.labels, 0.25);
    const std::vector<double> row = {1};
    CHECK(t.predict(row) == doctest::Approx(10.0 / 11.0));
}

TEST_CASE("pessimistic error matches the C4.5 binomial bound") {
    // e = 0: N * (1 - CF^(1/N)).
    CHECK(pessimistic_extra_errors(6, 0, 0.25) == doctest::Approx(6 * (1 - std::pow(0.25, 1.0 / 6))).epsilon(1e-12));
    const double z = 0.6744897501960817;  // upper 25% normal quantile
    const auto wilson = [&](double n, double e) {
        const double f = (e + 0.5) / n;  // continuity correction
        const double r = (f + z * z / (2 * n) + z * std::sqrt(f / n - f * f / n + z * z / (4 * n * n))) / (1 + z * z / n);
        return r * n - e;
    };
    CHECK(pessimistic_extra_errors(20, 3, 0.25) == doctest::Approx(wilson(20, 3)).epsilon(1e-9));
    CHECK(pessimistic_extra_errors(14, 5, 0.25) == doctest::Approx(wilson(14, 5)).epsilon(1e-9));
}

TEST_CASE("J48 structure is invariant under strictly monotone feature transforms") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.1, 10);
    std::vector<std::vector<double>> rows, transformed;
    std::vector<int> labels;
    for (int i = 0; i < 120; ++i) {
        const double a = u(rng), b = u(rng), c = u(rng);
        rows.push_back({a, b, c});
        transformed.push_back({std::log(a), b * b * b, std::exp(c / 3)});
        labels.push_back((a > 4 && b < 7) || c > 8.5 ? 1 : 0);
    }
    const auto d1 = table(rows, labels), d2 = table(transformed, labels);
    CHECK(fit_j48(d1.view(), d1.labels, 0.25).structure() == fit_j48(d2.view(), d2.labels, 0.25).structure());
}

TEST_CASE("best stump matches exhaustive threshold enumeration") {
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<int> v(0, 6);
    std::uniform_real_distribution<double> w(0.1, 1.0);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<std::vector<double>> rows;
        std::vector<int> labels;
        std::vector<double> weights;
        for (int i = 0; i < 12; ++i) {
            rows.push_back({double(v(rng)), double(v(rng))});
            labels.push_back(v(rng) % 2);
            weights.push_back(w(rng));
        }
        const auto d = table(rows, labels);
        double total = 0;
        for (double x : weights) total += x;
        for (double& x : weights) x /= total;
        // Oracle: every threshold between observed values (and below all), both polarities.
        double best = 1e9;
        for (std::size_t f = 0; f < 2; ++f)
            for (double thr = -0.5; thr <= 6.5; thr += 0.5)
                for (int pol : {1, -1}) {
                    double err = 0;
                    for (std::size_t i = 0; i < rows.size(); ++i) {
                        const int vote = rows[i][f] > thr ? pol : -pol;
                        if ((vote > 0) != (labels[i] == 1)) err += weights[i];
                    }
                    best = std::min(best, err);
                }
        double err = -1;
        best_stump(d.view(), d.labels, weights, &err);
        CHECK(err == doctest::Approx(best).epsilon(1e-12));
    }
}

TEST_CASE("AdaBoost.M1 reaches zero training error on separable 1-D data within 10 rounds") {
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    for (int i = 0; i < 40; ++i) {
        rows.push_back({double(i) * 0.37 - 3});
        labels.push_back(i >= 23 ? 1 : 0);
    }
    const auto d = table(rows, labels);
    const auto m = fit_adaboost_m1(d.view(), d.labels, 10);
    CHECK(m.stumps.size() <= 10);
    std::size_t errors = 0;
    for (std::size_t i = 0; i < d.rows; ++i) errors += (m.predict(d.view().row(i)) > 0.5) != (labels[i] == 1);
    CHECK(errors == 0);
    // A single stump separates this data, so the first round has zero error.
    CHECK(m.stumps.size() == 1);
    CHECK(m.round_errors[0] == 0.0);
}

TEST_CASE("AdaBoost.M1 rounds keep positive weights and use uniform first-round weights") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    for (int i = 0; i < 80; ++i) {
        const double a = u(rng), b = u(rng);
        rows.push_back({a, b});
        labels.push_back((a - 0.5) * (b - 0.5) > 0 ? 1 : 0);
    }
    const auto d = table(rows, labels);
    const auto m = fit_adaboost_m1(d.view(), d.labels, 30);
    REQUIRE(!m.stumps.empty());
    for (double a : m.alphas) CHECK(a > 0);
    for (double e : m.round_errors) CHECK(e < 0.5);
    const std::vector<double> uniform(d.rows, 1.0 / d.rows);
    double first_error = 0;
    const auto first = best_stump(d.view(), d.labels, uniform, &first_error);
    CHECK(first.feature == m.stumps[0].feature);
    CHECK(first.threshold == m.stumps[0].threshold);
    CHECK(first_error == doctest::Approx(m.round_errors[0]));
}

TEST_CASE("boosted probability is the logistic of twice the margin") {
    BoostedStumps m;
    m.stumps = {Stump{-1, 0, 1}, Stump{-1, 0, 1}};
    m.alphas = {0.4, 0.9};
    const std::vector<double> row = {0};
    CHECK(m.margin(row) == doctest::Approx(1.3));
    CHECK(m.predict(row) == doctest::Approx(1 / (1 + std::exp(-2.6))));
    CHECK(m.predict(row) > 0.5);
}

TEST_CASE("AdaBoost.R2 keeps positive weights and reduces to one model on an exact fit") {
    const auto noisy = random_regression(50, 3, 17);
    const auto m = fit_adaboost_r2(noisy.view(), noisy.y, 20);
    REQUIRE(!m.models.empty());
    for (double w : m.weights) CHECK(w > 0);
    const auto exact = table({{1}, {2}, {3}, {4}}, {0, 0, 0, 0});
    const std::vector<double> y = {3, 5, 7, 9};
    const auto e = fit_adaboost_r2(exact.view(), y, 20);
    CHECK(e.models.size() == 1);
    const std::vector<double> row = {10};
    CHECK(e.predict(row) == doctest::Approx(21));
}

TEST_CASE("fit: single-class classification data gives a flagged constant model") {
    const auto d = table({{1}, {2}, {3}}, {0, 0, 0});
    for (auto kind : {LearnerKind::J48, LearnerKind::AdaTree}) {
        LearnerConfig cfg;
        cfg.kind = kind;
        const auto m = fit(cfg, as_matrix(d));
        CHECK(m.degenerate);
        const std::vector<double> row = {2};
        CHECK(predict(m, row) == doctest::Approx(1.0 / 5.0));
    }
}

TEST_CASE("fit: schema mismatch in predict is a contract error") {
    const auto d = table({{1, 0}, {2, 1}, {3, 0}, {4, 1}}, {0, 1, 0, 1});
    LearnerConfig cfg;
    cfg.kind = LearnerKind::LinReg;
    const auto m = fit(cfg, as_matrix(d));
    const std::vector<double> short_row = {1};
    try {
        predict(m, short_row);
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Contract);
    }
    auto renamed = as_matrix(d);
    renamed.columns[1] = "other";
    CHECK_THROWS_AS(predict_all(m, renamed), Error);
}

TEST_CASE("fit is deterministic and classifier outputs stay in [0, 1]") {
    SynthConfig sc;
    sc.n_users = 30;
    const auto m = build_variant(filter_evaluation_cohort(aggregate(synthesize(sc).records)), Variant::RawPlusContext);
    for (auto kind : kAllLearners) {
        LearnerConfig cfg;
        cfg.kind = kind;
        cfg.seed = 5;
        const auto a = fit(cfg, m), b = fit(cfg, m);
        CHECK(to_json(a).dump() == to_json(b).dump());
        const auto p = predict_all(a, m);
        for (double v : p) {
            CHECK(std::isfinite(v));
            if (is_classifier(kind)) CHECK((v >= 0 && v <= 1));
        }
    }
}

TEST_CASE("learner config validation") {
    LearnerConfig c;
    c.lambda = -1;
    CHECK_THROWS_AS(c.validate(), Error);
    c = {};
    c.prune_confidence = 0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = {};
    c.boost_rounds = 0;
    CHECK_THROWS_AS(c.validate(), Error);
    for (auto k : kAllLearners) CHECK(parse_learner_kind(to_string(k)) == k);
}

}  // TEST_SUITE
