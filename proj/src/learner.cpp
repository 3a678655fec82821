#include <algorithm>
#include <cmath>

#include "ctxrec/error.hpp"
#include "ctxrec/learners.hpp"

namespace ctxrec {

std::string_view to_string(LearnerKind k) {
    switch (k) {
        case LearnerKind::LinReg: return "LinReg";
        case LearnerKind::Lasso: return "Lasso";
        case LearnerKind::AdaLinReg: return "AdaLinReg";
        case LearnerKind::J48: return "J48";
        case LearnerKind::AdaTree: return "AdaTree";
    }
    return "?";
}

LearnerKind parse_learner_kind(std::string_view name) {
    for (auto k : kAllLearners)
        if (to_string(k) == name) return k;
    fail(ErrorKind::Config, "unknown learner '" + std::string(name) + "'");
}

bool is_classifier(LearnerKind k) { return k == LearnerKind::J48 || k == LearnerKind::AdaTree; }

void LearnerConfig::validate() const {
    if (lambda && !(*lambda >= 0 && std::isfinite(*lambda))) fail(ErrorKind::Config, "lambda must be >= 0");
    if (!(prune_confidence > 0 && prune_confidence <= 1)) fail(ErrorKind::Config, "prune_confidence must lie in (0, 1]");
    if (boost_rounds < 1) fail(ErrorKind::Config, "boost_rounds must be >= 1");
}

LearnerModel fit(const LearnerConfig& config, const FeatureMatrix& matrix) {
    config.validate();
    require(matrix.rows() >= 2, "fit: at least two training rows are required");
    LearnerModel model;
    model.kind = config.kind;
    model.columns = matrix.columns;
    const auto x = view_of(matrix);

    std::vector<double> y(matrix.labels.begin(), matrix.labels.end());
    const auto positives = std::count(matrix.labels.begin(), matrix.labels.end(), 1);
    const bool single_class = positives == 0 || static_cast<std::size_t>(positives) == matrix.rows();
    if (is_classifier(config.kind) && single_class) {
        model.degenerate = true;
        model.body = ConstantModel{(static_cast<double>(positives) + 1.0) / (static_cast<double>(matrix.rows()) + 2.0)};
        return model;
    }

    switch (config.kind) {
        case LearnerKind::LinReg:
            model.body = fit_least_squares(x, y);
            break;
        case LearnerKind::Lasso: {
            const double lambda = config.lambda ? *config.lambda : select_lasso_lambda(x, y, kLambdaGrid, config.seed);
            model.body = fit_lasso(x, y, lambda);
            break;
        }
        case LearnerKind::AdaLinReg:
            model.body = fit_adaboost_r2(x, y, config.boost_rounds);
            break;
        case LearnerKind::J48:
            model.body = fit_j48(x, matrix.labels, config.prune_confidence);
            break;
        case LearnerKind::AdaTree: {
            auto boosted = fit_adaboost_m1(x, matrix.labels, config.boost_rounds);
            if (boosted.stumps.empty()) {
                model.degenerate = true;
                model.body = ConstantModel{(static_cast<double>(positives) + 1.0) / (static_cast<double>(matrix.rows()) + 2.0)};
            } else {
                model.body = std::move(boosted);
            }
            break;
        }
    }
    return model;
}

double predict(const LearnerModel& model, std::span<const double> row) {
    if (row.size() != model.columns.size())
        fail(ErrorKind::Contract, "predict: row has " + std::to_string(row.size()) + " features, model expects " +
                                      std::to_string(model.columns.size()));
    return std::visit(
        [&](const auto& body) -> double {
            using T = std::decay_t<decltype(body)>;
            if constexpr (std::is_same_v<T, ConstantModel>)
                return body.value;
            else
                return body.predict(row);
        },
        model.body);
}

std::vector<double> predict_all(const LearnerModel& model, const FeatureMatrix& matrix) {
    if (matrix.columns != model.columns) fail(ErrorKind::Contract, "predict: feature schema differs from training schema");
    std::vector<double> out;
    out.reserve(matrix.rows());
    for (std::size_t i = 0; i < matrix.rows(); ++i) out.push_back(predict(model, matrix.row(i)));
    return out;
}

namespace {

nlohmann::json linear_json(const LinearModel& m, const std::vector<std::string>& columns) {
    nlohmann::json j;
    j["intercept"] = m.intercept();
    nlohmann::json coefs = nlohmann::json::object();
    const auto c = m.coefficients();
    for (std::size_t k = 0; k < c.size(); ++k) coefs[columns[k]] = c[k];
    j["coefficients"] = std::move(coefs);
    j["lambda"] = m.lambda;
    return j;
}

}  // namespace

nlohmann::json to_json(const LearnerModel& model) {
    nlohmann::json j;
    j["kind"] = std::string(to_string(model.kind));
    j["degenerate"] = model.degenerate;
    j["columns"] = model.columns;
    std::visit(
        [&](const auto& body) {
            using T = std::decay_t<decltype(body)>;
            if constexpr (std::is_same_v<T, ConstantModel>) {
                j["constant"] = body.value;
            } else if constexpr (std::is_same_v<T, LinearModel>) {
                j["linear"] = linear_json(body, model.columns);
            } else if constexpr (std::is_same_v<T, TreeModel>) {
                nlohmann::json nodes = nlohmann::json::array();
                for (const auto& n : body.nodes) {
                    nlohmann::json node{{"positives", n.positives}, {"count", n.count}};
                    if (!n.is_leaf()) {
                        node["feature"] = model.columns[static_cast<std::size_t>(n.feature)];
                        node["threshold"] = n.threshold;
                        node["left"] = n.left;
                        node["right"] = n.right;
                    }
                    nodes.push_back(std::move(node));
                }
                j["tree"] = std::move(nodes);
            } else if constexpr (std::is_same_v<T, BoostedStumps>) {
                nlohmann::json rounds = nlohmann::json::array();
                for (std::size_t t = 0; t < body.stumps.size(); ++t) {
                    const auto& s = body.stumps[t];
                    rounds.push_back({{"feature", s.feature < 0 ? std::string("<constant>")
                                                                : model.columns[static_cast<std::size_t>(s.feature)]},
                                      {"threshold", s.threshold},
                                      {"polarity", s.polarity},
                                      {"alpha", body.alphas[t]},
                                      {"error", body.round_errors[t]}});
                }
                j["stumps"] = std::move(rounds);
            } else {
                nlohmann::json rounds = nlohmann::json::array();
                for (std::size_t t = 0; t < body.models.size(); ++t) {
                    auto m = linear_json(body.models[t], model.columns);
                    m["weight"] = body.weights[t];
                    rounds.push_back(std::move(m));
                }
                j["ensemble"] = std::move(rounds);
            }
        },
        model.body);
    return j;
}

}  // namespace ctxrec
