#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "ctxrec/features.hpp"

namespace ctxrec {

enum class LearnerKind { LinReg, Lasso, AdaLinReg, J48, AdaTree };

inline constexpr std::array<LearnerKind, 5> kAllLearners = {LearnerKind::LinReg, LearnerKind::Lasso,
                                                            LearnerKind::AdaLinReg, LearnerKind::J48,
                                                            LearnerKind::AdaTree};

std::string_view to_string(LearnerKind k);
LearnerKind parse_learner_kind(std::string_view name);  // throws ErrorKind::Config
bool is_classifier(LearnerKind k);

inline constexpr std::array<double, 4> kLambdaGrid = {0.001, 0.01, 0.1, 1.0};

struct LearnerConfig {
    LearnerKind kind = LearnerKind::J48;
    std::optional<double> lambda;  // unset: 5-fold CV over kLambdaGrid
    double prune_confidence = 0.25;  // >= 1 disables pruning
    int boost_rounds = 50;
    std::uint64_t seed = 0;

    void validate() const;
};

// Read-only row-major view over a design matrix.
struct DesignView {
    std::span<const double> values;
    std::size_t rows = 0;
    std::size_t cols = 0;

    double at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
    std::span<const double> row(std::size_t i) const { return values.subspan(i * cols, cols); }
};

inline DesignView view_of(const FeatureMatrix& m) { return {m.values, m.rows(), m.cols()}; }

// Column means and standard deviations of the training rows. Columns with
// zero spread get scale 0 and are ignored by the linear solvers.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> scale;

    static Standardizer fit(DesignView x);
    double transform(std::size_t j, double v) const { return scale[j] > 0 ? (v - mean[j]) / scale[j] : 0.0; }
};

struct LinearModel {
    Standardizer standardizer;
    std::vector<double> weights;  // on standardized columns
    double bias = 0;              // on standardized columns
    double lambda = 0;

    double predict(std::span<const double> row) const;
    // Coefficients and intercept on the original feature scale.
    std::vector<double> coefficients() const;
    double intercept() const;
};

// Ordinary (optionally weighted) least squares; minimum-norm solution when
// the design is rank deficient.
LinearModel fit_least_squares(DesignView x, std::span<const double> y, std::span<const double> sample_weights = {});

// Minimises 1/(2n)·||y - b - Xw||² + lambda·||w||₁ over standardized columns
// by cyclic coordinate descent.
LinearModel fit_lasso(DesignView x, std::span<const double> y, double lambda);

double select_lasso_lambda(DesignView x, std::span<const double> y, std::span<const double> grid, std::uint64_t seed,
                           std::size_t folds = 5);

struct TreeNode {
    int feature = -1;  // -1 for leaves
    double threshold = 0;  // left branch takes x <= threshold
    int left = -1;
    int right = -1;
    double positives = 0;
    double count = 0;

    bool is_leaf() const { return feature < 0; }
    double laplace() const { return (positives + 1.0) / (count + 2.0); }
};

struct TreeModel {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    double predict(std::span<const double> row) const;
    std::size_t depth() const;
    std::size_t leaf_count() const;
    // Split features in pre-order; -1 marks a leaf.
    std::vector<int> structure() const;
};

// C4.5: gain-ratio splits at midpoints of distinct numeric values, then
// bottom-up pessimistic-error pruning at the given confidence.
TreeModel fit_j48(DesignView x, std::span<const int> labels, double prune_confidence);

// C4.5 upper-bound error correction for a leaf with `errors` misclassified
// out of `count` at confidence `cf`.
double pessimistic_extra_errors(double count, double errors, double cf);

struct Stump {
    int feature = -1;  // -1: constant vote
    double threshold = 0;
    int polarity = 1;  // vote for x > threshold; the other side gets -polarity

    int vote(std::span<const double> row) const {
        if (feature < 0) return polarity;
        return row[static_cast<std::size_t>(feature)] > threshold ? polarity : -polarity;
    }
};

struct BoostedStumps {
    std::vector<Stump> stumps;
    std::vector<double> alphas;
    std::vector<double> round_errors;

    double margin(std::span<const double> row) const;  // sum of alpha * vote
    double predict(std::span<const double> row) const { return 1.0 / (1.0 + std::exp(-2.0 * margin(row))); }
};

// AdaBoost.M1 with depth-1 trees. Stops when a round's weighted error is
// >= 0.5 (round discarded) or 0 (round kept, boosting ends).
BoostedStumps fit_adaboost_m1(DesignView x, std::span<const int> labels, int rounds);

// First-round instance weights and the stump chosen under them, exposed for tests.
Stump best_stump(DesignView x, std::span<const int> labels, std::span<const double> weights, double* error = nullptr);

struct BoostedLinear {
    std::vector<LinearModel> models;
    std::vector<double> weights;  // ln(1/beta_t)

    double predict(std::span<const double> row) const;  // weighted median
};

// AdaBoost.R2 with weighted least squares and linear loss.
BoostedLinear fit_adaboost_r2(DesignView x, std::span<const double> y, int rounds);

struct ConstantModel {
    double value = 0;
};

struct LearnerModel {
    LearnerKind kind = LearnerKind::J48;
    std::vector<std::string> columns;
    bool degenerate = false;  // single-class training data
    std::variant<ConstantModel, LinearModel, TreeModel, BoostedStumps, BoostedLinear> body;
};

LearnerModel fit(const LearnerConfig& config, const FeatureMatrix& matrix);
double predict(const LearnerModel& model, std::span<const double> row);
std::vector<double> predict_all(const LearnerModel& model, const FeatureMatrix& matrix);

nlohmann::json to_json(const LearnerModel& model);

}  // namespace ctxrec
