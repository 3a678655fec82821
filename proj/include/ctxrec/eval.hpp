#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctxrec/dataset.hpp"
#include "ctxrec/features.hpp"
#include "ctxrec/learners.hpp"
#include "ctxrec/metrics.hpp"
#include "ctxrec/recommenders.hpp"

namespace ctxrec {

struct EvalCase {
    std::string case_id;
    std::string user_id;
    std::vector<std::string> relevant;
    std::size_t candidates = 0;
    double ndcg = 0;
    double average_position = 0;
    std::vector<double> recall;  // one per report k
    std::vector<bool> hit;       // relevant object inside the listed top-k (ties by object_id)
    std::vector<ScoredObject> ranked;  // full ranking (prediction) or top-k (recommendation)
};

struct EvalReport {
    std::map<std::string, std::string> metadata;  // variant, learner, recommender, ...
    std::vector<std::size_t> ks = {5, 10};
    std::vector<EvalCase> cases;
    std::size_t skipped_folds = 0;

    double mean_ndcg = 0;
    double mean_average_position = 0;
    std::vector<double> mean_recall;

    // Recomputes the aggregates as means of the per-case values.
    void finalize();
    std::size_t k_index(std::size_t k) const;  // throws if k was not evaluated
};

nlohmann::json to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);
void write_report(const std::filesystem::path& path, const EvalReport& report);
EvalReport read_report(const std::filesystem::path& path);

// Fills metrics for one case from a scored universe of candidates.
EvalCase evaluate_case(std::string case_id, std::string user_id, std::vector<ScoredObject> ranked,
                       const std::set<std::string>& relevant, const std::vector<std::size_t>& ks,
                       std::size_t keep_top = static_cast<std::size_t>(-1));

// Scores the test rows after learning from the training rows.
using Scorer = std::function<std::vector<double>(const FeatureMatrix& train, const FeatureMatrix& test)>;

Scorer learner_scorer(const LearnerConfig& config);
// Test hook: returns the true labels.
Scorer oracle_scorer();

struct EvalOptions {
    std::vector<std::size_t> ks = {5, 10};
    std::size_t jobs = 1;
};

struct PredictionResult {
    EvalReport report;
    std::vector<PreferenceEstimate> preferences;  // every row, scored by the fold that held its user out
};

// One fold per user: fit on every other user's rows, rank this user's
// visited objects by r̄.
PredictionResult loocv_purchase_prediction(const FeatureMatrix& matrix, const Scorer& scorer,
                                           const EvalOptions& options = {});

struct RecommendationInput {
    // Unset: Binary baseline (all visited objects weigh 1).
    std::optional<std::vector<PreferenceEstimate>> preferences;
};

// One fold per (user, purchased object): the purchase is removed from the
// training interactions and from the user's profile, the recommender is
// rebuilt, and every unseen catalog object is ranked.
EvalReport loocv_recommendation(const std::vector<InteractionRecord>& interactions, const ItemCatalog& catalog,
                                const RecommendationInput& input, RecommenderKind recommender,
                                const EvalOptions& options = {});

struct SignTestResult {
    std::size_t a_only = 0;  // A succeeds, B fails
    std::size_t b_only = 0;
    double p_value = 1.0;
    bool no_discordance = false;
};

// One-sided exact sign test: P(X >= a_only), X ~ Binomial(a_only + b_only, 1/2).
SignTestResult sign_test(std::size_t a_only, std::size_t b_only);
double binomial_upper_tail_half(std::size_t n, std::size_t k);

// Pairs cases by case_id and compares hit@k.
SignTestResult binomial_significance(const EvalReport& a, const EvalReport& b, std::size_t k);

struct ChanceBand {
    double observed = 0;
    double lower = 0;
    double upper = 0;
    double null_mean = 0;
    bool inside() const { return observed >= lower && observed <= upper; }
};

// Distribution of mean nDCG when relevance labels are shuffled within every
// case while scores stay fixed; band is the central (1 - alpha) interval.
// Each inner vector is one group of cases whose means are averaged (e.g.
// one group per seed).
ChanceBand label_permutation_band(const std::vector<std::vector<const EvalCase*>>& groups, std::size_t shuffles,
                                  double alpha, std::uint64_t seed);

// Paired randomization test on per-case nDCG differences (a - b); returns
// the one-sided p-value for mean(a - b) > 0.
double paired_permutation_p(const EvalReport& a, const EvalReport& b, std::size_t shuffles, std::uint64_t seed);

}  // namespace ctxrec
