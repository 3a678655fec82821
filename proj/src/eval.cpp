#include "ctxrec/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "ctxrec/error.hpp"
#include "ctxrec/parallel.hpp"
#include "ctxrec/rng.hpp"

namespace ctxrec {

void EvalReport::finalize() {
    mean_ndcg = 0;
    mean_average_position = 0;
    mean_recall.assign(ks.size(), 0.0);
    if (cases.empty()) return;
    for (const auto& c : cases) {
        mean_ndcg += c.ndcg;
        mean_average_position += c.average_position;
        for (std::size_t i = 0; i < ks.size(); ++i) mean_recall[i] += c.recall[i];
    }
    const double n = static_cast<double>(cases.size());
    mean_ndcg /= n;
    mean_average_position /= n;
    for (auto& r : mean_recall) r /= n;
}

std::size_t EvalReport::k_index(std::size_t k) const {
    auto it = std::find(ks.begin(), ks.end(), k);
    if (it == ks.end()) fail(ErrorKind::Contract, "report was not evaluated at k=" + std::to_string(k));
    return static_cast<std::size_t>(it - ks.begin());
}

EvalCase evaluate_case(std::string case_id, std::string user_id, std::vector<ScoredObject> ranked,
                       const std::set<std::string>& relevant, const std::vector<std::size_t>& ks, std::size_t keep_top) {
    std::sort(ranked.begin(), ranked.end(), [](const ScoredObject& a, const ScoredObject& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.object_id < b.object_id;
    });
    EvalCase c;
    c.case_id = std::move(case_id);
    c.user_id = std::move(user_id);
    c.relevant.assign(relevant.begin(), relevant.end());
    c.candidates = ranked.size();
    c.ndcg = ndcg_tie_aware(ranked, relevant);
    c.average_position = average_position(ranked, relevant);
    std::size_t first_hit = ranked.size() + 1;
    for (std::size_t i = 0; i < ranked.size(); ++i)
        if (relevant.count(ranked[i].object_id)) {
            first_hit = i + 1;
            break;
        }
    for (auto k : ks) {
        c.recall.push_back(recall_at_k(ranked, relevant, k));
        c.hit.push_back(first_hit <= k);
    }
    if (ranked.size() > keep_top) ranked.resize(keep_top);
    c.ranked = std::move(ranked);
    return c;
}

Scorer learner_scorer(const LearnerConfig& config) {
    return [config](const FeatureMatrix& train, const FeatureMatrix& test) {
        const auto model = fit(config, train);
        return predict_all(model, test);
    };
}

Scorer oracle_scorer() {
    return [](const FeatureMatrix&, const FeatureMatrix& test) {
        return std::vector<double>(test.labels.begin(), test.labels.end());
    };
}

namespace {

std::vector<std::pair<std::string, std::vector<std::size_t>>> rows_by_user(const FeatureMatrix& m) {
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < m.rows(); ++i) groups[m.user_ids[i]].push_back(i);
    return {groups.begin(), groups.end()};
}

}  // namespace

PredictionResult loocv_purchase_prediction(const FeatureMatrix& matrix, const Scorer& scorer, const EvalOptions& options) {
    const auto users = rows_by_user(matrix);
    require(users.size() >= 2, "loocv: at least two users are required");
    for (auto k : options.ks) require(k >= 1, "loocv: k must be >= 1");

    std::vector<EvalCase> cases(users.size());
    std::vector<std::vector<PreferenceEstimate>> prefs(users.size());
    parallel_for(users.size(), options.jobs, [&](std::size_t u) {
        const auto& [user, test_rows] = users[u];
        std::vector<std::size_t> train_rows;
        train_rows.reserve(matrix.rows() - test_rows.size());
        for (std::size_t i = 0; i < matrix.rows(); ++i)
            if (matrix.user_ids[i] != user) train_rows.push_back(i);
        const auto train = matrix.subset(train_rows);
        const auto test = matrix.subset(test_rows);
        const auto scores = scorer(train, test);
        require(scores.size() == test.rows(), "loocv: scorer returned wrong number of scores");

        std::vector<ScoredObject> ranked;
        std::set<std::string> relevant;
        for (std::size_t i = 0; i < test.rows(); ++i) {
            ranked.push_back({test.object_ids[i], scores[i]});
            if (test.labels[i] == 1) relevant.insert(test.object_ids[i]);
            prefs[u].push_back({user, test.object_ids[i], scores[i]});
        }
        if (relevant.empty())
            fail(ErrorKind::Contract, "loocv: user '" + user + "' has no purchase; apply the cohort filter first");
        cases[u] = evaluate_case(user, user, std::move(ranked), relevant, options.ks);
    });

    PredictionResult result;
    result.report.ks = options.ks;
    result.report.metadata["variant"] = std::string(to_string(matrix.variant));
    result.report.metadata["protocol"] = "purchase-prediction";
    result.report.cases = std::move(cases);
    result.report.finalize();
    for (auto& p : prefs) result.preferences.insert(result.preferences.end(), p.begin(), p.end());
    return result;
}

EvalReport loocv_recommendation(const std::vector<InteractionRecord>& interactions, const ItemCatalog& catalog,
                                const RecommendationInput& input, RecommenderKind recommender,
                                const EvalOptions& options) {
    for (auto k : options.ks) require(k >= 1, "loocv: k must be >= 1");
    std::map<std::pair<std::string, std::string>, double> r_bar;
    if (input.preferences)
        for (const auto& p : *input.preferences) r_bar[{p.user_id, p.object_id}] = p.r_bar;

    std::vector<std::size_t> folds;  // indices of purchase records
    for (std::size_t i = 0; i < interactions.size(); ++i)
        if (interactions[i].purchase) folds.push_back(i);
    std::sort(folds.begin(), folds.end(), [&](std::size_t a, std::size_t b) {
        return std::tie(interactions[a].user_id, interactions[a].object_id) <
               std::tie(interactions[b].user_id, interactions[b].object_id);
    });

    std::optional<VsmRecommender> vsm;
    if (recommender == RecommenderKind::Vsm) vsm.emplace(catalog);
    const std::size_t keep_top = options.ks.empty() ? 0 : *std::max_element(options.ks.begin(), options.ks.end());

    std::vector<std::optional<EvalCase>> cases(folds.size());
    std::vector<char> empty_profile(folds.size(), 0);
    parallel_for(folds.size(), options.jobs, [&](std::size_t f) {
        const auto& held = interactions[folds[f]];
        if (!catalog.contains(held.object_id)) return;

        std::vector<InteractionRecord> training;
        training.reserve(interactions.size() - 1);
        for (std::size_t i = 0; i < interactions.size(); ++i)
            if (i != folds[f]) training.push_back(interactions[i]);

        UserProfile profile;
        profile.user_id = held.user_id;
        for (const auto& r : training) {
            if (r.user_id != held.user_id) continue;
            if (!input.preferences) {
                profile.engaged[r.object_id] = 1.0;
                continue;
            }
            auto it = r_bar.find({r.user_id, r.object_id});
            if (it == r_bar.end())
                fail(ErrorKind::Contract, "recommendation: no preference estimate for (" + r.user_id + ", " + r.object_id + ")");
            profile.engaged[r.object_id] = std::clamp(it->second, 0.0, 1.0);
        }

        std::vector<RankedItem> items;
        try {
            if (vsm) {
                items = vsm->score_all(profile);
            } else {
                const auto stats = CategoryStats::build(training, catalog);
                items = PopularSimCatRecommender(stats, catalog).score_all(profile);
            }
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::EmptyProfile) throw;
            // No usable signal: every unseen object ties.
            empty_profile[f] = 1;
            items.clear();
            for (const auto& item : catalog.items())
                if (!profile.engaged.count(item.object_id)) items.push_back({item.object_id, 0.0});
        }
        std::vector<ScoredObject> ranked;
        ranked.reserve(items.size());
        for (auto& it : items) ranked.push_back({std::move(it.object_id), it.score});
        cases[f] = evaluate_case(held.user_id + "|" + held.object_id, held.user_id, std::move(ranked),
                                 {held.object_id}, options.ks, keep_top);
    });

    EvalReport report;
    report.ks = options.ks;
    report.metadata["protocol"] = "recommendation";
    report.metadata["recommender"] = std::string(to_string(recommender));
    std::size_t empties = 0;
    for (std::size_t f = 0; f < folds.size(); ++f) {
        if (!cases[f]) {
            ++report.skipped_folds;
            continue;
        }
        empties += static_cast<std::size_t>(empty_profile[f]);
        report.cases.push_back(std::move(*cases[f]));
    }
    report.metadata["empty_profiles"] = std::to_string(empties);
    report.finalize();
    return report;
}

double binomial_upper_tail_half(std::size_t n, std::size_t k) {
    if (k == 0) return 1.0;
    if (k > n) return 0.0;
    if (n <= 1000) {
        // Exact recursion from the top term C(n, n) / 2^n.
        double term = std::ldexp(1.0, -static_cast<int>(n));
        double sum = 0;
        for (std::size_t i = n;; --i) {
            sum += term;
            if (i == k) break;
            term = term * static_cast<double>(i) / static_cast<double>(n - i + 1);
        }
        return std::min(1.0, sum);
    }
    const double log_half_n = -static_cast<double>(n) * std::log(2.0);
    const double lgn = std::lgamma(static_cast<double>(n) + 1);
    std::vector<double> logs;
    for (std::size_t i = k; i <= n; ++i)
        logs.push_back(lgn - std::lgamma(static_cast<double>(i) + 1) - std::lgamma(static_cast<double>(n - i) + 1) +
                       log_half_n);
    const double mx = *std::max_element(logs.begin(), logs.end());
    double acc = 0;
    for (double l : logs) acc += std::exp(l - mx);
    return std::min(1.0, std::exp(mx + std::log(acc)));
}

SignTestResult sign_test(std::size_t a_only, std::size_t b_only) {
    SignTestResult r;
    r.a_only = a_only;
    r.b_only = b_only;
    if (a_only + b_only == 0) {
        r.no_discordance = true;
        r.p_value = 1.0;
        return r;
    }
    r.p_value = binomial_upper_tail_half(a_only + b_only, a_only);
    return r;
}

SignTestResult binomial_significance(const EvalReport& a, const EvalReport& b, std::size_t k) {
    const std::size_t ka = a.k_index(k);
    const std::size_t kb = b.k_index(k);
    std::map<std::string, const EvalCase*> by_id;
    for (const auto& c : b.cases) by_id[c.case_id] = &c;
    if (a.cases.size() != b.cases.size() || by_id.size() != b.cases.size())
        fail(ErrorKind::Contract, "significance: reports cover different cases");
    std::size_t a_only = 0, b_only = 0;
    for (const auto& ca : a.cases) {
        auto it = by_id.find(ca.case_id);
        if (it == by_id.end()) fail(ErrorKind::Contract, "significance: case '" + ca.case_id + "' missing from report B");
        const bool ha = ca.hit[ka];
        const bool hb = it->second->hit[kb];
        if (ha && !hb) ++a_only;
        if (hb && !ha) ++b_only;
    }
    return sign_test(a_only, b_only);
}

ChanceBand label_permutation_band(const std::vector<std::vector<const EvalCase*>>& groups, std::size_t shuffles,
                                  double alpha, std::uint64_t seed) {
    require(!groups.empty() && shuffles >= 1, "permutation band: nothing to permute");
    require(alpha > 0 && alpha < 1, "permutation band: alpha must lie in (0, 1)");
    ChanceBand band;
    for (const auto& g : groups) {
        require(!g.empty(), "permutation band: empty case group");
        double m = 0;
        for (const auto* c : g) {
            require(c->ranked.size() == c->candidates, "permutation band: case ranking was truncated");
            m += c->ndcg;
        }
        band.observed += m / static_cast<double>(g.size());
    }
    band.observed /= static_cast<double>(groups.size());

    Rng rng = make_rng(seed, "tie-audit");
    std::vector<double> draws;
    draws.reserve(shuffles);
    std::vector<GradedItem> items;
    for (std::size_t s = 0; s < shuffles; ++s) {
        double total = 0;
        for (const auto& g : groups) {
            double m = 0;
            for (const auto* c : g) {
                items.clear();
                std::vector<bool> flags;
                for (const auto& r : c->ranked) {
                    items.push_back({r.score, false});
                    flags.push_back(std::find(c->relevant.begin(), c->relevant.end(), r.object_id) != c->relevant.end());
                }
                std::shuffle(flags.begin(), flags.end(), rng);
                for (std::size_t i = 0; i < items.size(); ++i) items[i].relevant = flags[i];
                m += ndcg_tie_aware(items);
            }
            total += m / static_cast<double>(g.size());
        }
        draws.push_back(total / static_cast<double>(groups.size()));
    }
    std::sort(draws.begin(), draws.end());
    const auto at = [&](double q) {
        const auto idx = static_cast<std::size_t>(std::floor(q * static_cast<double>(draws.size() - 1) + 0.5));
        return draws[std::min(idx, draws.size() - 1)];
    };
    band.lower = at(alpha / 2);
    band.upper = at(1 - alpha / 2);
    band.null_mean = std::accumulate(draws.begin(), draws.end(), 0.0) / static_cast<double>(draws.size());
    return band;
}

double paired_permutation_p(const EvalReport& a, const EvalReport& b, std::size_t shuffles, std::uint64_t seed) {
    std::map<std::string, double> b_ndcg;
    for (const auto& c : b.cases) b_ndcg[c.case_id] = c.ndcg;
    std::vector<double> diffs;
    for (const auto& c : a.cases) {
        auto it = b_ndcg.find(c.case_id);
        if (it == b_ndcg.end()) fail(ErrorKind::Contract, "permutation test: reports cover different cases");
        diffs.push_back(c.ndcg - it->second);
    }
    if (diffs.size() != b.cases.size()) fail(ErrorKind::Contract, "permutation test: reports cover different cases");
    require(!diffs.empty(), "permutation test: no cases");
    const double observed = std::accumulate(diffs.begin(), diffs.end(), 0.0);
    Rng rng = make_rng(seed, "tie-audit");
    std::bernoulli_distribution coin(0.5);
    std::size_t at_least = 0;
    for (std::size_t s = 0; s < shuffles; ++s) {
        double sum = 0;
        for (double d : diffs) sum += coin(rng) ? d : -d;
        if (sum >= observed - 1e-12) ++at_least;
    }
    return static_cast<double>(at_least + 1) / static_cast<double>(shuffles + 1);
}

nlohmann::json to_json(const EvalReport& report) {
    nlohmann::json j;
    j["metadata"] = report.metadata;
    j["ks"] = report.ks;
    j["skipped_folds"] = report.skipped_folds;
    nlohmann::json summary{{"cases", report.cases.size()},
                           {"ndcg", report.mean_ndcg},
                           {"average_position", report.mean_average_position}};
    for (std::size_t i = 0; i < report.ks.size(); ++i)
        summary["recall@" + std::to_string(report.ks[i])] = report.mean_recall[i];
    j["summary"] = std::move(summary);
    nlohmann::json cases = nlohmann::json::array();
    for (const auto& c : report.cases) {
        nlohmann::json cj{{"case_id", c.case_id},
                          {"user_id", c.user_id},
                          {"relevant", c.relevant},
                          {"candidates", c.candidates},
                          {"ndcg", c.ndcg},
                          {"average_position", c.average_position},
                          {"recall", c.recall},
                          {"hit", c.hit}};
        nlohmann::json ranked = nlohmann::json::array();
        for (const auto& r : c.ranked) ranked.push_back({r.object_id, r.score});
        cj["ranked"] = std::move(ranked);
        cases.push_back(std::move(cj));
    }
    j["cases"] = std::move(cases);
    return j;
}

EvalReport report_from_json(const nlohmann::json& j) {
    try {
        EvalReport r;
        r.metadata = j.at("metadata").get<std::map<std::string, std::string>>();
        r.ks = j.at("ks").get<std::vector<std::size_t>>();
        r.skipped_folds = j.at("skipped_folds").get<std::size_t>();
        for (const auto& cj : j.at("cases")) {
            EvalCase c;
            c.case_id = cj.at("case_id").get<std::string>();
            c.user_id = cj.at("user_id").get<std::string>();
            c.relevant = cj.at("relevant").get<std::vector<std::string>>();
            c.candidates = cj.at("candidates").get<std::size_t>();
            c.ndcg = cj.at("ndcg").get<double>();
            c.average_position = cj.at("average_position").get<double>();
            c.recall = cj.at("recall").get<std::vector<double>>();
            c.hit = cj.at("hit").get<std::vector<bool>>();
            for (const auto& rj : cj.at("ranked")) c.ranked.push_back({rj.at(0).get<std::string>(), rj.at(1).get<double>()});
            if (c.recall.size() != r.ks.size() || c.hit.size() != r.ks.size())
                fail(ErrorKind::Validation, "report case '" + c.case_id + "' has metrics for a different k list");
            r.cases.push_back(std::move(c));
        }
        r.finalize();
        return r;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Validation, std::string("malformed report JSON: ") + e.what());
    }
}

void write_report(const std::filesystem::path& path, const EvalReport& report) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) fail(ErrorKind::Io, "cannot create directory " + path.parent_path().string() + ": " + ec.message());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
    out << to_json(report).dump(1) << '\n';
}

EvalReport read_report(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open report " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Validation, "malformed report JSON in " + path.string() + ": " + e.what());
    }
    return report_from_json(j);
}

}  // namespace ctxrec
