#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ctxrec/dataset.hpp"

namespace ctxrec {

// Inferred preference r̄(u, o): purchase probability for classifiers,
// expected label for regressors (may leave [0, 1]).
struct PreferenceEstimate {
    std::string user_id;
    std::string object_id;
    double r_bar = 0;
};

struct UserProfile {
    std::string user_id;
    std::map<std::string, double> engaged;  // every training-visible object, weight in [0, 1]

    std::set<std::string> visible() const;
    bool has_signal() const;
};

// Weights are r̄ clipped to [0, 1]; objects clipped to 0 stay visible.
UserProfile profile_from_preferences(const std::string& user_id, const std::vector<PreferenceEstimate>& estimates);
// Binary baseline: every visited object weighs 1.
UserProfile binary_profile(const std::string& user_id, const std::vector<std::string>& visited);

struct RankedItem {
    std::string object_id;
    double score = 0;
};

struct RankedList {
    std::string user_id;
    std::vector<RankedItem> items;  // non-increasing score, ties by object_id
};

// Sorts by score descending, object_id ascending.
void sort_ranking(std::vector<RankedItem>& items);

// Content-based recommender: binarized attribute indicators weighted by
// IDF, matched to the preference-weighted profile by cosine similarity.
// Numeric attributes are binned into three equal-frequency bins.
class VsmRecommender {
public:
    explicit VsmRecommender(const ItemCatalog& catalog);

    // Every catalog object outside the profile's visible set, ranked.
    std::vector<RankedItem> score_all(const UserProfile& profile) const;
    RankedList recommend(const UserProfile& profile, std::size_t k) const;

    double idf(const std::string& token) const;
    const std::vector<std::string>& tokens(const std::string& object_id) const;

private:
    using SparseVector = std::vector<std::pair<std::size_t, double>>;  // sorted by token index

    std::vector<std::string> object_ids_;  // sorted
    std::map<std::string, std::size_t> object_index_;
    std::vector<std::vector<std::string>> object_tokens_;
    std::map<std::string, std::size_t> token_index_;
    std::vector<double> idf_;
    std::vector<SparseVector> vectors_;
    std::vector<double> norms_;
};

RankedList vsm_recommend(const UserProfile& profile, const ItemCatalog& catalog, std::size_t k);

// Category co-visitation similarity and log-popularity computed from
// training interactions.
class CategoryStats {
public:
    static CategoryStats build(const std::vector<InteractionRecord>& interactions, const ItemCatalog& catalog);

    double similarity(const std::string& a, const std::string& b) const;
    double popularity(const std::string& object_id) const;
    const std::map<std::string, double>& popularity_map() const { return pop_; }
    const std::set<std::string>& visited_categories() const { return visited_; }

private:
    std::map<std::pair<std::string, std::string>, double> sim_;  // key ordered (a < b)
    std::map<std::string, double> pop_;
    std::set<std::string> visited_;
};

// Jaccard similarity of two visitor sets; 0 when both are empty.
double jaccard(const std::set<std::string>& a, const std::set<std::string>& b);

std::map<std::pair<std::string, std::string>, double> category_similarity(
    const std::vector<InteractionRecord>& interactions, const ItemCatalog& catalog);
std::map<std::string, double> popularity(const std::vector<InteractionRecord>& interactions);

class PopularSimCatRecommender {
public:
    PopularSimCatRecommender(const CategoryStats& stats, const ItemCatalog& catalog) : stats_(stats), catalog_(catalog) {}

    std::vector<RankedItem> score_all(const UserProfile& profile) const;
    RankedList recommend(const UserProfile& profile, std::size_t k) const;

private:
    const CategoryStats& stats_;
    const ItemCatalog& catalog_;
};

RankedList popular_simcat_recommend(const UserProfile& profile, const CategoryStats& stats, const ItemCatalog& catalog,
                                    std::size_t k);

enum class RecommenderKind { Vsm, PopularSimCat };
std::string_view to_string(RecommenderKind k);
RecommenderKind parse_recommender_kind(std::string_view name);

void write_ranked_lists(std::ostream& out, const std::vector<RankedList>& lists);
void write_ranked_lists(const std::filesystem::path& path, const std::vector<RankedList>& lists);

}  // namespace ctxrec
