#include "ctxrec/recommenders.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>

#include "ctxrec/error.hpp"
#include "text.hpp"

namespace ctxrec {

std::set<std::string> UserProfile::visible() const {
    std::set<std::string> out;
    for (const auto& [o, _] : engaged) out.insert(o);
    return out;
}

bool UserProfile::has_signal() const {
    return std::any_of(engaged.begin(), engaged.end(), [](const auto& e) { return e.second > 0; });
}

UserProfile profile_from_preferences(const std::string& user_id, const std::vector<PreferenceEstimate>& estimates) {
    UserProfile p;
    p.user_id = user_id;
    for (const auto& e : estimates) {
        if (e.user_id != user_id) continue;
        p.engaged[e.object_id] = std::clamp(e.r_bar, 0.0, 1.0);
    }
    return p;
}

UserProfile binary_profile(const std::string& user_id, const std::vector<std::string>& visited) {
    UserProfile p;
    p.user_id = user_id;
    for (const auto& o : visited) p.engaged[o] = 1.0;
    return p;
}

void sort_ranking(std::vector<RankedItem>& items) {
    std::sort(items.begin(), items.end(), [](const RankedItem& a, const RankedItem& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.object_id < b.object_id;
    });
}

namespace {

RankedList truncate(const std::string& user_id, std::vector<RankedItem> items, std::size_t k) {
    if (items.size() > k) items.resize(k);
    return {user_id, std::move(items)};
}

bool is_number(const std::string& s) { return text::parse_double(s).has_value(); }

}  // namespace

VsmRecommender::VsmRecommender(const ItemCatalog& catalog) {
    require(!catalog.empty(), "vsm: catalog is empty");

    // Attributes whose every value is numeric get equal-frequency bins.
    std::map<std::string, std::vector<double>> numeric_values;
    std::set<std::string> categorical;
    for (const auto& item : catalog.items())
        for (const auto& [name, value] : item.attributes) {
            if (is_number(value))
                numeric_values[name].push_back(*text::parse_double(value));
            else
                categorical.insert(name);
        }
    std::map<std::string, std::pair<double, double>> cuts;
    for (auto& [name, values] : numeric_values) {
        if (categorical.count(name)) continue;
        std::sort(values.begin(), values.end());
        cuts[name] = {values[values.size() / 3], values[2 * values.size() / 3]};
    }

    for (const auto& item : catalog.items()) {
        object_index_[item.object_id] = object_ids_.size();
        object_ids_.push_back(item.object_id);
        std::set<std::string> toks;
        for (const auto& [name, value] : item.attributes) {
            auto c = cuts.find(name);
            if (c == cuts.end()) {
                toks.insert(name + "=" + value);
            } else {
                const double v = *text::parse_double(value);
                const int bin = v < c->second.first ? 0 : (v < c->second.second ? 1 : 2);
                toks.insert(name + "#" + std::to_string(bin));
            }
        }
        object_tokens_.emplace_back(toks.begin(), toks.end());
    }

    std::map<std::string, std::size_t> df;
    for (const auto& toks : object_tokens_)
        for (const auto& t : toks) ++df[t];
    const double n = static_cast<double>(object_ids_.size());
    for (const auto& [token, count] : df) {
        token_index_[token] = idf_.size();
        idf_.push_back(std::log(n / static_cast<double>(count)));
    }

    for (const auto& toks : object_tokens_) {
        SparseVector v;
        double sq = 0;
        for (const auto& t : toks) {
            const auto idx = token_index_.at(t);
            if (idf_[idx] > 0) {
                v.emplace_back(idx, idf_[idx]);
                sq += idf_[idx] * idf_[idx];
            }
        }
        std::sort(v.begin(), v.end());
        vectors_.push_back(std::move(v));
        norms_.push_back(std::sqrt(sq));
    }
}

double VsmRecommender::idf(const std::string& token) const {
    auto it = token_index_.find(token);
    return it == token_index_.end() ? 0.0 : idf_[it->second];
}

const std::vector<std::string>& VsmRecommender::tokens(const std::string& object_id) const {
    auto it = object_index_.find(object_id);
    require(it != object_index_.end(), "vsm: unknown object '" + object_id + "'");
    return object_tokens_[it->second];
}

std::vector<RankedItem> VsmRecommender::score_all(const UserProfile& profile) const {
    std::vector<double> dense(idf_.size(), 0.0);
    bool any = false;
    for (const auto& [object, weight] : profile.engaged) {
        auto it = object_index_.find(object);
        if (it == object_index_.end() || weight <= 0) continue;
        any = true;
        for (const auto& [idx, value] : vectors_[it->second]) dense[idx] += weight * value;
    }
    if (!any) fail(ErrorKind::EmptyProfile, "vsm: profile of user '" + profile.user_id + "' has no positive weight");
    double profile_norm = 0;
    for (double v : dense) profile_norm += v * v;
    profile_norm = std::sqrt(profile_norm);

    std::vector<RankedItem> out;
    out.reserve(object_ids_.size());
    for (std::size_t i = 0; i < object_ids_.size(); ++i) {
        if (profile.engaged.count(object_ids_[i])) continue;
        double dot = 0;
        for (const auto& [idx, value] : vectors_[i]) dot += dense[idx] * value;
        const double denom = profile_norm * norms_[i];
        out.push_back({object_ids_[i], denom > 0 ? dot / denom : 0.0});
    }
    sort_ranking(out);
    return out;
}

RankedList VsmRecommender::recommend(const UserProfile& profile, std::size_t k) const {
    return truncate(profile.user_id, score_all(profile), k);
}

RankedList vsm_recommend(const UserProfile& profile, const ItemCatalog& catalog, std::size_t k) {
    return VsmRecommender(catalog).recommend(profile, k);
}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
    if (a.empty() && b.empty()) return 0.0;
    std::size_t common = 0;
    for (const auto& x : a) common += b.count(x);
    const std::size_t uni = a.size() + b.size() - common;
    return static_cast<double>(common) / static_cast<double>(uni);
}

namespace {

std::map<std::string, std::set<std::string>> category_visitors(const std::vector<InteractionRecord>& interactions,
                                                               const ItemCatalog& catalog) {
    std::map<std::string, std::set<std::string>> visitors;
    for (const auto& r : interactions) {
        const auto* item = catalog.find(r.object_id);
        if (!item) continue;
        for (const auto& c : item->categories) visitors[c].insert(r.user_id);
    }
    return visitors;
}

}  // namespace

std::map<std::pair<std::string, std::string>, double> category_similarity(
    const std::vector<InteractionRecord>& interactions, const ItemCatalog& catalog) {
    const auto visitors = category_visitors(interactions, catalog);
    std::map<std::pair<std::string, std::string>, double> sim;
    for (auto a = visitors.begin(); a != visitors.end(); ++a) {
        sim[{a->first, a->first}] = a->second.empty() ? 0.0 : 1.0;
        for (auto b = std::next(a); b != visitors.end(); ++b) {
            const double s = jaccard(a->second, b->second);
            sim[{a->first, b->first}] = s;
            sim[{b->first, a->first}] = s;
        }
    }
    return sim;
}

std::map<std::string, double> popularity(const std::vector<InteractionRecord>& interactions) {
    std::map<std::string, double> views;
    for (const auto& r : interactions) views[r.object_id] += static_cast<double>(r.f1_view_count);
    std::map<std::string, double> pop;
    for (const auto& [o, v] : views) pop[o] = v > 1 ? std::log(v) : 0.0;
    return pop;
}

CategoryStats CategoryStats::build(const std::vector<InteractionRecord>& interactions, const ItemCatalog& catalog) {
    CategoryStats s;
    const auto visitors = category_visitors(interactions, catalog);
    for (auto a = visitors.begin(); a != visitors.end(); ++a) {
        s.visited_.insert(a->first);
        for (auto b = std::next(a); b != visitors.end(); ++b) {
            const double v = jaccard(a->second, b->second);
            if (v > 0) s.sim_[{a->first, b->first}] = v;
        }
    }
    s.pop_ = ctxrec::popularity(interactions);
    return s;
}

double CategoryStats::similarity(const std::string& a, const std::string& b) const {
    if (a == b) return visited_.count(a) ? 1.0 : 0.0;
    auto it = sim_.find(a < b ? std::make_pair(a, b) : std::make_pair(b, a));
    return it == sim_.end() ? 0.0 : it->second;
}

double CategoryStats::popularity(const std::string& object_id) const {
    auto it = pop_.find(object_id);
    return it == pop_.end() ? 0.0 : it->second;
}

std::vector<RankedItem> PopularSimCatRecommender::score_all(const UserProfile& profile) const {
    std::set<std::string> engaged_categories;
    for (const auto& [object, weight] : profile.engaged) {
        if (weight <= 0) continue;
        if (const auto* item = catalog_.find(object))
            engaged_categories.insert(item->categories.begin(), item->categories.end());
    }
    if (engaged_categories.empty())
        fail(ErrorKind::EmptyProfile, "popular simcat: user '" + profile.user_id + "' has no engaged category");

    std::map<std::string, double> category_weight;  // best similarity to an engaged category
    auto best_similarity = [&](const std::string& c) {
        auto it = category_weight.find(c);
        if (it != category_weight.end()) return it->second;
        double best = 0;
        if (engaged_categories.count(c)) {
            best = 1.0;
        } else {
            for (const auto& e : engaged_categories) best = std::max(best, stats_.similarity(c, e));
        }
        category_weight.emplace(c, best);
        return best;
    };

    std::vector<RankedItem> out;
    out.reserve(catalog_.size());
    for (const auto& item : catalog_.items()) {
        if (profile.engaged.count(item.object_id)) continue;
        double sim = 0;
        for (const auto& c : item.categories) sim = std::max(sim, best_similarity(c));
        out.push_back({item.object_id, stats_.popularity(item.object_id) * sim});
    }
    sort_ranking(out);
    return out;
}

RankedList PopularSimCatRecommender::recommend(const UserProfile& profile, std::size_t k) const {
    return truncate(profile.user_id, score_all(profile), k);
}

RankedList popular_simcat_recommend(const UserProfile& profile, const CategoryStats& stats, const ItemCatalog& catalog,
                                    std::size_t k) {
    return PopularSimCatRecommender(stats, catalog).recommend(profile, k);
}

std::string_view to_string(RecommenderKind k) { return k == RecommenderKind::Vsm ? "VSM" : "PopularSimCat"; }

RecommenderKind parse_recommender_kind(std::string_view name) {
    if (name == "VSM") return RecommenderKind::Vsm;
    if (name == "PopularSimCat") return RecommenderKind::PopularSimCat;
    fail(ErrorKind::Config, "unknown recommender '" + std::string(name) + "'");
}

void write_ranked_lists(std::ostream& out, const std::vector<RankedList>& lists) {
    out << "user_id,rank,object_id,score\n";
    for (const auto& l : lists)
        for (std::size_t i = 0; i < l.items.size(); ++i)
            out << text::csv_escape(l.user_id) << ',' << i + 1 << ',' << text::csv_escape(l.items[i].object_id) << ','
                << text::format_double(l.items[i].score) << '\n';
}

void write_ranked_lists(const std::filesystem::path& path, const std::vector<RankedList>& lists) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
    write_ranked_lists(out, lists);
}

}  // namespace ctxrec
