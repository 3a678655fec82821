#include "ctxrec/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "ctxrec/error.hpp"

namespace ctxrec {

double dcg_discount(std::size_t position) { return 1.0 / std::log2(static_cast<double>(position) + 1.0); }

std::vector<TieGroup> tie_groups(std::span<const GradedItem> items) {
    std::vector<GradedItem> sorted(items.begin(), items.end());
    std::stable_sort(sorted.begin(), sorted.end(), [](const GradedItem& a, const GradedItem& b) { return a.score > b.score; });
    std::vector<TieGroup> groups;
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        TieGroup g;
        while (j < sorted.size() && sorted[j].score == sorted[i].score) {
            g.relevant += sorted[j].relevant ? 1 : 0;
            ++j;
        }
        g.first = i + 1;
        g.last = j;
        groups.push_back(g);
        i = j;
    }
    return groups;
}

namespace {

std::size_t count_relevant(std::span<const GradedItem> items) {
    return static_cast<std::size_t>(std::count_if(items.begin(), items.end(), [](const GradedItem& g) { return g.relevant; }));
}

std::vector<GradedItem> grade(std::span<const ScoredObject> ranked, const std::set<std::string>& relevant) {
    std::vector<GradedItem> out;
    out.reserve(ranked.size());
    std::size_t found = 0;
    for (const auto& r : ranked) {
        const bool rel = relevant.count(r.object_id) > 0;
        found += rel ? 1 : 0;
        out.push_back({r.score, rel});
    }
    require(found == relevant.size(), "metric: relevant objects missing from the ranked universe");
    return out;
}

}  // namespace

double ndcg_tie_aware(std::span<const GradedItem> items) {
    require(!items.empty(), "ndcg: ranking is empty");
    const std::size_t n_relevant = count_relevant(items);
    require(n_relevant > 0, "ndcg: no relevant item");
    double dcg = 0;
    for (const auto& g : tie_groups(items)) {
        if (g.relevant == 0) continue;
        double mean_discount = 0;
        for (std::size_t p = g.first; p <= g.last; ++p) mean_discount += dcg_discount(p);
        mean_discount /= static_cast<double>(g.last - g.first + 1);
        dcg += static_cast<double>(g.relevant) * mean_discount;
    }
    double ideal = 0;
    for (std::size_t p = 1; p <= n_relevant; ++p) ideal += dcg_discount(p);
    return dcg / ideal;
}

double recall_at_k(std::span<const GradedItem> items, std::size_t k) {
    require(k >= 1, "recall: k must be >= 1");
    const std::size_t n_relevant = count_relevant(items);
    require(n_relevant > 0, "recall: no relevant item");
    double hits = 0;
    for (const auto& g : tie_groups(items)) {
        if (g.first > k) break;
        const double size = static_cast<double>(g.last - g.first + 1);
        const double inside = static_cast<double>(std::min(g.last, k) - g.first + 1);
        hits += static_cast<double>(g.relevant) * inside / size;
    }
    return hits / static_cast<double>(n_relevant);
}

double average_position(std::span<const GradedItem> items) {
    const std::size_t n_relevant = count_relevant(items);
    require(n_relevant > 0, "average position: no relevant item");
    double total = 0;
    for (const auto& g : tie_groups(items))
        total += static_cast<double>(g.relevant) * static_cast<double>(g.first + g.last) / 2.0;
    return total / static_cast<double>(n_relevant);
}

double ndcg_tie_aware(std::span<const ScoredObject> ranked, const std::set<std::string>& relevant) {
    require(!relevant.empty(), "ndcg: relevant set is empty");
    return ndcg_tie_aware(grade(ranked, relevant));
}

double recall_at_k(std::span<const ScoredObject> ranked, const std::set<std::string>& relevant, std::size_t k) {
    require(!relevant.empty(), "recall: relevant set is empty");
    return recall_at_k(grade(ranked, relevant), k);
}

double average_position(std::span<const ScoredObject> ranked, const std::set<std::string>& relevant) {
    require(!relevant.empty(), "average position: relevant set is empty");
    return average_position(grade(ranked, relevant));
}

}  // namespace ctxrec
