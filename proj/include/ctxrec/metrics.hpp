#pragma once

#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace ctxrec {

// Ranking metrics with binary relevance. Items sharing a score form a tie
// group; each metric is its expected value when every tie group is ordered
// uniformly at random.

struct GradedItem {
    double score = 0;
    bool relevant = false;
};

// Positions are 1-based; [first, last] covers one tie group.
struct TieGroup {
    std::size_t first = 0;
    std::size_t last = 0;
    std::size_t relevant = 0;
};

// Groups items by equal score after sorting by score descending.
std::vector<TieGroup> tie_groups(std::span<const GradedItem> items);

double dcg_discount(std::size_t position);  // 1 / log2(position + 1)

double ndcg_tie_aware(std::span<const GradedItem> items);
double recall_at_k(std::span<const GradedItem> items, std::size_t k);
double average_position(std::span<const GradedItem> items);

struct ScoredObject {
    std::string object_id;
    double score = 0;
};

// Object-keyed wrappers; every relevant object must appear in `ranked`.
double ndcg_tie_aware(std::span<const ScoredObject> ranked, const std::set<std::string>& relevant);
double recall_at_k(std::span<const ScoredObject> ranked, const std::set<std::string>& relevant, std::size_t k);
double average_position(std::span<const ScoredObject> ranked, const std::set<std::string>& relevant);

}  // namespace ctxrec
