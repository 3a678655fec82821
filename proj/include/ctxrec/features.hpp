#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ctxrec/dataset.hpp"

namespace ctxrec {

enum class Variant { DwellTime, RawFeedback, RawPlusContext, AllFeatures };

inline constexpr std::array<Variant, 4> kAllVariants = {Variant::DwellTime, Variant::RawFeedback,
                                                        Variant::RawPlusContext, Variant::AllFeatures};

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view name);  // throws ErrorKind::Config

// Dense row-major design matrix for one dataset variant. Rows are ordered by
// (user_id, object_id).
struct FeatureMatrix {
    Variant variant = Variant::RawFeedback;
    std::vector<std::string> columns;
    std::vector<std::string> user_ids;
    std::vector<std::string> object_ids;
    std::vector<double> values;
    std::vector<int> labels;  // purchase, 0/1

    std::size_t rows() const { return labels.size(); }
    std::size_t cols() const { return columns.size(); }
    std::span<const double> row(std::size_t i) const { return {values.data() + i * cols(), cols()}; }
    double at(std::size_t i, std::size_t j) const { return values[i * cols() + j]; }

    // Rows whose indices are listed, in that order.
    FeatureMatrix subset(std::span<const std::size_t> row_indices) const;
};

using FeedbackVector = std::array<double, 6>;
inline constexpr std::size_t kRatioCount = 60;

FeedbackVector raw_feedback(const InteractionRecord& r);

// f_i / mean_u(f_i) for every record of one user, with 0/0 taken as 0.
std::vector<FeedbackVector> relative_user_features(std::span<const InteractionRecord> user_records);

// Fraction of the page that has been inside the window, clipped to 1.
double scrolled_area(const InteractionRecord& r);
bool hit_bottom(const InteractionRecord& r);

// Feedback over page complexity: each of the 12 feedback values (raw then
// relative) divided by max(c, 1) for c in {links, images, text, page area,
// visible ratio}. Feedback-major order.
std::array<double, kRatioCount> complexity_ratios(const InteractionRecord& r, const FeedbackVector& relative);

std::vector<std::string> variant_columns(Variant v);

FeatureMatrix build_variant(const std::vector<InteractionRecord>& records, Variant variant);

void write_feature_csv(std::ostream& out, const FeatureMatrix& m);
void write_feature_csv(const std::filesystem::path& path, const FeatureMatrix& m);

}  // namespace ctxrec
