#include "ctxrec/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <tuple>

#include "ctxrec/error.hpp"
#include "text.hpp"

namespace ctxrec {

namespace {

const std::array<const char*, 6> kFeedbackNames = {"f1", "f2", "f3", "f4", "f5", "f6"};
const std::array<const char*, 6> kRelativeNames = {"f1_u", "f2_u", "f3_u", "f4_u", "f5_u", "f6_u"};
const std::array<const char*, 9> kContextNames = {"c1_links", "c2_images", "c3_text", "c4_page_w", "c4_page_h",
                                                  "c5_win_w", "c5_win_h",  "c6_visible_ratio", "c7_handheld"};
const std::array<const char*, 5> kComplexityNames = {"c1", "c2", "c3", "c4_area", "c6"};

}  // namespace

std::string_view to_string(Variant v) {
    switch (v) {
        case Variant::DwellTime: return "DwellTime";
        case Variant::RawFeedback: return "RawFeedback";
        case Variant::RawPlusContext: return "RawPlusContext";
        case Variant::AllFeatures: return "AllFeatures";
    }
    return "?";
}

Variant parse_variant(std::string_view name) {
    for (auto v : kAllVariants)
        if (to_string(v) == name) return v;
    fail(ErrorKind::Config, "unknown dataset variant '" + std::string(name) + "'");
}

FeatureMatrix FeatureMatrix::subset(std::span<const std::size_t> row_indices) const {
    FeatureMatrix out;
    out.variant = variant;
    out.columns = columns;
    out.values.reserve(row_indices.size() * cols());
    for (auto i : row_indices) {
        out.user_ids.push_back(user_ids[i]);
        out.object_ids.push_back(object_ids[i]);
        auto r = row(i);
        out.values.insert(out.values.end(), r.begin(), r.end());
        out.labels.push_back(labels[i]);
    }
    return out;
}

FeedbackVector raw_feedback(const InteractionRecord& r) {
    return {static_cast<double>(r.f1_view_count), r.f2_dwell_time,      r.f3_mouse_distance,
            r.f4_mouse_time,                      r.f5_scroll_distance, r.f6_scroll_time};
}

std::vector<FeedbackVector> relative_user_features(std::span<const InteractionRecord> user_records) {
    require(!user_records.empty(), "relative_user_features: empty user group");
    FeedbackVector mean{};
    for (const auto& r : user_records) {
        auto f = raw_feedback(r);
        for (std::size_t i = 0; i < 6; ++i) mean[i] += f[i];
    }
    for (auto& m : mean) m /= static_cast<double>(user_records.size());

    std::vector<FeedbackVector> out;
    out.reserve(user_records.size());
    for (const auto& r : user_records) {
        auto f = raw_feedback(r);
        FeedbackVector rel{};
        for (std::size_t i = 0; i < 6; ++i) rel[i] = mean[i] > 0 ? f[i] / mean[i] : 0.0;
        out.push_back(rel);
    }
    return out;
}

double scrolled_area(const InteractionRecord& r) {
    require(r.c4_page_height > 0, "scrolled_area: page height must be positive");
    const double seen = static_cast<double>(r.c5_window_height) + r.f5_scroll_distance;
    return std::min(1.0, seen / static_cast<double>(r.c4_page_height));
}

bool hit_bottom(const InteractionRecord& r) {
    require(r.c4_page_height > 0, "hit_bottom: page height must be positive");
    return static_cast<double>(r.c5_window_height) + r.f5_scroll_distance >= static_cast<double>(r.c4_page_height);
}

std::array<double, kRatioCount> complexity_ratios(const InteractionRecord& r, const FeedbackVector& relative) {
    const std::array<double, 5> complexity = {
        static_cast<double>(r.c1_num_links),
        static_cast<double>(r.c2_num_images),
        static_cast<double>(r.c3_text_size),
        static_cast<double>(r.c4_page_width) * static_cast<double>(r.c4_page_height),
        r.c6_visible_area_ratio,
    };
    const auto raw = raw_feedback(r);
    std::array<double, kRatioCount> out{};
    std::size_t k = 0;
    for (std::size_t i = 0; i < 12; ++i) {
        const double f = i < 6 ? raw[i] : relative[i - 6];
        for (double c : complexity) out[k++] = f / std::max(c, 1.0);
    }
    return out;
}

std::vector<std::string> variant_columns(Variant v) {
    std::vector<std::string> cols;
    if (v == Variant::DwellTime) return {"f2", "f2_u"};
    cols.insert(cols.end(), kFeedbackNames.begin(), kFeedbackNames.end());
    cols.insert(cols.end(), kRelativeNames.begin(), kRelativeNames.end());
    if (v == Variant::RawFeedback) return cols;
    cols.insert(cols.end(), kContextNames.begin(), kContextNames.end());
    cols.emplace_back("f_sc");
    cols.emplace_back("f_hb");
    if (v == Variant::RawPlusContext) return cols;
    for (std::size_t i = 0; i < 12; ++i)
        for (const char* c : kComplexityNames)
            cols.push_back(std::string(i < 6 ? kFeedbackNames[i] : kRelativeNames[i - 6]) + "/" + c);
    return cols;
}

FeatureMatrix build_variant(const std::vector<InteractionRecord>& records, Variant variant) {
    std::vector<std::size_t> order(records.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::tie(records[a].user_id, records[a].object_id) < std::tie(records[b].user_id, records[b].object_id);
    });
    std::vector<InteractionRecord> sorted;
    sorted.reserve(records.size());
    for (auto i : order) sorted.push_back(records[i]);

    FeatureMatrix m;
    m.variant = variant;
    m.columns = variant_columns(variant);
    m.values.reserve(sorted.size() * m.columns.size());

    std::size_t begin = 0;
    while (begin < sorted.size()) {
        std::size_t end = begin;
        while (end < sorted.size() && sorted[end].user_id == sorted[begin].user_id) ++end;
        std::span<const InteractionRecord> group(sorted.data() + begin, end - begin);
        const auto relative = relative_user_features(group);
        for (std::size_t k = 0; k < group.size(); ++k) {
            const auto& r = group[k];
            const auto raw = raw_feedback(r);
            const auto& rel = relative[k];
            if (variant == Variant::DwellTime) {
                m.values.push_back(raw[1]);
                m.values.push_back(rel[1]);
            } else {
                m.values.insert(m.values.end(), raw.begin(), raw.end());
                m.values.insert(m.values.end(), rel.begin(), rel.end());
                if (variant != Variant::RawFeedback) {
                    const double context[] = {
                        static_cast<double>(r.c1_num_links),     static_cast<double>(r.c2_num_images),
                        static_cast<double>(r.c3_text_size),     static_cast<double>(r.c4_page_width),
                        static_cast<double>(r.c4_page_height),   static_cast<double>(r.c5_window_width),
                        static_cast<double>(r.c5_window_height), r.c6_visible_area_ratio,
                        r.c7_handheld ? 1.0 : 0.0};
                    m.values.insert(m.values.end(), std::begin(context), std::end(context));
                    m.values.push_back(scrolled_area(r));
                    m.values.push_back(hit_bottom(r) ? 1.0 : 0.0);
                    if (variant == Variant::AllFeatures) {
                        const auto ratios = complexity_ratios(r, rel);
                        m.values.insert(m.values.end(), ratios.begin(), ratios.end());
                    }
                }
            }
            m.user_ids.push_back(r.user_id);
            m.object_ids.push_back(r.object_id);
            m.labels.push_back(r.purchase ? 1 : 0);
        }
        begin = end;
    }
    for (double v : m.values)
        if (!std::isfinite(v)) fail(ErrorKind::Contract, "feature engineering produced a non-finite value");
    return m;
}

void write_feature_csv(std::ostream& out, const FeatureMatrix& m) {
    out << "user_id,object_id";
    for (const auto& c : m.columns) out << ',' << c;
    out << ",purchase\n";
    for (std::size_t i = 0; i < m.rows(); ++i) {
        out << text::csv_escape(m.user_ids[i]) << ',' << text::csv_escape(m.object_ids[i]);
        for (double v : m.row(i)) out << ',' << text::format_double(v);
        out << ',' << m.labels[i] << '\n';
    }
}

void write_feature_csv(const std::filesystem::path& path, const FeatureMatrix& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
    write_feature_csv(out, m);
}

}  // namespace ctxrec
