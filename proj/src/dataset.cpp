#include "ctxrec/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <unordered_map>

#include "ctxrec/error.hpp"
#include "text.hpp"

namespace ctxrec {

double visible_area_ratio(const InteractionRecord& r) {
    return (static_cast<double>(r.c5_window_width) * static_cast<double>(r.c5_window_height)) /
           (static_cast<double>(r.c4_page_width) * static_cast<double>(r.c4_page_height));
}

ItemCatalog::ItemCatalog(std::vector<CatalogItem> items) : items_(std::move(items)) {
    std::sort(items_.begin(), items_.end(),
              [](const CatalogItem& a, const CatalogItem& b) { return a.object_id < b.object_id; });
    for (std::size_t i = 0; i < items_.size(); ++i) {
        if (items_[i].categories.empty())
            fail(ErrorKind::Validation, "catalog object '" + items_[i].object_id + "' has no category");
        if (!index_.emplace(items_[i].object_id, i).second)
            fail(ErrorKind::Validation, "duplicate catalog object '" + items_[i].object_id + "'");
    }
}

const CatalogItem* ItemCatalog::find(const std::string& object_id) const {
    auto it = index_.find(object_id);
    return it == index_.end() ? nullptr : &items_[it->second];
}

DatasetSummary summarize(const std::vector<InteractionRecord>& records) {
    std::set<std::string> users, objects;
    DatasetSummary s;
    for (const auto& r : records) {
        users.insert(r.user_id);
        objects.insert(r.object_id);
        if (r.purchase) ++s.n_purchases;
    }
    s.n_users = users.size();
    s.n_objects = objects.size();
    s.n_records = records.size();
    return s;
}

const std::vector<std::string>& interaction_columns() {
    static const std::vector<std::string> cols = {
        "user_id",   "object_id", "f1_view_count", "f2_dwell_time",    "f3_mouse_distance", "f4_mouse_time",
        "f5_scroll_distance",     "f6_scroll_time", "c1_links",        "c2_images",         "c3_text",
        "c4_page_w", "c4_page_h", "c5_win_w",      "c5_win_h",         "c6_visible_ratio",  "c7_handheld",
        "purchase"};
    return cols;
}

std::string ColumnMapping::column_for(const std::string& canonical) const {
    auto it = source_for.find(canonical);
    return it == source_for.end() ? canonical : it->second;
}

namespace {

// Column positions of the canonical fields inside one particular file.
struct ColumnIndex {
    std::vector<int> pos;  // by canonical column order; -1 when absent
};

ColumnIndex resolve_columns(const std::vector<std::string>& header, const ColumnMapping& mapping) {
    std::unordered_map<std::string, int> where;
    for (std::size_t i = 0; i < header.size(); ++i) where.emplace(std::string(text::trim(header[i])), static_cast<int>(i));
    ColumnIndex idx;
    for (const auto& canonical : interaction_columns()) {
        const auto source = mapping.column_for(canonical);
        auto it = where.find(source);
        if (it == where.end()) {
            if (canonical == "c6_visible_ratio") {
                idx.pos.push_back(-1);
                continue;
            }
            fail(ErrorKind::Schema, "missing column '" + source + "' for field " + canonical);
        }
        idx.pos.push_back(it->second);
    }
    return idx;
}

enum Col {
    kUser, kObject, kF1, kF2, kF3, kF4, kF5, kF6, kC1, kC2, kC3, kC4W, kC4H, kC5W, kC5H, kC6, kC7, kPurchase
};

struct RowParser {
    const std::vector<std::string>& fields;
    const ColumnIndex& idx;

    std::string_view raw(Col c) const {
        int p = idx.pos[c];
        if (p < 0 || static_cast<std::size_t>(p) >= fields.size()) return {};
        return text::trim(fields[p]);
    }
};

std::optional<bool> parse_bool(std::string_view s) {
    if (s == "1") return true;
    if (s == "0") return false;
    return std::nullopt;
}

// Returns the reject reason, or empty on success.
std::string parse_row(const RowParser& row, TimeUnit unit, InteractionRecord& out) {
    out.user_id = std::string(row.raw(kUser));
    out.object_id = std::string(row.raw(kObject));
    if (out.user_id.empty() || out.object_id.empty()) return "missing identifier";

    const double time_scale = unit == TimeUnit::Milliseconds ? 1e-3 : 1.0;
    auto f1 = text::parse_int(row.raw(kF1));
    if (!f1) return "malformed f1_view_count";
    out.f1_view_count = *f1;
    struct RealField { Col col; double* dst; double scale; const char* name; };
    const RealField reals[] = {
        {kF2, &out.f2_dwell_time, time_scale, "f2_dwell_time"},
        {kF3, &out.f3_mouse_distance, 1.0, "f3_mouse_distance"},
        {kF4, &out.f4_mouse_time, time_scale, "f4_mouse_time"},
        {kF5, &out.f5_scroll_distance, 1.0, "f5_scroll_distance"},
        {kF6, &out.f6_scroll_time, time_scale, "f6_scroll_time"},
    };
    for (const auto& f : reals) {
        auto v = text::parse_double(row.raw(f.col));
        if (!v || !std::isfinite(*v)) return std::string("malformed ") + f.name;
        *f.dst = *v * f.scale;
    }
    if (out.f1_view_count < 0 || out.f2_dwell_time < 0 || out.f3_mouse_distance < 0 || out.f4_mouse_time < 0 ||
        out.f5_scroll_distance < 0 || out.f6_scroll_time < 0)
        return "negative feedback";

    struct IntField { Col col; std::int64_t* dst; const char* name; };
    const IntField counts[] = {
        {kC1, &out.c1_num_links, "c1_links"},
        {kC2, &out.c2_num_images, "c2_images"},
        {kC3, &out.c3_text_size, "c3_text"},
    };
    for (const auto& f : counts) {
        auto v = text::parse_int(row.raw(f.col));
        if (!v) return std::string("malformed ") + f.name;
        if (*v < 0) return "negative context value";
        *f.dst = *v;
    }

    const IntField dims[] = {
        {kC4W, &out.c4_page_width, "c4_page_w"},
        {kC4H, &out.c4_page_height, "c4_page_h"},
        {kC5W, &out.c5_window_width, "c5_win_w"},
        {kC5H, &out.c5_window_height, "c5_win_h"},
    };
    for (const auto& f : dims) {
        if (row.raw(f.col).empty()) return f.col == kC4W || f.col == kC4H ? "missing page dimensions" : "missing window dimensions";
        auto v = text::parse_int(row.raw(f.col));
        if (!v) return std::string("malformed ") + f.name;
        if (*v <= 0) return f.col == kC4W || f.col == kC4H ? "zero page dimensions" : "zero window dimensions";
        *f.dst = *v;
    }

    // c6 is derivable from the dimensions; a supplied value is checked for
    // syntax only and then replaced by the exact ratio.
    if (!row.raw(kC6).empty()) {
        auto v = text::parse_double(row.raw(kC6));
        if (!v) return "malformed c6_visible_ratio";
    }
    out.c6_visible_area_ratio = visible_area_ratio(out);

    auto c7 = parse_bool(row.raw(kC7));
    if (!c7) return "invalid boolean c7_handheld";
    out.c7_handheld = *c7;
    auto purchase = parse_bool(row.raw(kPurchase));
    if (!purchase) return "invalid boolean purchase";
    out.purchase = *purchase;
    return {};
}

}  // namespace

std::vector<InteractionRecord> aggregate(std::vector<InteractionRecord> rows) {
    std::map<std::pair<std::string, std::string>, InteractionRecord> merged;
    for (auto& r : rows) {
        auto key = std::make_pair(r.user_id, r.object_id);
        auto it = merged.find(key);
        if (it == merged.end()) {
            merged.emplace(std::move(key), std::move(r));
            continue;
        }
        InteractionRecord& acc = it->second;
        const bool bought = acc.purchase || r.purchase;
        r.f1_view_count += acc.f1_view_count;
        r.f2_dwell_time += acc.f2_dwell_time;
        r.f3_mouse_distance += acc.f3_mouse_distance;
        r.f4_mouse_time += acc.f4_mouse_time;
        r.f5_scroll_distance += acc.f5_scroll_distance;
        r.f6_scroll_time += acc.f6_scroll_time;
        r.purchase = bought;
        acc = std::move(r);  // context fields: last observation wins
    }
    std::vector<InteractionRecord> out;
    out.reserve(merged.size());
    for (auto& [_, r] : merged) out.push_back(std::move(r));
    return out;
}

LoadResult parse_interactions(std::istream& in, const ColumnMapping& mapping, TimeUnit time_unit) {
    std::string line;
    if (!std::getline(in, line)) fail(ErrorKind::Schema, "interactions file has no header row");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    const auto header = text::split_csv_line(line);
    const auto idx = resolve_columns(header, mapping);

    LoadResult result;
    std::vector<InteractionRecord> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        std::vector<std::string> fields;
        try {
            fields = text::split_csv_line(line);
        } catch (const std::exception&) {
            result.rejects.push_back({line_no, "malformed CSV"});
            continue;
        }
        if (fields.size() != header.size()) {
            result.rejects.push_back({line_no, "expected " + std::to_string(header.size()) + " fields, found " +
                                                   std::to_string(fields.size())});
            continue;
        }
        InteractionRecord rec;
        auto reason = parse_row(RowParser{fields, idx}, time_unit, rec);
        if (!reason.empty()) {
            result.rejects.push_back({line_no, std::move(reason)});
            continue;
        }
        rows.push_back(std::move(rec));
    }
    result.records = aggregate(std::move(rows));
    return result;
}

LoadResult load_interactions(const std::filesystem::path& path, const ColumnMapping& mapping, TimeUnit time_unit) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open interactions file " + path.string());
    return parse_interactions(in, mapping, time_unit);
}

void write_interactions(std::ostream& out, const std::vector<InteractionRecord>& records) {
    const auto& cols = interaction_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << '\n';
    using text::format_double;
    for (const auto& r : records) {
        out << text::csv_escape(r.user_id) << ',' << text::csv_escape(r.object_id) << ',' << r.f1_view_count << ','
            << format_double(r.f2_dwell_time) << ',' << format_double(r.f3_mouse_distance) << ','
            << format_double(r.f4_mouse_time) << ',' << format_double(r.f5_scroll_distance) << ','
            << format_double(r.f6_scroll_time) << ',' << r.c1_num_links << ',' << r.c2_num_images << ','
            << r.c3_text_size << ',' << r.c4_page_width << ',' << r.c4_page_height << ',' << r.c5_window_width << ','
            << r.c5_window_height << ',' << format_double(r.c6_visible_area_ratio) << ',' << (r.c7_handheld ? 1 : 0)
            << ',' << (r.purchase ? 1 : 0) << '\n';
    }
}

void write_interactions(const std::filesystem::path& path, const std::vector<InteractionRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
    write_interactions(out, records);
}

ItemCatalog parse_catalog(std::istream& in) {
    std::string line;
    std::vector<CatalogItem> items;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
        if (text::trim(line).empty()) continue;
        auto fields = text::split_csv_line(line);
        if (line_no == 1 && !fields.empty() && text::trim(fields[0]) == "object_id") continue;
        if (fields.size() < 2 || fields.size() > 3)
            fail(ErrorKind::Validation, "catalog line " + std::to_string(line_no) + ": expected 3 fields");
        CatalogItem item;
        item.object_id = std::string(text::trim(fields[0]));
        if (item.object_id.empty())
            fail(ErrorKind::Validation, "catalog line " + std::to_string(line_no) + ": missing object_id");
        for (const auto& c : text::split(fields[1], ';')) {
            auto t = text::trim(c);
            if (!t.empty()) item.categories.emplace_back(t);
        }
        if (item.categories.empty())
            fail(ErrorKind::Validation, "catalog line " + std::to_string(line_no) + ": object has no category");
        if (fields.size() == 3) {
            for (const auto& a : text::split(fields[2], ';')) {
                auto t = text::trim(a);
                if (t.empty()) continue;
                auto eq = t.find('=');
                if (eq == std::string_view::npos || eq == 0)
                    fail(ErrorKind::Validation,
                         "catalog line " + std::to_string(line_no) + ": attribute '" + std::string(t) + "' is not name=value");
                item.attributes.emplace_back(std::string(text::trim(t.substr(0, eq))),
                                             std::string(text::trim(t.substr(eq + 1))));
            }
        }
        items.push_back(std::move(item));
    }
    return ItemCatalog(std::move(items));
}

ItemCatalog load_catalog(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open catalog file " + path.string());
    return parse_catalog(in);
}

void write_catalog(std::ostream& out, const ItemCatalog& catalog) {
    out << "object_id,category_ids,attributes\n";
    for (const auto& item : catalog.items()) {
        std::string cats, attrs;
        for (std::size_t i = 0; i < item.categories.size(); ++i) cats += (i ? ";" : "") + item.categories[i];
        for (std::size_t i = 0; i < item.attributes.size(); ++i)
            attrs += (i ? ";" : "") + item.attributes[i].first + "=" + item.attributes[i].second;
        out << text::csv_escape(item.object_id) << ',' << text::csv_escape(cats) << ',' << text::csv_escape(attrs)
            << '\n';
    }
}

void write_catalog(const std::filesystem::path& path, const ItemCatalog& catalog) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
    write_catalog(out, catalog);
}

std::vector<std::string> unresolved_objects(const std::vector<InteractionRecord>& records, const ItemCatalog& catalog) {
    std::set<std::string> missing;
    for (const auto& r : records)
        if (!catalog.contains(r.object_id)) missing.insert(r.object_id);
    return {missing.begin(), missing.end()};
}

std::vector<InteractionRecord> filter_evaluation_cohort(const std::vector<InteractionRecord>& records) {
    struct Tally {
        std::set<std::string> objects;
        bool bought = false;
    };
    std::map<std::string, Tally> per_user;
    for (const auto& r : records) {
        auto& t = per_user[r.user_id];
        t.objects.insert(r.object_id);
        t.bought = t.bought || r.purchase;
    }
    std::vector<InteractionRecord> kept;
    for (const auto& r : records) {
        const auto& t = per_user[r.user_id];
        if (t.objects.size() >= 3 && t.bought) kept.push_back(r);
    }
    if (kept.empty()) fail(ErrorKind::Cohort, "no user visited at least 3 objects and purchased at least one");
    return kept;
}

}  // namespace ctxrec
