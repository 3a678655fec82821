#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace ctxrec {

// One aggregated (user, object) interaction: raw feedback, presentation
// context and the purchase label.
struct InteractionRecord {
    std::string user_id;
    std::string object_id;

    std::int64_t f1_view_count = 0;
    double f2_dwell_time = 0;  // seconds
    double f3_mouse_distance = 0;
    double f4_mouse_time = 0;  // seconds
    double f5_scroll_distance = 0;
    double f6_scroll_time = 0;  // seconds

    std::int64_t c1_num_links = 0;
    std::int64_t c2_num_images = 0;
    std::int64_t c3_text_size = 0;
    std::int64_t c4_page_width = 1;
    std::int64_t c4_page_height = 1;
    std::int64_t c5_window_width = 1;
    std::int64_t c5_window_height = 1;
    double c6_visible_area_ratio = 1;
    bool c7_handheld = false;

    bool purchase = false;

    friend bool operator==(const InteractionRecord&, const InteractionRecord&) = default;
};

double visible_area_ratio(const InteractionRecord& r);

struct CatalogItem {
    std::string object_id;
    std::vector<std::string> categories;                       // non-empty
    std::vector<std::pair<std::string, std::string>> attributes;  // may repeat a name

    friend bool operator==(const CatalogItem&, const CatalogItem&) = default;
};

class ItemCatalog {
public:
    ItemCatalog() = default;
    explicit ItemCatalog(std::vector<CatalogItem> items);

    const std::vector<CatalogItem>& items() const { return items_; }
    std::size_t size() const { return items_.size(); }
    bool empty() const { return items_.empty(); }
    const CatalogItem* find(const std::string& object_id) const;
    bool contains(const std::string& object_id) const { return find(object_id) != nullptr; }

private:
    std::vector<CatalogItem> items_;  // sorted by object_id
    std::map<std::string, std::size_t> index_;
};

struct DatasetSummary {
    std::size_t n_users = 0;
    std::size_t n_objects = 0;
    std::size_t n_purchases = 0;
    std::size_t n_records = 0;

    friend bool operator==(const DatasetSummary&, const DatasetSummary&) = default;
};

DatasetSummary summarize(const std::vector<InteractionRecord>& records);

// Canonical interaction CSV column names, in file order.
const std::vector<std::string>& interaction_columns();

// Maps canonical field names to the column names of a foreign export.
// Unmapped fields are looked up under their canonical name.
struct ColumnMapping {
    std::map<std::string, std::string> source_for;

    std::string column_for(const std::string& canonical) const;
};

enum class TimeUnit { Seconds, Milliseconds };

struct RowReject {
    std::size_t line = 0;  // 1-based, header is line 1
    std::string reason;
};

struct LoadResult {
    std::vector<InteractionRecord> records;  // aggregated, sorted by (user, object)
    std::vector<RowReject> rejects;
};

// Parses and validates an interactions CSV. Rows sharing (user, object)
// are merged: feedback summed, context taken from the last row, purchase ORed.
LoadResult load_interactions(const std::filesystem::path& path, const ColumnMapping& mapping = {},
                             TimeUnit time_unit = TimeUnit::Seconds);
LoadResult parse_interactions(std::istream& in, const ColumnMapping& mapping = {},
                              TimeUnit time_unit = TimeUnit::Seconds);

std::vector<InteractionRecord> aggregate(std::vector<InteractionRecord> rows);

void write_interactions(std::ostream& out, const std::vector<InteractionRecord>& records);
void write_interactions(const std::filesystem::path& path, const std::vector<InteractionRecord>& records);

ItemCatalog load_catalog(const std::filesystem::path& path);
ItemCatalog parse_catalog(std::istream& in);
void write_catalog(std::ostream& out, const ItemCatalog& catalog);
void write_catalog(const std::filesystem::path& path, const ItemCatalog& catalog);

// Object ids referenced by interactions but absent from the catalog, sorted.
std::vector<std::string> unresolved_objects(const std::vector<InteractionRecord>& records,
                                            const ItemCatalog& catalog);

// Keeps users with at least 3 distinct objects and at least one purchase.
// Throws ErrorKind::Cohort when nobody qualifies.
std::vector<InteractionRecord> filter_evaluation_cohort(const std::vector<InteractionRecord>& records);

struct SynthConfig {
    std::uint64_t seed = 1;
    std::size_t n_users = 200;     // users that satisfy the cohort rule
    std::size_t n_objects = 300;
    double signal_strength = 0.8;  // in [0, 1]
    double ineligible_fraction = 0.1;  // extra users that the cohort filter must drop
    std::size_t max_records_per_user = 60;
    double power_law_exponent = 2.0;
};

struct SynthDataset {
    std::vector<InteractionRecord> records;
    ItemCatalog catalog;
};

SynthDataset synthesize(const SynthConfig& config);

}  // namespace ctxrec
