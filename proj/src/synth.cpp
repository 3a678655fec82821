#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

#include "ctxrec/dataset.hpp"
#include "ctxrec/error.hpp"
#include "ctxrec/rng.hpp"

namespace ctxrec {

namespace {

std::string make_id(char prefix, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%c%05zu", prefix, i);
    return buf;
}

double log_uniform(Rng& rng, double lo, double hi) {
    std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
    return std::exp(u(rng));
}

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

bool bernoulli(Rng& rng, double p) { return std::uniform_real_distribution<double>(0, 1)(rng) < p; }

int poisson(Rng& rng, double mean) { return std::poisson_distribution<int>(mean)(rng); }

// Page layout of an object as rendered on a desktop browser.
struct PageLayout {
    std::int64_t links, images, text, width, height;
};

struct ObjectInfo {
    std::vector<std::size_t> categories;
    double popularity;  // sampling weight
    PageLayout page;
};

const char* const kTourTypes[] = {"beach", "sightseeing", "mountains", "cruise", "city", "wellness"};
const char* const kCountries[] = {"CZ", "AT", "HR", "IT", "ES", "GR", "EG", "TR", "FR", "SK"};
const char* const kBoards[] = {"none", "breakfast", "half", "full"};
const char* const kTransport[] = {"bus", "plane", "own"};
const char* const kFlags[] = {"wifi", "pool", "pets", "all_inclusive", "family", "seniors",
                              "skiing", "last_minute", "parking", "spa", "kids_club"};

ItemCatalog make_catalog(Rng& rng, std::size_t n_objects, std::size_t n_categories,
                         std::vector<ObjectInfo>& info) {
    struct CategoryTheme {
        std::size_t type, country;
    };
    std::vector<CategoryTheme> themes(n_categories);
    for (auto& t : themes) {
        t.type = std::uniform_int_distribution<std::size_t>(0, std::size(kTourTypes) - 1)(rng);
        t.country = std::uniform_int_distribution<std::size_t>(0, std::size(kCountries) - 1)(rng);
    }

    // Zipf-like popularity over a random permutation of objects.
    std::vector<std::size_t> rank(n_objects);
    std::iota(rank.begin(), rank.end(), 0);
    std::shuffle(rank.begin(), rank.end(), rng);

    std::vector<CatalogItem> items;
    info.assign(n_objects, {});
    for (std::size_t i = 0; i < n_objects; ++i) {
        auto& obj = info[i];
        obj.categories.push_back(i % n_categories);
        if (bernoulli(rng, 0.2)) {
            auto extra = std::uniform_int_distribution<std::size_t>(0, n_categories - 1)(rng);
            if (extra != obj.categories.front()) obj.categories.push_back(extra);
        }
        obj.popularity = 1.0 / std::pow(static_cast<double>(rank[i] + 1), 0.8);
        obj.page.links = std::uniform_int_distribution<std::int64_t>(20, 150)(rng);
        obj.page.images = bernoulli(rng, 0.1) ? 0 : std::uniform_int_distribution<std::int64_t>(1, 40)(rng);
        obj.page.text = static_cast<std::int64_t>(log_uniform(rng, 400, 15000));
        obj.page.width = std::uniform_int_distribution<std::int64_t>(1000, 1280)(rng);
        obj.page.height = static_cast<std::int64_t>(log_uniform(rng, 900, 8000));

        const auto& theme = themes[obj.categories.front()];
        CatalogItem item;
        item.object_id = make_id('o', i);
        for (auto c : obj.categories) item.categories.push_back(make_id('c', c));
        const std::size_t type = bernoulli(rng, 0.8)
                                     ? theme.type
                                     : std::uniform_int_distribution<std::size_t>(0, std::size(kTourTypes) - 1)(rng);
        const std::string country = kCountries[theme.country];
        item.attributes.emplace_back("type", kTourTypes[type]);
        item.attributes.emplace_back("country", country);
        item.attributes.emplace_back("region",
                                     country + "-" + std::to_string(std::uniform_int_distribution<int>(1, 4)(rng)));
        item.attributes.emplace_back("quality", std::to_string(std::uniform_int_distribution<int>(1, 5)(rng)));
        item.attributes.emplace_back("price_per_night", std::to_string(std::uniform_int_distribution<int>(20, 250)(rng)));
        item.attributes.emplace_back("discount", std::to_string(5 * std::uniform_int_distribution<int>(0, 8)(rng)));
        item.attributes.emplace_back("nights", std::to_string(std::uniform_int_distribution<int>(2, 14)(rng)));
        item.attributes.emplace_back("board", kBoards[std::uniform_int_distribution<std::size_t>(0, 3)(rng)]);
        item.attributes.emplace_back("transport", kTransport[std::uniform_int_distribution<std::size_t>(0, 2)(rng)]);
        for (const char* flag : kFlags) item.attributes.emplace_back(flag, bernoulli(rng, 0.35) ? "yes" : "no");
        items.push_back(std::move(item));
    }
    return ItemCatalog(std::move(items));
}

// Discrete Pareto with minimum 3: floor(3 / U^(1/(a-1))).
std::size_t draw_record_count(Rng& rng, double exponent, std::size_t cap) {
    const double u = uniform(rng, 1e-12, 1.0);
    const double x = 3.0 / std::pow(u, 1.0 / (exponent - 1.0));
    return std::min<std::size_t>(cap, static_cast<std::size_t>(x));
}

std::size_t weighted_pick(Rng& rng, const std::vector<std::size_t>& pool, const std::vector<ObjectInfo>& info) {
    std::vector<double> w;
    w.reserve(pool.size());
    for (auto o : pool) w.push_back(info[o].popularity);
    return pool[std::discrete_distribution<std::size_t>(w.begin(), w.end())(rng)];
}

struct Device {
    bool handheld;
    std::int64_t width, height;
};

Device draw_device(Rng& rng) {
    Device d;
    d.handheld = bernoulli(rng, 0.3);
    if (d.handheld) {
        d.width = std::uniform_int_distribution<std::int64_t>(360, 800)(rng);
        d.height = std::uniform_int_distribution<std::int64_t>(560, 900)(rng);
    } else {
        d.width = std::uniform_int_distribution<std::int64_t>(1200, 1920)(rng);
        d.height = std::uniform_int_distribution<std::int64_t>(650, 1050)(rng);
    }
    return d;
}

// Feedback is generated from a latent "engaged" state. The probability of
// engagement grows with signal_strength for purchased objects (and weakly
// for objects in the user's favourite categories); with signal_strength 0
// every record shares the same distribution. Engagement shows mostly
// relative to the page: engaged users read the text and scroll to the
// bottom, so raw volumes are confounded by text length and page height.
InteractionRecord make_record(Rng& rng, const std::string& user, std::size_t object, const ObjectInfo& obj,
                              const Device& device, bool purchased, bool favourite, double signal) {
    constexpr double kBaseEngagement = 0.05;
    const double interest = purchased ? 1.0 : (favourite ? 0.35 : 0.0);
    const bool engaged = bernoulli(rng, kBaseEngagement + (1.0 - kBaseEngagement) * signal * interest);

    InteractionRecord r;
    r.user_id = user;
    r.object_id = make_id('o', object);
    r.c1_num_links = obj.page.links;
    r.c2_num_images = obj.page.images;
    r.c3_text_size = obj.page.text;
    if (device.handheld) {
        r.c4_page_width = device.width;
        r.c4_page_height = static_cast<std::int64_t>(static_cast<double>(obj.page.height) * 2.2);
    } else {
        r.c4_page_width = obj.page.width;
        r.c4_page_height = obj.page.height;
    }
    r.c5_window_width = device.width;
    r.c5_window_height = device.height;
    r.c6_visible_area_ratio = visible_area_ratio(r);
    r.c7_handheld = device.handheld;
    r.purchase = purchased;

    r.f1_view_count = 1 + poisson(rng, engaged ? 1.0 : 0.3);
    const double reading_time = static_cast<double>(obj.page.text) / 20.0 * (device.handheld ? 1.3 : 1.0);
    r.f2_dwell_time = 2.0 + reading_time * (engaged ? uniform(rng, 0.7, 1.4) : uniform(rng, 0.03, 0.6));

    const double needed = static_cast<double>(std::max<std::int64_t>(0, r.c4_page_height - r.c5_window_height));
    if (needed <= 0)
        r.f5_scroll_distance = uniform(rng, 0, 50);
    else
        r.f5_scroll_distance = needed * (engaged ? uniform(rng, 1.0, 1.3) : uniform(rng, 0.0, 0.97));
    r.f6_scroll_time = r.f5_scroll_distance / uniform(rng, 800, 1500);

    if (!device.handheld) {
        r.f4_mouse_time = r.f2_dwell_time * uniform(rng, 0.1, 0.4);
        r.f3_mouse_distance = r.f4_mouse_time * uniform(rng, 150, 400);
    }
    return r;
}

}  // namespace

SynthDataset synthesize(const SynthConfig& config) {
    if (!(config.signal_strength >= 0.0 && config.signal_strength <= 1.0))
        fail(ErrorKind::Config, "signal_strength must lie in [0, 1]");
    if (config.n_users < 1 || config.n_objects < 1) fail(ErrorKind::Config, "n_users and n_objects must be >= 1");
    if (config.n_objects < 3) fail(ErrorKind::Config, "n_objects must be >= 3 for cohort-eligible users");
    if (!(config.ineligible_fraction >= 0.0)) fail(ErrorKind::Config, "ineligible_fraction must be >= 0");
    if (config.max_records_per_user < 3) fail(ErrorKind::Config, "max_records_per_user must be >= 3");
    if (!(config.power_law_exponent > 1.0)) fail(ErrorKind::Config, "power_law_exponent must be > 1");

    Rng rng = make_rng(config.seed, "synth");
    const std::size_t n_categories = std::max<std::size_t>(3, config.n_objects / 12);
    std::vector<ObjectInfo> info;
    SynthDataset out;
    out.catalog = make_catalog(rng, config.n_objects, n_categories, info);

    std::vector<std::vector<std::size_t>> by_category(n_categories);
    for (std::size_t o = 0; o < info.size(); ++o)
        for (auto c : info[o].categories) by_category[c].push_back(o);
    std::vector<std::size_t> all_objects(info.size());
    std::iota(all_objects.begin(), all_objects.end(), 0);

    const auto n_ineligible =
        static_cast<std::size_t>(std::llround(static_cast<double>(config.n_users) * config.ineligible_fraction));
    const std::size_t total_users = config.n_users + n_ineligible;
    const std::size_t max_records = std::min(config.max_records_per_user, config.n_objects);

    for (std::size_t u = 0; u < total_users; ++u) {
        const bool eligible = u < config.n_users;
        const std::string user = make_id('u', u);
        const Device device = draw_device(rng);
        std::set<std::size_t> favourites;
        while (favourites.size() < std::min<std::size_t>(2, n_categories))
            favourites.insert(std::uniform_int_distribution<std::size_t>(0, n_categories - 1)(rng));

        std::size_t n_records = draw_record_count(rng, config.power_law_exponent, max_records);
        std::size_t n_purchases = 1;
        if (eligible) {
            const double p = uniform(rng, 0, 1);
            n_purchases = p < 0.8 ? 1 : (p < 0.95 ? 2 : 3);
            n_purchases = std::min(n_purchases, n_records - 1);
        } else if (u % 2 == 0) {
            n_records = std::uniform_int_distribution<std::size_t>(1, 2)(rng);  // too few objects
        } else {
            n_purchases = 0;  // never bought
        }

        std::vector<std::size_t> visited;
        std::set<std::size_t> seen;
        std::size_t attempts = 0;
        while (visited.size() < n_records && attempts++ < 50 * n_records + 100) {
            std::size_t o;
            if (bernoulli(rng, 0.7)) {
                auto it = favourites.begin();
                std::advance(it, std::uniform_int_distribution<std::size_t>(0, favourites.size() - 1)(rng));
                const auto& pool = by_category[*it];
                if (pool.empty()) continue;
                o = weighted_pick(rng, pool, info);
            } else {
                o = weighted_pick(rng, all_objects, info);
            }
            if (seen.insert(o).second) visited.push_back(o);
        }
        for (std::size_t o = 0; visited.size() < n_records && o < info.size(); ++o)
            if (seen.insert(o).second) visited.push_back(o);

        auto in_favourites = [&](std::size_t o) {
            return std::any_of(info[o].categories.begin(), info[o].categories.end(),
                               [&](std::size_t c) { return favourites.count(c) > 0; });
        };
        // Purchases come preferably from the favourite categories.
        std::vector<std::size_t> candidates;
        for (auto o : visited)
            if (in_favourites(o)) candidates.push_back(o);
        if (candidates.size() < n_purchases) candidates = visited;
        std::shuffle(candidates.begin(), candidates.end(), rng);
        std::set<std::size_t> bought(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(n_purchases));

        for (auto o : visited)
            out.records.push_back(make_record(rng, user, o, info[o], device, bought.count(o) > 0, in_favourites(o),
                                              config.signal_strength));
    }
    out.records = aggregate(std::move(out.records));
    return out;
}

}  // namespace ctxrec
