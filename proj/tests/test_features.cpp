#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ctxrec/error.hpp"
#include "ctxrec/features.hpp"
#include "support.hpp"

using namespace ctxrec;

namespace {

std::vector<InteractionRecord> dwell_user(std::initializer_list<double> dwell) {
    std::vector<InteractionRecord> rs;
    int i = 0;
    for (double d : dwell) {
        auto r = test::record("u", "o" + std::to_string(i++));
        r.f2_dwell_time = d;
        rs.push_back(r);
    }
    return rs;
}

InteractionRecord page(std::int64_t window_h, std::int64_t page_h, double scroll) {
    auto r = test::record("u", "o");
    r.c5_window_height = window_h;
    r.c4_page_height = page_h;
    r.f5_scroll_distance = scroll;
    return r;
}

bool is_subset(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    return std::all_of(a.begin(), a.end(), [&](const auto& c) { return std::find(b.begin(), b.end(), c) != b.end(); });
}

}  // namespace

TEST_SUITE("features") {

TEST_CASE("relative per-user feedback divides by the user's mean") {
    const auto rs = dwell_user({10, 20, 30});
    const auto rel = relative_user_features(rs);
    CHECK(rel[1][1] == doctest::Approx(1.0));
    CHECK(rel[2][1] == doctest::Approx(1.5));
    // f5 is zero everywhere: 0/0 is taken as 0.
    for (const auto& v : rel) CHECK(v[4] == 0.0);
}

TEST_CASE("relative features are invariant to scaling one user's feedback") {
    auto rs = dwell_user({3, 7, 11, 0});
    rs[1].f3_mouse_distance = 40;
    rs[2].f6_scroll_time = 2;
    const auto before = relative_user_features(rs);
    for (auto& r : rs) {
        r.f2_dwell_time *= 3.7;
        r.f3_mouse_distance *= 3.7;
        r.f6_scroll_time *= 3.7;
    }
    const auto after = relative_user_features(rs);
    for (std::size_t i = 0; i < rs.size(); ++i)
        for (std::size_t j = 0; j < 6; ++j) CHECK(after[i][j] == doctest::Approx(before[i][j]).epsilon(1e-12));
}

TEST_CASE("empty user group is a contract error") {
    CHECK_THROWS_AS(relative_user_features(std::span<const InteractionRecord>{}), Error);
}

TEST_CASE("scrolled area and hit bottom") {
    CHECK(scrolled_area(page(500, 1000, 0)) == doctest::Approx(0.5));
    CHECK(scrolled_area(page(500, 1000, 500)) == doctest::Approx(1.0));
    CHECK(scrolled_area(page(800, 600, 0)) == doctest::Approx(1.0));
    CHECK_FALSE(hit_bottom(page(500, 1000, 499)));
    CHECK(hit_bottom(page(500, 1000, 500)));
    CHECK(hit_bottom(page(800, 600, 0)));
    CHECK(hit_bottom(page(800, 600, 1234)));
}

TEST_CASE("hit bottom implies full scrolled area") {
    for (std::int64_t w : {100, 500, 999, 1000, 1500})
        for (double s : {0.0, 1.0, 250.0, 500.0, 900.0}) {
            const auto r = page(w, 1000, s);
            if (hit_bottom(r)) CHECK(scrolled_area(r) == 1.0);
            CHECK(scrolled_area(r) <= 1.0);
        }
}

TEST_CASE("complexity ratios clamp the denominator at one") {
    auto r = test::record("u", "o");
    r.f2_dwell_time = 100;
    r.c1_num_links = 50;
    r.f3_mouse_distance = 40;
    r.c2_num_images = 0;
    FeedbackVector rel{};
    const auto ratios = complexity_ratios(r, rel);
    // Feedback-major: index = feedback * 5 + context.
    CHECK(ratios[1 * 5 + 0] == doctest::Approx(2.0));
    CHECK(ratios[2 * 5 + 1] == doctest::Approx(40.0));
    CHECK(ratios[1 * 5 + 3] == doctest::Approx(100.0 / (1000.0 * 2000.0)));

    InteractionRecord zero = test::record("u", "o");
    zero.f1_view_count = 0;
    zero.f2_dwell_time = 0;
    for (double v : complexity_ratios(zero, rel)) CHECK(v == 0.0);
}

TEST_CASE("variant column sets") {
    CHECK(variant_columns(Variant::DwellTime) == std::vector<std::string>{"f2", "f2_u"});
    CHECK(variant_columns(Variant::RawFeedback).size() == 12);
    const auto rpc = variant_columns(Variant::RawPlusContext);
    CHECK(rpc.size() == 23);
    CHECK(std::count(rpc.begin(), rpc.end(), "f_sc") == 1);
    CHECK(std::count(rpc.begin(), rpc.end(), "f_hb") == 1);
    CHECK(std::none_of(rpc.begin(), rpc.end(), [](const auto& c) { return c.find('/') != std::string::npos; }));
    const auto all = variant_columns(Variant::AllFeatures);
    CHECK(all.size() == rpc.size() + 60);
    CHECK(is_subset(variant_columns(Variant::DwellTime), variant_columns(Variant::RawFeedback)));
    CHECK(is_subset(variant_columns(Variant::RawFeedback), rpc));
    CHECK(is_subset(rpc, all));
    CHECK(std::set<std::string>(all.begin(), all.end()).size() == all.size());
}

TEST_CASE("variant names round-trip and unknown names are config errors") {
    for (auto v : kAllVariants) CHECK(parse_variant(to_string(v)) == v);
    try {
        parse_variant("Everything");
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Config);
    }
}

TEST_CASE("build_variant sorts rows and fills finite values") {
    SynthConfig cfg;
    cfg.n_users = 40;
    const auto records = filter_evaluation_cohort(aggregate(synthesize(cfg).records));
    for (auto v : kAllVariants) {
        const auto m = build_variant(records, v);
        CHECK(m.cols() == variant_columns(v).size());
        CHECK(m.rows() == records.size());
        CHECK(std::all_of(m.values.begin(), m.values.end(), [](double x) { return std::isfinite(x); }));
        for (std::size_t i = 1; i < m.rows(); ++i)
            CHECK(std::tie(m.user_ids[i - 1], m.object_ids[i - 1]) < std::tie(m.user_ids[i], m.object_ids[i]));
    }
    // Shuffled input yields the same matrix.
    auto shuffled = records;
    std::reverse(shuffled.begin(), shuffled.end());
    CHECK(build_variant(shuffled, Variant::AllFeatures).values == build_variant(records, Variant::AllFeatures).values);
}

TEST_CASE("feature values match the definitions for a hand-built user") {
    std::vector<InteractionRecord> rs = dwell_user({10, 30});
    rs[0].c7_handheld = true;
    rs[0].f5_scroll_distance = 1200;  // 800 + 1200 >= 2000
    rs[1].purchase = true;
    const auto m = build_variant(rs, Variant::AllFeatures);
    const auto col = [&](const std::string& name) {
        auto it = std::find(m.columns.begin(), m.columns.end(), name);
        REQUIRE(it != m.columns.end());
        return static_cast<std::size_t>(it - m.columns.begin());
    };
    CHECK(m.at(0, col("f2")) == 10);
    CHECK(m.at(0, col("f2_u")) == doctest::Approx(0.5));
    CHECK(m.at(1, col("f2_u")) == doctest::Approx(1.5));
    CHECK(m.at(0, col("c7_handheld")) == 1);
    CHECK(m.at(0, col("f_hb")) == 1);
    CHECK(m.at(1, col("f_hb")) == 0);
    CHECK(m.at(1, col("f_sc")) == doctest::Approx(0.4));
    CHECK(m.at(1, col("f2/c1")) == doctest::Approx(30.0 / 20));
    CHECK(m.at(1, col("f2_u/c3")) == doctest::Approx(1.5 / 400));
    CHECK(m.labels == std::vector<int>{0, 1});
}

TEST_CASE("feature CSV has the column header") {
    const auto m = build_variant(dwell_user({1, 2, 3}), Variant::DwellTime);
    std::ostringstream s;
    write_feature_csv(s, m);
    CHECK(s.str().rfind("user_id,object_id,f2,f2_u,purchase\n", 0) == 0);
}

}  // TEST_SUITE
