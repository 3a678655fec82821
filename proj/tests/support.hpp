#pragma once

#include <filesystem>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ctxrec/dataset.hpp"

namespace test {

inline ctxrec::InteractionRecord record(const std::string& user, const std::string& object, bool purchase = false) {
    ctxrec::InteractionRecord r;
    r.user_id = user;
    r.object_id = object;
    r.f1_view_count = 1;
    r.f2_dwell_time = 10;
    r.c1_num_links = 20;
    r.c2_num_images = 5;
    r.c3_text_size = 400;
    r.c4_page_width = 1000;
    r.c4_page_height = 2000;
    r.c5_window_width = 1000;
    r.c5_window_height = 800;
    r.c6_visible_area_ratio = ctxrec::visible_area_ratio(r);
    r.purchase = purchase;
    return r;
}

inline std::string header() {
    std::string h;
    for (const auto& c : ctxrec::interaction_columns()) h += (h.empty() ? "" : ",") + c;
    return h + "\n";
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("ctxrec_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace test
