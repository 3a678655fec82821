#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "ctxrec/cli.hpp"
#include "support.hpp"

using namespace ctxrec;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = 0;
    std::string out;
    std::string err;
};

Run cli(std::vector<std::string> args) {
    args.insert(args.begin(), "ctxrec");
    std::ostringstream out, err;
    Run r;
    r.code = run_cli(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream(p, std::ios::binary) << text;
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

// Small synthetic experiment writing under `dir`.
fs::path small_config(const fs::path& dir, const std::string& experiment_extra = "", const std::string& tail = "") {
    const auto path = dir / "exp.ini";
    write_file(path, "[synth]\nusers = 12\nobjects = 60\n\n[experiment]\nseed = 5\nout = " + (dir / "out").string() +
                         "\n" + experiment_extra + "\n" + tail);
    return path;
}

std::size_t count_files(const fs::path& dir) {
    std::size_t n = 0;
    for (const auto& e : fs::directory_iterator(dir)) n += e.is_regular_file();
    return n;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("validate exit codes") {
    const auto dir = test::scratch_dir("cli_validate");
    REQUIRE(cli({"--out", dir.string(), "--seed", "3", "synth"}).code == 0);
    const auto ok = cli({"validate", "--interactions", (dir / "interactions.csv").string(), "--catalog",
                         (dir / "catalog.csv").string()});
    CHECK(ok.code == 0);
    CHECK(ok.out.find("ok") != std::string::npos);

    auto text = slurp(dir / "interactions.csv");
    text += "u_bad,o_bad,-1";  // short row on the last line
    const auto n_lines = lines(text).size();
    write_file(dir / "broken.csv", text + "\n");
    const auto bad = cli({"validate", "--interactions", (dir / "broken.csv").string()});
    CHECK(bad.code == 1);
    CHECK(bad.out.find("line " + std::to_string(n_lines)) != std::string::npos);

    CHECK(cli({"validate", "--interactions", (dir / "missing.csv").string()}).code == 2);
}

TEST_CASE("oracle learner scores every cell 1.0") {
    const auto dir = test::scratch_dir("cli_oracle");
    const auto cfg = small_config(dir, "learners = Oracle\n");
    REQUIRE(cli({"--config", cfg.string(), "predict"}).code == 0);
    const auto table = lines(slurp(dir / "out" / "table4_prediction_ndcg.csv"));
    REQUIRE(table.size() == 2);
    CHECK(table[0] == "method,DwellTime,RawFeedback,RawPlusContext,AllFeatures");
    CHECK(table[1] == "Oracle,1,1,1,1");
}

TEST_CASE("prediction, recommendation and significance grids") {
    const auto dir = test::scratch_dir("cli_grid");
    const auto cfg = small_config(dir, "", "[significance]\nrow1 = PopularSimCat,Binary,J48@RawPlusContext\n");
    REQUIRE(cli({"--config", cfg.string(), "predict"}).code == 0);
    CHECK(count_files(dir / "out" / "predict") == 20);
    CHECK(count_files(dir / "out" / "preferences") == 20);
    CHECK(lines(slurp(dir / "out" / "table4_prediction_ndcg.csv")).size() == 6);

    REQUIRE(cli({"--config", cfg.string(), "recommend"}).code == 0);
    CHECK(count_files(dir / "out" / "recommend") == 42);
    const auto t5 = lines(slurp(dir / "out" / "table5_recommendation_ndcg.csv"));
    REQUIRE(t5.size() == 13);
    std::size_t binary_rows = 0;
    for (const auto& l : t5) binary_rows += l.rfind("Binary,", 0) == 0;
    CHECK(binary_rows == 2);

    const auto sig = cli({"--config", cfg.string(), "significance"});
    REQUIRE(sig.code == 0);
    const auto t6 = lines(slurp(dir / "out" / "table6_significance.csv"));
    REQUIRE(t6.size() == 2);
    CHECK(t6[0] == "recommender,baseline,method,p_recall@5,p_recall@10,method_only@5,baseline_only@5,method_only@10,"
                   "baseline_only@10,note");
    CHECK(sig.out == slurp(dir / "out" / "table6_significance.csv"));

    // Comparing a source against itself has no discordant pairs.
    const auto self = cli({"--config", cfg.string(), "significance", "--pair", "VSM,Binary,Binary"});
    REQUIRE(self.code == 0);
    const auto row = lines(self.out).at(1);
    CHECK(row.rfind("VSM,Binary,Binary,1,1,0,0,0,0,", 0) == 0);
    CHECK(row.find("no-discordant-pairs@5") != std::string::npos);

    std::vector<std::string> seven = {"--config", cfg.string(), "significance"};
    for (const char* m : {"LinReg", "Lasso", "J48", "AdaTree", "AdaLinReg"}) {
        seven.push_back("--pair");
        seven.push_back(std::string("PopularSimCat,Binary,") + m + "@AllFeatures");
    }
    seven.insert(seven.end(), {"--pair", "VSM,Binary,J48@DwellTime", "--pair", "VSM,LinReg@DwellTime,J48@DwellTime"});
    const auto many = cli(seven);
    REQUIRE(many.code == 0);
    CHECK(lines(many.out).size() == 8);

    // Report rebuilds tables 4 and 5 from the stored per-case reports.
    const auto rebuilt = cli({"--config", cfg.string(), "report"});
    REQUIRE(rebuilt.code == 0);
    CHECK(rebuilt.out ==
          slurp(dir / "out" / "table4_prediction_ndcg.csv") + "\n" + slurp(dir / "out" / "table5_recommendation_ndcg.csv"));
}

TEST_CASE("significance with no pairs writes the header only") {
    const auto dir = test::scratch_dir("cli_empty_sig");
    const auto cfg = small_config(dir);
    const auto r = cli({"--config", cfg.string(), "significance"});
    CHECK(r.code == 0);
    CHECK(lines(slurp(dir / "out" / "table6_significance.csv")).size() == 1);
}

TEST_CASE("recommend before predict is an io error") {
    const auto dir = test::scratch_dir("cli_order");
    const auto cfg = small_config(dir, "learners = J48\nvariants = DwellTime\n");
    CHECK(cli({"--config", cfg.string(), "recommend"}).code == 2);
}

TEST_CASE("identical configs give byte-identical outputs regardless of job count") {
    const auto a = test::scratch_dir("cli_det_a");
    const auto b = test::scratch_dir("cli_det_b");
    const std::string extra = "learners = J48, AdaTree\nvariants = RawFeedback, RawPlusContext\n";
    const auto ca = small_config(a, extra);
    const auto cb = small_config(b, extra);
    for (const char* cmd : {"predict", "recommend"}) {
        REQUIRE(cli({"--config", ca.string(), cmd}).code == 0);
        REQUIRE(cli({"--config", cb.string(), "--jobs", "3", cmd}).code == 0);
    }
    std::size_t compared = 0;
    for (const auto& e : fs::recursive_directory_iterator(a / "out")) {
        if (!e.is_regular_file()) continue;
        const auto rel = fs::relative(e.path(), a / "out");
        CHECK_MESSAGE(slurp(e.path()) == slurp(b / "out" / rel), rel.string());
        ++compared;
    }
    CHECK(compared > 10);
}

TEST_CASE("configuration errors exit with code 3") {
    const auto dir = test::scratch_dir("cli_config");
    write_file(dir / "unknown.ini", "[experiment]\ncolour = blue\n");
    CHECK(cli({"--config", (dir / "unknown.ini").string(), "predict"}).code == 3);
    write_file(dir / "learner.ini", "[experiment]\nlearners = SVM\n");
    CHECK(cli({"--config", (dir / "learner.ini").string(), "predict"}).code == 3);
    write_file(dir / "pair.ini", "[significance]\nrow = VSM,Binary,J48@Nowhere\n");
    CHECK(cli({"--config", (dir / "pair.ini").string(), "significance"}).code == 3);
    CHECK(cli({"--config", (dir / "absent.ini").string(), "predict"}).code != 0);
    CHECK(cli({"no-such-command"}).code == 3);
}

TEST_CASE("config parsing and environment overrides") {
    std::istringstream in("[data]\ninteractions = data/i.csv\ndwell_unit = milliseconds\n[experiment]\nk = 3, 7\n"
                          "learners = J48\n[learner]\nlambda = 0.1\n");
    auto c = parse_config(in, "/cfg");
    CHECK(*c.interactions == fs::path("/cfg/data/i.csv"));
    CHECK(c.dwell_unit == TimeUnit::Milliseconds);
    CHECK(c.ks == std::vector<std::size_t>{3, 7});
    CHECK(*c.lambda == 0.1);
    CHECK(c.learner_config(LearnerKind::Lasso).lambda == std::optional<double>(0.1));

    ::setenv("CTXREC_INTERACTIONS", "/elsewhere/x.csv", 1);
    ::setenv("CTXREC_OUT", "/elsewhere/out", 1);
    apply_env_overrides(c);
    ::unsetenv("CTXREC_INTERACTIONS");
    ::unsetenv("CTXREC_OUT");
    CHECK(*c.interactions == fs::path("/elsewhere/x.csv"));
    CHECK(c.out == fs::path("/elsewhere/out"));
    CHECK_FALSE(c.catalog.has_value());
}

TEST_CASE("preference files round-trip") {
    const auto dir = test::scratch_dir("cli_prefs");
    const std::vector<PreferenceEstimate> prefs = {{"u1", "o1", 0.25}, {"u1", "o2", -0.125}, {"u2", "o1", 1.0 / 3}};
    write_preferences(dir / "p.csv", prefs);
    const auto back = read_preferences(dir / "p.csv");
    REQUIRE(back.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back[i].user_id == prefs[i].user_id);
        CHECK(back[i].object_id == prefs[i].object_id);
        CHECK(back[i].r_bar == prefs[i].r_bar);
    }
}

}  // TEST_SUITE
