#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "ctxrec/cli.hpp"
#include "ctxrec/error.hpp"
#include "ctxrec/parallel.hpp"
#include "text.hpp"

namespace ctxrec {

namespace fs = std::filesystem;
using namespace text;

std::string source_name(std::string_view learner, Variant variant) {
    return std::string(learner) + "@" + std::string(to_string(variant));
}

std::string source_name(LearnerKind learner, Variant variant) { return source_name(to_string(learner), variant); }

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Validation:
        case ErrorKind::Schema:
        case ErrorKind::Cohort: return 1;
        case ErrorKind::Io: return 2;
        case ErrorKind::Config:
        case ErrorKind::Contract:
        case ErrorKind::EmptyProfile: return 3;
    }
    return 3;
}

namespace {

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
        if (ec) fail(ErrorKind::Io, "cannot create directory " + path.parent_path().string() + ": " + ec.message());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
    return out;
}

void write_text(const fs::path& path, const std::string& text) {
    auto out = open_out(path);
    out << text;
    if (!out) fail(ErrorKind::Io, "write failed: " + path.string());
}

void require_file(const fs::path& path, const std::string& what) {
    if (!fs::is_regular_file(path)) fail(ErrorKind::Io, what + " not found: " + path.string());
}

}  // namespace

void write_preferences(const fs::path& path, const std::vector<PreferenceEstimate>& prefs) {
    std::ostringstream s;
    s << "user_id,object_id,r_bar\n";
    for (const auto& p : prefs) s << csv_escape(p.user_id) << ',' << csv_escape(p.object_id) << ',' << format_double(p.r_bar) << '\n';
    write_text(path, s.str());
}

std::vector<PreferenceEstimate> read_preferences(const fs::path& path) {
    require_file(path, "preference file");
    std::ifstream in(path);
    std::string line;
    if (!std::getline(in, line) || trim(line) != "user_id,object_id,r_bar")
        fail(ErrorKind::Validation, path.string() + ": expected header user_id,object_id,r_bar");
    std::vector<PreferenceEstimate> out;
    for (std::size_t line_no = 2; std::getline(in, line); ++line_no) {
        if (trim(line).empty()) continue;
        const auto f = split_csv_line(line);
        std::optional<double> v = f.size() == 3 ? parse_double(f[2]) : std::nullopt;
        if (!v) fail(ErrorKind::Validation, path.string() + ": malformed row at line " + std::to_string(line_no));
        out.push_back({f[0], f[1], *v});
    }
    return out;
}

ExperimentData load_experiment_data(const ExperimentConfig& config, bool need_catalog) {
    ExperimentData data;
    std::vector<InteractionRecord> records;
    if (config.interactions) {
        auto loaded = load_interactions(*config.interactions, config.columns, config.dwell_unit);
        data.rejected_rows = loaded.rejects.size();
        records = aggregate(std::move(loaded.records));
        if (config.catalog) data.catalog = load_catalog(*config.catalog);
    } else {
        SynthConfig s = config.synth;
        s.seed = config.seed;
        auto synth = synthesize(s);
        records = aggregate(std::move(synth.records));
        data.catalog = std::move(synth.catalog);
    }
    if (need_catalog && !data.catalog) fail(ErrorKind::Config, "data.catalog is required for recommendation");
    data.records = filter_evaluation_cohort(records);
    return data;
}

namespace {

std::size_t learner_order(const std::string& name) {
    for (std::size_t i = 0; i < kAllLearners.size(); ++i)
        if (to_string(kAllLearners[i]) == name) return i;
    return kAllLearners.size();
}

std::size_t variant_order(const std::string& name) {
    for (std::size_t i = 0; i < kAllVariants.size(); ++i)
        if (to_string(kAllVariants[i]) == name) return i;
    return kAllVariants.size();
}

std::size_t recommender_order(const std::string& name) { return name == "VSM" ? 0 : 1; }

const std::string& meta(const EvalReport& r, const std::string& key) {
    auto it = r.metadata.find(key);
    if (it == r.metadata.end()) fail(ErrorKind::Validation, "report metadata lacks '" + key + "'");
    return it->second;
}

std::vector<std::string> variant_columns_of(const std::vector<const EvalReport*>& reports) {
    std::set<std::string> seen;
    for (const auto* r : reports)
        if (r->metadata.count("variant")) seen.insert(meta(*r, "variant"));
    std::vector<std::string> cols(seen.begin(), seen.end());
    std::sort(cols.begin(), cols.end(), [](const auto& a, const auto& b) { return variant_order(a) < variant_order(b); });
    return cols;
}

// Rows are learners, columns are variants; cells are mean nDCG.
std::string prediction_table(const std::vector<const EvalReport*>& reports) {
    const auto cols = variant_columns_of(reports);
    std::map<std::pair<std::size_t, std::string>, std::map<std::string, double>> rows;
    for (const auto* r : reports) {
        const auto& learner = meta(*r, "learner");
        rows[{learner_order(learner), learner}][meta(*r, "variant")] = r->mean_ndcg;
    }
    std::ostringstream s;
    s << "method";
    for (const auto& c : cols) s << ',' << c;
    s << '\n';
    for (const auto& [key, cells] : rows) {
        s << key.second;
        for (const auto& c : cols) {
            s << ',';
            if (auto it = cells.find(c); it != cells.end()) s << format_double(it->second);
        }
        s << '\n';
    }
    return s.str();
}

// Rows are (preference source, recommender); the Binary row repeats its
// single value under every variant.
std::string recommendation_table(const std::vector<const EvalReport*>& reports) {
    const auto cols = variant_columns_of(reports);
    using RowKey = std::tuple<std::size_t, std::string, std::size_t, std::string>;
    std::map<RowKey, std::map<std::string, double>> rows;
    for (const auto* r : reports) {
        const auto& rec = meta(*r, "recommender");
        const auto& learner = meta(*r, "learner");
        const bool binary = learner == kBinarySource;
        RowKey key{recommender_order(rec), rec, binary ? 0 : 1 + learner_order(learner), learner};
        if (binary) {
            for (const auto& c : cols) rows[key][c] = r->mean_ndcg;
        } else {
            rows[key][meta(*r, "variant")] = r->mean_ndcg;
        }
    }
    std::ostringstream s;
    s << "method,recommender";
    for (const auto& c : cols) s << ',' << c;
    s << '\n';
    for (const auto& [key, cells] : rows) {
        s << std::get<3>(key) << ',' << std::get<1>(key);
        for (const auto& c : cols) {
            s << ',';
            if (auto it = cells.find(c); it != cells.end()) s << format_double(it->second);
        }
        s << '\n';
    }
    return s.str();
}

std::string summary_header(const std::vector<std::size_t>& ks) {
    std::string h = "cases,skipped_folds,ndcg,average_position";
    for (auto k : ks) h += ",recall@" + std::to_string(k);
    return h;
}

std::string summary_cells(const EvalReport& r) {
    std::string s = std::to_string(r.cases.size()) + ',' + std::to_string(r.skipped_folds) + ',' + format_double(r.mean_ndcg) +
                    ',' + format_double(r.mean_average_position);
    for (double v : r.mean_recall) s += ',' + format_double(v);
    return s;
}

std::vector<fs::path> json_files(const fs::path& dir) {
    std::vector<fs::path> files;
    if (!fs::is_directory(dir)) return files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    return files;
}

fs::path prediction_report_path(const fs::path& out, const std::string& source) {
    return out / "predict" / (source + ".json");
}
fs::path preference_path(const fs::path& out, const std::string& source) {
    return out / "preferences" / (source + ".csv");
}
fs::path recommendation_report_path(const fs::path& out, std::string_view recommender, const std::string& source) {
    return out / "recommend" / (std::string(recommender) + "__" + source + ".json");
}

// ---- subcommands ----

int cmd_validate(const ExperimentConfig& cfg, std::ostream& out) {
    if (!cfg.interactions && !cfg.catalog)
        fail(ErrorKind::Config, "validate: no interactions or catalog path given");
    bool clean = true;
    std::vector<InteractionRecord> records;
    if (cfg.interactions) {
        const auto loaded = load_interactions(*cfg.interactions, cfg.columns, cfg.dwell_unit);
        out << "interactions " << cfg.interactions->string() << ": " << loaded.records.size() << " rows accepted, "
            << loaded.rejects.size() << " rejected\n";
        for (const auto& r : loaded.rejects) out << "  line " << r.line << ": " << r.reason << '\n';
        clean = clean && loaded.rejects.empty();
        records = aggregate(loaded.records);
    }
    if (cfg.catalog) {
        const auto catalog = load_catalog(*cfg.catalog);
        out << "catalog " << cfg.catalog->string() << ": " << catalog.items().size() << " objects\n";
        if (cfg.interactions) {
            const auto missing = unresolved_objects(records, catalog);
            if (!missing.empty()) {
                clean = false;
                out << "unresolved objects: " << missing.size() << '\n';
                for (const auto& o : missing) out << "  " << o << '\n';
            }
        }
    }
    out << (clean ? "ok\n" : "validation failed\n");
    return clean ? 0 : 1;
}

int cmd_synth(const ExperimentConfig& cfg, std::ostream& out) {
    SynthConfig s = cfg.synth;
    s.seed = cfg.seed;
    const auto data = synthesize(s);
    {
        auto f = open_out(cfg.out / "interactions.csv");
        write_interactions(f, data.records);
        auto g = open_out(cfg.out / "catalog.csv");
        write_catalog(g, data.catalog);
    }
    const auto sum = summarize(data.records);
    out << "synth: " << data.records.size() << " interactions, " << data.catalog.items().size() << " objects, "
        << sum.n_users << " users, " << sum.n_purchases << " purchases -> " << cfg.out.string() << '\n';
    return 0;
}

int cmd_features(const ExperimentConfig& cfg, std::ostream& out) {
    const auto data = load_experiment_data(cfg, false);
    for (auto v : cfg.variants) {
        const auto m = build_variant(data.records, v);
        const auto path = cfg.out / "features" / (std::string(to_string(v)) + ".csv");
        auto f = open_out(path);
        write_feature_csv(f, m);
        out << "features: " << to_string(v) << " " << m.rows() << "x" << m.cols() << " -> " << path.string() << '\n';
    }
    return 0;
}

int cmd_predict(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
    const auto data = load_experiment_data(cfg, false);
    if (data.rejected_rows > 0) err << "warning: " << data.rejected_rows << " interaction rows rejected\n";

    std::vector<FeatureMatrix> matrices;
    for (auto v : cfg.variants) matrices.push_back(build_variant(data.records, v));

    struct Cell {
        std::string learner;
        std::size_t variant_index;
    };
    std::vector<Cell> cells;
    for (const auto& l : cfg.learners)
        for (std::size_t v = 0; v < cfg.variants.size(); ++v) cells.push_back({l, v});

    std::vector<PredictionResult> results(cells.size());
    parallel_for(cells.size(), cfg.jobs, [&](std::size_t i) {
        const auto& cell = cells[i];
        const Scorer scorer = cell.learner == kOracleLearner
                                  ? oracle_scorer()
                                  : learner_scorer(cfg.learner_config(parse_learner_kind(cell.learner)));
        EvalOptions opts;
        opts.ks = cfg.ks;
        results[i] = loocv_purchase_prediction(matrices[cell.variant_index], scorer, opts);
        auto& md = results[i].report.metadata;
        md["learner"] = cell.learner;
        md["seed"] = std::to_string(cfg.seed);
    });

    std::vector<const EvalReport*> reports;
    std::ostringstream summary;
    summary << "learner,variant," << summary_header(cfg.ks) << '\n';
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const auto v = cfg.variants[cells[i].variant_index];
        const auto source = source_name(cells[i].learner, v);
        write_report(prediction_report_path(cfg.out, source), results[i].report);
        write_preferences(preference_path(cfg.out, source), results[i].preferences);
        summary << cells[i].learner << ',' << to_string(v) << ',' << summary_cells(results[i].report) << '\n';
        reports.push_back(&results[i].report);
        out << "predict: " << source << " ndcg=" << format_double(results[i].report.mean_ndcg) << '\n';
    }
    write_text(cfg.out / "table4_prediction_ndcg.csv", prediction_table(reports));
    write_text(cfg.out / "prediction_summary.csv", summary.str());
    return 0;
}

int cmd_recommend(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
    const auto data = load_experiment_data(cfg, true);
    if (data.rejected_rows > 0) err << "warning: " << data.rejected_rows << " interaction rows rejected\n";

    struct Cell {
        RecommenderKind recommender;
        std::string learner;  // kBinarySource for the baseline
        std::optional<Variant> variant;
        std::string source;
    };
    std::vector<Cell> cells;
    for (auto rec : cfg.recommenders) {
        cells.push_back({rec, std::string(kBinarySource), std::nullopt, std::string(kBinarySource)});
        for (const auto& l : cfg.learners)
            for (auto v : cfg.variants) cells.push_back({rec, l, v, source_name(l, v)});
    }
    std::map<std::string, std::vector<PreferenceEstimate>> prefs;
    for (const auto& c : cells)
        if (c.variant && !prefs.count(c.source)) {
            const auto path = preference_path(cfg.out, c.source);
            if (!fs::is_regular_file(path))
                fail(ErrorKind::Io, "preference file not found: " + path.string() + " (run predict first)");
            prefs[c.source] = read_preferences(path);
        }

    std::vector<EvalReport> reports(cells.size());
    parallel_for(cells.size(), cfg.jobs, [&](std::size_t i) {
        const auto& c = cells[i];
        RecommendationInput input;
        if (c.variant) input.preferences = prefs.at(c.source);
        EvalOptions opts;
        opts.ks = cfg.ks;
        reports[i] = loocv_recommendation(data.records, *data.catalog, input, c.recommender, opts);
        reports[i].metadata["learner"] = c.learner;
        if (c.variant) reports[i].metadata["variant"] = std::string(to_string(*c.variant));
        reports[i].metadata["seed"] = std::to_string(cfg.seed);
    });

    std::vector<const EvalReport*> ptrs;
    std::ostringstream summary;
    summary << "recommender,source," << summary_header(cfg.ks) << '\n';
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const auto& c = cells[i];
        const auto rec = std::string(to_string(c.recommender));
        write_report(recommendation_report_path(cfg.out, rec, c.source), reports[i]);
        std::ostringstream lists;
        lists << "case_id,rank,object_id,score\n";
        for (const auto& cs : reports[i].cases)
            for (std::size_t r = 0; r < cs.ranked.size(); ++r)
                lists << csv_escape(cs.case_id) << ',' << r + 1 << ',' << csv_escape(cs.ranked[r].object_id) << ','
                      << format_double(cs.ranked[r].score) << '\n';
        write_text(cfg.out / "lists" / (rec + "__" + c.source + ".csv"), lists.str());
        summary << rec << ',' << c.source << ',' << summary_cells(reports[i]) << '\n';
        ptrs.push_back(&reports[i]);
        out << "recommend: " << rec << " " << c.source << " ndcg=" << format_double(reports[i].mean_ndcg) << '\n';
    }
    write_text(cfg.out / "table5_recommendation_ndcg.csv", recommendation_table(ptrs));
    write_text(cfg.out / "recommendation_summary.csv", summary.str());
    return 0;
}

int cmd_significance(const ExperimentConfig& cfg, const fs::path& reports_dir, std::ostream& out) {
    std::ostringstream table;
    table << "recommender,baseline,method";
    for (auto k : cfg.ks) table << ",p_recall@" << k;
    for (auto k : cfg.ks) table << ",method_only@" << k << ",baseline_only@" << k;
    table << ",note\n";
    std::map<fs::path, EvalReport> cache;
    const auto load = [&](const fs::path& p) -> const EvalReport& {
        auto it = cache.find(p);
        if (it == cache.end()) it = cache.emplace(p, read_report(p)).first;
        return it->second;
    };
    for (const auto& pair : cfg.pairs) {
        const auto rec = std::string(to_string(pair.recommender));
        const auto& baseline = load(reports_dir / (rec + "__" + pair.baseline + ".json"));
        const auto& method = load(reports_dir / (rec + "__" + pair.method + ".json"));
        std::vector<SignTestResult> results;
        for (auto k : cfg.ks) results.push_back(binomial_significance(method, baseline, k));
        table << rec << ',' << pair.baseline << ',' << pair.method;
        for (const auto& r : results) table << ',' << format_double(r.p_value);
        for (const auto& r : results) table << ',' << r.a_only << ',' << r.b_only;
        std::string note;
        for (std::size_t i = 0; i < results.size(); ++i)
            if (results[i].no_discordance)
                note += (note.empty() ? "" : " ") + std::string("no-discordant-pairs@") + std::to_string(cfg.ks[i]);
        table << ',' << note << '\n';
    }
    write_text(cfg.out / "table6_significance.csv", table.str());
    out << table.str();
    return 0;
}

int cmd_report(const ExperimentConfig& cfg, const std::vector<std::string>& files, std::ostream& out) {
    if (!files.empty()) {
        std::optional<std::vector<std::size_t>> ks;
        for (const auto& f : files) {
            const auto r = read_report(f);
            if (!ks) {
                ks = r.ks;
                out << "report," << summary_header(*ks) << '\n';
            }
            if (r.ks != *ks) fail(ErrorKind::Validation, f + ": evaluated at a different k list");
            out << csv_escape(f) << ',' << summary_cells(r) << '\n';
        }
        return 0;
    }
    // Rebuild the tables from the stored per-case reports.
    std::vector<EvalReport> predict, recommend;
    for (const auto& p : json_files(cfg.out / "predict")) predict.push_back(read_report(p));
    for (const auto& p : json_files(cfg.out / "recommend")) recommend.push_back(read_report(p));
    if (predict.empty() && recommend.empty())
        fail(ErrorKind::Io, "no reports under " + cfg.out.string() + " (run predict or recommend first)");
    const auto ptrs = [](const std::vector<EvalReport>& v) {
        std::vector<const EvalReport*> p;
        for (const auto& r : v) p.push_back(&r);
        return p;
    };
    if (!predict.empty()) out << prediction_table(ptrs(predict));
    if (!predict.empty() && !recommend.empty()) out << '\n';
    if (!recommend.empty()) out << recommendation_table(ptrs(recommend));
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Context-aware implicit feedback experiments", args.empty() ? "ctxrec" : args[0]};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path, out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> jobs;
    app.add_option("--config", config_path, "INI experiment config");
    app.add_option("--seed", seed, "Base seed");
    app.add_option("--out", out_dir, "Output directory");
    app.add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

    auto* validate = app.add_subcommand("validate", "Check interaction and catalog files");
    std::string v_interactions, v_catalog;
    validate->add_option("--interactions", v_interactions, "Interaction CSV");
    validate->add_option("--catalog", v_catalog, "Catalog CSV");

    auto* synth = app.add_subcommand("synth", "Write a synthetic dataset");
    auto* features = app.add_subcommand("features", "Write feature matrices per variant");
    auto* predict = app.add_subcommand("predict", "Purchase prediction grid (learner x variant)");
    auto* recommend = app.add_subcommand("recommend", "Recommendation grid (preference source x recommender)");
    auto* significance = app.add_subcommand("significance", "Sign tests between recommendation reports");
    std::vector<std::string> pair_args;
    std::string reports_dir;
    significance->add_option("--pair", pair_args, "Recommender,Baseline,Method (repeatable; replaces config pairs)");
    significance->add_option("--reports", reports_dir, "Directory of recommendation reports");
    auto* report = app.add_subcommand("report", "Summarize reports or rebuild tables");
    std::vector<std::string> report_files;
    report->add_option("files", report_files, "Report JSON files");

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 3;
    }

    try {
        ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
        apply_env_overrides(cfg);
        if (seed) cfg.seed = *seed;
        if (!out_dir.empty()) cfg.out = out_dir;
        if (jobs) cfg.jobs = *jobs;
        if (!v_interactions.empty()) cfg.interactions = v_interactions;
        if (!v_catalog.empty()) cfg.catalog = v_catalog;
        if (!pair_args.empty()) {
            std::ostringstream ini;
            ini << "[significance]\n";
            for (std::size_t i = 0; i < pair_args.size(); ++i) ini << "p" << i << " = " << pair_args[i] << '\n';
            std::istringstream in(ini.str());
            cfg.pairs = parse_config(in).pairs;
        }
        cfg.validate();

        if (*validate) return cmd_validate(cfg, out);
        if (*synth) return cmd_synth(cfg, out);
        if (*features) return cmd_features(cfg, out);
        if (*predict) return cmd_predict(cfg, out, err);
        if (*recommend) return cmd_recommend(cfg, out, err);
        if (*significance) return cmd_significance(cfg, reports_dir.empty() ? cfg.out / "recommend" : fs::path(reports_dir), out);
        if (*report) return cmd_report(cfg, report_files, out);
        return 3;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 3;
    }
}

}  // namespace ctxrec
