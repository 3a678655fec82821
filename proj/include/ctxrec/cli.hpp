#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ctxrec/dataset.hpp"
#include "ctxrec/error.hpp"
#include "ctxrec/eval.hpp"
#include "ctxrec/features.hpp"
#include "ctxrec/learners.hpp"
#include "ctxrec/recommenders.hpp"

namespace ctxrec {

// Name accepted in the learner list that scores rows by their true label.
inline constexpr std::string_view kOracleLearner = "Oracle";

// A preference source for the recommendation grid: "Binary" or
// "<Learner>@<Variant>".
inline constexpr std::string_view kBinarySource = "Binary";

struct SignificancePair {
    RecommenderKind recommender = RecommenderKind::PopularSimCat;
    std::string baseline;  // preference source
    std::string method;    // preference source
};

struct ExperimentConfig {
    std::optional<std::filesystem::path> interactions;  // unset: synthesize
    std::optional<std::filesystem::path> catalog;
    TimeUnit dwell_unit = TimeUnit::Seconds;
    ColumnMapping columns;
    SynthConfig synth;

    std::uint64_t seed = 1;
    std::vector<Variant> variants{kAllVariants.begin(), kAllVariants.end()};
    std::vector<std::string> learners;  // learner names, kOracleLearner allowed
    std::vector<RecommenderKind> recommenders = {RecommenderKind::Vsm, RecommenderKind::PopularSimCat};
    std::vector<std::size_t> ks = {5, 10};
    std::filesystem::path out = "ctxrec_out";
    std::size_t jobs = 1;

    std::optional<double> lambda;  // unset: cross-validated
    double prune_confidence = 0.25;
    int boost_rounds = 50;

    std::vector<SignificancePair> pairs;

    ExperimentConfig();
    void validate() const;  // throws ErrorKind::Config
    LearnerConfig learner_config(LearnerKind kind) const;
};

// INI file with sections [data], [columns], [synth], [experiment],
// [learner], [significance]. Relative data paths resolve against the
// config file's directory. Unknown keys are rejected.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {});

// CTXREC_INTERACTIONS, CTXREC_CATALOG and CTXREC_OUT replace the matching
// paths when set.
void apply_env_overrides(ExperimentConfig& config);

std::string source_name(LearnerKind learner, Variant variant);
std::string source_name(std::string_view learner, Variant variant);

void write_preferences(const std::filesystem::path& path, const std::vector<PreferenceEstimate>& prefs);
std::vector<PreferenceEstimate> read_preferences(const std::filesystem::path& path);

// Evaluation cohort plus catalog, loaded from files or synthesized.
struct ExperimentData {
    std::vector<InteractionRecord> records;
    std::optional<ItemCatalog> catalog;
    std::size_t rejected_rows = 0;
};
ExperimentData load_experiment_data(const ExperimentConfig& config, bool need_catalog);

int exit_code_for(ErrorKind kind);

// Entry point shared by the executable and in-process tests. args[0] is
// the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ctxrec
