#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "ctxrec/cli.hpp"
#include "ctxrec/error.hpp"
#include "ctxrec/rng.hpp"
#include "text.hpp"

namespace ctxrec {

namespace pt = boost::property_tree;
using namespace text;

ExperimentConfig::ExperimentConfig() {
    for (auto k : kAllLearners) learners.emplace_back(to_string(k));
}

void ExperimentConfig::validate() const {
    if (variants.empty()) fail(ErrorKind::Config, "experiment.variants is empty");
    if (learners.empty()) fail(ErrorKind::Config, "experiment.learners is empty");
    if (recommenders.empty()) fail(ErrorKind::Config, "experiment.recommenders is empty");
    if (ks.empty()) fail(ErrorKind::Config, "experiment.k is empty");
    for (auto k : ks)
        if (k < 1) fail(ErrorKind::Config, "experiment.k values must be >= 1");
    if (jobs < 1) fail(ErrorKind::Config, "experiment.jobs must be >= 1");
    if (catalog && !interactions)
        fail(ErrorKind::Config, "data.catalog is set without data.interactions");
    for (const auto& l : learners)
        if (l != kOracleLearner) parse_learner_kind(l);
    learner_config(LearnerKind::J48).validate();
}

LearnerConfig ExperimentConfig::learner_config(LearnerKind kind) const {
    LearnerConfig c;
    c.kind = kind;
    c.lambda = lambda;
    c.prune_confidence = prune_confidence;
    c.boost_rounds = boost_rounds;
    c.seed = derive_seed(seed, "learner");
    return c;
}

namespace {

std::vector<std::string> list_of(const std::string& value) {
    std::vector<std::string> out;
    for (auto part : split(value, ',')) {
        auto t = trim(part);
        if (!t.empty()) out.emplace_back(t);
    }
    return out;
}

double number(const std::string& key, const std::string& value) {
    auto v = parse_double(trim(value));
    if (!v) fail(ErrorKind::Config, key + ": expected a number, got '" + value + "'");
    return *v;
}

std::size_t count(const std::string& key, const std::string& value) {
    auto v = parse_int(trim(value));
    if (!v || *v < 0) fail(ErrorKind::Config, key + ": expected a non-negative integer, got '" + value + "'");
    return static_cast<std::size_t>(*v);
}

std::uint64_t seed_value(const std::string& key, const std::string& value) {
    const auto t = std::string(trim(value));
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size() || t.empty())
        fail(ErrorKind::Config, key + ": expected an unsigned integer, got '" + value + "'");
    return v;
}

void check_source(const std::string& source) {
    if (source == kBinarySource) return;
    const auto at = source.find('@');
    if (at == std::string::npos) fail(ErrorKind::Config, "significance: source '" + source + "' is not Binary or Learner@Variant");
    const auto learner = source.substr(0, at);
    if (learner != kOracleLearner) parse_learner_kind(learner);
    parse_variant(source.substr(at + 1));
}

}  // namespace

ExperimentConfig parse_config(std::istream& in, const std::filesystem::path& base_dir) {
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        fail(ErrorKind::Config, std::string("config: ") + e.what());
    }
    ExperimentConfig c;
    const auto resolve = [&](const std::string& p) {
        std::filesystem::path path(std::string(trim(p)));
        return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
    };
    for (const auto& [section, body] : tree) {
        if (!body.data().empty()) fail(ErrorKind::Config, "config: key '" + section + "' outside a section");
        for (const auto& [key, node] : body) {
            const std::string name = section + "." + key;
            const std::string value = node.data();
            if (section == "data") {
                if (key == "interactions") c.interactions = resolve(value);
                else if (key == "catalog") c.catalog = resolve(value);
                else if (key == "dwell_unit") {
                    const auto t = trim(value);
                    if (t == "seconds") c.dwell_unit = TimeUnit::Seconds;
                    else if (t == "milliseconds") c.dwell_unit = TimeUnit::Milliseconds;
                    else fail(ErrorKind::Config, name + ": expected seconds or milliseconds");
                } else fail(ErrorKind::Config, "config: unknown key " + name);
            } else if (section == "columns") {
                const auto& canon = interaction_columns();
                if (std::find(canon.begin(), canon.end(), key) == canon.end())
                    fail(ErrorKind::Config, "config: unknown canonical column " + name);
                c.columns.source_for[key] = std::string(trim(value));
            } else if (section == "synth") {
                if (key == "users") c.synth.n_users = count(name, value);
                else if (key == "objects") c.synth.n_objects = count(name, value);
                else if (key == "signal_strength") c.synth.signal_strength = number(name, value);
                else if (key == "ineligible_fraction") c.synth.ineligible_fraction = number(name, value);
                else if (key == "max_records_per_user") c.synth.max_records_per_user = count(name, value);
                else if (key == "power_law_exponent") c.synth.power_law_exponent = number(name, value);
                else fail(ErrorKind::Config, "config: unknown key " + name);
            } else if (section == "experiment") {
                if (key == "seed") c.seed = seed_value(name, value);
                else if (key == "variants") {
                    c.variants.clear();
                    for (const auto& v : list_of(value)) c.variants.push_back(parse_variant(v));
                } else if (key == "learners") {
                    c.learners = list_of(value);
                } else if (key == "recommenders") {
                    c.recommenders.clear();
                    for (const auto& r : list_of(value)) c.recommenders.push_back(parse_recommender_kind(r));
                } else if (key == "k") {
                    c.ks.clear();
                    for (const auto& k : list_of(value)) c.ks.push_back(count(name, k));
                } else if (key == "out") c.out = std::string(trim(value));
                else if (key == "jobs") c.jobs = count(name, value);
                else fail(ErrorKind::Config, "config: unknown key " + name);
            } else if (section == "learner") {
                if (key == "lambda") {
                    if (trim(value) == "auto") c.lambda.reset();
                    else c.lambda = number(name, value);
                } else if (key == "prune_confidence") c.prune_confidence = number(name, value);
                else if (key == "boost_rounds") c.boost_rounds = static_cast<int>(count(name, value));
                else fail(ErrorKind::Config, "config: unknown key " + name);
            } else if (section == "significance") {
                // Every key is one row: recommender, baseline source, method source.
                const auto parts = list_of(value);
                if (parts.size() != 3)
                    fail(ErrorKind::Config, name + ": expected 'Recommender,Baseline,Method'");
                SignificancePair p{parse_recommender_kind(parts[0]), parts[1], parts[2]};
                check_source(p.baseline);
                check_source(p.method);
                c.pairs.push_back(std::move(p));
            } else {
                fail(ErrorKind::Config, "config: unknown section [" + section + "]");
            }
        }
    }
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open config " + path.string());
    return parse_config(in, path.parent_path());
}

void apply_env_overrides(ExperimentConfig& config) {
    if (const char* v = std::getenv("CTXREC_INTERACTIONS"); v && *v) config.interactions = v;
    if (const char* v = std::getenv("CTXREC_CATALOG"); v && *v) config.catalog = v;
    if (const char* v = std::getenv("CTXREC_OUT"); v && *v) config.out = v;
}

}  // namespace ctxrec
