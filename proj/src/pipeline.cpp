#include "fauxcheck/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fauxcheck/error.hpp"
#include "fauxcheck/rng.hpp"

namespace fauxcheck::pipeline {

using corpus::Label;
using features::GroupId;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

const std::set<std::string, std::less<>> kKnownKeys{
    "corpora",      "new_corpus", "cache_dir",      "reliability_table", "blacklist",     "stopwords",
    "suffix_rules", "category_rules", "embedding_table", "embedding_fallback", "output_dir", "search_fixture",
    "crawl_fixture", "protocols", "seeds",          "n_repeats",         "svm",           "temperature",
    "groups",       "sweep",      "weights_k",      "offline",           "jobs"};

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, std::string_view contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << contents;
    if (!out) throw DataError("failed writing " + path.string());
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

fs::path resolve(const fs::path& base, const json& value, std::string_view key) {
    if (!value.is_string() || value.get<std::string>().empty()) {
        throw ConfigError("config key '" + std::string(key) + "' must be a non-empty path string");
    }
    fs::path p(value.get<std::string>());
    return p.is_absolute() ? p : (base / p).lexically_normal();
}

template <typename T>
T scalar(const json& j, std::string_view key) {
    try {
        return j.get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config key '" + std::string(key) + "' has the wrong type");
    }
}

std::vector<std::size_t> balanced_indices(std::span<const features::Example> pool, std::uint64_t seed) {
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < pool.size(); ++i) (pool[i].pair->label == Label::True ? pos : neg).push_back(i);
    const auto m = std::min(pos.size(), neg.size());
    if (m == 0) throw DataError("training data needs examples of both labels");
    Rng rng(seed);
    if (pos.size() > m) pos = rng.sample(pos, m);
    if (neg.size() > m) neg = rng.sample(neg, m);
    pos.insert(pos.end(), neg.begin(), neg.end());
    std::sort(pos.begin(), pos.end());
    return pos;
}

}  // namespace

RunConfig parse_run_config(std::string_view json_text, const fs::path& base_dir) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        if (!kKnownKeys.contains(key)) throw ConfigError("unknown config key '" + key + "'");
    }
    auto required = [&](std::string_view key) -> const json& {
        const auto it = j.find(std::string(key));
        if (it == j.end()) throw ConfigError("config is missing '" + std::string(key) + "'");
        return *it;
    };

    RunConfig c;
    const auto& corpora = required("corpora");
    if (corpora.is_string()) {
        c.corpora.push_back(resolve(base_dir, corpora, "corpora"));
    } else if (corpora.is_array() && !corpora.empty()) {
        for (const auto& p : corpora) c.corpora.push_back(resolve(base_dir, p, "corpora"));
    } else {
        throw ConfigError("config key 'corpora' must be a path or a non-empty list of paths");
    }
    if (j.contains("new_corpus")) c.new_corpus = resolve(base_dir, j["new_corpus"], "new_corpus");
    c.cache_dir = resolve(base_dir, required("cache_dir"), "cache_dir");
    c.reliability_table = resolve(base_dir, required("reliability_table"), "reliability_table");
    c.blacklist = resolve(base_dir, required("blacklist"), "blacklist");
    c.stopwords = resolve(base_dir, required("stopwords"), "stopwords");
    c.suffix_rules = resolve(base_dir, required("suffix_rules"), "suffix_rules");
    c.category_rules = resolve(base_dir, required("category_rules"), "category_rules");
    c.output_dir = resolve(base_dir, required("output_dir"), "output_dir");
    if (j.contains("embedding_table")) c.embedding_table = resolve(base_dir, j["embedding_table"], "embedding_table");
    if (j.contains("search_fixture")) c.search_fixture = resolve(base_dir, j["search_fixture"], "search_fixture");
    if (j.contains("crawl_fixture")) c.crawl_fixture = resolve(base_dir, j["crawl_fixture"], "crawl_fixture");
    if (j.contains("embedding_fallback")) {
        c.embedding_fallback = scalar<std::string>(j["embedding_fallback"], "embedding_fallback");
        if (c.embedding_fallback != "none" && c.embedding_fallback != "hashing") {
            throw ConfigError("embedding_fallback must be 'none' or 'hashing'");
        }
    }

    if (j.contains("protocols")) {
        c.protocols.clear();
        for (const auto& p : j["protocols"]) {
            const auto name = scalar<std::string>(p, "protocols");
            const auto kind = eval::parse_protocol(name);
            if (!kind) throw ConfigError("unknown protocol '" + name + "'");
            if (std::find(c.protocols.begin(), c.protocols.end(), *kind) != c.protocols.end()) {
                throw ConfigError("protocol '" + name + "' listed twice");
            }
            c.protocols.push_back(*kind);
        }
        if (c.protocols.empty()) throw ConfigError("config key 'protocols' must not be empty");
    }

    const bool has_seeds = j.contains("seeds");
    const bool has_repeats = j.contains("n_repeats");
    if (has_seeds) c.seeds = scalar<std::vector<std::uint64_t>>(j["seeds"], "seeds");
    if (has_repeats) {
        c.n_repeats = scalar<std::size_t>(j["n_repeats"], "n_repeats");
        if (!has_seeds) {
            c.seeds.clear();
            for (std::size_t i = 1; i <= c.n_repeats; ++i) c.seeds.push_back(i);
        }
    } else {
        c.n_repeats = c.seeds.size();
    }

    if (j.contains("svm")) {
        const auto& s = j["svm"];
        if (!s.is_object()) throw ConfigError("config key 'svm' must be an object");
        for (const auto& [key, value] : s.items()) {
            if (key == "C") c.svm.C = scalar<double>(value, "svm.C");
            else if (key == "max_epochs") c.svm.max_epochs = scalar<std::size_t>(value, "svm.max_epochs");
            else if (key == "tolerance") c.svm.tolerance = scalar<double>(value, "svm.tolerance");
            else if (key == "seed") c.svm.seed = scalar<std::uint64_t>(value, "svm.seed");
            else throw ConfigError("unknown config key 'svm." + key + "'");
        }
    }
    if (j.contains("temperature")) c.temperature = scalar<double>(j["temperature"], "temperature");
    if (j.contains("groups")) {
        for (const auto& g : j["groups"]) {
            const auto name = scalar<std::string>(g, "groups");
            const auto group = features::parse_group(name);
            if (!group) throw ConfigError("unknown feature group '" + name + "'");
            c.groups.push_back(*group);
        }
    }
    if (j.contains("sweep")) c.sweep = scalar<bool>(j["sweep"], "sweep");
    if (j.contains("weights_k")) c.weights_k = scalar<std::size_t>(j["weights_k"], "weights_k");
    if (j.contains("offline")) c.offline = scalar<bool>(j["offline"], "offline");
    if (j.contains("jobs")) c.jobs = scalar<std::size_t>(j["jobs"], "jobs");

    if (c.svm.C <= 0.0) throw ConfigError("svm.C must be positive");
    if (c.svm.max_epochs == 0) throw ConfigError("svm.max_epochs must be positive");
    if (c.svm.tolerance <= 0.0) throw ConfigError("svm.tolerance must be positive");
    if (c.temperature <= 0.0) throw ConfigError("temperature must be positive");
    if (c.jobs == 0) throw ConfigError("jobs must be at least 1");
    return c;
}

RunConfig load_run_config(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str(), path.parent_path());
}

void check_config(const RunConfig& config) {
    auto must_exist = [](const fs::path& p, std::string_view what) {
        std::error_code ec;
        if (!fs::exists(p, ec)) throw ConfigError(std::string(what) + " not found: " + p.string());
    };
    for (const auto& p : config.corpora) must_exist(p, "corpus");
    if (config.new_corpus) must_exist(*config.new_corpus, "new corpus");
    must_exist(config.cache_dir, "evidence cache directory");
    must_exist(config.reliability_table, "reliability table");
    must_exist(config.blacklist, "blacklist");
    must_exist(config.stopwords, "stopwords");
    must_exist(config.suffix_rules, "suffix rules");
    must_exist(config.category_rules, "category rules");
    if (config.embedding_table) must_exist(*config.embedding_table, "embedding table");
    if (config.search_fixture) must_exist(*config.search_fixture, "search fixture");
    if (config.crawl_fixture) must_exist(*config.crawl_fixture, "crawl fixture");

    if (config.seeds.size() != config.n_repeats) {
        throw ConfigError("seed list has " + std::to_string(config.seeds.size()) + " entries but n_repeats is " +
                          std::to_string(config.n_repeats));
    }
    for (auto kind : config.protocols) {
        eval::ProtocolSpec spec = eval::ProtocolSpec::defaults(kind);
        spec.seeds = config.seeds;
        spec.validate();
        if (kind == eval::ProtocolKind::NewDataHoldout && !config.new_corpus) {
            throw ConfigError("the holdout protocol needs 'new_corpus'");
        }
    }
}

std::string config_fingerprint(const RunConfig& config) {
    // File names and contents rather than absolute paths, so the digest does
    // not depend on where the inputs live.
    ordered_json j;
    auto file_entry = [](const fs::path& p) {
        return ordered_json{{"name", p.filename().string()}, {"fnv", hex64(text::fnv1a64(read_text(p)))}};
    };
    auto& corpora = j["corpora"] = ordered_json::array();
    for (const auto& p : config.corpora) corpora.push_back(file_entry(p));
    if (config.new_corpus) j["new_corpus"] = file_entry(*config.new_corpus);
    j["reliability_table"] = file_entry(config.reliability_table);
    j["blacklist"] = file_entry(config.blacklist);
    j["stopwords"] = file_entry(config.stopwords);
    j["suffix_rules"] = file_entry(config.suffix_rules);
    j["category_rules"] = file_entry(config.category_rules);
    if (config.embedding_table) j["embedding_table"] = file_entry(*config.embedding_table);
    j["embedding_fallback"] = config.embedding_fallback;
    auto& protocols = j["protocols"] = ordered_json::array();
    for (auto k : config.protocols) protocols.push_back(eval::protocol_name(k));
    j["seeds"] = config.seeds;
    j["svm"] = {{"C", config.svm.C},
                {"max_epochs", config.svm.max_epochs},
                {"tolerance", config.svm.tolerance},
                {"seed", config.svm.seed}};
    j["temperature"] = config.temperature;
    auto& groups = j["groups"] = ordered_json::array();
    for (auto g : pipeline_options(config).resolved_groups()) groups.push_back(features::group_name(g));
    j["sweep"] = config.sweep;
    j["weights_k"] = config.weights_k;
    j["rng"] = std::string(Rng::kName) + " v" + std::to_string(Rng::kRngVersion);
    return hex64(text::fnv1a64(j.dump()));
}

text::SuffixRules load_suffix_rules(const RunConfig& config) { return text::SuffixRules::load(config.suffix_rules); }

features::FeatureContext load_feature_context(const RunConfig& config) {
    features::FeatureContext ctx;
    ctx.stopwords = text::load_stopwords(config.stopwords);
    ctx.category_rules = text::CategoryRuleSet::load(config.category_rules);
    std::shared_ptr<const text::EmbeddingProvider> fallback;
    if (config.embedding_fallback == "hashing") fallback = std::make_shared<text::HashingEmbeddingProvider>();
    if (config.embedding_table) {
        ctx.embeddings = std::make_shared<text::TableEmbeddingProvider>(
            text::TableEmbeddingProvider::load(*config.embedding_table, fallback));
    } else {
        ctx.embeddings = fallback;
    }
    return ctx;
}

std::vector<evidence::EvidenceBundle> acquire_evidence(const corpus::Corpus& corpus, const RunConfig& config,
                                                       const text::SuffixRules& rules) {
    const evidence::EvidenceCache cache(config.cache_dir);
    evidence::FetchOptions options;
    options.offline = config.offline;
    options.jobs = config.jobs;
    if (config.offline) {
        evidence::FixtureSearchClient search;
        evidence::FixtureCrawler crawler;
        return evidence::fetch_all(corpus, search, crawler, cache, rules, options);
    }
    if (config.search_fixture || config.crawl_fixture) {
        if (!config.search_fixture || !config.crawl_fixture) {
            throw ConfigError("search_fixture and crawl_fixture must be given together");
        }
        auto search = evidence::FixtureSearchClient::load(*config.search_fixture);
        auto crawler = evidence::FixtureCrawler::load(*config.crawl_fixture);
        return evidence::fetch_all(corpus, search, crawler, cache, rules, options);
    }
    auto search = evidence::HttpSearchClient::from_environment();
    evidence::HttpCrawler crawler;
    return evidence::fetch_all(corpus, *search, crawler, cache, rules, options);
}

Workspace::Workspace(const RunConfig& config) {
    std::vector<corpus::Corpus> parts;
    for (const auto& p : config.corpora) parts.push_back(corpus::load_corpus(p));
    prior_ = corpus::Corpus::merge(parts);
    if (config.new_corpus) fresh_ = corpus::load_corpus(*config.new_corpus);

    const auto rules = load_suffix_rules(config);
    const auto table = evidence::ReliabilityTable::load(config.reliability_table);
    const auto blacklist = evidence::DomainBlacklist::load(config.blacklist);
    ctx_ = load_feature_context(config);

    auto prepare = [&](const corpus::Corpus& c, std::vector<evidence::EvidenceBundle>& bundles,
                       std::vector<features::Example>& examples) {
        bundles = acquire_evidence(c, config, rules);
        for (auto& b : bundles) b = evidence::prepare_bundle(std::move(b), blacklist, table);
        examples.reserve(c.size());
        for (std::size_t i = 0; i < c.size(); ++i) examples.push_back({&c.pairs()[i], &bundles[i]});
    };
    prepare(prior_, prior_bundles_, prior_examples_);
    if (config.new_corpus) prepare(fresh_, fresh_bundles_, fresh_examples_);
}

eval::PipelineOptions pipeline_options(const RunConfig& config) {
    eval::PipelineOptions options;
    options.groups = config.groups;
    options.svm = config.svm;
    options.temperature = config.temperature;
    options.jobs = config.jobs;
    return options;
}

report::RunReport evaluate(const Workspace& ws, const RunConfig& config, bool with_sweep) {
    const auto options = pipeline_options(config);
    report::RunReport out;
    out.fingerprint = config_fingerprint(config);
    for (auto kind : config.protocols) {
        auto spec = eval::ProtocolSpec::defaults(kind);
        spec.seeds = config.seeds;
        spec.validate();

        eval::ProtocolRun run;
        if (kind == eval::ProtocolKind::NewDataHoldout) {
            std::vector<features::Example> pool(ws.prior_examples().begin(), ws.prior_examples().end());
            pool.insert(pool.end(), ws.fresh_examples().begin(), ws.fresh_examples().end());
            run = eval::run_protocol(pool, ws.prior_examples().size(), spec, ws.context(), options);
        } else {
            run = eval::run_protocol(ws.prior_examples(), ws.prior_examples().size(), spec, ws.context(), options);
        }
        auto summary = eval::summarize(run);

        if (with_sweep) {
            std::vector<eval::GroupScore> scores;
            for (const auto& g : summary.per_group) scores.push_back({g.groups.front(), g.mean_average_precision});
            auto runner = [&run](std::span<const GroupId> groups) {
                return eval::score_subset(run, groups, "top" + std::to_string(groups.size()));
            };
            out.sweeps.push_back({kind, eval::topn_sweep(scores, runner)});
        }
        out.protocols.push_back(std::move(summary));
    }
    return out;
}

namespace {

struct FittedGroups {
    std::vector<features::FittedGroupState> states;
    // [group position][example]
    std::vector<std::vector<features::GroupFeatures>> features;
    std::vector<int> labels;
    std::vector<const corpus::ImageClaimPair*> pairs;
};

FittedGroups fit_all(std::span<const features::Example> pool, const std::vector<std::size_t>& rows,
                     const std::vector<GroupId>& groups, const features::FeatureContext& ctx) {
    FittedGroups out;
    std::vector<features::Example> train;
    for (auto i : rows) {
        train.push_back(pool[i]);
        out.labels.push_back(pool[i].pair->label == Label::True ? 1 : -1);
        out.pairs.push_back(pool[i].pair);
    }
    for (auto g : groups) {
        auto state = features::fit_group(g, train, ctx);
        std::vector<features::GroupFeatures> column;
        column.reserve(train.size());
        for (const auto& ex : train) column.push_back(features::extract_group(g, ex, state, ctx));
        out.states.push_back(std::move(state));
        out.features.push_back(std::move(column));
    }
    return out;
}

}  // namespace

FullModel train_full_model(const Workspace& ws, const RunConfig& config) {
    const auto groups = pipeline_options(config).resolved_groups();
    const auto rows = balanced_indices(ws.prior_examples(), config.svm.seed);
    const auto fitted = fit_all(ws.prior_examples(), rows, groups, ws.context());

    FullModel out;
    out.layout = features::concat_layout(fitted.states);
    std::vector<text::SparseVector> xs;
    xs.reserve(rows.size());
    std::vector<features::GroupFeatures> parts(groups.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t g = 0; g < groups.size(); ++g) parts[g] = fitted.features[g][r];
        xs.push_back(features::concat_features(out.layout, parts));
    }
    out.model = model::train_linear_svm(xs, fitted.labels, out.layout.dimension(), config.svm);
    return out;
}

void featurize(const Workspace& ws, const RunConfig& config, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    const auto groups = pipeline_options(config).resolved_groups();
    std::vector<std::size_t> rows(ws.prior_examples().size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    const auto fitted = fit_all(ws.prior_examples(), rows, groups, ws.context());
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const auto name = std::string(features::group_name(groups[g]));
        write_text(out_dir / (name + ".state.json"), features::serialize_state(fitted.states[g]));
        features::FeatureMatrix matrix;
        matrix.group = groups[g];
        matrix.dimension = fitted.states[g].dimension();
        for (std::size_t r = 0; r < rows.size(); ++r) {
            matrix.ids.push_back(fitted.pairs[r]->id);
            matrix.rows.push_back(fitted.features[g][r].vector);
        }
        std::ofstream out(out_dir / (name + ".features"), std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write feature matrix for " + name);
        features::write_feature_matrix(matrix, out);
    }
}

void train_from_features(const Workspace& ws, const RunConfig& config, const fs::path& features_dir,
                         const fs::path& out_dir) {
    std::map<std::string, Label, std::less<>> labels;
    for (const auto& p : ws.prior().pairs()) labels.emplace(p.id, p.label);

    std::map<GroupId, model::GroupMatrix> matrices;
    std::vector<int> ys;
    std::vector<std::string> reference_ids;
    for (auto g : pipeline_options(config).resolved_groups()) {
        const auto path = features_dir / (std::string(features::group_name(g)) + ".features");
        std::ifstream in(path, std::ios::binary);
        if (!in) throw DataError("missing feature matrix " + path.string());
        auto matrix = features::read_feature_matrix(in, path.string());
        if (reference_ids.empty()) {
            reference_ids = matrix.ids;
            for (const auto& id : matrix.ids) {
                const auto it = labels.find(id);
                if (it == labels.end()) throw DataError("feature row '" + id + "' is not in the corpus");
                ys.push_back(it->second == Label::True ? 1 : -1);
            }
        } else if (matrix.ids != reference_ids) {
            throw DataError("feature matrices disagree on example ids: " + path.string());
        }
        matrices[g] = {matrix.dimension, std::move(matrix.rows)};
    }
    fs::create_directories(out_dir);
    model::save_ensemble(model::train_ensemble(matrices, ys, config.svm, config.temperature), out_dir);
}

RunArtifacts cmd_run(const RunConfig& config) {
    check_config(config);
    const Workspace ws(config);

    auto run_report = evaluate(ws, config, config.sweep);
    const auto full = train_full_model(ws, config);
    run_report.weights = model::weight_report(full.model, full.layout.names, config.weights_k);

    fs::create_directories(config.output_dir);
    RunArtifacts out;
    out.report_json = config.output_dir / "report.json";
    out.table = config.output_dir / "table1.txt";
    out.curve = config.output_dir / "curve.tsv";
    out.weights = config.output_dir / "weights.tsv";
    out.fingerprint = config.output_dir / "fingerprint.txt";
    out.models = config.output_dir / "models";

    write_text(out.report_json, report::serialize_report(run_report));
    write_text(out.table, report::render_table1(run_report));
    write_text(out.curve, report::render_curve(run_report));
    write_text(out.weights, report::render_weights(*run_report.weights));
    write_text(out.fingerprint, run_report.fingerprint + "\n");

    fs::create_directories(out.models);
    std::ofstream model_out(out.models / "concatenated.model", std::ios::binary | std::ios::trunc);
    if (!model_out) throw DataError("cannot write " + (out.models / "concatenated.model").string());
    model::write_model(full.model, model_out);
    return out;
}

std::string cmd_report(const fs::path& report_path) {
    std::ifstream in(report_path, std::ios::binary);
    if (!in) throw DataError("cannot read report " + report_path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    const auto parsed = report::parse_report(ss.str());

    std::string out = report::render_table1(parsed);
    if (!parsed.sweeps.empty()) out += "\n" + report::render_curve(parsed);
    if (parsed.weights) out += "\n" + report::render_weights(*parsed.weights);
    return out;
}

}  // namespace fauxcheck::pipeline
