#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fauxcheck/corpus.hpp"
#include "fauxcheck/ela.hpp"
#include "fauxcheck/error.hpp"
#include "fauxcheck/pipeline.hpp"
#include "fauxcheck/report.hpp"

namespace fs = std::filesystem;
using namespace fauxcheck;

namespace {

struct Overrides {
    std::string config;
    std::size_t jobs = 0;
    bool offline = false;
    bool online = false;
    std::string output_dir;
};

void add_config_options(CLI::App* cmd, Overrides& o, bool required = true) {
    auto* opt = cmd->add_option("-c,--config", o.config, "Run configuration (JSON)");
    if (required) opt->required();
    cmd->add_option("-j,--jobs", o.jobs, "Parallel workers for fetching and repeats");
    cmd->add_flag("--offline", o.offline, "Use only the evidence cache");
    cmd->add_flag("--online", o.online, "Allow search and crawl backends on cache misses");
    cmd->add_option("-o,--output-dir", o.output_dir, "Override the configured output directory");
}

pipeline::RunConfig resolve_config(const Overrides& o) {
    auto config = pipeline::load_run_config(o.config);
    if (o.offline && o.online) throw ConfigError("--offline and --online are mutually exclusive");
    if (o.jobs > 0) config.jobs = o.jobs;
    if (o.offline) config.offline = true;
    if (o.online) config.offline = false;
    if (!o.output_dir.empty()) config.output_dir = o.output_dir;
    pipeline::check_config(config);
    return config;
}

void write_file(const fs::path& path, const std::string& contents) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << contents;
}

int corpus_validate(const std::string& path) {
    const auto c = corpus::load_corpus(path);
    const auto violations = corpus::validate_corpus(c);
    for (auto source : {corpus::Source::Snopes, corpus::Source::Reuters, corpus::Source::Other}) {
        std::cout << corpus::to_string(source) << "\ttrue=" << c.count(source, corpus::Label::True)
                  << "\tfalse=" << c.count(source, corpus::Label::False) << '\n';
    }
    std::cout << "total\t" << c.size() << '\n';
    for (const auto& v : violations) std::cout << "violation\t" << v.id << '\t' << v.message << '\n';
    if (!violations.empty()) {
        throw DataError(std::to_string(violations.size()) + " corpus violation(s) in " + path);
    }
    return 0;
}

// Without a config file: one corpus, one cache directory.
struct DirectFetch {
    std::string corpus;
    std::string cache;
    std::string suffix_rules;
    std::string search_fixture;
    std::string crawl_fixture;
};

int evidence_fetch(const Overrides& o, const DirectFetch& d) {
    if (o.config.empty()) {
        if (d.corpus.empty() || d.cache.empty()) throw ConfigError("evidence fetch needs --config or --corpus and --cache");
        if (o.offline && o.online) throw ConfigError("--offline and --online are mutually exclusive");
        pipeline::RunConfig config;
        config.cache_dir = d.cache;
        config.offline = o.offline;
        config.jobs = o.jobs > 0 ? o.jobs : 4;
        if (!d.search_fixture.empty()) config.search_fixture = d.search_fixture;
        if (!d.crawl_fixture.empty()) config.crawl_fixture = d.crawl_fixture;
        for (const auto& p : {d.corpus, d.suffix_rules, d.search_fixture, d.crawl_fixture}) {
            if (!p.empty() && !fs::exists(p)) throw ConfigError("path not found: " + p);
        }
        const auto rules = d.suffix_rules.empty() ? text::SuffixRules{} : text::SuffixRules::load(d.suffix_rules);
        const auto c = corpus::load_corpus(d.corpus);
        std::cout << "bundles\t" << pipeline::acquire_evidence(c, config, rules).size() << '\n';
        return 0;
    }
    if (!d.corpus.empty() || !d.cache.empty()) throw ConfigError("--corpus/--cache cannot be combined with --config");
    auto config = resolve_config(o);
    const auto rules = pipeline::load_suffix_rules(config);
    std::vector<fs::path> paths = config.corpora;
    if (config.new_corpus) paths.push_back(*config.new_corpus);
    std::size_t total = 0;
    for (const auto& p : paths) {
        const auto c = corpus::load_corpus(p);
        total += pipeline::acquire_evidence(c, config, rules).size();
    }
    std::cout << "bundles\t" << total << '\n';
    return 0;
}

int run_eval(const Overrides& o, bool with_sweep) {
    const auto config = resolve_config(o);
    const pipeline::Workspace ws(config);
    const auto rep = pipeline::evaluate(ws, config, with_sweep);
    write_file(config.output_dir / "report.json", report::serialize_report(rep));
    write_file(config.output_dir / "table1.txt", report::render_table1(rep));
    if (with_sweep) {
        write_file(config.output_dir / "curve.tsv", report::render_curve(rep));
        std::cout << report::render_curve(rep);
    } else {
        std::cout << report::render_table1(rep);
    }
    return 0;
}

int run_ela(const std::string& image, int quality, const std::string& out, double scale) {
    const auto bytes = evidence::read_binary_file(image);
    const auto result = evidence::compute_ela(bytes, quality);
    std::printf("width\t%d\nheight\t%d\nmean\t%.6f\nmax\t%d\n", result.width, result.height, result.mean,
                static_cast<int>(result.max));
    if (!out.empty()) evidence::write_ela_png(result, out, scale);
    return 0;
}

int fail(ErrorKind kind, const std::string& message) {
    std::string line = message;
    for (auto& ch : line) {
        if (ch == '\n' || ch == '\r') ch = ' ';
    }
    std::cerr << "error: " << error_class_name(kind) << ": " << line << '\n';
    return static_cast<int>(kind);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Image-claim verification experiments"};
    app.require_subcommand(1);

    auto* corpus_cmd = app.add_subcommand("corpus", "Corpus utilities");
    corpus_cmd->require_subcommand(1);
    std::string corpus_path;
    auto* validate = corpus_cmd->add_subcommand("validate", "Check a corpus file and print class counts");
    validate->add_option("path", corpus_path, "Corpus file (JSON lines)")->required();

    auto* evidence_cmd = app.add_subcommand("evidence", "Evidence acquisition");
    evidence_cmd->require_subcommand(1);
    Overrides fetch_opts;
    DirectFetch direct;
    auto* fetch = evidence_cmd->add_subcommand("fetch", "Fill the evidence cache for a corpus");
    add_config_options(fetch, fetch_opts, false);
    fetch->add_option("--corpus", direct.corpus, "Corpus file, instead of --config");
    fetch->add_option("--cache", direct.cache, "Evidence cache directory, instead of --config");
    fetch->add_option("--suffix-rules", direct.suffix_rules, "Public suffix list used for the summary");
    fetch->add_option("--search-fixture", direct.search_fixture, "Canned search responses (JSON)");
    fetch->add_option("--crawl-fixture", direct.crawl_fixture, "Canned page contents (JSON)");

    Overrides featurize_opts;
    std::string featurize_out;
    auto* featurize = app.add_subcommand("featurize", "Fit feature states and write per-group matrices");
    add_config_options(featurize, featurize_opts);
    featurize->add_option("--out", featurize_out, "Directory for states and matrices")->required();

    Overrides train_opts;
    std::string train_features, train_out;
    auto* train = app.add_subcommand("train", "Train one model per group from feature matrices");
    add_config_options(train, train_opts);
    train->add_option("--features", train_features, "Directory written by featurize")->required();
    train->add_option("--out", train_out, "Directory for the ensemble")->required();

    Overrides eval_opts;
    auto* eval_cmd = app.add_subcommand("eval", "Run the configured protocols");
    add_config_options(eval_cmd, eval_opts);

    Overrides sweep_opts;
    auto* sweep = app.add_subcommand("sweep", "Run the protocols and the top-n group sweep");
    add_config_options(sweep, sweep_opts);

    std::string report_path, report_out;
    auto* report_cmd = app.add_subcommand("report", "Render a saved report");
    report_cmd->add_option("report", report_path, "report.json")->required();
    report_cmd->add_option("--out", report_out, "Write to this file instead of stdout");

    std::string ela_image, ela_out;
    int ela_quality = evidence::kDefaultElaQuality;
    double ela_scale = 0.0;
    auto* ela_cmd = app.add_subcommand("ela", "Error level analysis of a JPEG");
    ela_cmd->add_option("image", ela_image, "JPEG file")->required();
    ela_cmd->add_option("-q,--quality", ela_quality, "Re-save quality")->check(CLI::Range(1, 100));
    ela_cmd->add_option("--out", ela_out, "Write the difference map as PNG");
    ela_cmd->add_option("--scale", ela_scale, "Difference multiplier (0 stretches to full range)");

    Overrides run_opts;
    auto* run = app.add_subcommand("run", "Whole pipeline from a configuration file");
    add_config_options(run, run_opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail(ErrorKind::Config, e.what());
    }

    try {
        if (validate->parsed()) return corpus_validate(corpus_path);
        if (fetch->parsed()) return evidence_fetch(fetch_opts, direct);
        if (featurize->parsed()) {
            const auto config = resolve_config(featurize_opts);
            const pipeline::Workspace ws(config);
            pipeline::featurize(ws, config, featurize_out);
            return 0;
        }
        if (train->parsed()) {
            const auto config = resolve_config(train_opts);
            const pipeline::Workspace ws(config);
            pipeline::train_from_features(ws, config, train_features, train_out);
            return 0;
        }
        if (eval_cmd->parsed()) return run_eval(eval_opts, false);
        if (sweep->parsed()) return run_eval(sweep_opts, true);
        if (report_cmd->parsed()) {
            const auto text = pipeline::cmd_report(report_path);
            if (report_out.empty()) {
                std::cout << text;
            } else {
                write_file(report_out, text);
            }
            return 0;
        }
        if (ela_cmd->parsed()) return run_ela(ela_image, ela_quality, ela_out, ela_scale);
        if (run->parsed()) {
            const auto artifacts = pipeline::cmd_run(resolve_config(run_opts));
            std::cout << "report\t" << artifacts.report_json.string() << '\n'
                      << "table\t" << artifacts.table.string() << '\n'
                      << "curve\t" << artifacts.curve.string() << '\n'
                      << "weights\t" << artifacts.weights.string() << '\n'
                      << "fingerprint\t" << artifacts.fingerprint.string() << '\n';
            return 0;
        }
    } catch (const Error& e) {
        return fail(e.kind(), e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        return fail(ErrorKind::Data, e.what());
    } catch (const std::exception& e) {
        return fail(ErrorKind::Internal, e.what());
    }
    return fail(ErrorKind::Internal, "no command handled");
}
