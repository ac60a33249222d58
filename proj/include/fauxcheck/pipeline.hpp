#pragma once

// Configuration-driven orchestration shared by the CLI and the Python module.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fauxcheck/corpus.hpp"
#include "fauxcheck/eval.hpp"
#include "fauxcheck/evidence.hpp"
#include "fauxcheck/features.hpp"
#include "fauxcheck/model.hpp"
#include "fauxcheck/report.hpp"
#include "fauxcheck/text.hpp"

namespace fauxcheck::pipeline {

namespace fs = std::filesystem;

// Relative paths in the config file resolve against the file's directory.
struct RunConfig {
    std::vector<fs::path> corpora;
    std::optional<fs::path> new_corpus;
    fs::path cache_dir;
    fs::path reliability_table;
    fs::path blacklist;
    fs::path stopwords;
    fs::path suffix_rules;
    fs::path category_rules;
    std::optional<fs::path> embedding_table;
    std::string embedding_fallback = "none";  // "none" or "hashing"
    fs::path output_dir;

    std::optional<fs::path> search_fixture;
    std::optional<fs::path> crawl_fixture;

    std::vector<eval::ProtocolKind> protocols{eval::ProtocolKind::SnopesOnly,
                                              eval::ProtocolKind::SnopesPlusReuters};
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    std::size_t n_repeats = 10;
    model::SvmOptions svm;
    double temperature = 1.0;
    std::vector<features::GroupId> groups;  // empty means all
    bool sweep = true;
    std::size_t weights_k = 20;
    bool offline = true;
    std::size_t jobs = 1;
};

// Throws ConfigError on malformed JSON, unknown keys or invalid values.
[[nodiscard]] RunConfig parse_run_config(std::string_view json_text, const fs::path& base_dir);
[[nodiscard]] RunConfig load_run_config(const fs::path& path);

// Every referenced input path must exist; throws ConfigError naming the first
// missing one. Also re-checks the seed list against n_repeats.
void check_config(const RunConfig& config);

// Hex digest of the canonical configuration (paths, protocol, model settings).
[[nodiscard]] std::string config_fingerprint(const RunConfig& config);

// Loaded corpora, resources and prepared evidence. Examples point into the
// workspace, so it is neither copyable nor movable.
class Workspace {
public:
    explicit Workspace(const RunConfig& config);
    Workspace(const Workspace&) = delete;
    Workspace& operator=(const Workspace&) = delete;

    [[nodiscard]] const corpus::Corpus& prior() const noexcept { return prior_; }
    [[nodiscard]] const corpus::Corpus& fresh() const noexcept { return fresh_; }
    [[nodiscard]] const features::FeatureContext& context() const noexcept { return ctx_; }
    [[nodiscard]] std::span<const features::Example> prior_examples() const noexcept { return prior_examples_; }
    [[nodiscard]] std::span<const features::Example> fresh_examples() const noexcept { return fresh_examples_; }

private:
    corpus::Corpus prior_;
    corpus::Corpus fresh_;
    std::vector<evidence::EvidenceBundle> prior_bundles_;
    std::vector<evidence::EvidenceBundle> fresh_bundles_;
    features::FeatureContext ctx_;
    std::vector<features::Example> prior_examples_;
    std::vector<features::Example> fresh_examples_;
};

[[nodiscard]] text::SuffixRules load_suffix_rules(const RunConfig& config);
[[nodiscard]] features::FeatureContext load_feature_context(const RunConfig& config);

// Evidence acquisition for one corpus: the cache first, then fixture backends
// when configured, otherwise the HTTP backends from the environment.
[[nodiscard]] std::vector<evidence::EvidenceBundle> acquire_evidence(const corpus::Corpus& corpus,
                                                                     const RunConfig& config,
                                                                     const text::SuffixRules& rules);

[[nodiscard]] eval::PipelineOptions pipeline_options(const RunConfig& config);

// Runs every configured protocol (and the sweep when `with_sweep`).
[[nodiscard]] report::RunReport evaluate(const Workspace& ws, const RunConfig& config, bool with_sweep);

// Concatenated all-group model on the class-balanced prior corpus, used for
// the weight lists.
struct FullModel {
    features::ConcatLayout layout;
    model::LinearModel model;
};
[[nodiscard]] FullModel train_full_model(const Workspace& ws, const RunConfig& config);

// Feature states and matrices for each group, fitted on the whole prior corpus.
void featurize(const Workspace& ws, const RunConfig& config, const fs::path& out_dir);

// Trains one model per feature matrix found in `features_dir` and writes an
// ensemble manifest to `out_dir`. Labels come from the prior corpus by id.
void train_from_features(const Workspace& ws, const RunConfig& config, const fs::path& features_dir,
                         const fs::path& out_dir);

struct RunArtifacts {
    fs::path report_json;
    fs::path table;
    fs::path curve;
    fs::path weights;
    fs::path fingerprint;
    fs::path models;
};

// The whole pipeline: load, evidence, features, ensemble, protocols, reports.
[[nodiscard]] RunArtifacts cmd_run(const RunConfig& config);

// Renders a saved report: table, then curve rows and weight lists if present.
[[nodiscard]] std::string cmd_report(const fs::path& report_path);

}  // namespace fauxcheck::pipeline
