#pragma once

// Metrics, seeded fold planning for the three evaluation protocols, the
// per-repeat train/predict loop, the top-n group sweep and report I/O.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fauxcheck/corpus.hpp"
#include "fauxcheck/features.hpp"
#include "fauxcheck/model.hpp"

namespace fauxcheck::eval {

// 100 * correct / total. Throws DataError on empty or mismatched input.
[[nodiscard]] double accuracy(const std::vector<bool>& predictions, const std::vector<bool>& truth);

// Mean of precision@r over the ranks r of positives, times 100. Scores are
// sorted descending with ties broken by original index. Throws DataError
// without positives or on length mismatch.
[[nodiscard]] double average_precision(std::span<const double> scores, const std::vector<bool>& truth);

enum class ProtocolKind { SnopesOnly, SnopesPlusReuters, NewDataHoldout };

[[nodiscard]] std::string_view protocol_name(ProtocolKind kind);
[[nodiscard]] std::string_view protocol_short_label(ProtocolKind kind);
[[nodiscard]] std::optional<ProtocolKind> parse_protocol(std::string_view name);

struct ProtocolSpec {
    ProtocolKind kind = ProtocolKind::SnopesOnly;
    std::vector<std::uint64_t> seeds;  // one per repeat
    std::size_t snopes_test_per_class = 50;
    std::size_t combined_test_size = 100;
    std::size_t holdout_test_per_class = 14;

    [[nodiscard]] std::size_t n_repeats() const noexcept { return seeds.size(); }
    // Ten repeats seeded 1..10.
    [[nodiscard]] static ProtocolSpec defaults(ProtocolKind kind);
    // Throws ConfigError on an empty, duplicated seed list or odd combined test size.
    void validate() const;
};

// Indices into the protocol's example pool, both sorted ascending.
struct Fold {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;

    friend bool operator==(const Fold&, const Fold&) = default;
};

// Snopes-only: 50 True + 50 False Snopes test examples; training is the
// remaining Snopes data plus every Reuters True example, balanced by
// subsampling the larger class. Other-source records are not used.
[[nodiscard]] Fold plan_snopes_only(std::span<const corpus::ImageClaimPair> pool, const ProtocolSpec& spec,
                                    std::uint64_t seed);

// Snopes+Reuters: all sources merged and balanced by subsampling, then a
// stratified random split with `combined_test_size` test examples.
[[nodiscard]] Fold plan_combined(std::span<const corpus::ImageClaimPair> pool, const ProtocolSpec& spec,
                                 std::uint64_t seed);

// Holdout: pool = prior ++ new. Test draws `holdout_test_per_class` of each
// label from the new part; training is the prior part balanced by
// subsampling. Throws DataError if the two parts share ids.
[[nodiscard]] Fold plan_holdout(std::span<const corpus::ImageClaimPair> pool, std::size_t n_prior,
                                const ProtocolSpec& spec, std::uint64_t seed);

// Dispatches on spec.kind; n_prior is only read by the holdout protocol.
[[nodiscard]] std::vector<Fold> plan_folds(std::span<const corpus::ImageClaimPair> pool, std::size_t n_prior,
                                           const ProtocolSpec& spec);

struct PipelineOptions {
    std::vector<features::GroupId> groups;  // empty means all thirteen
    model::SvmOptions svm;
    double temperature = 1.0;
    std::size_t jobs = 1;

    [[nodiscard]] std::vector<features::GroupId> resolved_groups() const;
};

// Per-repeat raw outputs: every group's test-set confidences, so any group
// subset can be scored without retraining.
struct RepeatOutcome {
    std::uint64_t seed = 0;
    Fold fold;
    std::vector<bool> truth;
    std::vector<std::vector<double>> group_confidence;  // [group position][test example]
};

struct ProtocolRun {
    ProtocolKind kind = ProtocolKind::SnopesOnly;
    std::vector<features::GroupId> groups;
    std::vector<RepeatOutcome> repeats;
};

// Trains one model per group on each repeat's training fold (feature states
// fitted on that fold only) and records test confidences.
[[nodiscard]] ProtocolRun run_protocol(std::span<const features::Example> pool, std::size_t n_prior,
                                       const ProtocolSpec& spec, const features::FeatureContext& ctx,
                                       const PipelineOptions& options);

struct ConfigResult {
    std::string configuration;  // "all", a group name, or "top<n>"
    std::vector<features::GroupId> groups;
    std::vector<double> accuracy;           // per repeat
    std::vector<double> average_precision;  // per repeat
    double mean_accuracy = 0.0;
    double mean_average_precision = 0.0;
};

// Confidence-averaged ensemble over `groups` (a subset of run.groups).
[[nodiscard]] ConfigResult score_subset(const ProtocolRun& run, std::span<const features::GroupId> groups,
                                        std::string configuration);

struct EvalReport {
    ProtocolKind kind = ProtocolKind::SnopesOnly;
    std::vector<std::uint64_t> seeds;
    std::vector<std::size_t> test_sizes;
    std::vector<std::size_t> train_sizes;
    ConfigResult all;
    std::vector<ConfigResult> per_group;  // single-group ensembles, run.groups order
};

[[nodiscard]] EvalReport summarize(const ProtocolRun& run);

// Convenience: run_protocol followed by summarize.
[[nodiscard]] EvalReport run_snopes_protocol(std::span<const features::Example> pool, const ProtocolSpec& spec,
                                             const features::FeatureContext& ctx, const PipelineOptions& options);
[[nodiscard]] EvalReport run_combined_protocol(std::span<const features::Example> pool, const ProtocolSpec& spec,
                                               const features::FeatureContext& ctx, const PipelineOptions& options);
[[nodiscard]] EvalReport run_holdout_protocol(std::span<const features::Example> prior,
                                              std::span<const features::Example> fresh, const ProtocolSpec& spec,
                                              const features::FeatureContext& ctx, const PipelineOptions& options);

struct GroupScore {
    features::GroupId group;
    double average_precision = 0.0;
};

// Descending AP; ties keep the canonical group order.
[[nodiscard]] std::vector<features::GroupId> rank_groups(std::span<const GroupScore> scores);

struct CurvePoint {
    std::size_t n = 0;
    std::vector<features::GroupId> groups;
    double accuracy = 0.0;
    double average_precision = 0.0;
};

using SubsetRunner = std::function<ConfigResult(std::span<const features::GroupId>)>;

// For n = 1..N, runs the protocol with the top-n groups by AP.
[[nodiscard]] std::vector<CurvePoint> topn_sweep(std::span<const GroupScore> per_group_ap, const SubsetRunner& runner);

}  // namespace fauxcheck::eval
