#include "fauxcheck/eval.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <numeric>
#include <set>
#include <thread>

#include "fauxcheck/error.hpp"
#include "fauxcheck/rng.hpp"

namespace fauxcheck::eval {

using corpus::Label;
using corpus::Source;
using features::GroupId;

double accuracy(const std::vector<bool>& predictions, const std::vector<bool>& truth) {
    if (predictions.size() != truth.size()) throw DataError("accuracy: predictions and truth differ in length");
    if (truth.empty()) throw DataError("accuracy: empty input");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) correct += predictions[i] == truth[i];
    return 100.0 * static_cast<double>(correct) / static_cast<double>(truth.size());
}

double average_precision(std::span<const double> scores, const std::vector<bool>& truth) {
    if (scores.size() != truth.size()) throw DataError("average precision: scores and truth differ in length");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    double sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t r = 0; r < order.size(); ++r) {
        if (truth[order[r]]) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(r + 1);
        }
    }
    if (hits == 0) throw DataError("average precision: no positive examples");
    return 100.0 * sum / static_cast<double>(hits);
}

// ---------------------------------------------------------------------------

std::string_view protocol_name(ProtocolKind kind) {
    switch (kind) {
        case ProtocolKind::SnopesOnly: return "snopes_only";
        case ProtocolKind::SnopesPlusReuters: return "combined";
        case ProtocolKind::NewDataHoldout: return "holdout";
    }
    return "snopes_only";
}

std::string_view protocol_short_label(ProtocolKind kind) {
    switch (kind) {
        case ProtocolKind::SnopesOnly: return "S";
        case ProtocolKind::SnopesPlusReuters: return "S+R";
        case ProtocolKind::NewDataHoldout: return "New";
    }
    return "S";
}

std::optional<ProtocolKind> parse_protocol(std::string_view name) {
    for (auto k : {ProtocolKind::SnopesOnly, ProtocolKind::SnopesPlusReuters, ProtocolKind::NewDataHoldout}) {
        if (protocol_name(k) == name) return k;
    }
    return std::nullopt;
}

ProtocolSpec ProtocolSpec::defaults(ProtocolKind kind) {
    ProtocolSpec spec;
    spec.kind = kind;
    for (std::uint64_t s = 1; s <= 10; ++s) spec.seeds.push_back(s);
    return spec;
}

void ProtocolSpec::validate() const {
    if (seeds.empty()) throw ConfigError("protocol needs at least one seed");
    if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
        throw ConfigError("protocol seeds must be distinct");
    }
    if (combined_test_size == 0 || combined_test_size % 2 != 0) {
        throw ConfigError("combined test size must be a positive even number");
    }
    if (snopes_test_per_class == 0 || holdout_test_per_class == 0) {
        throw ConfigError("per-class test sizes must be positive");
    }
}

namespace {

struct ClassSplit {
    std::vector<std::size_t> pos;
    std::vector<std::size_t> neg;
};

template <typename Pred>
ClassSplit split_by_label(std::span<const corpus::ImageClaimPair> pool, std::size_t begin, std::size_t end,
                          Pred&& include) {
    ClassSplit s;
    for (std::size_t i = begin; i < end; ++i) {
        if (!include(pool[i])) continue;
        (pool[i].label == Label::True ? s.pos : s.neg).push_back(i);
    }
    return s;
}

std::vector<std::size_t> minus(const std::vector<std::size_t>& all, const std::vector<std::size_t>& removed) {
    std::vector<std::size_t> sorted_removed(removed);
    std::sort(sorted_removed.begin(), sorted_removed.end());
    std::vector<std::size_t> out;
    std::set_difference(all.begin(), all.end(), sorted_removed.begin(), sorted_removed.end(), std::back_inserter(out));
    return out;
}

// Subsamples the larger class down to the smaller one.
void balance(ClassSplit& s, Rng& rng) {
    const auto m = std::min(s.pos.size(), s.neg.size());
    if (s.pos.size() > m) s.pos = rng.sample(s.pos, m);
    if (s.neg.size() > m) s.neg = rng.sample(s.neg, m);
}

std::vector<std::size_t> sorted_union(std::vector<std::size_t> a, const std::vector<std::size_t>& b) {
    a.insert(a.end(), b.begin(), b.end());
    std::sort(a.begin(), a.end());
    return a;
}

void require(bool ok, const std::string& msg) {
    if (!ok) throw DataError(msg);
}

}  // namespace

Fold plan_snopes_only(std::span<const corpus::ImageClaimPair> pool, const ProtocolSpec& spec, std::uint64_t seed) {
    const auto k = spec.snopes_test_per_class;
    auto snopes = split_by_label(pool, 0, pool.size(), [](const auto& p) { return p.source == Source::Snopes; });
    auto reuters = split_by_label(pool, 0, pool.size(), [](const auto& p) { return p.source == Source::Reuters; });
    require(snopes.pos.size() >= k && snopes.neg.size() >= k,
            "snopes-only protocol needs at least " + std::to_string(k) + " True and " + std::to_string(k) +
                " False Snopes examples");
    Rng rng(seed);
    const auto test_pos = rng.sample(snopes.pos, k);
    const auto test_neg = rng.sample(snopes.neg, k);
    ClassSplit train;
    train.pos = sorted_union(minus(snopes.pos, test_pos), reuters.pos);
    train.neg = minus(snopes.neg, test_neg);
    balance(train, rng);
    require(!train.pos.empty() && !train.neg.empty(), "snopes-only protocol leaves no training data for one class");
    return Fold{sorted_union(train.pos, train.neg), sorted_union(test_pos, test_neg)};
}

Fold plan_combined(std::span<const corpus::ImageClaimPair> pool, const ProtocolSpec& spec, std::uint64_t seed) {
    const auto half = spec.combined_test_size / 2;
    auto all = split_by_label(pool, 0, pool.size(), [](const auto&) { return true; });
    Rng rng(seed);
    balance(all, rng);
    require(all.pos.size() > half && all.neg.size() > half,
            "combined protocol needs more than " + std::to_string(spec.combined_test_size) +
                " balanced examples, have " + std::to_string(2 * all.pos.size()));
    rng.shuffle(all.pos);
    rng.shuffle(all.neg);
    std::vector<std::size_t> test(all.pos.begin(), all.pos.begin() + static_cast<std::ptrdiff_t>(half));
    test.insert(test.end(), all.neg.begin(), all.neg.begin() + static_cast<std::ptrdiff_t>(half));
    std::vector<std::size_t> train(all.pos.begin() + static_cast<std::ptrdiff_t>(half), all.pos.end());
    train.insert(train.end(), all.neg.begin() + static_cast<std::ptrdiff_t>(half), all.neg.end());
    std::sort(test.begin(), test.end());
    std::sort(train.begin(), train.end());
    return Fold{std::move(train), std::move(test)};
}

Fold plan_holdout(std::span<const corpus::ImageClaimPair> pool, std::size_t n_prior, const ProtocolSpec& spec,
                  std::uint64_t seed) {
    require(n_prior <= pool.size(), "holdout prior size exceeds the pool");
    std::set<std::string_view> prior_ids;
    for (std::size_t i = 0; i < n_prior; ++i) prior_ids.insert(pool[i].id);
    for (std::size_t i = n_prior; i < pool.size(); ++i) {
        require(!prior_ids.contains(pool[i].id), "holdout: id '" + pool[i].id + "' appears in both corpora");
    }
    const auto k = spec.holdout_test_per_class;
    auto fresh = split_by_label(pool, n_prior, pool.size(), [](const auto&) { return true; });
    require(fresh.pos.size() >= k && fresh.neg.size() >= k,
            "holdout protocol needs at least " + std::to_string(k) + " True and " + std::to_string(k) +
                " False new examples");
    auto prior = split_by_label(pool, 0, n_prior, [](const auto&) { return true; });
    Rng rng(seed);
    const auto test_pos = rng.sample(fresh.pos, k);
    const auto test_neg = rng.sample(fresh.neg, k);
    balance(prior, rng);
    require(!prior.pos.empty(), "holdout protocol has no balanced training data");
    return Fold{sorted_union(prior.pos, prior.neg), sorted_union(test_pos, test_neg)};
}

std::vector<Fold> plan_folds(std::span<const corpus::ImageClaimPair> pool, std::size_t n_prior,
                             const ProtocolSpec& spec) {
    spec.validate();
    std::vector<Fold> folds;
    for (auto seed : spec.seeds) {
        switch (spec.kind) {
            case ProtocolKind::SnopesOnly: folds.push_back(plan_snopes_only(pool, spec, seed)); break;
            case ProtocolKind::SnopesPlusReuters: folds.push_back(plan_combined(pool, spec, seed)); break;
            case ProtocolKind::NewDataHoldout: folds.push_back(plan_holdout(pool, n_prior, spec, seed)); break;
        }
    }
    return folds;
}

// ---------------------------------------------------------------------------

std::vector<GroupId> PipelineOptions::resolved_groups() const {
    if (groups.empty()) return {features::all_groups().begin(), features::all_groups().end()};
    std::vector<GroupId> out(groups);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

namespace {

RepeatOutcome run_repeat(std::span<const features::Example> pool, const Fold& fold, std::uint64_t seed,
                         std::span<const GroupId> groups, const features::FeatureContext& ctx,
                         const PipelineOptions& options) {
    RepeatOutcome out;
    out.seed = seed;
    out.fold = fold;
    std::vector<features::Example> train, test;
    std::vector<int> labels;
    for (auto i : fold.train) {
        train.push_back(pool[i]);
        labels.push_back(pool[i].pair->label == Label::True ? 1 : -1);
    }
    for (auto i : fold.test) {
        test.push_back(pool[i]);
        out.truth.push_back(pool[i].pair->label == Label::True);
    }
    for (auto group : groups) {
        const auto state = features::fit_group(group, train, ctx);
        model::GroupMatrix matrix;
        matrix.dimension = state.dimension();
        for (const auto& ex : train) matrix.rows.push_back(features::extract_group(group, ex, state, ctx).vector);
        const auto m = model::train_linear_svm(matrix.rows, labels, matrix.dimension, options.svm,
                                               std::string(features::group_name(group)));
        std::vector<double> conf;
        conf.reserve(test.size());
        for (const auto& ex : test) {
            const auto x = features::extract_group(group, ex, state, ctx).vector;
            conf.push_back(model::softmax_confidence(model::decision_value(m, x), options.temperature));
        }
        out.group_confidence.push_back(std::move(conf));
    }
    return out;
}

}  // namespace

ProtocolRun run_protocol(std::span<const features::Example> pool, std::size_t n_prior, const ProtocolSpec& spec,
                         const features::FeatureContext& ctx, const PipelineOptions& options) {
    std::vector<corpus::ImageClaimPair> pairs;
    pairs.reserve(pool.size());
    for (const auto& ex : pool) {
        if (ex.pair == nullptr || ex.bundle == nullptr) throw Error(ErrorKind::Internal, "example without pair or bundle");
        pairs.push_back(*ex.pair);
    }
    const auto folds = plan_folds(pairs, n_prior, spec);

    ProtocolRun run;
    run.kind = spec.kind;
    run.groups = options.resolved_groups();
    run.repeats.resize(folds.size());

    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const auto r = next.fetch_add(1);
            if (r >= folds.size()) return;
            try {
                run.repeats[r] = run_repeat(pool, folds[r], spec.seeds[r], run.groups, ctx, options);
            } catch (...) {
                std::lock_guard guard(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    const auto jobs = std::max<std::size_t>(1, std::min(options.jobs, folds.size()));
    std::vector<std::thread> threads;
    for (std::size_t t = 1; t < jobs; ++t) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
    return run;
}

ConfigResult score_subset(const ProtocolRun& run, std::span<const GroupId> groups, std::string configuration) {
    if (groups.empty()) throw DataError("cannot score an empty group subset");
    std::vector<std::size_t> positions;
    for (auto g : groups) {
        auto it = std::find(run.groups.begin(), run.groups.end(), g);
        if (it == run.groups.end()) {
            throw DataError("group '" + std::string(features::group_name(g)) + "' was not part of the run");
        }
        positions.push_back(static_cast<std::size_t>(it - run.groups.begin()));
    }
    // Canonical order keeps the floating-point sum independent of how the subset was listed.
    std::sort(positions.begin(), positions.end());
    positions.erase(std::unique(positions.begin(), positions.end()), positions.end());

    ConfigResult out;
    out.configuration = std::move(configuration);
    for (auto p : positions) out.groups.push_back(run.groups[p]);
    for (const auto& rep : run.repeats) {
        const auto n = rep.truth.size();
        std::vector<double> conf(n, 0.0);
        std::vector<bool> pred(n);
        for (std::size_t i = 0; i < n; ++i) {
            double sum = 0.0;
            for (auto p : positions) sum += rep.group_confidence[p][i];
            conf[i] = sum / static_cast<double>(positions.size());
            pred[i] = conf[i] >= 0.5;
        }
        out.accuracy.push_back(accuracy(pred, rep.truth));
        out.average_precision.push_back(average_precision(conf, rep.truth));
    }
    const auto mean = [](const std::vector<double>& v) {
        return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    };
    out.mean_accuracy = mean(out.accuracy);
    out.mean_average_precision = mean(out.average_precision);
    return out;
}

EvalReport summarize(const ProtocolRun& run) {
    EvalReport report;
    report.kind = run.kind;
    for (const auto& rep : run.repeats) {
        report.seeds.push_back(rep.seed);
        report.test_sizes.push_back(rep.fold.test.size());
        report.train_sizes.push_back(rep.fold.train.size());
    }
    report.all = score_subset(run, run.groups, "all");
    for (auto g : run.groups) {
        const GroupId one[] = {g};
        report.per_group.push_back(score_subset(run, one, std::string(features::group_name(g))));
    }
    return report;
}

EvalReport run_snopes_protocol(std::span<const features::Example> pool, const ProtocolSpec& spec,
                               const features::FeatureContext& ctx, const PipelineOptions& options) {
    auto s = spec;
    s.kind = ProtocolKind::SnopesOnly;
    return summarize(run_protocol(pool, pool.size(), s, ctx, options));
}

EvalReport run_combined_protocol(std::span<const features::Example> pool, const ProtocolSpec& spec,
                                 const features::FeatureContext& ctx, const PipelineOptions& options) {
    auto s = spec;
    s.kind = ProtocolKind::SnopesPlusReuters;
    return summarize(run_protocol(pool, pool.size(), s, ctx, options));
}

EvalReport run_holdout_protocol(std::span<const features::Example> prior, std::span<const features::Example> fresh,
                                const ProtocolSpec& spec, const features::FeatureContext& ctx,
                                const PipelineOptions& options) {
    std::vector<features::Example> pool(prior.begin(), prior.end());
    pool.insert(pool.end(), fresh.begin(), fresh.end());
    auto s = spec;
    s.kind = ProtocolKind::NewDataHoldout;
    return summarize(run_protocol(pool, prior.size(), s, ctx, options));
}

std::vector<GroupId> rank_groups(std::span<const GroupScore> scores) {
    std::vector<GroupScore> sorted(scores.begin(), scores.end());
    std::stable_sort(sorted.begin(), sorted.end(), [](const GroupScore& a, const GroupScore& b) {
        if (a.average_precision != b.average_precision) return a.average_precision > b.average_precision;
        return a.group < b.group;
    });
    std::vector<GroupId> out;
    for (const auto& s : sorted) out.push_back(s.group);
    return out;
}

std::vector<CurvePoint> topn_sweep(std::span<const GroupScore> per_group_ap, const SubsetRunner& runner) {
    if (per_group_ap.empty()) throw DataError("top-n sweep needs a non-empty group ranking");
    const auto ranking = rank_groups(per_group_ap);
    std::vector<CurvePoint> curve;
    for (std::size_t n = 1; n <= ranking.size(); ++n) {
        std::span<const GroupId> top(ranking.data(), n);
        const auto result = runner(top);
        curve.push_back({n, std::vector<GroupId>(top.begin(), top.end()), result.mean_accuracy,
                         result.mean_average_precision});
    }
    return curve;
}

}  // namespace fauxcheck::eval
