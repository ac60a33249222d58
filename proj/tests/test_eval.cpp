#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fauxcheck/error.hpp"
#include "fauxcheck/eval.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

using namespace fauxcheck;
using namespace fauxcheck::eval;
using features::GroupId;

namespace {

std::vector<corpus::ImageClaimPair> protocol_pool(std::size_t* n_prior) {
    const auto prior = testing::make_corpus({80, 120, 50, 6, "p"}, 21);
    const auto fresh = testing::make_corpus({20, 30, 0, 0, "n"}, 22);
    std::vector<corpus::ImageClaimPair> pool = prior.pairs();
    *n_prior = pool.size();
    pool.insert(pool.end(), fresh.pairs().begin(), fresh.pairs().end());
    return pool;
}

ProtocolSpec spec_for(ProtocolKind kind, std::vector<std::uint64_t> seeds) {
    ProtocolSpec s = ProtocolSpec::defaults(kind);
    s.seeds = std::move(seeds);
    return s;
}

}  // namespace

TEST_CASE("accuracy") {
    CHECK(accuracy({true, false, true, true}, {true, true, true, false}) == 50.0);
    CHECK(accuracy({true}, {true}) == 100.0);
    CHECK_THROWS_AS((void)accuracy({}, {}), DataError);
    CHECK_THROWS_AS((void)accuracy({true}, {true, false}), DataError);
}

TEST_CASE("average precision worked example") {
    const std::vector<double> s{0.9, 0.8, 0.7};
    CHECK(average_precision(s, {true, false, true}) == doctest::Approx(83.3333333333).epsilon(1e-10));
    CHECK(average_precision(s, {true, true, false}) == 100.0);
    CHECK(average_precision(s, {false, false, true}) == doctest::Approx(100.0 / 3.0));
    CHECK_THROWS_AS((void)average_precision(s, {false, false, false}), DataError);
    CHECK_THROWS_AS((void)average_precision(s, {true}), DataError);
}

TEST_CASE("ties resolve by original index") {
    const std::vector<double> s{0.5, 0.5, 0.5};
    CHECK(average_precision(s, {true, false, false}) == 100.0);
    CHECK(average_precision(s, {false, false, true}) == doctest::Approx(100.0 / 3.0));
}

TEST_CASE("metrics agree with the reference implementations") {
    Rng rng(99);
    for (int trial = 0; trial < 300; ++trial) {
        const auto n = 1 + static_cast<std::size_t>(rng.below(trial < 150 ? 7 : 20));
        std::vector<double> scores(n);
        std::vector<bool> truth(n), pred(n);
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = static_cast<double>(rng.below(4)) / 4.0;  // coarse, so ties are common
            truth[i] = rng.below(2) == 1;
            pred[i] = rng.below(2) == 1;
        }
        truth[rng.below(n)] = true;
        CHECK(accuracy(pred, truth) == doctest::Approx(testing::oracle_accuracy(pred, truth)).epsilon(1e-12));
        const double ap = average_precision(scores, truth);
        CHECK(std::abs(ap - testing::oracle_ap_pairwise(scores, truth)) < 1e-9);
        if (n <= 6) CHECK(std::abs(ap - testing::oracle_ap_permutations(scores, truth)) < 1e-9);
        CHECK(ap > 0.0);
        CHECK(ap <= 100.0);
    }
}

TEST_CASE("protocol names and spec validation") {
    for (auto k : {ProtocolKind::SnopesOnly, ProtocolKind::SnopesPlusReuters, ProtocolKind::NewDataHoldout}) {
        CHECK(parse_protocol(protocol_name(k)) == k);
        const auto s = ProtocolSpec::defaults(k);
        CHECK(s.n_repeats() == 10);
        CHECK(s.seeds.front() == 1);
        CHECK(s.seeds.back() == 10);
    }
    CHECK_FALSE(parse_protocol("nope").has_value());
    auto s = ProtocolSpec::defaults(ProtocolKind::SnopesOnly);
    s.seeds = {};
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s.seeds = {3, 3};
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s.seeds = {1};
    s.combined_test_size = 99;
    CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("folds honour each protocol contract") {
    std::size_t n_prior = 0;
    const auto pool = protocol_pool(&n_prior);
    for (auto kind : {ProtocolKind::SnopesOnly, ProtocolKind::SnopesPlusReuters, ProtocolKind::NewDataHoldout}) {
        const auto spec = ProtocolSpec::defaults(kind);
        const auto folds = plan_folds(pool, n_prior, spec);
        REQUIRE(folds.size() == 10);
        for (const auto& f : folds) {
            const auto v = testing::fold_violations(pool, n_prior, spec, f);
            CAPTURE(protocol_name(kind));
            CHECK(v.empty());
            if (!v.empty()) MESSAGE(v.front());
        }
        CHECK(folds == plan_folds(pool, n_prior, spec));
        CHECK(folds[0] != folds[1]);
    }
    const auto s = plan_snopes_only(pool, ProtocolSpec::defaults(ProtocolKind::SnopesOnly), 1);
    CHECK(s.test.size() == 100);
    CHECK(plan_combined(pool, ProtocolSpec::defaults(ProtocolKind::SnopesPlusReuters), 1).test.size() == 100);
    CHECK(plan_holdout(pool, n_prior, ProtocolSpec::defaults(ProtocolKind::NewDataHoldout), 1).test.size() == 28);
}

TEST_CASE("snopes-only training takes all Reuters True before balancing") {
    std::size_t n_prior = 0;
    const auto pool = protocol_pool(&n_prior);
    // 30 Snopes True + 50 Reuters True remain against 70 Snopes False.
    const auto f = plan_snopes_only(std::span(pool).first(n_prior), ProtocolSpec::defaults(ProtocolKind::SnopesOnly), 4);
    CHECK(f.train.size() == 140);
    std::size_t reuters = 0;
    for (auto i : f.train) reuters += pool[i].source == corpus::Source::Reuters;
    CHECK(reuters > 0);
}

TEST_CASE("fold planning errors") {
    const auto small = testing::make_corpus({10, 10, 0, 0, "s"}, 1).pairs();
    CHECK_THROWS_AS((void)plan_snopes_only(small, ProtocolSpec::defaults(ProtocolKind::SnopesOnly), 1), DataError);
    CHECK_THROWS_AS((void)plan_combined(small, ProtocolSpec::defaults(ProtocolKind::SnopesPlusReuters), 1), DataError);
    CHECK_THROWS_AS((void)plan_holdout(small, 10, ProtocolSpec::defaults(ProtocolKind::NewDataHoldout), 1), DataError);

    auto dup = testing::make_corpus({20, 20, 0, 0, "d"}, 1).pairs();
    const auto copy = dup;
    dup.insert(dup.end(), copy.begin(), copy.end());
    try {
        (void)plan_holdout(dup, 40, ProtocolSpec::defaults(ProtocolKind::NewDataHoldout), 1);
        FAIL("expected failure");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("both corpora") != std::string::npos);
    }
}

TEST_CASE("rank_groups orders by AP then canonical order") {
    const std::vector<GroupScore> scores{{GroupId::ClaimText, 60.0},
                                         {GroupId::UrlDomains, 70.0},
                                         {GroupId::GoogleTags, 60.0},
                                         {GroupId::TrueMediaPct, 80.0}};
    const auto r = rank_groups(scores);
    CHECK(r == std::vector<GroupId>{GroupId::TrueMediaPct, GroupId::UrlDomains, GroupId::GoogleTags,
                                    GroupId::ClaimText});
    CHECK_THROWS_AS((void)topn_sweep({}, {}), DataError);
}

TEST_CASE("protocol run, summary and sweep endpoints") {
    const auto corpus = testing::make_corpus({40, 60, 30, 0, "e"}, 31);
    auto pool = testing::make_pool(corpus, 32);
    const auto ctx = testing::feature_context();
    PipelineOptions options;
    const auto spec = spec_for(ProtocolKind::SnopesPlusReuters, {1, 2, 3});
    const auto run = run_protocol(pool->examples, pool->examples.size(), spec, ctx, options);
    REQUIRE(run.groups.size() == features::kGroupCount);
    REQUIRE(run.repeats.size() == 3);
    for (const auto& rep : run.repeats) {
        CHECK(rep.truth.size() == 100);
        for (const auto& conf : rep.group_confidence) {
            REQUIRE(conf.size() == 100);
            for (double c : conf) CHECK((c > 0.0 && c < 1.0));
        }
    }

    const auto report = summarize(run);
    CHECK(report.seeds == std::vector<std::uint64_t>{1, 2, 3});
    CHECK(report.per_group.size() == features::kGroupCount);
    CHECK(report.all.accuracy.size() == 3);
    CHECK(report.all.mean_accuracy ==
          doctest::Approx((report.all.accuracy[0] + report.all.accuracy[1] + report.all.accuracy[2]) / 3.0));

    options.jobs = 2;
    const auto parallel = run_protocol(pool->examples, pool->examples.size(), spec, ctx, options);
    for (std::size_t r = 0; r < 3; ++r) CHECK(parallel.repeats[r].group_confidence == run.repeats[r].group_confidence);

    std::vector<GroupScore> scores;
    for (const auto& g : report.per_group) scores.push_back({g.groups.front(), g.mean_average_precision});
    const auto curve = topn_sweep(scores, [&](std::span<const GroupId> groups) {
        return score_subset(run, groups, "top" + std::to_string(groups.size()));
    });
    REQUIRE(curve.size() == features::kGroupCount);
    const auto best = rank_groups(scores).front();
    const auto single = std::find_if(report.per_group.begin(), report.per_group.end(),
                                     [&](const ConfigResult& c) { return c.groups.front() == best; });
    CHECK(curve.front().accuracy == single->mean_accuracy);
    CHECK(curve.front().average_precision == single->mean_average_precision);
    CHECK(curve.back().accuracy == report.all.mean_accuracy);
    CHECK(curve.back().average_precision == report.all.mean_average_precision);

    const GroupId missing[] = {GroupId::ClaimText};
    PipelineOptions narrow;
    narrow.groups = {GroupId::TrueMediaPct};
    const auto small = run_protocol(pool->examples, pool->examples.size(), spec_for(ProtocolKind::SnopesPlusReuters, {1}),
                                    ctx, narrow);
    CHECK_THROWS_AS((void)score_subset(small, missing, "x"), DataError);
    CHECK_THROWS_AS((void)score_subset(small, {}, "x"), DataError);
}

TEST_CASE("holdout and snopes-only runs") {
    const auto prior = testing::make_corpus({60, 70, 20, 4, "h"}, 41);
    const auto fresh = testing::make_corpus({15, 18, 0, 0, "k"}, 42);
    auto p = testing::make_pool(prior, 43);
    auto f = testing::make_pool(fresh, 44);
    const auto ctx = testing::feature_context();
    PipelineOptions options;
    options.groups = {GroupId::TrueMediaPct, GroupId::ClaimText};
    const auto holdout = run_holdout_protocol(p->examples, f->examples,
                                              spec_for(ProtocolKind::NewDataHoldout, {1, 2}), ctx, options);
    CHECK(holdout.kind == ProtocolKind::NewDataHoldout);
    CHECK(holdout.test_sizes == std::vector<std::size_t>{28, 28});
    CHECK(holdout.per_group.size() == 2);

    const auto snopes = run_snopes_protocol(p->examples, spec_for(ProtocolKind::SnopesOnly, {5}), ctx, options);
    CHECK(snopes.test_sizes == std::vector<std::size_t>{100});
    CHECK(snopes.train_sizes.front() % 2 == 0);
}
