#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "fauxcheck/error.hpp"
#include "fauxcheck/model.hpp"
#include "fauxcheck/rng.hpp"
#include "synthetic.hpp"

using namespace fauxcheck;
using namespace fauxcheck::model;
using text::SparseVector;

namespace {

SparseVector dense(std::initializer_list<double> values) {
    std::vector<text::SparseEntry> entries;
    std::uint32_t i = 0;
    for (double v : values) entries.push_back({i++, v});
    return SparseVector::from_entries(std::move(entries));
}

double ternary_min(const std::function<double(double)>& f, double lo, double hi, int iters = 200) {
    for (int i = 0; i < iters; ++i) {
        const double a = lo + (hi - lo) / 3.0;
        const double b = hi - (hi - lo) / 3.0;
        if (f(a) < f(b)) {
            hi = b;
        } else {
            lo = a;
        }
    }
    return f(0.5 * (lo + hi));
}

// Exact minimum of the 1-D primal (weight w, bias b) by nested ternary search;
// the objective is jointly convex so the inner minimum is convex in w.
double oracle_primal_1d(const std::vector<double>& x, const std::vector<int>& y, double C) {
    auto objective = [&](double w, double b) {
        double loss = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) loss += std::max(0.0, 1.0 - y[i] * (w * x[i] + b));
        return 0.5 * (w * w + b * b) + C * loss;
    };
    auto inner = [&](double w) { return ternary_min([&](double b) { return objective(w, b); }, -50.0, 50.0); };
    return ternary_min(inner, -50.0, 50.0);
}

struct Dataset {
    std::vector<SparseVector> xs;
    std::vector<int> ys;
};

Dataset random_dataset(std::uint64_t seed, std::size_t n, std::size_t dim, bool separable) {
    Rng rng(seed);
    std::vector<double> w(dim);
    for (auto& v : w) v = rng.uniform(-1.0, 1.0);
    Dataset d;
    while (d.xs.size() < n) {
        std::vector<text::SparseEntry> e;
        double s = 0.0;
        for (std::uint32_t j = 0; j < dim; ++j) {
            const double v = rng.uniform(-1.0, 1.0);
            e.push_back({j, v});
            s += v * w[j];
        }
        if (separable && std::abs(s) < 0.1) continue;
        int y = s > 0 ? 1 : -1;
        if (!separable && rng.uniform() < 0.15) y = -y;
        d.xs.push_back(SparseVector::from_entries(std::move(e)));
        d.ys.push_back(y);
    }
    if (std::count(d.ys.begin(), d.ys.end(), 1) == 0) d.ys[0] = 1;
    if (std::count(d.ys.begin(), d.ys.end(), -1) == 0) d.ys[0] = -1;
    return d;
}

Ensemble fixed_ensemble(std::initializer_list<double> confidences) {
    Ensemble e;
    auto group = features::all_groups().begin();
    for (double c : confidences) {
        LinearModel m;
        m.group = std::string(features::group_name(*group));
        m.weights = {0.0};
        m.bias = 0.5 * std::log(c / (1.0 - c));
        e.models.emplace(*group++, m);
    }
    return e;
}

std::map<features::GroupId, SparseVector> empty_features(const Ensemble& e) {
    std::map<features::GroupId, SparseVector> out;
    for (const auto& [g, m] : e.models) out[g] = SparseVector{};
    return out;
}

}  // namespace

TEST_CASE("margin fixture reaches unit functional margin") {
    const std::vector<SparseVector> xs{dense({1.0, 0.0}), dense({-1.0, 0.0})};
    const std::vector<int> ys{1, -1};
    const auto m = train_linear_svm(xs, ys, 2, {.C = 100.0});
    CHECK(m.meta.converged);
    CHECK(m.weights[0] == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(m.bias == doctest::Approx(0.0).epsilon(1e-3));
    CHECK(std::abs(decision_value(m, xs[0])) == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(std::abs(decision_value(m, xs[1])) == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("1-D problems match the nested ternary-search optimum") {
    for (std::uint64_t seed = 1; seed <= 12; ++seed) {
        Rng rng(seed);
        std::vector<double> x;
        std::vector<int> y;
        std::vector<SparseVector> xs;
        for (int i = 0; i < 12; ++i) {
            const double v = rng.uniform(-2.0, 2.0);
            const int label = (v + rng.uniform(-0.8, 0.8)) > 0.3 ? 1 : -1;
            x.push_back(v);
            y.push_back(label);
            xs.push_back(dense({v}));
        }
        y[0] = 1;
        y[1] = -1;
        for (double C : {0.1, 1.0, 10.0}) {
            const auto m = train_linear_svm(xs, y, 1, {.C = C, .max_epochs = 100000, .tolerance = 1e-8});
            const double oracle = oracle_primal_1d(x, y, C);
            CHECK(primal_objective(m, xs, y, C) == doctest::Approx(oracle).epsilon(1e-5));
        }
    }
}

TEST_CASE("symmetric data gives zero bias") {
    const std::vector<SparseVector> xs{dense({2.0, 1.0}), dense({1.0, 3.0}), dense({-2.0, -1.0}),
                                       dense({-1.0, -3.0})};
    const std::vector<int> ys{1, 1, -1, -1};
    const auto m = train_linear_svm(xs, ys, 2, {.tolerance = 1e-8});
    CHECK(m.bias == doctest::Approx(0.0).epsilon(1e-6));
    for (std::size_t i = 0; i < xs.size(); ++i) CHECK(ys[i] * decision_value(m, xs[i]) > 0.0);
}

TEST_CASE("training is deterministic for a seed") {
    const auto d = random_dataset(5, 60, 6, false);
    const auto a = train_linear_svm(d.xs, d.ys, 6, {.seed = 3});
    const auto b = train_linear_svm(d.xs, d.ys, 6, {.seed = 3});
    CHECK(a.weights == b.weights);
    CHECK(a.bias == b.bias);
    CHECK(a.meta.dual_objective == b.meta.dual_objective);
}

TEST_CASE("solver properties on random problems") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const bool separable = seed % 2 == 0;
        const auto d = random_dataset(seed, 40, 5, separable);
        const auto m = train_linear_svm(d.xs, d.ys, 5, {.C = 1.0, .max_epochs = 20000, .tolerance = 1e-6});
        CAPTURE(seed);
        CHECK(m.meta.converged);

        LinearModel zero;
        zero.weights.assign(5, 0.0);
        CHECK(primal_objective(m, d.xs, d.ys, 1.0) <= primal_objective(zero, d.xs, d.ys, 1.0) + 1e-12);

        const auto& dual = m.meta.dual_objective;
        for (std::size_t i = 1; i < dual.size(); ++i) CHECK(dual[i] <= dual[i - 1] + 1e-12);

        // Weak duality, and a small gap at convergence.
        const double primal = primal_objective(m, d.xs, d.ys, 1.0);
        CHECK(primal >= -dual.back() - 1e-9);
        CHECK(primal + dual.back() < 1e-3 * std::max(1.0, primal));
    }
}

TEST_CASE("training rejects degenerate input") {
    const std::vector<SparseVector> xs{dense({1.0}), dense({2.0})};
    CHECK_THROWS_AS((void)train_linear_svm(xs, std::vector<int>{1, 1}, 1), DataError);
    CHECK_THROWS_AS((void)train_linear_svm(xs, std::vector<int>{1}, 1), DataError);
    CHECK_THROWS_AS((void)train_linear_svm(std::span(xs).first(1), std::vector<int>{1}, 1), DataError);
    CHECK_THROWS_AS((void)train_linear_svm(xs, std::vector<int>{1, 0}, 1), DataError);
    CHECK_THROWS_AS((void)train_linear_svm(xs, std::vector<int>{1, -1}, 0), DataError);
    CHECK_THROWS_AS((void)train_linear_svm(xs, std::vector<int>{1, -1}, 1, {.C = 0.0}), DataError);
}

TEST_CASE("softmax confidence") {
    CHECK(softmax_confidence(0.0) == 0.5);
    CHECK(softmax_confidence(1.0) == doctest::Approx(0.8808).epsilon(1e-4));
    CHECK(softmax_confidence(1.0) == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))));
    CHECK(softmax_confidence(2.0, 2.0) == doctest::Approx(softmax_confidence(1.0)));
    for (double d : {-3.0, -0.4, 0.1, 2.5}) {
        CHECK(softmax_confidence(d) + softmax_confidence(-d) == doctest::Approx(1.0));
        CHECK(softmax_confidence(d) < softmax_confidence(d + 0.01));
    }
    CHECK_THROWS_AS((void)softmax_confidence(1.0, 0.0), DataError);
}

TEST_CASE("ensemble averages confidences") {
    const auto e = fixed_ensemble({0.6, 0.8});
    const auto p = predict(e, empty_features(e));
    CHECK(p.confidence == doctest::Approx(0.7));
    CHECK(p.label);

    const auto tie = fixed_ensemble({0.3, 0.7});
    const auto q = predict(tie, empty_features(tie));
    CHECK(q.confidence == doctest::Approx(0.5));
    CHECK(q.label == (q.confidence >= 0.5));

    const auto low = fixed_ensemble({0.2, 0.4, 0.6});
    CHECK_FALSE(predict(low, empty_features(low)).label);

    auto missing = empty_features(e);
    missing.erase(missing.begin());
    CHECK_THROWS_AS((void)predict(e, missing), DataError);
    CHECK_THROWS_AS((void)predict(Ensemble{}, {}), DataError);
}

TEST_CASE("weight report lists top k each side") {
    LinearModel m;
    std::vector<std::string> names;
    for (int i = 0; i < 60; ++i) {
        m.weights.push_back(i < 30 ? (i + 1) * 0.1 : -(i - 29) * 0.1);
        names.push_back((i % 2 ? "domains:" : "tags:") + std::to_string(i));
    }
    m.weights[5] = 0.0;
    const auto r = weight_report(m, names);
    REQUIRE(r.positive.size() == 20);
    REQUIRE(r.negative.size() == 20);
    CHECK(r.positive.front().name == "domains:29");
    for (std::size_t i = 1; i < 20; ++i) {
        CHECK(r.positive[i].weight <= r.positive[i - 1].weight);
        CHECK(r.negative[i].weight >= r.negative[i - 1].weight);
    }
    for (const auto& f : r.positive) CHECK(f.weight > 0.0);
    for (const auto& f : r.negative) CHECK(f.weight < 0.0);
    CHECK(r.negative.front().name == "domains:59");

    const auto few = weight_report(m, names, 100);
    CHECK(few.positive.size() == 29);
    CHECK(few.negative.size() == 30);
    names.pop_back();
    CHECK_THROWS_AS((void)weight_report(m, names), DataError);
}

TEST_CASE("model files round-trip") {
    const auto d = random_dataset(9, 30, 8, true);
    const auto m = train_linear_svm(d.xs, d.ys, 8, {.C = 2.5, .seed = 4}, "claim_text");
    std::stringstream ss;
    write_model(m, ss);
    const auto back = read_model(ss);
    CHECK(back.group == "claim_text");
    CHECK(back.weights == m.weights);
    CHECK(back.bias == m.bias);
    CHECK(back.meta.options.C == 2.5);
    CHECK(back.meta.options.seed == 4);
    for (const auto& x : d.xs) CHECK(decision_value(back, x) == decision_value(m, x));

    std::istringstream bad("fauxcheck-model v1\ngroup g\ndimension x\n");
    CHECK_THROWS_AS((void)read_model(bad), DataError);
    std::istringstream wrong("something else\n");
    CHECK_THROWS_AS((void)read_model(wrong), DataError);
}

TEST_CASE("ensembles save and load") {
    const auto d = random_dataset(11, 30, 4, true);
    std::map<features::GroupId, GroupMatrix> fm;
    fm[features::GroupId::ClaimText] = {4, d.xs};
    fm[features::GroupId::TrueMediaPct] = {4, d.xs};
    const auto e = train_ensemble(fm, d.ys, {}, 1.5);
    const auto dir = testing::scratch_dir("ensemble");
    save_ensemble(e, dir);
    const auto back = load_ensemble(dir / "ensemble.json");
    CHECK(back.temperature == 1.5);
    REQUIRE(back.models.size() == 2);
    std::map<features::GroupId, SparseVector> x{{features::GroupId::ClaimText, d.xs[0]},
                                                {features::GroupId::TrueMediaPct, d.xs[0]}};
    CHECK(predict(back, x).confidence == predict(e, x).confidence);

    fm[features::GroupId::UrlDomains] = {4, d.xs};
    std::vector<int> one_class(d.ys.size(), 1);
    try {
        (void)train_ensemble(fm, one_class);
        FAIL("expected failure");
    } catch (const DataError& err) {
        CHECK(std::string(err.what()).find("url_domains") != std::string::npos);
    }
    CHECK_THROWS_AS((void)load_ensemble(dir / "nope.json"), DataError);
}

TEST_CASE("decision values do not depend on term order") {
    LinearModel m;
    m.weights = {0.1, 0.7, 0.1, 1e16, -1e16, 0.3};
    m.bias = -0.2;
    const auto a = SparseVector::from_entries({{0, 0.3}, {1, 0.45}, {5, 0.2}});
    const auto b = SparseVector::from_entries({{1, 0.45}, {2, 0.3}, {5, 0.2}});
    CHECK(decision_value(m, a) == decision_value(m, b));
    const auto c = SparseVector::from_entries({{3, 1.0}, {0, 1.0}, {4, 1.0}});
    CHECK(decision_value(m, c) == doctest::Approx(-0.1));
    CHECK(std::abs(decision_value(m, SparseVector{}) + 0.2) <= 0.5 / kDecisionGrid);
}

TEST_CASE("round-off sized weights do not split ties") {
    LinearModel m;
    m.weights = {1.3877787807814457e-17, 0.5};
    m.bias = -0.11785492024507384;
    const auto noisy = SparseVector::from_entries({{0, 1.0}});
    CHECK(decision_value(m, noisy) == decision_value(m, SparseVector{}));
    CHECK(softmax_confidence(decision_value(m, noisy)) == softmax_confidence(decision_value(m, SparseVector{})));
    // Neighbouring grid points stay distinct after the softmax.
    for (double d : {-11.0, -3.0, 0.0, 2.0, 11.0}) {
        CHECK(softmax_confidence(d) < softmax_confidence(d + 1.0 / kDecisionGrid));
    }
}
