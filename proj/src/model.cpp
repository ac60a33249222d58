#include "fauxcheck/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "fauxcheck/error.hpp"
#include "fauxcheck/rng.hpp"

namespace fauxcheck::model {

namespace {

double sparse_dot(const std::vector<double>& w, const text::SparseVector& x) {
    double s = 0.0;
    for (const auto& e : x.entries()) {
        if (e.index < w.size()) s += w[e.index] * e.weight;
    }
    return s;
}

// Correctly rounded sum (Shewchuk's partials with a final half-way fix-up), so
// the result does not depend on the order of the terms.
class ExactSum {
public:
    void add(double x) {
        std::size_t i = 0;
        for (double y : partials_) {
            if (std::abs(x) < std::abs(y)) std::swap(x, y);
            const double hi = x + y;
            const double lo = y - (hi - x);
            if (lo != 0.0) partials_[i++] = lo;
            x = hi;
        }
        partials_.resize(i);
        partials_.push_back(x);
    }

    [[nodiscard]] double value() const {
        if (partials_.empty()) return 0.0;
        auto n = partials_.size();
        double hi = partials_[--n];
        double lo = 0.0;
        while (n > 0) {
            const double x = hi;
            const double y = partials_[--n];
            hi = x + y;
            lo = y - (hi - x);
            if (lo != 0.0) break;
        }
        if (n > 0 && ((lo < 0.0 && partials_[n - 1] < 0.0) || (lo > 0.0 && partials_[n - 1] > 0.0))) {
            const double y = lo * 2.0;
            const double x = hi + y;
            if (y == x - hi) hi = x;
        }
        return hi;
    }

private:
    std::vector<double> partials_;
};

double squared_norm(const std::vector<double>& w, double bias) {
    double s = bias * bias;
    for (double v : w) s += v * v;
    return s;
}

}  // namespace

LinearModel train_linear_svm(std::span<const text::SparseVector> xs, std::span<const int> ys, std::size_t dimension,
                             const SvmOptions& options, std::string group) {
    if (xs.size() != ys.size()) throw DataError("feature rows and labels differ in length");
    if (xs.size() < 2) throw DataError("linear SVM needs at least two examples");
    if (!(options.C > 0.0)) throw DataError("SVM C must be positive");
    bool has_pos = false, has_neg = false;
    for (int y : ys) {
        if (y == 1) {
            has_pos = true;
        } else if (y == -1) {
            has_neg = true;
        } else {
            throw DataError("SVM labels must be +1 or -1");
        }
    }
    if (!has_pos || !has_neg) throw DataError("linear SVM needs both classes in the training data");
    for (const auto& x : xs) {
        if (!x.empty() && x.entries().back().index >= dimension) {
            throw DataError("feature index " + std::to_string(x.entries().back().index) + " exceeds dimension " +
                            std::to_string(dimension));
        }
    }

    const std::size_t n = xs.size();
    const double C = options.C;
    std::vector<double> alpha(n, 0.0);
    std::vector<double> qdiag(n);
    for (std::size_t i = 0; i < n; ++i) {
        double sq = 1.0;  // constant bias feature
        for (const auto& e : xs[i].entries()) sq += e.weight * e.weight;
        qdiag[i] = sq;
    }

    LinearModel model;
    model.group = std::move(group);
    model.weights.assign(dimension, 0.0);
    model.meta.options = options;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(options.seed);

    for (std::size_t epoch = 0; epoch < options.max_epochs; ++epoch) {
        rng.shuffle(order);
        double max_violation = 0.0;
        for (std::size_t i : order) {
            const double y = ys[i];
            const double g = y * (sparse_dot(model.weights, xs[i]) + model.bias) - 1.0;
            double pg = g;
            if (alpha[i] == 0.0) {
                pg = std::min(g, 0.0);
            } else if (alpha[i] == C) {
                pg = std::max(g, 0.0);
            }
            max_violation = std::max(max_violation, std::abs(pg));
            if (std::abs(pg) <= 1e-12) continue;
            const double old = alpha[i];
            alpha[i] = std::clamp(old - g / qdiag[i], 0.0, C);
            const double step = (alpha[i] - old) * y;
            for (const auto& e : xs[i].entries()) model.weights[e.index] += step * e.weight;
            model.bias += step;
        }
        const double alpha_sum = std::accumulate(alpha.begin(), alpha.end(), 0.0);
        model.meta.dual_objective.push_back(0.5 * squared_norm(model.weights, model.bias) - alpha_sum);
        model.meta.epochs_run = epoch + 1;
        if (max_violation < options.tolerance) {
            model.meta.converged = true;
            break;
        }
    }
    return model;
}

namespace {

double raw_decision(const LinearModel& model, const text::SparseVector& x) {
    ExactSum sum;
    for (const auto& e : x.entries()) {
        if (e.index < model.weights.size()) sum.add(model.weights[e.index] * e.weight);
    }
    sum.add(model.bias);
    return sum.value();
}

}  // namespace

double decision_value(const LinearModel& model, const text::SparseVector& x) {
    return std::nearbyint(raw_decision(model, x) * kDecisionGrid) / kDecisionGrid;
}

double primal_objective(const LinearModel& model, std::span<const text::SparseVector> xs, std::span<const int> ys,
                        double C) {
    double loss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        loss += std::max(0.0, 1.0 - ys[i] * raw_decision(model, xs[i]));
    }
    return 0.5 * squared_norm(model.weights, model.bias) + C * loss;
}

double softmax_confidence(double decision, double temperature) {
    if (!(temperature > 0.0)) throw DataError("softmax temperature must be positive");
    return 1.0 / (1.0 + std::exp(-2.0 * decision / temperature));
}

Ensemble train_ensemble(const std::map<features::GroupId, GroupMatrix>& feature_map, std::span<const int> labels,
                        const SvmOptions& options, double temperature) {
    Ensemble ensemble;
    ensemble.temperature = temperature;
    for (const auto& [group, matrix] : feature_map) {
        const auto name = std::string(features::group_name(group));
        try {
            ensemble.models.emplace(group, train_linear_svm(matrix.rows, labels, matrix.dimension, options, name));
        } catch (const Error& e) {
            throw DataError("training group '" + name + "' failed: " + e.what());
        }
    }
    return ensemble;
}

Prediction predict(const Ensemble& ensemble, const std::map<features::GroupId, text::SparseVector>& example) {
    if (ensemble.models.empty()) throw DataError("cannot predict with an empty ensemble");
    double sum = 0.0;
    for (const auto& [group, model] : ensemble.models) {
        auto it = example.find(group);
        if (it == example.end()) {
            throw DataError("example is missing features for group '" + std::string(features::group_name(group)) + "'");
        }
        sum += softmax_confidence(decision_value(model, it->second), ensemble.temperature);
    }
    Prediction p;
    p.confidence = sum / static_cast<double>(ensemble.models.size());
    p.label = p.confidence >= 0.5;
    return p;
}

WeightReport weight_report(const LinearModel& model, std::span<const std::string> names, std::size_t k) {
    if (names.size() != model.weights.size()) {
        throw DataError("weight report: " + std::to_string(names.size()) + " names for " +
                        std::to_string(model.weights.size()) + " weights");
    }
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < model.weights.size(); ++i) {
        if (model.weights[i] > 0.0) pos.push_back(i);
        if (model.weights[i] < 0.0) neg.push_back(i);
    }
    auto by_weight_desc = [&](std::size_t a, std::size_t b) {
        return model.weights[a] != model.weights[b] ? model.weights[a] > model.weights[b] : a < b;
    };
    auto by_weight_asc = [&](std::size_t a, std::size_t b) {
        return model.weights[a] != model.weights[b] ? model.weights[a] < model.weights[b] : a < b;
    };
    const auto kp = std::min(k, pos.size());
    const auto kn = std::min(k, neg.size());
    std::partial_sort(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(kp), pos.end(), by_weight_desc);
    std::partial_sort(neg.begin(), neg.begin() + static_cast<std::ptrdiff_t>(kn), neg.end(), by_weight_asc);
    WeightReport report;
    for (std::size_t i = 0; i < kp; ++i) report.positive.push_back({names[pos[i]], model.weights[pos[i]]});
    for (std::size_t i = 0; i < kn; ++i) report.negative.push_back({names[neg[i]], model.weights[neg[i]]});
    return report;
}

// ---------------------------------------------------------------------------

void write_model(const LinearModel& model, std::ostream& out) {
    const auto& o = model.meta.options;
    out.precision(17);
    out << "fauxcheck-model v1\n"
        << "group " << model.group << '\n'
        << "dimension " << model.weights.size() << '\n'
        << "C " << o.C << '\n'
        << "epochs " << o.max_epochs << '\n'
        << "seed " << o.seed << '\n'
        << "tolerance " << o.tolerance << '\n'
        << "bias " << model.bias << '\n';
    const auto nnz = std::count_if(model.weights.begin(), model.weights.end(), [](double w) { return w != 0.0; });
    out << "nnz " << nnz << '\n';
    for (std::size_t i = 0; i < model.weights.size(); ++i) {
        if (model.weights[i] != 0.0) out << i << ' ' << model.weights[i] << '\n';
    }
}

LinearModel read_model(std::istream& in, std::string_view origin) {
    auto fail = [&](const std::string& msg) -> void { throw DataError(std::string(origin) + ": " + msg); };
    std::string line;
    if (!std::getline(in, line) || line != "fauxcheck-model v1") fail("not a fauxcheck model file");
    auto field = [&](const char* key) {
        std::string k, v;
        if (!std::getline(in, line)) fail(std::string("missing '") + key + "'");
        std::istringstream ss(line);
        ss >> k;
        std::getline(ss >> std::ws, v);
        if (k != key) fail(std::string("expected '") + key + "', found '" + k + "'");
        return v;
    };
    LinearModel m;
    try {
        m.group = field("group");
        const auto dim = std::stoull(field("dimension"));
        m.meta.options.C = std::stod(field("C"));
        m.meta.options.max_epochs = std::stoull(field("epochs"));
        m.meta.options.seed = std::stoull(field("seed"));
        m.meta.options.tolerance = std::stod(field("tolerance"));
        m.bias = std::stod(field("bias"));
        const auto nnz = std::stoull(field("nnz"));
        m.weights.assign(dim, 0.0);
        for (std::size_t i = 0; i < nnz; ++i) {
            std::size_t idx = 0;
            double w = 0.0;
            if (!(in >> idx >> w)) fail("truncated weight list");
            if (idx >= dim) fail("weight index out of range");
            m.weights[idx] = w;
        }
    } catch (const std::logic_error&) {
        fail("malformed numeric field");
    }
    return m;
}

void save_ensemble(const Ensemble& ensemble, const std::filesystem::path& directory) {
    std::filesystem::create_directories(directory);
    nlohmann::ordered_json manifest;
    manifest["format"] = "fauxcheck-ensemble v1";
    manifest["combination"] = "confidence_average";
    manifest["temperature"] = ensemble.temperature;
    manifest["members"] = nlohmann::ordered_json::object();
    for (const auto& [group, model] : ensemble.models) {
        const auto name = std::string(features::group_name(group));
        const auto file = name + ".model";
        std::ofstream out(directory / file, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write model file " + (directory / file).string());
        write_model(model, out);
        manifest["members"][name] = file;
    }
    std::ofstream out(directory / "ensemble.json", std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write ensemble manifest in " + directory.string());
    out << manifest.dump(2) << '\n';
}

Ensemble load_ensemble(const std::filesystem::path& manifest_path) {
    std::ifstream in(manifest_path, std::ios::binary);
    if (!in) throw DataError("cannot open ensemble manifest " + manifest_path.string());
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed ensemble manifest: " + std::string(e.what()));
    }
    if (manifest.value("format", std::string()) != "fauxcheck-ensemble v1") {
        throw DataError(manifest_path.string() + " is not an ensemble manifest");
    }
    Ensemble ensemble;
    ensemble.temperature = manifest.value("temperature", 1.0);
    const auto members = manifest.value("members", nlohmann::json::object());
    for (const auto& [name, file] : members.items()) {
        if (!file.is_string()) throw DataError("ensemble member '" + name + "' has no model file");
        auto group = features::parse_group(name);
        if (!group) throw DataError("unknown group '" + name + "' in ensemble manifest");
        const auto path = manifest_path.parent_path() / file.get<std::string>();
        std::ifstream min(path, std::ios::binary);
        if (!min) throw DataError("cannot open model file " + path.string());
        ensemble.models.emplace(*group, read_model(min, path.string()));
    }
    return ensemble;
}

}  // namespace fauxcheck::model
