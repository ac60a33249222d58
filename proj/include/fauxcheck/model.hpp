#pragma once

// L2-regularized hinge-loss linear SVM trained by dual coordinate descent,
// two-class softmax calibration and per-group confidence averaging.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fauxcheck/features.hpp"
#include "fauxcheck/text.hpp"

namespace fauxcheck::model {

struct SvmOptions {
    double C = 1.0;
    std::size_t max_epochs = 1000;
    double tolerance = 1e-4;  // stop once the largest projected dual gradient drops below this
    std::uint64_t seed = 1;

    friend bool operator==(const SvmOptions&, const SvmOptions&) = default;
};

struct TrainingMeta {
    SvmOptions options;
    std::size_t epochs_run = 0;
    bool converged = false;
    // Dual objective 1/2 a'Qa - sum(a) after each epoch; non-increasing.
    std::vector<double> dual_objective;
};

// The bias is learned as the weight of an implicit constant feature of
// value 1, so it is regularized together with `weights`.
struct LinearModel {
    std::string group;  // group machine name or "concatenated"
    std::vector<double> weights;
    double bias = 0.0;
    TrainingMeta meta;
};

// Labels are +1 (True) / -1 (False). Throws DataError on length or dimension
// mismatch, fewer than two examples, or a single class.
[[nodiscard]] LinearModel train_linear_svm(std::span<const text::SparseVector> xs, std::span<const int> ys,
                                           std::size_t dimension, const SvmOptions& options = {},
                                           std::string group = "concatenated");

// Decision values are w.x + b summed with correct rounding, then snapped to a
// multiple of 1 / kDecisionGrid. The snap absorbs solver round-off (weights
// that should cancel to zero), so softmax confidences rank test examples
// exactly like decision values for |d| below about 11.8. Indices beyond the
// model dimension are ignored.
inline constexpr double kDecisionGrid = 1048576.0;  // 2^20
[[nodiscard]] double decision_value(const LinearModel& model, const text::SparseVector& x);

// 1/2 |w|^2 + 1/2 b^2 + C * sum hinge(y (w.x + b)), the quantity the solver minimizes.
[[nodiscard]] double primal_objective(const LinearModel& model, std::span<const text::SparseVector> xs,
                                      std::span<const int> ys, double C);

// Softmax over (d, -d) at the given temperature: 1 / (1 + exp(-2d / T)).
[[nodiscard]] double softmax_confidence(double decision, double temperature = 1.0);

struct Ensemble {
    std::map<features::GroupId, LinearModel> models;
    double temperature = 1.0;
};

struct GroupMatrix {
    std::size_t dimension = 1;
    std::vector<text::SparseVector> rows;
};

// One independent model per group, all with the same options. A failing group
// aborts with its name in the message.
[[nodiscard]] Ensemble train_ensemble(const std::map<features::GroupId, GroupMatrix>& features,
                                      std::span<const int> labels, const SvmOptions& options = {},
                                      double temperature = 1.0);

struct Prediction {
    bool label = false;  // true iff confidence >= 0.5
    double confidence = 0.5;
};

[[nodiscard]] Prediction predict(const Ensemble& ensemble,
                                 const std::map<features::GroupId, text::SparseVector>& example_features);

struct WeightedFeature {
    std::string name;
    double weight = 0.0;
};

struct WeightReport {
    std::vector<WeightedFeature> positive;  // descending weight, all > 0
    std::vector<WeightedFeature> negative;  // ascending weight, all < 0
};

[[nodiscard]] WeightReport weight_report(const LinearModel& model, std::span<const std::string> feature_names,
                                         std::size_t k = 20);

// ---------------------------------------------------------------------------
// Persistence

// Text layout:
//   fauxcheck-model v1
//   group <name>
//   dimension <n>
//   C <c> / epochs <max> / seed <s> / tolerance <tol>
//   bias <b>
//   nnz <k>
//   <index> <weight>   (k lines, nonzero weights only)
void write_model(const LinearModel& model, std::ostream& out);
[[nodiscard]] LinearModel read_model(std::istream& in, std::string_view origin = "<stream>");

// Manifest JSON plus one `<group>.model` file per member, all in `directory`.
void save_ensemble(const Ensemble& ensemble, const std::filesystem::path& directory);
[[nodiscard]] Ensemble load_ensemble(const std::filesystem::path& manifest_path);

}  // namespace fauxcheck::model
