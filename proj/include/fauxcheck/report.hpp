#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fauxcheck/eval.hpp"
#include "fauxcheck/model.hpp"

namespace fauxcheck::report {

struct Sweep {
    eval::ProtocolKind kind = eval::ProtocolKind::SnopesOnly;
    std::vector<eval::CurvePoint> curve;
};

struct RunReport {
    std::string fingerprint;
    std::vector<eval::EvalReport> protocols;
    std::vector<Sweep> sweeps;
    std::optional<model::WeightReport> weights;
};

// Machine-readable report: one record per (protocol, repeat, configuration)
// plus protocol metadata, sweep curves and weight lists. Output depends only
// on the report contents.
[[nodiscard]] std::string serialize_report(const RunReport& report);

// Throws DataError on malformed input or a report without any records.
[[nodiscard]] RunReport parse_report(std::string_view json_text);

// Aligned text table: an "All" row plus one row per feature group, two
// columns (Acc, AP) per protocol.
[[nodiscard]] std::string render_table1(const RunReport& report);

// Tab-separated rows: protocol, n, comma-joined groups, accuracy, AP.
[[nodiscard]] std::string render_curve(const RunReport& report);

// Tab-separated rows: sign, rank, name, weight.
[[nodiscard]] std::string render_weights(const model::WeightReport& weights);

}  // namespace fauxcheck::report
