#include "fauxcheck/report.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "fauxcheck/error.hpp"

namespace fauxcheck::report {

namespace {

using nlohmann::ordered_json;

std::vector<std::string> group_names(const std::vector<features::GroupId>& groups) {
    std::vector<std::string> out;
    for (auto g : groups) out.emplace_back(features::group_name(g));
    return out;
}

std::string fixed1(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", v);
    return buf;
}

double mean(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

std::string serialize_report(const RunReport& report) {
    ordered_json j;
    j["format"] = "fauxcheck-report v1";
    j["fingerprint"] = report.fingerprint;

    auto protocols = ordered_json::array();
    auto records = ordered_json::array();
    for (const auto& p : report.protocols) {
        ordered_json pj;
        pj["protocol"] = eval::protocol_name(p.kind);
        pj["seeds"] = p.seeds;
        pj["train_sizes"] = p.train_sizes;
        pj["test_sizes"] = p.test_sizes;
        pj["groups"] = group_names(p.all.groups);
        protocols.push_back(std::move(pj));

        std::vector<const eval::ConfigResult*> configs{&p.all};
        for (const auto& g : p.per_group) configs.push_back(&g);
        for (const auto* c : configs) {
            for (std::size_t r = 0; r < c->accuracy.size(); ++r) {
                ordered_json rec;
                rec["protocol"] = eval::protocol_name(p.kind);
                rec["repeat"] = r;
                rec["seed"] = r < p.seeds.size() ? p.seeds[r] : 0;
                rec["configuration"] = c->configuration;
                rec["accuracy"] = c->accuracy[r];
                rec["average_precision"] = c->average_precision[r];
                records.push_back(std::move(rec));
            }
        }
    }
    j["protocols"] = std::move(protocols);
    j["records"] = std::move(records);

    auto sweeps = ordered_json::array();
    for (const auto& s : report.sweeps) {
        for (const auto& pt : s.curve) {
            ordered_json row;
            row["protocol"] = eval::protocol_name(s.kind);
            row["n"] = pt.n;
            row["groups"] = group_names(pt.groups);
            row["accuracy"] = pt.accuracy;
            row["average_precision"] = pt.average_precision;
            sweeps.push_back(std::move(row));
        }
    }
    j["sweep"] = std::move(sweeps);

    if (report.weights) {
        auto side = [](const std::vector<model::WeightedFeature>& list) {
            auto arr = ordered_json::array();
            for (const auto& w : list) arr.push_back({{"name", w.name}, {"weight", w.weight}});
            return arr;
        };
        j["weights"]["positive"] = side(report.weights->positive);
        j["weights"]["negative"] = side(report.weights->negative);
    }
    return j.dump(2) + "\n";
}

RunReport parse_report(std::string_view json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed report: ") + e.what());
    }
    if (!j.is_object() || j.value("format", std::string()) != "fauxcheck-report v1") {
        throw DataError("not a fauxcheck report");
    }
    RunReport out;
    try {
        out.fingerprint = j.value("fingerprint", std::string());
        const auto& records = j.at("records");
        if (!records.is_array() || records.empty()) throw DataError("report contains no records");

        auto parse_groups = [](const nlohmann::json& arr) {
            std::vector<features::GroupId> groups;
            for (const auto& name : arr) {
                auto g = features::parse_group(name.get<std::string>());
                if (!g) throw DataError("unknown group '" + name.get<std::string>() + "' in report");
                groups.push_back(*g);
            }
            return groups;
        };

        for (const auto& pj : j.at("protocols")) {
            auto kind = eval::parse_protocol(pj.at("protocol").get<std::string>());
            if (!kind) throw DataError("unknown protocol in report");
            eval::EvalReport p;
            p.kind = *kind;
            p.seeds = pj.at("seeds").get<std::vector<std::uint64_t>>();
            p.train_sizes = pj.at("train_sizes").get<std::vector<std::size_t>>();
            p.test_sizes = pj.at("test_sizes").get<std::vector<std::size_t>>();
            p.all.configuration = "all";
            p.all.groups = parse_groups(pj.at("groups"));
            out.protocols.push_back(std::move(p));
        }

        // (protocol index, configuration) -> config, keeping first-seen order.
        std::map<std::pair<std::size_t, std::string>, eval::ConfigResult> configs;
        std::vector<std::pair<std::size_t, std::string>> order;
        for (const auto& rec : records) {
            auto kind = eval::parse_protocol(rec.at("protocol").get<std::string>());
            auto it = std::find_if(out.protocols.begin(), out.protocols.end(),
                                   [&](const eval::EvalReport& p) { return kind && p.kind == *kind; });
            if (it == out.protocols.end()) throw DataError("record references an undeclared protocol");
            const auto key = std::make_pair(static_cast<std::size_t>(it - out.protocols.begin()),
                                            rec.at("configuration").get<std::string>());
            auto [slot, inserted] = configs.try_emplace(key);
            if (inserted) {
                order.push_back(key);
                slot->second.configuration = key.second;
            }
            const auto repeat = rec.at("repeat").get<std::size_t>();
            if (repeat != slot->second.accuracy.size()) throw DataError("report records are out of repeat order");
            slot->second.accuracy.push_back(rec.at("accuracy").get<double>());
            slot->second.average_precision.push_back(rec.at("average_precision").get<double>());
        }
        for (const auto& key : order) {
            auto cfg = std::move(configs[key]);
            cfg.mean_accuracy = mean(cfg.accuracy);
            cfg.mean_average_precision = mean(cfg.average_precision);
            auto& p = out.protocols[key.first];
            if (cfg.configuration == "all") {
                cfg.groups = p.all.groups;
                p.all = std::move(cfg);
            } else if (auto g = features::parse_group(cfg.configuration)) {
                cfg.groups = {*g};
                p.per_group.push_back(std::move(cfg));
            }
        }

        for (const auto& row : j.value("sweep", nlohmann::json::array())) {
            auto kind = eval::parse_protocol(row.at("protocol").get<std::string>());
            if (!kind) throw DataError("unknown protocol in sweep");
            if (out.sweeps.empty() || out.sweeps.back().kind != *kind) out.sweeps.push_back({*kind, {}});
            eval::CurvePoint pt;
            pt.n = row.at("n").get<std::size_t>();
            pt.groups = parse_groups(row.at("groups"));
            pt.accuracy = row.at("accuracy").get<double>();
            pt.average_precision = row.at("average_precision").get<double>();
            out.sweeps.back().curve.push_back(std::move(pt));
        }

        if (j.contains("weights")) {
            model::WeightReport w;
            for (const auto& e : j["weights"].value("positive", nlohmann::json::array())) {
                w.positive.push_back({e.at("name").get<std::string>(), e.at("weight").get<double>()});
            }
            for (const auto& e : j["weights"].value("negative", nlohmann::json::array())) {
                w.negative.push_back({e.at("name").get<std::string>(), e.at("weight").get<double>()});
            }
            out.weights = std::move(w);
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed report: ") + e.what());
    }
    return out;
}

std::string render_table1(const RunReport& report) {
    if (report.protocols.empty()) throw DataError("report has no protocols to render");
    const auto& first = report.protocols.front();

    // Row order: All, then groups by descending accuracy on the first protocol.
    std::vector<std::string> rows{"all"};
    std::vector<const eval::ConfigResult*> ranked;
    for (const auto& g : first.per_group) ranked.push_back(&g);
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto* a, const auto* b) {
        return a->mean_accuracy > b->mean_accuracy;
    });
    for (const auto* g : ranked) rows.push_back(g->configuration);
    for (const auto& p : report.protocols) {
        for (const auto& g : p.per_group) {
            if (std::find(rows.begin(), rows.end(), g.configuration) == rows.end()) rows.push_back(g.configuration);
        }
    }

    auto label_of = [](const std::string& config) -> std::string {
        if (config == "all") return "All";
        if (auto g = features::parse_group(config)) return std::string(features::group_label(*g));
        return config;
    };
    auto lookup = [](const eval::EvalReport& p, const std::string& config) -> const eval::ConfigResult* {
        if (config == "all") return p.all.accuracy.empty() ? nullptr : &p.all;
        for (const auto& g : p.per_group) {
            if (g.configuration == config) return &g;
        }
        return nullptr;
    };

    std::vector<std::vector<std::string>> cells;
    std::vector<std::string> header{"Feature"};
    for (const auto& p : report.protocols) {
        const auto tag = std::string(eval::protocol_short_label(p.kind));
        header.push_back("Acc (" + tag + ")");
        header.push_back("AP (" + tag + ")");
    }
    cells.push_back(header);
    for (const auto& config : rows) {
        std::vector<std::string> line{label_of(config)};
        for (const auto& p : report.protocols) {
            const auto* c = lookup(p, config);
            line.push_back(c ? fixed1(c->mean_accuracy) : "-");
            line.push_back(c ? fixed1(c->mean_average_precision) : "-");
        }
        cells.push_back(std::move(line));
    }

    std::vector<std::size_t> width(header.size(), 0);
    for (const auto& line : cells) {
        for (std::size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());
    }
    std::ostringstream out;
    auto emit = [&](const std::vector<std::string>& line) {
        for (std::size_t c = 0; c < line.size(); ++c) {
            if (c == 0) {
                out << line[c] << std::string(width[c] - line[c].size(), ' ');
            } else {
                out << "  " << std::string(width[c] - line[c].size(), ' ') << line[c];
            }
        }
        out << '\n';
    };
    emit(cells.front());
    std::size_t total = 0;
    for (auto w : width) total += w + 2;
    out << std::string(total - 2, '-') << '\n';
    for (std::size_t i = 1; i < cells.size(); ++i) emit(cells[i]);
    return out.str();
}

std::string render_curve(const RunReport& report) {
    std::ostringstream out;
    out.precision(17);
    out << "protocol\tn\tgroups\taccuracy\taverage_precision\n";
    for (const auto& s : report.sweeps) {
        for (const auto& pt : s.curve) {
            out << eval::protocol_name(s.kind) << '\t' << pt.n << '\t';
            for (std::size_t i = 0; i < pt.groups.size(); ++i) {
                out << (i ? "," : "") << features::group_name(pt.groups[i]);
            }
            out << '\t' << pt.accuracy << '\t' << pt.average_precision << '\n';
        }
    }
    return out.str();
}

std::string render_weights(const model::WeightReport& weights) {
    std::ostringstream out;
    out.precision(17);
    out << "sign\trank\tname\tweight\n";
    for (std::size_t i = 0; i < weights.positive.size(); ++i) {
        out << "+\t" << i + 1 << '\t' << weights.positive[i].name << '\t' << weights.positive[i].weight << '\n';
    }
    for (std::size_t i = 0; i < weights.negative.size(); ++i) {
        out << "-\t" << i + 1 << '\t' << weights.negative[i].name << '\t' << weights.negative[i].weight << '\n';
    }
    return out.str();
}

}  // namespace fauxcheck::report
