#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <map>
#include <mutex>
#include <set>

#include "fauxcheck/corpus.hpp"
#include "fauxcheck/ela.hpp"
#include "fauxcheck/error.hpp"
#include "fauxcheck/eval.hpp"
#include "fauxcheck/model.hpp"
#include "fauxcheck/pipeline.hpp"
#include "fauxcheck/text.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
using namespace fauxcheck;

namespace {

py::exception<Error>* base_error = nullptr;
py::exception<ConfigError>* config_error = nullptr;
py::exception<DataError>* data_error = nullptr;
py::exception<ServiceError>* service_error = nullptr;

using TermWeights = std::map<std::string, double>;

text::StopwordSet stopword_set(const std::vector<std::string>& words) { return {words.begin(), words.end()}; }

TermWeights tfidf(const std::vector<std::string>& tokens, const std::vector<std::vector<std::string>>& documents) {
    const auto vocab = text::Vocabulary::fit(documents);
    TermWeights out;
    const auto v = text::tfidf_vector(tokens, vocab);
    for (const auto& e : v.entries()) out[vocab.term(e.index)] = e.weight;
    return out;
}

double cosine(const TermWeights& a, const TermWeights& b) {
    std::set<std::string> terms;
    for (const auto& [t, _] : a) terms.insert(t);
    for (const auto& [t, _] : b) terms.insert(t);
    std::map<std::string, std::uint32_t> index;
    for (const auto& t : terms) index.emplace(t, static_cast<std::uint32_t>(index.size()));
    auto vec = [&](const TermWeights& w) {
        std::vector<text::SparseEntry> entries;
        for (const auto& [t, v] : w) entries.push_back({index.at(t), v});
        return text::SparseVector::from_entries(std::move(entries));
    };
    return text::cosine(vec(a), vec(b));
}

const text::SuffixRules& suffix_rules(const std::optional<fs::path>& path) {
    static std::mutex mu;
    static std::map<std::string, text::SuffixRules> cache;
    const std::string key = path ? path->string() : "";
    std::lock_guard lock(mu);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, path ? text::SuffixRules::load(*path) : text::SuffixRules{}).first;
    return it->second;
}

std::vector<text::SparseVector> dense_rows(const std::vector<std::vector<double>>& rows, std::size_t* dimension) {
    *dimension = 0;
    std::vector<text::SparseVector> out;
    out.reserve(rows.size());
    for (const auto& row : rows) {
        *dimension = std::max(*dimension, row.size());
        std::vector<text::SparseEntry> entries;
        for (std::size_t i = 0; i < row.size(); ++i)
            if (row[i] != 0.0) entries.push_back({static_cast<std::uint32_t>(i), row[i]});
        out.push_back(text::SparseVector::from_entries(std::move(entries)));
    }
    return out;
}

model::LinearModel train(const std::vector<std::vector<double>>& rows, const std::vector<int>& labels, double C,
                         std::size_t max_epochs, double tolerance, std::uint64_t seed) {
    std::size_t dimension = 0;
    const auto xs = dense_rows(rows, &dimension);
    model::SvmOptions options;
    options.C = C;
    options.max_epochs = max_epochs;
    options.tolerance = tolerance;
    options.seed = seed;
    py::gil_scoped_release release;
    return model::train_linear_svm(xs, labels, dimension, options);
}

py::dict pair_dict(const corpus::ImageClaimPair& p) {
    py::dict d;
    d["id"] = p.id;
    d["claim"] = p.claim;
    d["image_ref"] = p.image_ref;
    d["label"] = std::string(corpus::to_string(p.label));
    d["source"] = std::string(corpus::to_string(p.source));
    d["published"] = p.published ? py::object(py::str(p.published->iso())) : py::object(py::none());
    return d;
}

py::dict run(const fs::path& config_path, std::optional<fs::path> output_dir, std::optional<std::size_t> jobs,
             std::optional<bool> offline) {
    auto config = pipeline::load_run_config(config_path);
    if (output_dir) config.output_dir = fs::absolute(*output_dir);
    if (jobs) config.jobs = *jobs;
    if (offline) config.offline = *offline;
    pipeline::check_config(config);
    pipeline::RunArtifacts a;
    {
        py::gil_scoped_release release;
        a = pipeline::cmd_run(config);
    }
    py::dict d;
    d["report_json"] = a.report_json;
    d["table"] = a.table;
    d["curve"] = a.curve;
    d["weights"] = a.weights;
    d["fingerprint"] = a.fingerprint;
    d["models"] = a.models;
    return d;
}

}  // namespace

PYBIND11_MODULE(_fauxcheck, m) {
    m.doc() = "Image-claim verification: features, linear SVM ensemble and evaluation protocols.";

    // Leaked on purpose: they must outlive interpreter teardown.
    base_error = new py::exception<Error>(m, "FauxcheckError", PyExc_RuntimeError);
    config_error = new py::exception<ConfigError>(m, "ConfigError", base_error->ptr());
    data_error = new py::exception<DataError>(m, "DataError", base_error->ptr());
    service_error = new py::exception<ServiceError>(m, "ServiceError", base_error->ptr());
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const ConfigError& e) {
            py::set_error(*config_error, e.what());
        } catch (const DataError& e) {
            py::set_error(*data_error, e.what());
        } catch (const ServiceError& e) {
            py::set_error(*service_error, e.what());
        } catch (const Error& e) {
            py::set_error(*base_error, e.what());
        }
    });

    m.def("tokenize",
          [](const std::string& s, const std::vector<std::string>& stopwords) {
              return text::tokenize(s, stopword_set(stopwords));
          },
          py::arg("text"), py::arg("stopwords") = std::vector<std::string>{});
    m.def("tfidf", &tfidf, py::arg("tokens"), py::arg("documents"),
          "TF-IDF weights of `tokens` against a vocabulary fitted on `documents`.");
    m.def("cosine", &cosine, py::arg("a"), py::arg("b"));
    m.def("smoothed_average", [](const std::vector<double>& v) { return text::smoothed_average(v); },
          py::arg("values"));
    m.def("registrable_domain",
          [](const std::string& url, std::optional<fs::path> rules) {
              return text::registrable_domain(url, suffix_rules(rules));
          },
          py::arg("url"), py::arg("suffix_rules") = py::none());

    m.def("accuracy", &eval::accuracy, py::arg("predictions"), py::arg("truth"));
    m.def("average_precision",
          [](const std::vector<double>& scores, const std::vector<bool>& truth) {
              return eval::average_precision(scores, truth);
          },
          py::arg("scores"), py::arg("truth"));
    m.def("softmax_confidence", &model::softmax_confidence, py::arg("decision"), py::arg("temperature") = 1.0);

    py::class_<model::LinearModel>(m, "LinearModel")
        .def_readonly("weights", &model::LinearModel::weights)
        .def_readonly("bias", &model::LinearModel::bias)
        .def_property_readonly("epochs", [](const model::LinearModel& lm) { return lm.meta.epochs_run; })
        .def_property_readonly("converged", [](const model::LinearModel& lm) { return lm.meta.converged; })
        .def("decision_value",
             [](const model::LinearModel& lm, const std::vector<double>& x) {
                 std::size_t dim = 0;
                 return model::decision_value(lm, dense_rows({x}, &dim).front());
             },
             py::arg("x"))
        .def("confidence",
             [](const model::LinearModel& lm, const std::vector<double>& x, double temperature) {
                 std::size_t dim = 0;
                 return model::softmax_confidence(model::decision_value(lm, dense_rows({x}, &dim).front()),
                                                  temperature);
             },
             py::arg("x"), py::arg("temperature") = 1.0);
    m.def("train_linear_svm", &train, py::arg("rows"), py::arg("labels"), py::arg("C") = 1.0,
          py::arg("max_epochs") = 1000, py::arg("tolerance") = 1e-4, py::arg("seed") = 1,
          "Trains on dense rows with labels in {+1, -1}.");

    m.def("load_corpus",
          [](const fs::path& path) {
              py::list out;
              const auto c = corpus::load_corpus(path);
              for (const auto& p : c.pairs()) out.append(pair_dict(p));
              return out;
          },
          py::arg("path"));
    m.def("validate_corpus",
          [](const fs::path& path) {
              std::vector<std::pair<std::string, std::string>> out;
              for (const auto& v : corpus::validate_corpus(corpus::load_corpus(path))) out.emplace_back(v.id, v.message);
              return out;
          },
          py::arg("path"), "(id, message) for every violation; empty when the corpus is valid.");

    m.def("compute_ela",
          [](const py::bytes& jpeg, int quality) {
              const std::string data = jpeg;
              const std::span bytes(reinterpret_cast<const std::uint8_t*>(data.data()), data.size());
              const auto r = evidence::compute_ela(bytes, quality);
              py::dict d;
              d["width"] = r.width;
              d["height"] = r.height;
              d["mean"] = r.mean;
              d["max"] = r.max;
              d["difference"] = py::bytes(reinterpret_cast<const char*>(r.difference.data()), r.difference.size());
              return d;
          },
          py::arg("jpeg"), py::arg("quality") = evidence::kDefaultElaQuality);

    m.def("run", &run, py::arg("config"), py::arg("output_dir") = py::none(), py::arg("jobs") = py::none(),
          py::arg("offline") = py::none(), "Runs the full pipeline and returns the artifact paths.");
    m.def("render_report", &pipeline::cmd_report, py::arg("report_json"));
}
