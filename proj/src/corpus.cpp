#include "fauxcheck/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <set>
#include <unordered_set>

#include <json.hpp>

#include "fauxcheck/error.hpp"

namespace fauxcheck::corpus {

namespace {

bool blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
}

bool leap(int y) {
    return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
}

}  // namespace

std::string_view to_string(Label label) {
    return label == Label::True ? "true" : "false";
}

std::string_view to_string(Source source) {
    switch (source) {
        case Source::Snopes: return "snopes";
        case Source::Reuters: return "reuters";
        case Source::Other: return "other";
    }
    return "other";
}

std::optional<Label> parse_label(std::string_view text) {
    if (text == "true") return Label::True;
    if (text == "false") return Label::False;
    return std::nullopt;
}

std::optional<Source> parse_source(std::string_view text) {
    if (text == "snopes") return Source::Snopes;
    if (text == "reuters") return Source::Reuters;
    if (text == "other") return Source::Other;
    return std::nullopt;
}

std::string Date::iso() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month, day);
    return buf;
}

std::optional<Date> Date::parse_iso(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
    auto digits = [&](std::size_t pos, std::size_t len) -> std::optional<int> {
        int v = 0;
        for (std::size_t i = pos; i < pos + len; ++i) {
            if (!std::isdigit(static_cast<unsigned char>(text[i]))) return std::nullopt;
            v = v * 10 + (text[i] - '0');
        }
        return v;
    };
    auto y = digits(0, 4), m = digits(5, 2), d = digits(8, 2);
    if (!y || !m || !d || *m < 1 || *m > 12 || *d < 1) return std::nullopt;
    static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    const int max_day = kDays[*m - 1] + ((*m == 2 && leap(*y)) ? 1 : 0);
    if (*d > max_day) return std::nullopt;
    return Date{*y, *m, *d};
}

Corpus::Corpus(std::vector<ImageClaimPair> pairs) : pairs_(std::move(pairs)) {
    for (const auto& p : pairs_) {
        ++counts_[static_cast<std::size_t>(p.source)][static_cast<std::size_t>(p.label)];
    }
}

std::size_t Corpus::count(Label label) const {
    std::size_t n = 0;
    for (const auto& row : counts_) n += row[static_cast<std::size_t>(label)];
    return n;
}

std::size_t Corpus::count(Source source, Label label) const {
    return counts_[static_cast<std::size_t>(source)][static_cast<std::size_t>(label)];
}

Corpus Corpus::merge(std::span<const Corpus> parts) {
    std::vector<ImageClaimPair> all;
    for (const auto& c : parts) all.insert(all.end(), c.pairs().begin(), c.pairs().end());
    return Corpus(std::move(all));
}

Corpus parse_corpus(std::istream& in, std::string_view origin) {
    std::vector<ImageClaimPair> pairs;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    auto fail = [&](const std::string& msg) {
        throw DataError(std::string(origin) + ":" + std::to_string(line_no) + ": " + msg);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (blank(line)) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception&) {
            fail("malformed record");
        }
        if (!j.is_object()) fail("record is not an object");
        auto required_string = [&](const char* key) -> std::string {
            auto it = j.find(key);
            if (it == j.end() || !it->is_string()) fail(std::string("missing or non-string field '") + key + "'");
            return it->get<std::string>();
        };
        ImageClaimPair p;
        p.id = required_string("id");
        if (p.id.empty()) fail("empty id");
        p.claim = required_string("claim");
        if (blank(p.claim)) fail("empty claim for id '" + p.id + "'");
        const auto label_text = required_string("label");
        auto label = parse_label(label_text);
        if (!label) fail("unknown label '" + label_text + "'");
        p.label = *label;
        const auto source_text = required_string("source");
        auto source = parse_source(source_text);
        if (!source) fail("unknown source '" + source_text + "'");
        p.source = *source;
        if (auto it = j.find("image_ref"); it != j.end() && !it->is_null()) {
            if (!it->is_string()) fail("image_ref must be a string");
            p.image_ref = it->get<std::string>();
        }
        if (auto it = j.find("published"); it != j.end() && !it->is_null()) {
            if (!it->is_string()) fail("published must be a string");
            auto date = Date::parse_iso(it->get<std::string>());
            if (!date) fail("published is not an ISO-8601 calendar date");
            p.published = date;
        }
        if (!seen.insert(p.id).second) fail("duplicate id '" + p.id + "'");
        pairs.push_back(std::move(p));
    }
    return Corpus(std::move(pairs));
}

Corpus load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open corpus file: " + path.string());
    return parse_corpus(in, path.string());
}

void write_corpus(const Corpus& corpus, std::ostream& out) {
    for (const auto& p : corpus.pairs()) {
        nlohmann::ordered_json j;
        j["id"] = p.id;
        j["claim"] = p.claim;
        if (!p.image_ref.empty()) j["image_ref"] = p.image_ref;
        j["label"] = to_string(p.label);
        j["source"] = to_string(p.source);
        if (p.published) j["published"] = p.published->iso();
        out << j.dump() << '\n';
    }
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write corpus file: " + path.string());
    write_corpus(corpus, out);
}

std::vector<Violation> validate_corpus(const Corpus& corpus) {
    std::vector<Violation> report;
    std::set<std::string> seen;
    Counts recount{};
    for (const auto& p : corpus.pairs()) {
        if (p.id.empty()) {
            report.push_back({p.id, "empty id"});
        } else if (!seen.insert(p.id).second) {
            report.push_back({p.id, "duplicate id"});
        }
        if (blank(p.claim)) report.push_back({p.id, "empty claim"});
        if (p.label != Label::True && p.label != Label::False) report.push_back({p.id, "invalid label"});
        if (p.source == Source::Reuters && p.label != Label::True) {
            report.push_back({p.id, "reuters record must be labeled true"});
        }
        const auto s = static_cast<std::size_t>(p.source);
        const auto l = static_cast<std::size_t>(p.label);
        if (s < kSourceCount && l < 2) ++recount[s][l];
    }
    if (recount != corpus.counts()) report.push_back({"", "tally does not match a recount of pairs"});
    return report;
}

}  // namespace fauxcheck::corpus
