#include "fauxcheck/text.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fauxcheck/error.hpp"

namespace fauxcheck::text {

namespace {

bool is_word_byte(unsigned char c) {
    return c >= 0x80 || std::isalnum(c) != 0;
}

std::size_t code_points(std::string_view s) {
    return static_cast<std::size_t>(
        std::count_if(s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

std::string lowercase_ascii(std::string_view s) {
    std::string out(s);
    for (auto& c : out) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open file: " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_labels(std::string_view host) {
    std::vector<std::string_view> labels;
    std::size_t start = 0;
    while (start <= host.size()) {
        auto dot = host.find('.', start);
        if (dot == std::string_view::npos) dot = host.size();
        labels.push_back(host.substr(start, dot - start));
        start = dot + 1;
    }
    return labels;
}

std::string join_labels(std::span<const std::string_view> labels) {
    std::string out;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (i) out += '.';
        out += labels[i];
    }
    return out;
}

bool looks_like_ipv4(std::string_view host) {
    auto labels = split_labels(host);
    if (labels.size() != 4) return false;
    for (auto l : labels) {
        if (l.empty() || l.size() > 3) return false;
        if (!std::all_of(l.begin(), l.end(), [](char c) { return c >= '0' && c <= '9'; })) return false;
    }
    return true;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

TokenList tokenize(std::string_view text, const StopwordSet& stopwords) {
    TokenList tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && !is_word_byte(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t start = i;
        while (i < text.size() && is_word_byte(static_cast<unsigned char>(text[i]))) ++i;
        if (i == start) continue;
        auto raw = text.substr(start, i - start);
        if (code_points(raw) < 2) continue;
        std::string token = lowercase_ascii(raw);
        if (stopwords.contains(token)) continue;
        tokens.push_back(std::move(token));
    }
    return tokens;
}

StopwordSet load_stopwords(const std::filesystem::path& path) {
    std::istringstream in(read_file(path));
    StopwordSet words;
    std::string line;
    while (std::getline(in, line)) {
        auto w = trim(line);
        if (w.empty() || w.front() == '#') continue;
        words.insert(lowercase_ascii(w));
    }
    return words;
}

// ---------------------------------------------------------------------------

SparseVector SparseVector::from_entries(std::vector<SparseEntry> entries) {
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.index < b.index; });
    SparseVector v;
    for (const auto& e : entries) {
        if (!v.entries_.empty() && v.entries_.back().index == e.index) {
            v.entries_.back().weight += e.weight;
        } else {
            v.entries_.push_back(e);
        }
    }
    std::erase_if(v.entries_, [](const SparseEntry& e) { return e.weight == 0.0; });
    return v;
}

SparseVector SparseVector::scalar(double value) {
    return from_entries({{0, value}});
}

double SparseVector::value_at(std::uint32_t index) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), index,
                               [](const SparseEntry& e, std::uint32_t i) { return e.index < i; });
    return (it != entries_.end() && it->index == index) ? it->weight : 0.0;
}

double SparseVector::norm() const {
    double s = 0.0;
    for (const auto& e : entries_) s += e.weight * e.weight;
    return std::sqrt(s);
}

SparseVector SparseVector::scaled(double factor) const {
    std::vector<SparseEntry> out(entries_.begin(), entries_.end());
    for (auto& e : out) e.weight *= factor;
    return from_entries(std::move(out));
}

double dot(const SparseVector& a, const SparseVector& b) {
    auto ea = a.entries();
    auto eb = b.entries();
    double s = 0.0;
    std::size_t i = 0, j = 0;
    while (i < ea.size() && j < eb.size()) {
        if (ea[i].index == eb[j].index) {
            s += ea[i++].weight * eb[j++].weight;
        } else if (ea[i].index < eb[j].index) {
            ++i;
        } else {
            ++j;
        }
    }
    return s;
}

double cosine(const SparseVector& a, const SparseVector& b) {
    if (a.empty() || b.empty()) return 0.0;
    const double denom = a.norm() * b.norm();
    if (denom == 0.0) return 0.0;
    return std::clamp(dot(a, b) / denom, -1.0, 1.0);
}

// ---------------------------------------------------------------------------

Vocabulary Vocabulary::fit(std::span<const TokenList> documents) {
    if (documents.empty()) {
        throw DataError("cannot fit a vocabulary on zero documents");
    }
    std::map<std::string, std::uint32_t> df;
    for (const auto& doc : documents) {
        std::vector<std::string_view> uniq(doc.begin(), doc.end());
        std::sort(uniq.begin(), uniq.end());
        uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
        for (auto t : uniq) ++df[std::string(t)];
    }
    Vocabulary v;
    v.n_docs_ = static_cast<std::uint32_t>(documents.size());
    for (auto& [term, count] : df) {
        v.terms_.push_back(term);
        v.df_.push_back(count);
    }
    v.rebuild_index();
    return v;
}

Vocabulary Vocabulary::from_parts(std::vector<std::string> terms, std::vector<std::uint32_t> document_frequency,
                                  std::uint32_t n_docs) {
    if (terms.size() != document_frequency.size()) {
        throw DataError("vocabulary terms and document frequencies differ in length");
    }
    for (std::size_t i = 0; i < terms.size(); ++i) {
        if (document_frequency[i] < 1 || document_frequency[i] > n_docs) {
            throw DataError("document frequency out of range for term '" + terms[i] + "'");
        }
        if (i > 0 && !(terms[i - 1] < terms[i])) {
            throw DataError("vocabulary terms must be strictly sorted");
        }
    }
    Vocabulary v;
    v.terms_ = std::move(terms);
    v.df_ = std::move(document_frequency);
    v.n_docs_ = n_docs;
    v.rebuild_index();
    return v;
}

void Vocabulary::rebuild_index() {
    index_.clear();
    index_.reserve(terms_.size());
    for (std::uint32_t i = 0; i < terms_.size(); ++i) index_.emplace(terms_[i], i);
}

const std::uint32_t* Vocabulary::index_of(std::string_view term) const {
    auto it = index_.find(std::string(term));
    return it == index_.end() ? nullptr : &it->second;
}

std::uint32_t Vocabulary::document_frequency(std::string_view term) const {
    const auto* idx = index_of(term);
    return idx ? df_[*idx] : 0;
}

double Vocabulary::idf(std::uint32_t index) const {
    return std::log((1.0 + n_docs_) / (1.0 + df_.at(index))) + 1.0;
}

namespace {

std::vector<SparseEntry> count_terms(std::span<const std::string> tokens, const Vocabulary& vocab) {
    std::vector<SparseEntry> entries;
    for (const auto& t : tokens) {
        if (const auto* idx = vocab.index_of(t)) entries.push_back({*idx, 1.0});
    }
    return entries;
}

}  // namespace

SparseVector bow_vector(std::span<const std::string> tokens, const Vocabulary& vocab) {
    return SparseVector::from_entries(count_terms(tokens, vocab));
}

SparseVector tfidf_vector(std::span<const std::string> tokens, const Vocabulary& vocab) {
    auto counts = bow_vector(tokens, vocab);
    std::vector<SparseEntry> weighted(counts.entries().begin(), counts.entries().end());
    for (auto& e : weighted) e.weight *= vocab.idf(e.index);
    auto v = SparseVector::from_entries(std::move(weighted));
    const double n = v.norm();
    return n > 0.0 ? v.scaled(1.0 / n) : v;
}

double smoothed_average(std::span<const double> values) {
    double sum = 0.0;
    for (double x : values) sum += x;
    return sum / (static_cast<double>(values.size()) + 1.0);
}

// ---------------------------------------------------------------------------

std::vector<float> HashingEmbeddingProvider::embed(std::string_view text) const {
    std::vector<double> acc(kEmbeddingDim, 0.0);
    auto tokens = tokenize(text);
    if (tokens.empty()) {
        tokens.emplace_back(text);
    }
    for (const auto& t : tokens) {
        const auto h = fnv1a64(t);
        const auto bucket = static_cast<std::size_t>(h % kEmbeddingDim);
        acc[bucket] += ((h >> 32) & 1U) ? 1.0 : -1.0;
    }
    double norm = 0.0;
    for (double x : acc) norm += x * x;
    if (norm == 0.0) {
        // Every token cancelled out; fall back to a single deterministic axis.
        acc[fnv1a64(text, 7) % kEmbeddingDim] = 1.0;
        norm = 1.0;
    }
    norm = std::sqrt(norm);
    std::vector<float> out(kEmbeddingDim);
    for (std::size_t i = 0; i < kEmbeddingDim; ++i) out[i] = static_cast<float>(acc[i] / norm);
    return out;
}

TableEmbeddingProvider::TableEmbeddingProvider(std::unordered_map<std::string, std::vector<float>> table,
                                               std::shared_ptr<const EmbeddingProvider> fallback)
    : table_(std::move(table)), fallback_(std::move(fallback)) {
    for (auto& [key, vec] : table_) {
        if (vec.size() != kEmbeddingDim) {
            throw DataError("embedding for '" + key + "' has dimension " + std::to_string(vec.size()));
        }
        double n = 0.0;
        for (float x : vec) n += static_cast<double>(x) * x;
        if (n == 0.0) throw DataError("embedding for '" + key + "' is the zero vector");
        n = std::sqrt(n);
        for (auto& x : vec) x = static_cast<float>(x / n);
    }
}

TableEmbeddingProvider TableEmbeddingProvider::load(const std::filesystem::path& path,
                                                    std::shared_ptr<const EmbeddingProvider> fallback) {
    std::istringstream in(read_file(path));
    std::string line;
    if (!std::getline(in, line) || trim(line) != "dim=512") {
        throw DataError("embedding table " + path.string() + " must start with 'dim=512'");
    }
    std::unordered_map<std::string, std::vector<float>> table;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": missing tab separator");
        }
        std::vector<float> vec;
        vec.reserve(kEmbeddingDim);
        std::string_view rest = std::string_view(line).substr(tab + 1);
        while (!rest.empty()) {
            auto next = rest.find('\t');
            auto field = rest.substr(0, next);
            std::string tmp(field);
            char* end = nullptr;
            const float value = std::strtof(tmp.c_str(), &end);
            if (end == tmp.c_str()) {
                throw DataError(path.string() + ":" + std::to_string(line_no) + ": bad number '" + tmp + "'");
            }
            vec.push_back(value);
            if (next == std::string_view::npos) break;
            rest.remove_prefix(next + 1);
        }
        if (vec.size() != kEmbeddingDim) {
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected 512 values, got " +
                            std::to_string(vec.size()));
        }
        table.insert_or_assign(line.substr(0, tab), std::move(vec));
    }
    return TableEmbeddingProvider(std::move(table), std::move(fallback));
}

std::vector<float> TableEmbeddingProvider::embed(std::string_view text) const {
    if (auto it = table_.find(std::string(text)); it != table_.end()) return it->second;
    if (fallback_) return fallback_->embed(text);
    throw DataError("no precomputed embedding for text: '" + std::string(text.substr(0, 80)) + "'");
}

std::string TableEmbeddingProvider::name() const {
    return fallback_ ? "table+" + fallback_->name() : std::string("table");
}

double embedding_similarity(std::string_view text_a, std::string_view text_b, const EmbeddingProvider& provider) {
    const auto a = provider.embed(text_a);
    const auto b = provider.embed(text_b);
    double s = 0.0;
    for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) s += static_cast<double>(a[i]) * b[i];
    return std::clamp(s, -1.0, 1.0);
}

// ---------------------------------------------------------------------------

ParsedUrl parse_url(std::string_view url) {
    url = trim(url);
    const auto sep = url.find("://");
    if (sep == std::string_view::npos || sep == 0) {
        throw DataError("not an absolute URL: '" + std::string(url) + "'");
    }
    ParsedUrl out;
    const auto scheme = url.substr(0, sep);
    if (!std::isalpha(static_cast<unsigned char>(scheme.front())) ||
        !std::all_of(scheme.begin(), scheme.end(), [](char c) {
            return std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.';
        })) {
        throw DataError("invalid URL scheme in '" + std::string(url) + "'");
    }
    out.scheme = lowercase_ascii(scheme);

    auto rest = url.substr(sep + 3);
    const auto auth_end = rest.find_first_of("/?#");
    auto authority = rest.substr(0, auth_end);
    out.path = auth_end == std::string_view::npos ? std::string() : std::string(rest.substr(auth_end));

    if (auto at = authority.rfind('@'); at != std::string_view::npos) authority.remove_prefix(at + 1);
    std::string_view host;
    if (!authority.empty() && authority.front() == '[') {
        const auto close = authority.find(']');
        if (close == std::string_view::npos) throw DataError("unterminated IPv6 literal in '" + std::string(url) + "'");
        host = authority.substr(0, close + 1);
        out.host_is_ip = true;
    } else {
        host = authority.substr(0, authority.find(':'));
    }
    while (!host.empty() && host.back() == '.') host.remove_suffix(1);
    if (host.empty()) {
        throw DataError("URL has no host: '" + std::string(url) + "'");
    }
    if (std::any_of(host.begin(), host.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); })) {
        throw DataError("URL host contains whitespace: '" + std::string(url) + "'");
    }
    out.host = lowercase_ascii(host);
    if (!out.host_is_ip) out.host_is_ip = looks_like_ipv4(out.host);
    return out;
}

SuffixRules SuffixRules::parse(std::string_view contents) {
    SuffixRules rules;
    std::size_t start = 0;
    while (start < contents.size()) {
        auto end = contents.find('\n', start);
        if (end == std::string_view::npos) end = contents.size();
        auto line = trim(contents.substr(start, end - start));
        start = end + 1;
        if (line.empty() || line.starts_with("//")) continue;
        // PSL rules end at the first whitespace.
        line = line.substr(0, line.find_first_of(" \t"));
        if (line.front() == '!') {
            rules.exceptions_.insert(lowercase_ascii(line.substr(1)));
        } else {
            rules.rules_.insert(lowercase_ascii(line));
        }
    }
    return rules;
}

SuffixRules SuffixRules::load(const std::filesystem::path& path) {
    return parse(read_file(path));
}

std::size_t SuffixRules::suffix_label_count(std::span<const std::string_view> labels) const {
    const std::size_t n = labels.size();
    std::size_t best = 1;  // implicit "*" rule
    for (std::size_t k = 1; k <= n; ++k) {
        auto tail = labels.subspan(n - k);
        const auto candidate = join_labels(tail);
        if (exceptions_.contains(candidate)) {
            // Exception rules win outright; the suffix is the rule minus its leftmost label.
            return k - 1;
        }
        if (rules_.contains(candidate)) best = std::max(best, k);
        if (k >= 2) {
            std::vector<std::string_view> wild(tail.begin(), tail.end());
            wild.front() = "*";
            if (rules_.contains(join_labels(wild))) best = std::max(best, k);
        }
    }
    return best;
}

std::string registrable_domain_of_host(std::string_view host, const SuffixRules& rules) {
    std::string lowered = lowercase_ascii(host);
    while (!lowered.empty() && lowered.back() == '.') lowered.pop_back();
    if (lowered.empty()) throw DataError("empty host");
    if (lowered.front() == '[' || looks_like_ipv4(lowered)) return lowered;
    const auto labels = split_labels(lowered);
    const auto suffix = rules.suffix_label_count(labels);
    if (suffix >= labels.size()) return lowered;
    return join_labels(std::span(labels).subspan(labels.size() - suffix - 1));
}

std::string registrable_domain(std::string_view url, const SuffixRules& rules) {
    const auto parsed = parse_url(url);
    if (parsed.host_is_ip) return parsed.host;
    return registrable_domain_of_host(parsed.host, rules);
}

CategoryRuleSet::CategoryRuleSet(std::map<std::string, Category> rules) {
    for (auto& [token, cat] : rules) {
        if (token.empty() || cat.top.empty() || cat.sub.empty()) {
            throw DataError("category rules need a non-empty token, top and sub category");
        }
        rules_.emplace(lowercase_ascii(token), std::move(cat));
    }
}

CategoryRuleSet CategoryRuleSet::parse(std::string_view json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed category rules: ") + e.what());
    }
    if (!j.is_object()) throw DataError("category rules must be a JSON object");
    std::map<std::string, Category> rules;
    for (const auto& [token, value] : j.items()) {
        if (!value.is_array() || value.size() != 2 || !value[0].is_string() || !value[1].is_string()) {
            throw DataError("category rule for '" + token + "' must be [top, sub]");
        }
        rules.emplace(token, Category{value[0].get<std::string>(), value[1].get<std::string>()});
    }
    return CategoryRuleSet(std::move(rules));
}

CategoryRuleSet CategoryRuleSet::load(const std::filesystem::path& path) {
    return parse(read_file(path));
}

const Category* CategoryRuleSet::find(std::string_view token) const {
    auto it = rules_.find(token);
    return it == rules_.end() ? nullptr : &it->second;
}

std::uint64_t CategoryRuleSet::fingerprint() const {
    std::uint64_t h = fnv1a64("");
    for (const auto& [token, cat] : rules_) h = fnv1a64(token + '\t' + cat.top + '\t' + cat.sub + '\n', h);
    return h;
}

std::vector<Category> categorize_url(std::string_view url, const CategoryRuleSet& rules) {
    const auto parsed = parse_url(url);
    std::vector<Category> out;
    for (const auto& token : tokenize(parsed.host + " " + parsed.path)) {
        if (const auto* cat = rules.find(token)) out.push_back(*cat);
    }
    return out;
}

}  // namespace fauxcheck::text
