#pragma once

// Deterministic text machinery shared by every feature group: tokenization,
// vocabularies, bag-of-words / TF-IDF vectors, similarities, URL handling.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace fauxcheck::text {

using StopwordSet = std::unordered_set<std::string>;
using TokenList = std::vector<std::string>;

// Lowercases ASCII, splits on every run of non-alphanumeric ASCII bytes, drops
// tokens shorter than two code points and stopwords. Bytes >= 0x80 are treated
// as word characters so UTF-8 words stay intact.
[[nodiscard]] TokenList tokenize(std::string_view text, const StopwordSet& stopwords = {});

// One word per line; blank lines and `#` comments ignored.
[[nodiscard]] StopwordSet load_stopwords(const std::filesystem::path& path);

struct SparseEntry {
    std::uint32_t index = 0;
    double weight = 0.0;

    friend bool operator==(const SparseEntry&, const SparseEntry&) = default;
};

// Sorted, unique indices; zero weights are never stored.
class SparseVector {
public:
    SparseVector() = default;

    // Accepts entries in any order; duplicates are summed and zeros dropped.
    static SparseVector from_entries(std::vector<SparseEntry> entries);
    static SparseVector scalar(double value);

    [[nodiscard]] std::span<const SparseEntry> entries() const noexcept { return entries_; }
    [[nodiscard]] bool empty() const noexcept { return entries_.empty(); }
    [[nodiscard]] std::size_t nnz() const noexcept { return entries_.size(); }
    [[nodiscard]] double value_at(std::uint32_t index) const;
    [[nodiscard]] double norm() const;
    [[nodiscard]] SparseVector scaled(double factor) const;

    friend bool operator==(const SparseVector&, const SparseVector&) = default;

private:
    std::vector<SparseEntry> entries_;
};

[[nodiscard]] double dot(const SparseVector& a, const SparseVector& b);

// Returns 0 when either vector is empty.
[[nodiscard]] double cosine(const SparseVector& a, const SparseVector& b);

class Vocabulary {
public:
    Vocabulary() = default;

    // Terms are indexed in lexicographic order, so the fit does not depend on
    // document order.
    static Vocabulary fit(std::span<const TokenList> documents);
    static Vocabulary from_parts(std::vector<std::string> terms, std::vector<std::uint32_t> document_frequency,
                                 std::uint32_t n_docs);

    [[nodiscard]] std::size_t size() const noexcept { return terms_.size(); }
    [[nodiscard]] std::uint32_t n_docs() const noexcept { return n_docs_; }
    [[nodiscard]] const std::vector<std::string>& terms() const noexcept { return terms_; }
    [[nodiscard]] const std::vector<std::uint32_t>& document_frequencies() const noexcept { return df_; }
    [[nodiscard]] const std::string& term(std::uint32_t index) const { return terms_.at(index); }
    [[nodiscard]] const std::uint32_t* index_of(std::string_view term) const;
    [[nodiscard]] std::uint32_t document_frequency(std::string_view term) const;
    // ln((1 + n_docs) / (1 + df)) + 1
    [[nodiscard]] double idf(std::uint32_t index) const;

    friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
        return a.terms_ == b.terms_ && a.df_ == b.df_ && a.n_docs_ == b.n_docs_;
    }

private:
    void rebuild_index();

    std::vector<std::string> terms_;
    std::vector<std::uint32_t> df_;
    std::uint32_t n_docs_ = 0;
    std::unordered_map<std::string, std::uint32_t> index_;
};

// Raw counts weighted by smoothed IDF, L2-normalized. Out-of-vocabulary
// tokens are ignored.
[[nodiscard]] SparseVector tfidf_vector(std::span<const std::string> tokens, const Vocabulary& vocab);

// Raw in-vocabulary term counts.
[[nodiscard]] SparseVector bow_vector(std::span<const std::string> tokens, const Vocabulary& vocab);

// sum / (n + 1); the empty list maps to 0.
[[nodiscard]] double smoothed_average(std::span<const double> values);

// ---------------------------------------------------------------------------
// Embeddings

inline constexpr std::size_t kEmbeddingDim = 512;

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    // Unit-norm vector of dimension kEmbeddingDim. Throws DataError when the
    // text cannot be resolved.
    [[nodiscard]] virtual std::vector<float> embed(std::string_view text) const = 0;
    [[nodiscard]] virtual std::string name() const = 0;
};

// Feature hashing of tokens into signed buckets. Deterministic and model-free;
// intended for tests and fixtures, not as a stand-in for a sentence encoder.
class HashingEmbeddingProvider final : public EmbeddingProvider {
public:
    [[nodiscard]] std::vector<float> embed(std::string_view text) const override;
    [[nodiscard]] std::string name() const override { return "hashing-test-only"; }
};

// Precomputed vectors keyed by exact text. File layout: a `dim=512` header,
// then `text<TAB>v1<TAB>...<TAB>v512` per line. Vectors are renormalized on load.
class TableEmbeddingProvider final : public EmbeddingProvider {
public:
    explicit TableEmbeddingProvider(std::unordered_map<std::string, std::vector<float>> table,
                                    std::shared_ptr<const EmbeddingProvider> fallback = nullptr);
    static TableEmbeddingProvider load(const std::filesystem::path& path,
                                       std::shared_ptr<const EmbeddingProvider> fallback = nullptr);

    [[nodiscard]] std::vector<float> embed(std::string_view text) const override;
    [[nodiscard]] std::string name() const override;
    [[nodiscard]] std::size_t size() const noexcept { return table_.size(); }

private:
    std::unordered_map<std::string, std::vector<float>> table_;
    std::shared_ptr<const EmbeddingProvider> fallback_;
};

[[nodiscard]] double embedding_similarity(std::string_view text_a, std::string_view text_b,
                                          const EmbeddingProvider& provider);

// ---------------------------------------------------------------------------
// URLs

struct ParsedUrl {
    std::string scheme;
    std::string host;  // lowercase, no port, no trailing dot; IPv6 keeps brackets
    std::string path;  // everything after the authority, may be empty
    bool host_is_ip = false;
};

// Throws DataError unless `url` is `scheme://authority...` with a non-empty host.
[[nodiscard]] ParsedUrl parse_url(std::string_view url);

// Subset of the public-suffix-list format: one rule per line, `//` comments,
// `*.` wildcards and `!` exceptions.
class SuffixRules {
public:
    SuffixRules() = default;
    static SuffixRules parse(std::string_view contents);
    static SuffixRules load(const std::filesystem::path& path);

    // Number of labels in the public suffix of `host` (at least 1, the
    // implicit `*` rule).
    [[nodiscard]] std::size_t suffix_label_count(std::span<const std::string_view> labels) const;
    [[nodiscard]] std::size_t rule_count() const noexcept { return rules_.size() + exceptions_.size(); }

private:
    std::unordered_set<std::string> rules_;
    std::unordered_set<std::string> exceptions_;
};

// Public suffix plus one label, lowercase. IP-literal hosts come back
// verbatim, and a host that is itself a public suffix is returned unchanged.
[[nodiscard]] std::string registrable_domain(std::string_view url, const SuffixRules& rules);
[[nodiscard]] std::string registrable_domain_of_host(std::string_view host, const SuffixRules& rules);

struct Category {
    std::string top;
    std::string sub;

    friend bool operator==(const Category&, const Category&) = default;
    friend auto operator<=>(const Category&, const Category&) = default;
};

class CategoryRuleSet {
public:
    CategoryRuleSet() = default;
    explicit CategoryRuleSet(std::map<std::string, Category> rules);
    // JSON object: {"token": ["top", "sub"], ...}
    static CategoryRuleSet load(const std::filesystem::path& path);
    static CategoryRuleSet parse(std::string_view json_text);

    [[nodiscard]] const Category* find(std::string_view token) const;
    [[nodiscard]] std::size_t size() const noexcept { return rules_.size(); }
    [[nodiscard]] std::uint64_t fingerprint() const;

private:
    std::map<std::string, Category, std::less<>> rules_;
};

// One tuple per matching host/path token, duplicates kept.
[[nodiscard]] std::vector<Category> categorize_url(std::string_view url, const CategoryRuleSet& rules);

// FNV-1a 64; used for config fingerprints and hashing embeddings.
[[nodiscard]] std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 1469598103934665603ULL);

}  // namespace fauxcheck::text
