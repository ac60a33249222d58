#pragma once

// Reverse-image-search evidence: acquisition through pluggable search and
// crawl backends, an on-disk cache, fact-check filtering and media
// reliability annotation.

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fauxcheck/corpus.hpp"
#include "fauxcheck/text.hpp"

namespace fauxcheck::evidence {

inline constexpr std::size_t kMaxPages = 50;

enum class Reliability { True, False, Mixed, Unknown };

[[nodiscard]] std::string_view to_string(Reliability r);

struct WebPage {
    std::string url;
    std::string registrable_domain;  // empty when the URL does not parse
    std::string title;
    std::string body_text;
    Reliability reliability = Reliability::Unknown;
    bool fetch_error = false;

    friend bool operator==(const WebPage&, const WebPage&) = default;
};

struct EvidenceBundle {
    std::string image_id;
    std::vector<std::string> tags;
    std::vector<WebPage> pages;
    std::string fetched_at;  // ISO-8601 UTC
    bool filtered = false;

    friend bool operator==(const EvidenceBundle&, const EvidenceBundle&) = default;
};

// Fills every page's registrable_domain from its URL.
void derive_domains(EvidenceBundle& bundle, const text::SuffixRules& rules);

class ReliabilityTable {
public:
    ReliabilityTable() = default;
    // Keys are lowercased; Unknown is not a storable class.
    explicit ReliabilityTable(std::map<std::string, Reliability> entries);

    // CSV with header `domain,class`, class in {true,false,mixed}.
    static ReliabilityTable load(const std::filesystem::path& path);
    static ReliabilityTable parse_csv(std::string_view contents, std::string_view origin = "<csv>");

    [[nodiscard]] const std::map<std::string, Reliability, std::less<>>& entries() const noexcept { return entries_; }
    [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }

private:
    std::map<std::string, Reliability, std::less<>> entries_;
};

[[nodiscard]] Reliability lookup_reliability(std::string_view domain, const ReliabilityTable& table);

// Every page gets its reliability from the table; pure relabeling.
[[nodiscard]] EvidenceBundle annotate_reliability(EvidenceBundle bundle, const ReliabilityTable& table);

class DomainBlacklist {
public:
    DomainBlacklist() = default;
    explicit DomainBlacklist(std::set<std::string> domains);
    // One domain per line, `#` starts a comment.
    static DomainBlacklist load(const std::filesystem::path& path);
    static DomainBlacklist parse(std::string_view contents);

    [[nodiscard]] bool contains(std::string_view domain) const;
    [[nodiscard]] const std::set<std::string, std::less<>>& domains() const noexcept { return domains_; }

private:
    std::set<std::string, std::less<>> domains_;
};

// Drops pages whose registrable domain is blacklisted; keeps order and sets
// `filtered`. Idempotent.
[[nodiscard]] EvidenceBundle filter_fact_check_pages(EvidenceBundle bundle, const DomainBlacklist& blacklist);

// filter_fact_check_pages followed by annotate_reliability: the form every
// feature extractor consumes.
[[nodiscard]] EvidenceBundle prepare_bundle(EvidenceBundle bundle, const DomainBlacklist& blacklist,
                                            const ReliabilityTable& table);

// ---------------------------------------------------------------------------
// Backends

struct SearchResult {
    std::vector<std::string> tags;
    std::vector<std::string> page_urls;  // search-result order
};

class SearchClient {
public:
    virtual ~SearchClient() = default;
    // Throws ServiceError on failure.
    [[nodiscard]] virtual SearchResult search(std::string_view image_ref) = 0;
};

struct PageContent {
    std::string title;
    std::string text;
};

class Crawler {
public:
    virtual ~Crawler() = default;
    // Throws on failure; fetch_evidence degrades such pages to empty content.
    [[nodiscard]] virtual PageContent fetch(std::string_view url) = 0;
};

// Canned search responses keyed by image_ref:
// {"<image_ref>": {"tags": [...], "urls": [...]}, ...}
class FixtureSearchClient final : public SearchClient {
public:
    FixtureSearchClient() = default;
    explicit FixtureSearchClient(std::map<std::string, SearchResult> responses);
    static FixtureSearchClient load(const std::filesystem::path& path);

    [[nodiscard]] SearchResult search(std::string_view image_ref) override;
    [[nodiscard]] std::size_t calls() const noexcept { return calls_.load(); }

private:
    std::map<std::string, SearchResult, std::less<>> responses_;
    std::atomic<std::size_t> calls_{0};
};

// Canned pages keyed by URL: {"<url>": {"title": "...", "text": "..."}}.
// Unknown URLs fail like an unreachable host.
class FixtureCrawler final : public Crawler {
public:
    FixtureCrawler() = default;
    explicit FixtureCrawler(std::map<std::string, PageContent> pages);
    static FixtureCrawler load(const std::filesystem::path& path);

    [[nodiscard]] PageContent fetch(std::string_view url) override;
    [[nodiscard]] std::size_t calls() const noexcept { return calls_.load(); }

private:
    std::map<std::string, PageContent, std::less<>> pages_;
    std::atomic<std::size_t> calls_{0};
};

// Web-detection style search over HTTP(S). Request body follows the
// `images:annotate` shape with a WEB_DETECTION feature capped at 50 results.
class HttpSearchClient final : public SearchClient {
public:
    HttpSearchClient(std::string endpoint, std::string api_key);
    // Reads FAUXCHECK_SEARCH_ENDPOINT and FAUXCHECK_SEARCH_KEY.
    static std::unique_ptr<HttpSearchClient> from_environment();

    [[nodiscard]] SearchResult search(std::string_view image_ref) override;

private:
    std::string endpoint_;
    std::string api_key_;
};

class HttpCrawler final : public Crawler {
public:
    explicit HttpCrawler(int timeout_seconds = 20);
    [[nodiscard]] PageContent fetch(std::string_view url) override;

private:
    int timeout_seconds_;
};

// Parses a web-detection JSON response into tags and page URLs.
[[nodiscard]] SearchResult parse_web_detection_response(std::string_view json_body);

// Title element text plus the concatenated text of paragraph elements, with
// tags stripped, common entities decoded and whitespace collapsed.
[[nodiscard]] PageContent extract_page_content(std::string_view html);

// ---------------------------------------------------------------------------
// Cache

// One JSON file per image id. Only acquisition fields are stored; filtered and
// annotated state is recomputed on every load.
class EvidenceCache {
public:
    explicit EvidenceCache(std::filesystem::path directory);

    [[nodiscard]] const std::filesystem::path& directory() const noexcept { return dir_; }
    [[nodiscard]] std::filesystem::path path_for(std::string_view image_id) const;
    [[nodiscard]] bool contains(std::string_view image_id) const;
    [[nodiscard]] std::optional<EvidenceBundle> load(std::string_view image_id, const text::SuffixRules& rules) const;
    void store(const EvidenceBundle& bundle) const;

private:
    std::mutex& lock_for(std::string_view image_id) const;

    std::filesystem::path dir_;
    mutable std::mutex locks_guard_;
    mutable std::unordered_map<std::string, std::unique_ptr<std::mutex>> locks_;
};

[[nodiscard]] std::string serialize_bundle(const EvidenceBundle& bundle);
[[nodiscard]] EvidenceBundle deserialize_bundle(std::string_view json_text, const text::SuffixRules& rules);

struct FetchOptions {
    bool offline = false;
    std::size_t max_pages = kMaxPages;
    std::size_t jobs = 4;
    // Produces `fetched_at`; defaults to the system clock in UTC.
    std::function<std::string()> clock;
};

[[nodiscard]] std::string utc_timestamp_now();

// Cache hit returns the stored bundle without touching the backends.
[[nodiscard]] EvidenceBundle fetch_evidence(const corpus::ImageClaimPair& pair, SearchClient& search,
                                            Crawler& crawler, const EvidenceCache& cache,
                                            const text::SuffixRules& rules, const FetchOptions& options = {});

// Bounded-parallel fetch over a whole corpus; results follow corpus order.
// The first failure is rethrown after all workers stop.
[[nodiscard]] std::vector<EvidenceBundle> fetch_all(const corpus::Corpus& corpus, SearchClient& search,
                                                    Crawler& crawler, const EvidenceCache& cache,
                                                    const text::SuffixRules& rules, const FetchOptions& options = {});

}  // namespace fauxcheck::evidence
