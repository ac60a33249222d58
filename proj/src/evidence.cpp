#include "fauxcheck/evidence.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <ctime>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "fauxcheck/error.hpp"

namespace fauxcheck::evidence {

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

nlohmann::json parse_json(std::string_view text, std::string_view what) {
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed " + std::string(what) + ": " + e.what());
    }
}

}  // namespace

std::string_view to_string(Reliability r) {
    switch (r) {
        case Reliability::True: return "true";
        case Reliability::False: return "false";
        case Reliability::Mixed: return "mixed";
        case Reliability::Unknown: return "unknown";
    }
    return "unknown";
}

void derive_domains(EvidenceBundle& bundle, const text::SuffixRules& rules) {
    for (auto& page : bundle.pages) {
        try {
            page.registrable_domain = text::registrable_domain(page.url, rules);
        } catch (const DataError&) {
            page.registrable_domain.clear();
        }
    }
}

// ---------------------------------------------------------------------------

ReliabilityTable::ReliabilityTable(std::map<std::string, Reliability> entries) {
    for (auto& [domain, cls] : entries) {
        if (cls == Reliability::Unknown) throw DataError("reliability table cannot store 'unknown' for " + domain);
        if (domain.empty()) throw DataError("reliability table contains an empty domain");
        entries_.emplace(lower(domain), cls);
    }
}

ReliabilityTable ReliabilityTable::parse_csv(std::string_view contents, std::string_view origin) {
    std::istringstream in{std::string(contents)};
    std::string line;
    std::size_t line_no = 0;
    std::map<std::string, Reliability> entries;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        auto row = trim(line);
        if (row.empty()) continue;
        auto comma = row.find(',');
        if (comma == std::string_view::npos) {
            throw DataError(std::string(origin) + ":" + std::to_string(line_no) + ": expected 'domain,class'");
        }
        auto domain = lower(trim(row.substr(0, comma)));
        auto cls = lower(trim(row.substr(comma + 1)));
        if (!header_seen) {
            if (domain != "domain" || cls != "class") {
                throw DataError(std::string(origin) + ": missing 'domain,class' header");
            }
            header_seen = true;
            continue;
        }
        Reliability r;
        if (cls == "true") {
            r = Reliability::True;
        } else if (cls == "false") {
            r = Reliability::False;
        } else if (cls == "mixed") {
            r = Reliability::Mixed;
        } else {
            throw DataError(std::string(origin) + ":" + std::to_string(line_no) + ": unknown class '" + cls + "'");
        }
        entries.insert_or_assign(domain, r);
    }
    if (!header_seen) throw DataError(std::string(origin) + ": missing 'domain,class' header");
    return ReliabilityTable(std::move(entries));
}

ReliabilityTable ReliabilityTable::load(const std::filesystem::path& path) {
    return parse_csv(read_file(path), path.string());
}

Reliability lookup_reliability(std::string_view domain, const ReliabilityTable& table) {
    const auto& entries = table.entries();
    auto it = entries.find(domain);
    return it == entries.end() ? Reliability::Unknown : it->second;
}

EvidenceBundle annotate_reliability(EvidenceBundle bundle, const ReliabilityTable& table) {
    for (auto& page : bundle.pages) page.reliability = lookup_reliability(page.registrable_domain, table);
    return bundle;
}

DomainBlacklist::DomainBlacklist(std::set<std::string> domains) {
    for (const auto& d : domains) domains_.insert(lower(d));
}

DomainBlacklist DomainBlacklist::parse(std::string_view contents) {
    std::set<std::string> domains;
    std::istringstream in{std::string(contents)};
    std::string line;
    while (std::getline(in, line)) {
        auto d = trim(std::string_view(line).substr(0, line.find('#')));
        if (!d.empty()) domains.insert(std::string(d));
    }
    return DomainBlacklist(std::move(domains));
}

DomainBlacklist DomainBlacklist::load(const std::filesystem::path& path) {
    return parse(read_file(path));
}

bool DomainBlacklist::contains(std::string_view domain) const {
    return domains_.find(domain) != domains_.end();
}

EvidenceBundle filter_fact_check_pages(EvidenceBundle bundle, const DomainBlacklist& blacklist) {
    std::erase_if(bundle.pages, [&](const WebPage& p) { return blacklist.contains(p.registrable_domain); });
    bundle.filtered = true;
    return bundle;
}

EvidenceBundle prepare_bundle(EvidenceBundle bundle, const DomainBlacklist& blacklist,
                              const ReliabilityTable& table) {
    return annotate_reliability(filter_fact_check_pages(std::move(bundle), blacklist), table);
}

// ---------------------------------------------------------------------------

FixtureSearchClient::FixtureSearchClient(std::map<std::string, SearchResult> responses)
    : responses_(responses.begin(), responses.end()) {}

FixtureSearchClient FixtureSearchClient::load(const std::filesystem::path& path) {
    const auto j = parse_json(read_file(path), "search fixture " + path.string());
    std::map<std::string, SearchResult> responses;
    for (const auto& [ref, value] : j.items()) {
        SearchResult r;
        r.tags = value.value("tags", std::vector<std::string>{});
        r.page_urls = value.value("urls", std::vector<std::string>{});
        responses.emplace(ref, std::move(r));
    }
    return FixtureSearchClient(std::move(responses));
}

SearchResult FixtureSearchClient::search(std::string_view image_ref) {
    ++calls_;
    auto it = responses_.find(image_ref);
    if (it == responses_.end()) {
        throw ServiceError("search fixture has no response for '" + std::string(image_ref) + "'");
    }
    return it->second;
}

FixtureCrawler::FixtureCrawler(std::map<std::string, PageContent> pages) : pages_(pages.begin(), pages.end()) {}

FixtureCrawler FixtureCrawler::load(const std::filesystem::path& path) {
    const auto j = parse_json(read_file(path), "crawl fixture " + path.string());
    std::map<std::string, PageContent> pages;
    for (const auto& [url, value] : j.items()) {
        pages.emplace(url, PageContent{value.value("title", ""), value.value("text", "")});
    }
    return FixtureCrawler(std::move(pages));
}

PageContent FixtureCrawler::fetch(std::string_view url) {
    ++calls_;
    auto it = pages_.find(url);
    if (it == pages_.end()) throw ServiceError("crawl fixture has no page for '" + std::string(url) + "'");
    return it->second;
}

SearchResult parse_web_detection_response(std::string_view json_body) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_body);
    } catch (const nlohmann::json::exception& e) {
        throw ServiceError(std::string("malformed search response: ") + e.what());
    }
    const auto* responses = j.contains("responses") && j["responses"].is_array() && !j["responses"].empty()
                                ? &j["responses"][0]
                                : nullptr;
    if (responses == nullptr) throw ServiceError("search response has no 'responses' entry");
    if (responses->contains("error")) {
        throw ServiceError("search backend error: " + (*responses)["error"].value("message", std::string("unknown")));
    }
    SearchResult out;
    if (!responses->contains("webDetection")) return out;
    const auto& web = (*responses)["webDetection"];
    for (const auto& entity : web.value("webEntities", nlohmann::json::array())) {
        auto desc = entity.value("description", std::string());
        if (!desc.empty()) out.tags.push_back(std::move(desc));
    }
    for (const auto& page : web.value("pagesWithMatchingImages", nlohmann::json::array())) {
        auto url = page.value("url", std::string());
        if (!url.empty()) out.page_urls.push_back(std::move(url));
    }
    return out;
}

namespace {

std::string decode_entities(std::string_view s) {
    static const std::pair<std::string_view, std::string_view> kEntities[] = {
        {"&amp;", "&"}, {"&lt;", "<"}, {"&gt;", ">"}, {"&quot;", "\""}, {"&#39;", "'"}, {"&apos;", "'"}, {"&nbsp;", " "},
    };
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size();) {
        bool matched = false;
        if (s[i] == '&') {
            for (auto [ent, rep] : kEntities) {
                if (s.substr(i, ent.size()) == ent) {
                    out += rep;
                    i += ent.size();
                    matched = true;
                    break;
                }
            }
        }
        if (!matched) out += s[i++];
    }
    return out;
}

std::string collapse_whitespace(std::string_view s) {
    std::string out;
    bool space = false;
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            space = !out.empty();
        } else {
            if (space) out += ' ';
            out += c;
            space = false;
        }
    }
    return out;
}

std::string strip_tags(std::string_view s) {
    std::string out;
    bool in_tag = false;
    for (char c : s) {
        if (c == '<') {
            in_tag = true;
            out += ' ';
        } else if (c == '>') {
            in_tag = false;
        } else if (!in_tag) {
            out += c;
        }
    }
    return out;
}

// Inner text of every <name ...>...</name> element, case-insensitive.
std::vector<std::string> element_texts(std::string_view html, std::string_view lowered, std::string_view name) {
    std::vector<std::string> out;
    const std::string open = "<" + std::string(name);
    const std::string close = "</" + std::string(name);
    std::size_t pos = 0;
    while ((pos = lowered.find(open, pos)) != std::string_view::npos) {
        const auto after = pos + open.size();
        if (after < lowered.size() && lowered[after] != '>' && !std::isspace(static_cast<unsigned char>(lowered[after]))) {
            pos = after;
            continue;
        }
        const auto gt = lowered.find('>', after);
        if (gt == std::string_view::npos) break;
        const auto end = lowered.find(close, gt);
        if (end == std::string_view::npos) break;
        out.push_back(collapse_whitespace(decode_entities(strip_tags(html.substr(gt + 1, end - gt - 1)))));
        pos = end + close.size();
    }
    return out;
}

}  // namespace

PageContent extract_page_content(std::string_view html) {
    const std::string lowered = lower(html);
    PageContent out;
    if (auto titles = element_texts(html, lowered, "title"); !titles.empty()) out.title = titles.front();
    for (const auto& p : element_texts(html, lowered, "p")) {
        if (p.empty()) continue;
        if (!out.text.empty()) out.text += ' ';
        out.text += p;
    }
    return out;
}

// ---------------------------------------------------------------------------

std::string serialize_bundle(const EvidenceBundle& bundle) {
    nlohmann::ordered_json j;
    j["image_id"] = bundle.image_id;
    j["tags"] = bundle.tags;
    auto pages = nlohmann::ordered_json::array();
    for (const auto& p : bundle.pages) {
        nlohmann::ordered_json pj;
        pj["url"] = p.url;
        pj["title"] = p.title;
        pj["text"] = p.body_text;
        pj["fetch_error"] = p.fetch_error;
        pages.push_back(std::move(pj));
    }
    j["pages"] = std::move(pages);
    j["fetched_at"] = bundle.fetched_at;
    return j.dump(1) + "\n";
}

EvidenceBundle deserialize_bundle(std::string_view json_text, const text::SuffixRules& rules) {
    const auto j = parse_json(json_text, "evidence bundle");
    EvidenceBundle b;
    try {
        b.image_id = j.at("image_id").get<std::string>();
        b.tags = j.value("tags", std::vector<std::string>{});
        for (const auto& pj : j.value("pages", nlohmann::json::array())) {
            WebPage p;
            p.url = pj.at("url").get<std::string>();
            p.title = pj.value("title", std::string());
            p.body_text = pj.value("text", std::string());
            p.fetch_error = pj.value("fetch_error", false);
            b.pages.push_back(std::move(p));
        }
        b.fetched_at = j.value("fetched_at", std::string());
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed evidence bundle: ") + e.what());
    }
    if (b.pages.size() > kMaxPages) b.pages.resize(kMaxPages);
    derive_domains(b, rules);
    return b;
}

EvidenceCache::EvidenceCache(std::filesystem::path directory) : dir_(std::move(directory)) {}

std::filesystem::path EvidenceCache::path_for(std::string_view image_id) const {
    static constexpr char kHex[] = "0123456789ABCDEF";
    std::string name;
    for (unsigned char c : image_id) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.') {
            name += static_cast<char>(c);
        } else {
            name += '%';
            name += kHex[c >> 4];
            name += kHex[c & 0xF];
        }
    }
    if (name.empty() || name == "." || name == "..") name = "%" + name;
    return dir_ / (name + ".json");
}

bool EvidenceCache::contains(std::string_view image_id) const {
    return std::filesystem::exists(path_for(image_id));
}

std::mutex& EvidenceCache::lock_for(std::string_view image_id) const {
    std::lock_guard guard(locks_guard_);
    auto& slot = locks_[std::string(image_id)];
    if (!slot) slot = std::make_unique<std::mutex>();
    return *slot;
}

std::optional<EvidenceBundle> EvidenceCache::load(std::string_view image_id, const text::SuffixRules& rules) const {
    std::lock_guard guard(lock_for(image_id));
    const auto path = path_for(image_id);
    if (!std::filesystem::exists(path)) return std::nullopt;
    auto bundle = deserialize_bundle(read_file(path), rules);
    if (bundle.image_id != image_id) {
        throw DataError("cache file " + path.string() + " belongs to image '" + bundle.image_id + "'");
    }
    return bundle;
}

void EvidenceCache::store(const EvidenceBundle& bundle) const {
    std::lock_guard guard(lock_for(bundle.image_id));
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw DataError("cannot create cache directory " + dir_.string() + ": " + ec.message());
    const auto path = path_for(bundle.image_id);
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write cache file " + tmp.string());
        out << serialize_bundle(bundle);
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw DataError("cannot move cache file into place: " + ec.message());
}

std::string utc_timestamp_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

EvidenceBundle fetch_evidence(const corpus::ImageClaimPair& pair, SearchClient& search, Crawler& crawler,
                              const EvidenceCache& cache, const text::SuffixRules& rules,
                              const FetchOptions& options) {
    if (auto cached = cache.load(pair.id, rules)) return *cached;
    if (options.offline) {
        throw DataError("offline mode: no cached evidence for image '" + pair.id + "' in " +
                        cache.directory().string());
    }
    const auto& ref = pair.image_ref.empty() ? pair.id : pair.image_ref;
    SearchResult result;
    try {
        result = search.search(ref);
    } catch (const std::exception& e) {
        throw ServiceError("reverse image search failed for image '" + pair.id + "': " + e.what());
    }
    EvidenceBundle bundle;
    bundle.image_id = pair.id;
    bundle.tags = std::move(result.tags);
    const auto n = std::min(result.page_urls.size(), options.max_pages);
    for (std::size_t i = 0; i < n; ++i) {
        WebPage page;
        page.url = result.page_urls[i];
        try {
            auto content = crawler.fetch(page.url);
            page.title = std::move(content.title);
            page.body_text = std::move(content.text);
        } catch (const std::exception&) {
            page.fetch_error = true;
        }
        bundle.pages.push_back(std::move(page));
    }
    bundle.fetched_at = options.clock ? options.clock() : utc_timestamp_now();
    cache.store(bundle);
    derive_domains(bundle, rules);
    return bundle;
}

std::vector<EvidenceBundle> fetch_all(const corpus::Corpus& corpus, SearchClient& search, Crawler& crawler,
                                      const EvidenceCache& cache, const text::SuffixRules& rules,
                                      const FetchOptions& options) {
    const auto& pairs = corpus.pairs();
    std::vector<std::optional<EvidenceBundle>> slots(pairs.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::size_t first_error_index = pairs.size();
    std::mutex error_mutex;

    auto worker = [&] {
        for (;;) {
            const auto i = next.fetch_add(1);
            if (i >= pairs.size() || failed.load()) return;
            try {
                slots[i] = fetch_evidence(pairs[i], search, crawler, cache, rules, options);
            } catch (...) {
                std::lock_guard guard(error_mutex);
                if (i < first_error_index) {
                    first_error_index = i;
                    first_error = std::current_exception();
                }
                failed = true;
            }
        }
    };
    const auto jobs = std::max<std::size_t>(1, std::min(options.jobs, pairs.size()));
    std::vector<std::thread> threads;
    for (std::size_t t = 1; t < jobs; ++t) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);

    std::vector<EvidenceBundle> out;
    out.reserve(slots.size());
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

}  // namespace fauxcheck::evidence
