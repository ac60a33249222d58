#include "synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "fauxcheck/ela.hpp"
#include "fauxcheck/error.hpp"

namespace fauxcheck::testing {

using corpus::Label;
using corpus::Source;

namespace {

const std::vector<std::string> kNeutral{
    "photo", "image", "shows", "crowd", "street", "city", "people", "river", "bridge", "night",
    "children", "police", "water", "building", "market", "village", "road", "train", "airport", "beach"};
const std::vector<std::string> kFalseLean{
    "shark", "hoax", "giant", "miracle", "alien", "photoshopped", "secret", "banned", "ghost", "viral"};
const std::vector<std::string> kTrueLean{
    "minister", "official", "ceremony", "hurricane", "election", "parliament", "summit", "flood", "protest",
    "rescue"};
const std::vector<std::string> kSections{"news", "world", "politics", "sport", "entertainment",
                                         "science", "health", "photos", "blog", "travel", "opinion"};

const std::string& pick(Rng& rng, const std::vector<std::string>& items) {
    return items[static_cast<std::size_t>(rng.below(items.size()))];
}

std::string phrase(Rng& rng, Label label, std::size_t n_words, double lean) {
    std::string out;
    for (std::size_t i = 0; i < n_words; ++i) {
        const auto& pool = rng.uniform() < lean ? (label == Label::True ? kTrueLean : kFalseLean) : kNeutral;
        if (!out.empty()) out += ' ';
        out += pick(rng, pool);
    }
    return out;
}

void write_file(const fs::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << contents;
}

evidence::WebPage page_for(Rng& rng, const std::string& domain, Label label) {
    evidence::WebPage page;
    page.url = random_url(rng, domain);
    page.title = phrase(rng, label, 3 + rng.below(5), 0.4);
    page.body_text = phrase(rng, label, 12 + rng.below(20), 0.3);
    return page;
}

}  // namespace

fs::path data_dir() { return FAUXCHECK_DATA_DIR; }

const text::SuffixRules& suffix_rules() {
    static const auto rules = text::SuffixRules::load(data_dir() / "public_suffix.dat");
    return rules;
}

const evidence::ReliabilityTable& reliability_table() {
    static const auto table = evidence::ReliabilityTable::load(data_dir() / "reliability_sample.csv");
    return table;
}

const evidence::DomainBlacklist& blacklist() {
    static const auto list = evidence::DomainBlacklist::load(data_dir() / "factcheck_blacklist.txt");
    return list;
}

const text::CategoryRuleSet& category_rules() {
    static const auto rules = text::CategoryRuleSet::load(data_dir() / "url_categories.json");
    return rules;
}

const text::StopwordSet& stopwords() {
    static const auto words = text::load_stopwords(data_dir() / "stopwords.txt");
    return words;
}

const DomainPools& domain_pools() {
    static const DomainPools pools{
        {"reuters.com", "apnews.com", "bbc.co.uk", "npr.org", "theguardian.com"},
        {"dailymail.co.uk", "infowars.com", "naturalnews.com", "worldnewsdailyreport.com"},
        {"nytimes.com", "foxnews.com"},
        {"localgazette.com", "picturedump.net", "travelnotes.blogspot.com", "citynews.com.au", "imagehost.io",
         "weekendreader.co.nz", "harbourtimes.co.uk"},
        {"snopes.com", "politifact.com", "factcheck.org"},
    };
    return pools;
}

corpus::Corpus make_corpus(const CorpusShape& shape, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<corpus::ImageClaimPair> pairs;
    auto add = [&](Label label, Source source) {
        corpus::ImageClaimPair p;
        char id[64];
        std::snprintf(id, sizeof id, "%s-%04zu", shape.id_prefix.c_str(), pairs.size());
        p.id = id;
        p.label = label;
        p.source = source;
        p.claim = phrase(rng, label, 6 + rng.below(8), 0.35);
        p.image_ref = "https://images.example.org/" + p.id + ".jpg";
        p.published = corpus::Date{2015 + static_cast<int>(rng.below(5)), 1 + static_cast<int>(rng.below(12)),
                                   1 + static_cast<int>(rng.below(28))};
        pairs.push_back(std::move(p));
    };
    for (std::size_t i = 0; i < shape.snopes_true; ++i) add(Label::True, Source::Snopes);
    for (std::size_t i = 0; i < shape.snopes_false; ++i) add(Label::False, Source::Snopes);
    for (std::size_t i = 0; i < shape.reuters_true; ++i) add(Label::True, Source::Reuters);
    for (std::size_t i = 0; i < shape.other; ++i) add(i % 2 == 0 ? Label::True : Label::False, Source::Other);
    rng.shuffle(pairs);
    return corpus::Corpus(std::move(pairs));
}

std::string random_url(Rng& rng, const std::string& domain) {
    const bool www = rng.below(2) == 0 && std::count(domain.begin(), domain.end(), '.') < 2;
    std::string url = "https://" + std::string(www ? "www." : "") + domain + "/" + pick(rng, kSections) + "/";
    url += pick(rng, kNeutral) + "-" + std::to_string(rng.below(100000));
    return url;
}

evidence::EvidenceBundle random_bundle(const corpus::ImageClaimPair& pair, Rng& rng, std::size_t max_pages) {
    const auto& pools = domain_pools();
    evidence::EvidenceBundle b;
    b.image_id = pair.id;
    b.fetched_at = kFixedTimestamp;
    const auto n_tags = rng.below(6);
    for (std::size_t i = 0; i < n_tags; ++i) b.tags.push_back(phrase(rng, pair.label, 1 + rng.below(2), 0.5));

    const bool is_true = pair.label == Label::True;
    const double p_true = is_true ? 0.45 : 0.15;
    const double p_false = is_true ? 0.10 : 0.35;
    const double p_mixed = 0.15;
    const auto n_pages = static_cast<std::size_t>(rng.below(max_pages + 1));
    for (std::size_t i = 0; i < n_pages; ++i) {
        const double u = rng.uniform();
        const std::vector<std::string>* pool = &pools.unknown;
        if (u < 0.08) {
            pool = &pools.fact_check;
        } else if (u < 0.08 + p_true) {
            pool = &pools.truthful;
        } else if (u < 0.08 + p_true + p_false) {
            pool = &pools.unreliable;
        } else if (u < 0.08 + p_true + p_false + p_mixed) {
            pool = &pools.mixed;
        }
        auto page = page_for(rng, pick(rng, *pool), pair.label);
        if (rng.uniform() < 0.05) {
            page.title.clear();
            page.body_text.clear();
            page.fetch_error = true;
        }
        b.pages.push_back(std::move(page));
    }
    evidence::derive_domains(b, suffix_rules());
    return b;
}

evidence::EvidenceBundle share_bundle(const corpus::ImageClaimPair& pair, Rng& rng, double lo, double hi,
                                      std::size_t n_pages) {
    const auto& pools = domain_pools();
    evidence::EvidenceBundle b;
    b.image_id = pair.id;
    b.fetched_at = kFixedTimestamp;
    const auto k = static_cast<std::size_t>(std::lround(rng.uniform(lo, hi) * static_cast<double>(n_pages)));
    for (std::size_t i = 0; i < n_pages; ++i) {
        const auto& domain = i < k ? pick(rng, pools.truthful) : pick(rng, pools.unknown);
        b.pages.push_back(page_for(rng, domain, pair.label));
    }
    rng.shuffle(b.pages);
    evidence::derive_domains(b, suffix_rules());
    return b;
}

evidence::EvidenceBundle prepare(evidence::EvidenceBundle bundle) {
    return evidence::prepare_bundle(std::move(bundle), blacklist(), reliability_table());
}

features::FeatureContext feature_context() {
    features::FeatureContext ctx;
    ctx.stopwords = stopwords();
    ctx.category_rules = category_rules();
    ctx.embeddings = std::make_shared<text::HashingEmbeddingProvider>();
    return ctx;
}

std::unique_ptr<ExamplePool> make_pool(const corpus::Corpus& corpus, std::uint64_t seed, const BundleMaker& maker) {
    auto pool = std::make_unique<ExamplePool>();
    pool->pairs = corpus.pairs();
    Rng rng(seed);
    for (const auto& p : pool->pairs) {
        pool->bundles.push_back(prepare(maker ? maker(p, rng) : random_bundle(p, rng)));
    }
    for (std::size_t i = 0; i < pool->pairs.size(); ++i) {
        pool->examples.push_back({&pool->pairs[i], &pool->bundles[i]});
    }
    return pool;
}

FixtureTree write_fixture_tree(const fs::path& root, const FixtureOptions& options) {
    FixtureTree t;
    t.root = root;
    t.config = root / "config.json";
    t.corpus = root / "corpus.jsonl";
    t.new_corpus = root / "new_corpus.jsonl";
    t.cache = root / "cache";
    t.output = root / "out";
    fs::create_directories(t.cache);

    const auto prior = make_corpus(options.prior, options.seed);
    const auto fresh = make_corpus(options.fresh, options.seed + 1);
    corpus::write_corpus(prior, t.corpus);
    corpus::write_corpus(fresh, t.new_corpus);

    const evidence::EvidenceCache cache(t.cache);
    Rng rng(options.seed * 7919 + 17);
    for (const auto* c : {&prior, &fresh}) {
        for (const auto& p : c->pairs()) cache.store(random_bundle(p, rng, 30));
    }

    std::string res;
    if (options.resource_ref) {
        res = *options.resource_ref;
    } else {
        fs::create_directories(root / "resources");
        for (const char* name : {"stopwords.txt", "public_suffix.dat", "url_categories.json",
                                 "factcheck_blacklist.txt", "reliability_sample.csv"}) {
            fs::copy_file(data_dir() / name, root / "resources" / name, fs::copy_options::overwrite_existing);
        }
        res = "resources";
    }

    nlohmann::ordered_json cfg;
    cfg["corpora"] = {"corpus.jsonl"};
    cfg["new_corpus"] = "new_corpus.jsonl";
    cfg["cache_dir"] = "cache";
    cfg["reliability_table"] = res + "/reliability_sample.csv";
    cfg["blacklist"] = res + "/factcheck_blacklist.txt";
    cfg["stopwords"] = res + "/stopwords.txt";
    cfg["suffix_rules"] = res + "/public_suffix.dat";
    cfg["category_rules"] = res + "/url_categories.json";
    cfg["embedding_fallback"] = "hashing";
    cfg["output_dir"] = "out";
    cfg["protocols"] = options.protocols;
    cfg["seeds"] = options.seeds;
    cfg["svm"] = {{"C", 1.0}, {"max_epochs", 1000}, {"tolerance", 1e-4}, {"seed", 1}};
    cfg["temperature"] = 1.0;
    cfg["sweep"] = true;
    cfg["weights_k"] = 20;
    cfg["offline"] = true;
    cfg["jobs"] = 1;
    write_file(t.config, cfg.dump(2) + "\n");
    return t;
}

ElaFixture make_ela_fixture(std::uint64_t seed, int quality) {
    constexpr int kSize = 256;
    Rng rng(seed);
    evidence::RgbImage bg;
    bg.width = kSize;
    bg.height = kSize;
    bg.pixels.resize(static_cast<std::size_t>(kSize) * kSize * 3);
    const double fx = rng.uniform(0.01, 0.03), fy = rng.uniform(0.01, 0.03);
    for (int y = 0; y < kSize; ++y) {
        for (int x = 0; x < kSize; ++x) {
            const auto i = bg.index(x, y);
            const double s = std::sin(fx * x) * std::cos(fy * y);
            bg.pixels[i] = static_cast<std::uint8_t>(std::lround(90 + 60 * s + 0.2 * x));
            bg.pixels[i + 1] = static_cast<std::uint8_t>(std::lround(110 + 50 * std::cos(fx * (x + y))));
            bg.pixels[i + 2] = static_cast<std::uint8_t>(std::lround(120 + 0.3 * y - 30 * s));
        }
    }

    ElaFixture f;
    auto once = evidence::encode_jpeg(bg, quality);
    f.first_save_mean = evidence::compute_ela(once, quality).mean;

    // Re-save until the ELA mean stops dropping.
    auto current = once;
    double previous = f.first_save_mean;
    for (int i = 0; i < 40; ++i) {
        auto next = evidence::encode_jpeg(evidence::decode_jpeg(current), quality);
        const double m = evidence::compute_ela(next, quality).mean;
        current = std::move(next);
        if (std::abs(previous - m) < 1e-3) {
            previous = m;
            break;
        }
        previous = m;
    }
    f.clean_jpeg = current;
    f.stabilized_mean = evidence::compute_ela(current, quality).mean;
    f.threshold = 0.5 * (f.first_save_mean + f.stabilized_mean);

    auto spliced = evidence::decode_jpeg(current);
    f.patch_x0 = 96;
    f.patch_y0 = 96;
    f.patch_x1 = 160;
    f.patch_y1 = 160;
    for (int y = f.patch_y0; y < f.patch_y1; ++y) {
        for (int x = f.patch_x0; x < f.patch_x1; ++x) {
            const auto i = spliced.index(x, y);
            for (int c = 0; c < 3; ++c) spliced.pixels[i + c] = static_cast<std::uint8_t>(40 + rng.below(176));
        }
    }
    f.spliced_jpeg = evidence::encode_jpeg(spliced, quality);
    return f;
}

fs::path scratch_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("fauxcheck-" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace fauxcheck::testing
