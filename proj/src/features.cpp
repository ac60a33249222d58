#include "fauxcheck/features.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "fauxcheck/error.hpp"

namespace fauxcheck::features {

namespace {

using evidence::Reliability;

struct GroupInfo {
    GroupId id;
    std::string_view name;
    std::string_view label;
    std::string_view prefix;
    bool scalar;
};

constexpr std::array<GroupInfo, kGroupCount> kGroups{{
    {GroupId::GoogleTags, "google_tags", "Google tags", "tags:", false},
    {GroupId::UrlDomains, "url_domains", "URL domains", "domains:", false},
    {GroupId::UrlCategories, "url_categories", "URL categories", "categories:", false},
    {GroupId::TrueMediaPct, "true_media_pct", "True media percentage", "true_media_pct", true},
    {GroupId::FalseMediaPct, "false_media_pct", "False media percentage", "false_media_pct", true},
    {GroupId::MixedMediaPct, "mixed_media_pct", "Mixed media percentage", "mixed_media_pct", true},
    {GroupId::KnownMediaPct, "known_media_pct", "Known media percentage", "known_media_pct", true},
    {GroupId::TrueMediaTitles, "true_media_titles", "True media titles", "true_titles:", false},
    {GroupId::FalseMediaTitles, "false_media_titles", "False media titles", "false_titles:", false},
    {GroupId::MixedMediaTitles, "mixed_media_titles", "Mixed media titles", "mixed_titles:", false},
    {GroupId::ClaimText, "claim_text", "Claim text", "claim:", false},
    {GroupId::CosineSimClaimTrueTitles, "cosine_sim_claim_true_titles",
     "Cosine similarity of claim & true media titles", "cosine_sim", true},
    {GroupId::EmbeddingSimClaimTrueTitles, "embedding_sim_claim_true_titles",
     "Embedding similarity of claim & true media titles", "embedding_sim", true},
}};

const GroupInfo& info(GroupId g) {
    return kGroups.at(static_cast<std::size_t>(g));
}

std::optional<Reliability> title_class(GroupId g) {
    switch (g) {
        case GroupId::TrueMediaTitles: return Reliability::True;
        case GroupId::FalseMediaTitles: return Reliability::False;
        case GroupId::MixedMediaTitles: return Reliability::Mixed;
        default: return std::nullopt;
    }
}

double fraction(const evidence::EvidenceBundle& b, auto&& predicate) {
    if (b.pages.empty()) return 0.0;
    const auto hits = std::count_if(b.pages.begin(), b.pages.end(), predicate);
    return static_cast<double>(hits) / static_cast<double>(b.pages.size());
}

// Titles of True-class pages that carry text; fetch failures have nothing to
// compare against.
std::vector<const std::string*> trusted_titles(const evidence::EvidenceBundle& b) {
    std::vector<const std::string*> out;
    for (const auto& p : b.pages) {
        if (p.reliability == Reliability::True && !p.title.empty()) out.push_back(&p.title);
    }
    return out;
}

double cosine_claim_titles(const Example& ex, const FeatureContext& ctx) {
    const auto titles = trusted_titles(*ex.bundle);
    if (titles.empty()) return 0.0;
    // Per-example TF-IDF space: the claim plus each trusted title is one document.
    std::vector<text::TokenList> docs;
    docs.push_back(text::tokenize(ex.pair->claim, ctx.stopwords));
    for (const auto* t : titles) docs.push_back(text::tokenize(*t, ctx.stopwords));
    const auto vocab = text::Vocabulary::fit(docs);
    const auto claim_vec = text::tfidf_vector(docs.front(), vocab);
    std::vector<double> sims;
    sims.reserve(titles.size());
    for (std::size_t i = 1; i < docs.size(); ++i) {
        sims.push_back(text::cosine(claim_vec, text::tfidf_vector(docs[i], vocab)));
    }
    return text::smoothed_average(sims);
}

double embedding_claim_titles(const Example& ex, const FeatureContext& ctx) {
    const auto titles = trusted_titles(*ex.bundle);
    if (titles.empty()) return 0.0;
    if (!ctx.embeddings) throw DataError("embedding similarity requires an embedding provider");
    std::vector<double> sims;
    sims.reserve(titles.size());
    for (const auto* t : titles) sims.push_back(text::embedding_similarity(ex.pair->claim, *t, *ctx.embeddings));
    return text::smoothed_average(sims);
}

double scalar_value(GroupId group, const Example& ex, const FeatureContext& ctx) {
    const auto& b = *ex.bundle;
    auto is = [](Reliability r) { return [r](const evidence::WebPage& p) { return p.reliability == r; }; };
    switch (group) {
        case GroupId::TrueMediaPct: return fraction(b, is(Reliability::True));
        case GroupId::FalseMediaPct: return fraction(b, is(Reliability::False));
        case GroupId::MixedMediaPct: return fraction(b, is(Reliability::Mixed));
        case GroupId::KnownMediaPct:
            return fraction(b, [](const evidence::WebPage& p) { return p.reliability != Reliability::Unknown; });
        case GroupId::CosineSimClaimTrueTitles: return cosine_claim_titles(ex, ctx);
        case GroupId::EmbeddingSimClaimTrueTitles: return embedding_claim_titles(ex, ctx);
        default: throw Error(ErrorKind::Internal, "not a scalar group");
    }
}

void check_example(const Example& ex) {
    if (ex.pair == nullptr || ex.bundle == nullptr) throw Error(ErrorKind::Internal, "example without pair or bundle");
}

}  // namespace

const std::array<GroupId, kGroupCount>& all_groups() {
    static const std::array<GroupId, kGroupCount> groups = [] {
        std::array<GroupId, kGroupCount> out{};
        for (std::size_t i = 0; i < kGroupCount; ++i) out[i] = kGroups[i].id;
        return out;
    }();
    return groups;
}

std::string_view group_name(GroupId group) {
    return info(group).name;
}

std::string_view group_label(GroupId group) {
    return info(group).label;
}

std::string_view group_prefix(GroupId group) {
    return info(group).prefix;
}

bool is_scalar_group(GroupId group) {
    return info(group).scalar;
}

std::optional<GroupId> parse_group(std::string_view name) {
    for (const auto& g : kGroups) {
        if (g.name == name) return g.id;
    }
    return std::nullopt;
}

std::uint64_t FeatureContext::stopwords_hash() const {
    // Order-independent: a sum of per-word hashes, mixed with the count.
    std::uint64_t sum = 0;
    for (const auto& w : stopwords) sum += text::fnv1a64(w);
    return text::fnv1a64(std::to_string(stopwords.size()), sum);
}

std::uint64_t FeatureContext::rules_hash() const {
    return category_rules.fingerprint();
}

text::TokenList group_document(GroupId group, const Example& ex, const FeatureContext& ctx) {
    check_example(ex);
    const auto& b = *ex.bundle;
    text::TokenList doc;
    switch (group) {
        case GroupId::GoogleTags:
            for (const auto& tag : b.tags) {
                auto toks = text::tokenize(tag, ctx.stopwords);
                doc.insert(doc.end(), std::make_move_iterator(toks.begin()), std::make_move_iterator(toks.end()));
            }
            break;
        case GroupId::UrlDomains:
            for (const auto& p : b.pages) {
                if (!p.registrable_domain.empty()) doc.push_back(p.registrable_domain);
            }
            break;
        case GroupId::UrlCategories:
            for (const auto& p : b.pages) {
                std::vector<text::Category> cats;
                try {
                    cats = text::categorize_url(p.url, ctx.category_rules);
                } catch (const DataError&) {
                    continue;
                }
                for (auto& c : cats) {
                    doc.push_back(std::move(c.top));
                    doc.push_back(std::move(c.sub));
                }
            }
            break;
        case GroupId::TrueMediaTitles:
        case GroupId::FalseMediaTitles:
        case GroupId::MixedMediaTitles: {
            const auto cls = *title_class(group);
            for (const auto& p : b.pages) {
                if (p.reliability != cls) continue;
                auto toks = text::tokenize(p.title, ctx.stopwords);
                doc.insert(doc.end(), std::make_move_iterator(toks.begin()), std::make_move_iterator(toks.end()));
            }
            break;
        }
        case GroupId::ClaimText:
            doc = text::tokenize(ex.pair->claim, ctx.stopwords);
            break;
        default:
            break;
    }
    return doc;
}

FittedGroupState fit_group(GroupId group, std::span<const Example> train, const FeatureContext& ctx) {
    if (train.empty()) throw DataError("cannot fit feature group '" + std::string(group_name(group)) + "' on zero examples");
    FittedGroupState state;
    state.group = group;
    state.stopwords_hash = ctx.stopwords_hash();
    state.rules_hash = ctx.rules_hash();
    if (is_scalar_group(group)) return state;
    std::vector<text::TokenList> docs;
    docs.reserve(train.size());
    for (const auto& ex : train) docs.push_back(group_document(group, ex, ctx));
    state.vocabulary = text::Vocabulary::fit(docs);
    return state;
}

GroupFeatures extract_group(GroupId group, const Example& ex, const FittedGroupState& state,
                            const FeatureContext& ctx) {
    check_example(ex);
    if (state.group != group) {
        throw DataError("fitted state for '" + std::string(group_name(state.group)) + "' used to extract '" +
                        std::string(group_name(group)) + "'");
    }
    if (state.stopwords_hash != ctx.stopwords_hash() ||
        (group == GroupId::UrlCategories && state.rules_hash != ctx.rules_hash())) {
        throw DataError("fitted state for '" + std::string(group_name(group)) +
                        "' was built with different stopwords or category rules");
    }
    GroupFeatures out;
    out.group = group;
    if (is_scalar_group(group)) {
        out.dimension = 1;
        out.vector = text::SparseVector::scalar(scalar_value(group, ex, ctx));
        return out;
    }
    if (!state.vocabulary) throw DataError("fitted state for '" + std::string(group_name(group)) + "' has no vocabulary");
    const auto& vocab = *state.vocabulary;
    out.dimension = vocab.size();
    const auto doc = group_document(group, ex, ctx);
    switch (group) {
        case GroupId::UrlDomains:
        case GroupId::UrlCategories:
        case GroupId::ClaimText:
            out.vector = text::tfidf_vector(doc, vocab);
            break;
        default:
            out.vector = text::bow_vector(doc, vocab);
            break;
    }
    return out;
}

ConcatLayout concat_layout(std::span<const FittedGroupState> states) {
    ConcatLayout layout;
    for (const auto& s : states) {
        layout.groups.push_back(s.group);
        layout.offsets.push_back(static_cast<std::uint32_t>(layout.names.size()));
        if (s.vocabulary) {
            for (const auto& term : s.vocabulary->terms()) {
                layout.names.push_back(std::string(group_prefix(s.group)) + term);
            }
        } else {
            layout.names.emplace_back(group_prefix(s.group));
        }
    }
    return layout;
}

text::SparseVector concat_features(const ConcatLayout& layout, std::span<const GroupFeatures> parts) {
    if (parts.size() != layout.groups.size()) throw DataError("feature parts do not match the concatenated layout");
    std::vector<text::SparseEntry> entries;
    for (std::size_t g = 0; g < parts.size(); ++g) {
        if (parts[g].group != layout.groups[g]) throw DataError("feature parts are out of layout order");
        for (const auto& e : parts[g].vector.entries()) entries.push_back({layout.offsets[g] + e.index, e.weight});
    }
    return text::SparseVector::from_entries(std::move(entries));
}

// ---------------------------------------------------------------------------

void write_feature_matrix(const FeatureMatrix& m, std::ostream& out) {
    if (m.ids.size() != m.rows.size()) throw DataError("feature matrix ids and rows differ in length");
    out << "fauxcheck-features v1 " << group_name(m.group) << ' ' << m.dimension << ' ' << m.rows.size() << '\n';
    out.precision(17);
    for (std::size_t i = 0; i < m.rows.size(); ++i) {
        out << m.ids[i];
        for (const auto& e : m.rows[i].entries()) out << '\t' << e.index << ':' << e.weight;
        out << '\n';
    }
}

FeatureMatrix read_feature_matrix(std::istream& in, std::string_view origin) {
    auto fail = [&](const std::string& msg) { throw DataError(std::string(origin) + ": " + msg); };
    std::string line;
    if (!std::getline(in, line)) fail("empty feature matrix");
    std::istringstream header(line);
    std::string magic, version, group;
    std::size_t n = 0;
    FeatureMatrix m;
    if (!(header >> magic >> version >> group >> m.dimension >> n) || magic != "fauxcheck-features" || version != "v1") {
        fail("bad feature matrix header");
    }
    auto g = parse_group(group);
    if (!g) fail("unknown feature group '" + group + "'");
    m.group = *g;
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::getline(in, line)) fail("expected " + std::to_string(n) + " rows");
        std::istringstream row(line);
        std::string id;
        std::getline(row, id, '\t');
        std::vector<text::SparseEntry> entries;
        std::string cell;
        while (std::getline(row, cell, '\t')) {
            const auto colon = cell.find(':');
            if (colon == std::string::npos) fail("bad sparse entry '" + cell + "'");
            try {
                const auto idx = std::stoul(cell.substr(0, colon));
                if (idx >= m.dimension) fail("index out of range in row '" + id + "'");
                entries.push_back({static_cast<std::uint32_t>(idx), std::stod(cell.substr(colon + 1))});
            } catch (const std::logic_error&) {
                fail("bad sparse entry '" + cell + "'");
            }
        }
        m.ids.push_back(std::move(id));
        m.rows.push_back(text::SparseVector::from_entries(std::move(entries)));
    }
    return m;
}

std::string serialize_state(const FittedGroupState& state) {
    nlohmann::ordered_json j;
    j["group"] = group_name(state.group);
    j["stopwords_hash"] = state.stopwords_hash;
    j["rules_hash"] = state.rules_hash;
    if (state.vocabulary) {
        j["vocabulary"]["n_docs"] = state.vocabulary->n_docs();
        j["vocabulary"]["terms"] = state.vocabulary->terms();
        j["vocabulary"]["df"] = state.vocabulary->document_frequencies();
    }
    return j.dump();
}

FittedGroupState deserialize_state(std::string_view json_text) {
    try {
        const auto j = nlohmann::json::parse(json_text);
        FittedGroupState s;
        const auto name = j.at("group").get<std::string>();
        auto g = parse_group(name);
        if (!g) throw DataError("unknown feature group '" + name + "'");
        s.group = *g;
        s.stopwords_hash = j.value("stopwords_hash", std::uint64_t{0});
        s.rules_hash = j.value("rules_hash", std::uint64_t{0});
        if (j.contains("vocabulary")) {
            const auto& v = j["vocabulary"];
            s.vocabulary = text::Vocabulary::from_parts(v.at("terms").get<std::vector<std::string>>(),
                                                        v.at("df").get<std::vector<std::uint32_t>>(),
                                                        v.at("n_docs").get<std::uint32_t>());
        }
        if (is_scalar_group(s.group) == s.vocabulary.has_value()) {
            throw DataError("vocabulary presence does not match group '" + name + "'");
        }
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed feature state: ") + e.what());
    }
}

}  // namespace fauxcheck::features
