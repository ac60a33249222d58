#pragma once

// The thirteen evidence feature groups. Each group has a fit phase that only
// sees training examples and a transform phase that turns one (pair, bundle)
// into a sparse vector.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fauxcheck/corpus.hpp"
#include "fauxcheck/evidence.hpp"
#include "fauxcheck/text.hpp"

namespace fauxcheck::features {

enum class GroupId : std::uint8_t {
    GoogleTags,
    UrlDomains,
    UrlCategories,
    TrueMediaPct,
    FalseMediaPct,
    MixedMediaPct,
    KnownMediaPct,
    TrueMediaTitles,
    FalseMediaTitles,
    MixedMediaTitles,
    ClaimText,
    CosineSimClaimTrueTitles,
    EmbeddingSimClaimTrueTitles,
};

inline constexpr std::size_t kGroupCount = 13;

[[nodiscard]] const std::array<GroupId, kGroupCount>& all_groups();
// Stable machine name, e.g. "url_domains".
[[nodiscard]] std::string_view group_name(GroupId group);
// Human-readable row label used in reports.
[[nodiscard]] std::string_view group_label(GroupId group);
// Prefix for per-feature names in the concatenated model, e.g. "domains:".
[[nodiscard]] std::string_view group_prefix(GroupId group);
[[nodiscard]] std::optional<GroupId> parse_group(std::string_view name);
[[nodiscard]] bool is_scalar_group(GroupId group);

// Everything extraction needs besides fitted state.
struct FeatureContext {
    text::StopwordSet stopwords;
    text::CategoryRuleSet category_rules;
    std::shared_ptr<const text::EmbeddingProvider> embeddings;

    [[nodiscard]] std::uint64_t stopwords_hash() const;
    [[nodiscard]] std::uint64_t rules_hash() const;
};

// One training or evaluation example. The bundle must already be filtered and
// annotated (see evidence::prepare_bundle).
struct Example {
    const corpus::ImageClaimPair* pair = nullptr;
    const evidence::EvidenceBundle* bundle = nullptr;
};

struct FittedGroupState {
    GroupId group = GroupId::GoogleTags;
    std::optional<text::Vocabulary> vocabulary;  // absent for scalar groups
    std::uint64_t stopwords_hash = 0;
    std::uint64_t rules_hash = 0;

    [[nodiscard]] std::size_t dimension() const { return vocabulary ? vocabulary->size() : 1; }

    friend bool operator==(const FittedGroupState&, const FittedGroupState&) = default;
};

struct GroupFeatures {
    GroupId group = GroupId::GoogleTags;
    std::size_t dimension = 1;
    text::SparseVector vector;
};

// Throws DataError on an empty training set.
[[nodiscard]] FittedGroupState fit_group(GroupId group, std::span<const Example> train, const FeatureContext& ctx);

// Throws DataError when `state` belongs to another group or the embedding
// provider cannot resolve a text.
[[nodiscard]] GroupFeatures extract_group(GroupId group, const Example& example, const FittedGroupState& state,
                                          const FeatureContext& ctx);

// The document (token list) a vocabulary group sees for one example.
[[nodiscard]] text::TokenList group_document(GroupId group, const Example& example, const FeatureContext& ctx);

// Concatenated layout over several groups: global feature names carry the
// group prefix and groups keep their native scales.
struct ConcatLayout {
    std::vector<GroupId> groups;
    std::vector<std::uint32_t> offsets;
    std::vector<std::string> names;

    [[nodiscard]] std::size_t dimension() const noexcept { return names.size(); }
};

[[nodiscard]] ConcatLayout concat_layout(std::span<const FittedGroupState> states);
[[nodiscard]] text::SparseVector concat_features(const ConcatLayout& layout, std::span<const GroupFeatures> parts);

// ---------------------------------------------------------------------------
// Persistence

// Text layout:
//   fauxcheck-features v1 <group> <dimension> <n_examples>
//   <example id>\t<index>:<weight> ...
struct FeatureMatrix {
    GroupId group = GroupId::GoogleTags;
    std::size_t dimension = 1;
    std::vector<std::string> ids;
    std::vector<text::SparseVector> rows;
};

void write_feature_matrix(const FeatureMatrix& matrix, std::ostream& out);
[[nodiscard]] FeatureMatrix read_feature_matrix(std::istream& in, std::string_view origin = "<stream>");

// JSON: {"group", "stopwords_hash", "rules_hash", "vocabulary": {"n_docs", "terms", "df"}}
[[nodiscard]] std::string serialize_state(const FittedGroupState& state);
[[nodiscard]] FittedGroupState deserialize_state(std::string_view json_text);

}  // namespace fauxcheck::features
