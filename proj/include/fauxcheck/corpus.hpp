#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fauxcheck::corpus {

enum class Label { False = 0, True = 1 };
enum class Source { Snopes = 0, Reuters = 1, Other = 2 };

inline constexpr std::size_t kSourceCount = 3;

[[nodiscard]] std::string_view to_string(Label label);
[[nodiscard]] std::string_view to_string(Source source);
// Lowercase wire spellings only ("true"/"false", "snopes"/"reuters"/"other").
[[nodiscard]] std::optional<Label> parse_label(std::string_view text);
[[nodiscard]] std::optional<Source> parse_source(std::string_view text);

struct Date {
    int year = 0;
    int month = 0;
    int day = 0;

    [[nodiscard]] std::string iso() const;
    static std::optional<Date> parse_iso(std::string_view text);

    friend bool operator==(const Date&, const Date&) = default;
    friend auto operator<=>(const Date&, const Date&) = default;
};

struct ImageClaimPair {
    std::string id;
    std::string claim;
    std::string image_ref;
    Label label = Label::False;
    Source source = Source::Other;
    std::optional<Date> published;

    friend bool operator==(const ImageClaimPair&, const ImageClaimPair&) = default;
};

// Tally indexed by [source][label].
using Counts = std::array<std::array<std::size_t, 2>, kSourceCount>;

class Corpus {
public:
    Corpus() = default;
    explicit Corpus(std::vector<ImageClaimPair> pairs);

    [[nodiscard]] const std::vector<ImageClaimPair>& pairs() const noexcept { return pairs_; }
    [[nodiscard]] std::size_t size() const noexcept { return pairs_.size(); }
    [[nodiscard]] const Counts& counts() const noexcept { return counts_; }
    [[nodiscard]] std::size_t count(Label label) const;
    [[nodiscard]] std::size_t count(Source source, Label label) const;

    // Concatenates pair lists in order.
    [[nodiscard]] static Corpus merge(std::span<const Corpus> parts);

    friend bool operator==(const Corpus& a, const Corpus& b) { return a.pairs_ == b.pairs_; }

private:
    std::vector<ImageClaimPair> pairs_;
    Counts counts_{};
};

// JSON-lines reader. Throws DataError naming the offending line on malformed
// records, unknown labels or sources, empty claims, empty or duplicate ids.
[[nodiscard]] Corpus load_corpus(const std::filesystem::path& path);
[[nodiscard]] Corpus parse_corpus(std::istream& in, std::string_view origin = "<stream>");

void write_corpus(const Corpus& corpus, std::ostream& out);
void write_corpus(const Corpus& corpus, const std::filesystem::path& path);

struct Violation {
    std::string id;
    std::string message;
};

// Empty iff the corpus satisfies every pair and corpus invariant.
[[nodiscard]] std::vector<Violation> validate_corpus(const Corpus& corpus);

}  // namespace fauxcheck::corpus
