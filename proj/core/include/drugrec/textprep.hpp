#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace drugrec::text {

using Tokens = std::vector<std::string>;

// Uppercase abbreviation -> expansion text.
using AbbreviationMap = std::map<std::string, std::string, std::less<>>;
using StopWords = std::set<std::string, std::less<>>;

// Optional spelling-correction hook applied to each raw lowercase token
// before stop-word removal. Empty by default (no correction).
using SpellingHook = std::function<std::string(std::string_view)>;

// Plain-text resource formats: one entry per line, '#' starts a comment.
// Abbreviation lines are "KEY expansion words...".
StopWords parse_stop_words(std::string_view contents);
AbbreviationMap parse_abbreviations(std::string_view contents);
std::vector<std::string> parse_term_list(std::string_view contents);

// Contents of the shipped core/data files, compiled into the library.
std::string_view default_stop_words_text();
std::string_view default_abbreviations_text();
std::string_view default_positive_terms_text();
std::string_view default_negative_terms_text();

struct Preprocessor {
    AbbreviationMap abbreviations;
    StopWords stop_words;
    SpellingHook spelling;

    // Strip symbols/emoji -> expand abbreviations on whole tokens (matched
    // case-insensitively) -> lowercase -> drop stop words -> stem.
    // Output tokens are lowercase alphanumeric stems that are neither stop
    // words nor abbreviation keys, so the function is idempotent.
    Tokens operator()(std::string_view text) const;

    static Preprocessor with_defaults();
};

Tokens preprocess_text(std::string_view text, const AbbreviationMap& abbreviations,
                       const StopWords& stop_words);

class Vocabulary {
public:
    struct Term {
        std::string token;
        std::size_t frequency = 0;
        friend bool operator==(const Term&, const Term&) = default;
    };

    Vocabulary() = default;
    // terms must already be in vocabulary order.
    Vocabulary(std::vector<Term> terms, std::size_t min_frequency);

    // Frequency descending, ties lexicographically ascending.
    const std::vector<Term>& terms() const noexcept { return terms_; }
    std::size_t min_frequency() const noexcept { return min_frequency_; }
    std::size_t size() const noexcept { return terms_.size(); }
    // Column of a token, or npos.
    std::size_t index_of(std::string_view token) const;

    friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
        return a.terms_ == b.terms_ && a.min_frequency_ == b.min_frequency_;
    }

private:
    std::vector<Term> terms_;
    std::size_t min_frequency_ = 1;
    std::unordered_map<std::string, std::size_t> lookup_;
};

inline constexpr std::size_t npos = static_cast<std::size_t>(-1);

Vocabulary build_vocabulary(std::span<const Tokens> documents, std::size_t min_frequency = 2);

// Binary presence matrix, one row per document, one column per term.
struct FeatureMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::uint8_t> cells;

    std::uint8_t at(std::size_t r, std::size_t c) const { return cells[r * cols + c]; }
    std::span<const std::uint8_t> row(std::size_t r) const {
        return {cells.data() + r * cols, cols};
    }
};

FeatureMatrix build_feature_matrix(std::span<const Tokens> documents, const Vocabulary& vocabulary);

// Binary presence row for a single document.
std::vector<std::uint8_t> presence_row(const Tokens& document, const Vocabulary& vocabulary);

struct SentimentLexicon {
    std::set<std::string, std::less<>> positive_terms;
    std::set<std::string, std::less<>> negative_terms;

    // Stems both lists with the same stemmer used by the preprocessor and
    // throws ArgumentError if they overlap.
    static SentimentLexicon from_words(std::span<const std::string> positive,
                                       std::span<const std::string> negative);
    static SentimentLexicon with_defaults();
};

// Polarity of user comments mapped into [0, 1]; 0.5 is neutral.
double polarity(std::span<const std::string> tokens, const SentimentLexicon& lexicon);

struct CurInputs {
    int overall_rating = 0;  // 0..10
    int doe = 0;             // degree of effectiveness, 0..4
    int dos = 0;             // degree of side effects, 0..4
    double puc = 0.5;        // comment polarity, [0, 1]
};

enum class CurMode {
    normalized_average,  // ((overall + doe)/14 + (dos + puc)/5) / 2, in [0, 1]
    literal,             // ((overall + doe)/14) * ((dos + puc)/4) / 2
    inverted_dos,        // normalized_average with dos -> 4 - dos
};

std::string_view to_string(CurMode mode);
CurMode parse_cur_mode(std::string_view text);

// Combined user rating. Throws ArgumentError on out-of-range inputs.
double compute_cur(const CurInputs& inputs, CurMode mode = CurMode::normalized_average);

}  // namespace drugrec::text
