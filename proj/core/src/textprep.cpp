#include "drugrec/textprep.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "drugrec/error.hpp"
#include "drugrec/stemmer.hpp"

namespace drugrec::text {

namespace {

// Expansions that themselves contain abbreviations are followed this deep.
constexpr int kMaxExpansionDepth = 4;

std::string upper(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

std::string lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

// Splits on anything that is not an ASCII letter or digit. Punctuation,
// symbols and multi-byte sequences (emoji) all act as separators.
std::vector<std::string> raw_tokens(std::string_view text) {
    std::vector<std::string> out;
    std::string current;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (c < 0x80 && std::isalnum(c)) {
            current.push_back(ch);
        } else if (!current.empty()) {
            out.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) out.push_back(std::move(current));
    return out;
}

template <class Fn>
void for_each_line(std::string_view contents, Fn fn) {
    std::size_t start = 0;
    while (start < contents.size()) {
        std::size_t end = contents.find('\n', start);
        if (end == std::string_view::npos) end = contents.size();
        std::string_view line = contents.substr(start, end - start);
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first != std::string_view::npos) {
            const auto last = line.find_last_not_of(" \t\r");
            fn(line.substr(first, last - first + 1));
        }
        start = end + 1;
    }
}

void process_token(const std::string& token, const Preprocessor& p, int depth, Tokens& out);

void process_text(std::string_view text, const Preprocessor& p, int depth, Tokens& out) {
    for (const auto& tok : raw_tokens(text)) process_token(tok, p, depth, out);
}

bool expand(std::string_view token, const Preprocessor& p, int depth, Tokens& out) {
    if (depth >= kMaxExpansionDepth) return false;
    auto it = p.abbreviations.find(upper(token));
    if (it == p.abbreviations.end()) return false;
    process_text(it->second, p, depth + 1, out);
    return true;
}

void process_token(const std::string& token, const Preprocessor& p, int depth, Tokens& out) {
    if (expand(token, p, depth, out)) return;
    std::string word = lower(token);
    if (p.spelling) word = lower(p.spelling(word));
    if (word.empty() || p.stop_words.contains(word)) return;
    std::string stemmed = stem(word);
    if (stemmed.empty() || p.stop_words.contains(stemmed)) return;
    // A stem can collide with an abbreviation key; expand it now so that a
    // second pass over the output has nothing left to do.
    if (expand(stemmed, p, depth, out)) return;
    out.push_back(std::move(stemmed));
}

}  // namespace

StopWords parse_stop_words(std::string_view contents) {
    StopWords out;
    for_each_line(contents, [&](std::string_view line) { out.insert(lower(line)); });
    return out;
}

AbbreviationMap parse_abbreviations(std::string_view contents) {
    AbbreviationMap out;
    for_each_line(contents, [&](std::string_view line) {
        const auto split = line.find_first_of(" \t");
        if (split == std::string_view::npos) return;
        const auto rest = line.find_first_not_of(" \t", split);
        if (rest == std::string_view::npos) return;
        out.insert_or_assign(upper(line.substr(0, split)), std::string(line.substr(rest)));
    });
    return out;
}

std::vector<std::string> parse_term_list(std::string_view contents) {
    std::vector<std::string> out;
    for_each_line(contents, [&](std::string_view line) { out.emplace_back(line); });
    return out;
}

Tokens Preprocessor::operator()(std::string_view text) const {
    Tokens out;
    process_text(text, *this, 0, out);
    return out;
}

Preprocessor Preprocessor::with_defaults() {
    Preprocessor p;
    p.abbreviations = parse_abbreviations(default_abbreviations_text());
    p.stop_words = parse_stop_words(default_stop_words_text());
    return p;
}

Tokens preprocess_text(std::string_view text, const AbbreviationMap& abbreviations,
                       const StopWords& stop_words) {
    Preprocessor p{abbreviations, stop_words, {}};
    return p(text);
}

// --- vocabulary -------------------------------------------------------------

Vocabulary::Vocabulary(std::vector<Term> terms, std::size_t min_frequency)
    : terms_(std::move(terms)), min_frequency_(min_frequency) {
    lookup_.reserve(terms_.size());
    for (std::size_t i = 0; i < terms_.size(); ++i) lookup_.emplace(terms_[i].token, i);
}

std::size_t Vocabulary::index_of(std::string_view token) const {
    auto it = lookup_.find(std::string(token));
    return it == lookup_.end() ? npos : it->second;
}

Vocabulary build_vocabulary(std::span<const Tokens> documents, std::size_t min_frequency) {
    if (min_frequency < 1) throw ArgumentError("min_frequency must be >= 1");
    std::map<std::string, std::size_t, std::less<>> counts;
    for (const auto& doc : documents)
        for (const auto& tok : doc) ++counts[tok];

    std::vector<Vocabulary::Term> terms;
    for (const auto& [token, freq] : counts) {
        if (freq >= min_frequency) terms.push_back({token, freq});
    }
    std::stable_sort(terms.begin(), terms.end(), [](const auto& a, const auto& b) {
        if (a.frequency != b.frequency) return a.frequency > b.frequency;
        return a.token < b.token;
    });
    return Vocabulary(std::move(terms), min_frequency);
}

std::vector<std::uint8_t> presence_row(const Tokens& document, const Vocabulary& vocabulary) {
    std::vector<std::uint8_t> row(vocabulary.size(), 0);
    for (const auto& tok : document) {
        const std::size_t j = vocabulary.index_of(tok);
        if (j != npos) row[j] = 1;
    }
    return row;
}

FeatureMatrix build_feature_matrix(std::span<const Tokens> documents,
                                   const Vocabulary& vocabulary) {
    FeatureMatrix m;
    m.rows = documents.size();
    m.cols = vocabulary.size();
    m.cells.assign(m.rows * m.cols, 0);
    for (std::size_t i = 0; i < documents.size(); ++i) {
        for (const auto& tok : documents[i]) {
            const std::size_t j = vocabulary.index_of(tok);
            if (j != npos) m.cells[i * m.cols + j] = 1;
        }
    }
    return m;
}

// --- polarity ---------------------------------------------------------------

SentimentLexicon SentimentLexicon::from_words(std::span<const std::string> positive,
                                              std::span<const std::string> negative) {
    SentimentLexicon lex;
    for (const auto& w : positive) lex.positive_terms.insert(stem(lower(w)));
    for (const auto& w : negative) lex.negative_terms.insert(stem(lower(w)));
    for (const auto& t : lex.positive_terms) {
        if (lex.negative_terms.contains(t))
            throw ArgumentError("sentiment lexicon term '" + t + "' is both positive and negative");
    }
    return lex;
}

SentimentLexicon SentimentLexicon::with_defaults() {
    const auto pos = parse_term_list(default_positive_terms_text());
    const auto neg = parse_term_list(default_negative_terms_text());
    return from_words(pos, neg);
}

double polarity(std::span<const std::string> tokens, const SentimentLexicon& lexicon) {
    std::size_t pos = 0;
    std::size_t neg = 0;
    for (const auto& t : tokens) {
        if (lexicon.positive_terms.contains(t)) ++pos;
        else if (lexicon.negative_terms.contains(t)) ++neg;
    }
    const double hits = static_cast<double>(pos + neg);
    const double raw = (static_cast<double>(pos) - static_cast<double>(neg)) / std::max(1.0, hits);
    return (raw + 1.0) / 2.0;
}

// --- CUR --------------------------------------------------------------------

std::string_view to_string(CurMode mode) {
    switch (mode) {
        case CurMode::normalized_average: return "normalized_average";
        case CurMode::literal: return "literal";
        case CurMode::inverted_dos: return "inverted_dos";
    }
    return "normalized_average";
}

CurMode parse_cur_mode(std::string_view text) {
    if (text == "normalized_average") return CurMode::normalized_average;
    if (text == "literal") return CurMode::literal;
    if (text == "inverted_dos") return CurMode::inverted_dos;
    throw ArgumentError("unknown CUR mode '" + std::string(text) + "'");
}

double compute_cur(const CurInputs& in, CurMode mode) {
    if (in.overall_rating < 0 || in.overall_rating > 10)
        throw ArgumentError("overall_rating out of range [0,10]");
    if (in.doe < 0 || in.doe > 4) throw ArgumentError("effectiveness out of range [0,4]");
    if (in.dos < 0 || in.dos > 4) throw ArgumentError("side_effect_severity out of range [0,4]");
    if (!(in.puc >= 0.0 && in.puc <= 1.0)) throw ArgumentError("polarity out of range [0,1]");

    const double rating_part = (in.overall_rating + in.doe) / 14.0;
    switch (mode) {
        case CurMode::literal:
            return rating_part * ((in.dos + in.puc) / 4.0) / 2.0;
        case CurMode::inverted_dos:
            return (rating_part + ((4 - in.dos) + in.puc) / 5.0) / 2.0;
        case CurMode::normalized_average:
            break;
    }
    return (rating_part + (in.dos + in.puc) / 5.0) / 2.0;
}

}  // namespace drugrec::text
