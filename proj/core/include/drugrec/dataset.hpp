#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "drugrec/error.hpp"

namespace drugrec {

enum class Gender { female, male, unspecified };

// Lenient: anything other than a recognised female/male spelling maps to
// unspecified, since crawled demographics are noisy.
Gender parse_gender(std::string_view text);
std::string_view to_string(Gender g);

struct RatingRecord {
    std::string user_id;
    int age = 0;
    Gender gender = Gender::unspecified;
    bool is_caregiver = false;
    std::string condition_text;
    std::string drug_name;
    int overall_rating = 0;        // 0..10
    int effectiveness = 0;         // 0..4
    int side_effect_severity = 0;  // 0..4
    std::string comment;

    friend bool operator==(const RatingRecord&, const RatingRecord&) = default;
};

struct DrugProfile {
    std::string name;
    std::vector<std::uint8_t> categories;
    std::vector<std::uint8_t> side_effects;
    std::vector<std::uint8_t> benefits;

    std::size_t feature_count() const {
        return categories.size() + side_effects.size() + benefits.size();
    }
    // categories ++ side_effects ++ benefits as doubles.
    std::vector<double> features() const;

    friend bool operator==(const DrugProfile&, const DrugProfile&) = default;
};

enum class Severity { minor, moderate, major };

std::optional<Severity> parse_severity(std::string_view text);
std::string_view to_string(Severity s);

struct InteractionRecord {
    std::string drug_a;
    std::string drug_b;
    Severity severity = Severity::minor;

    friend bool operator==(const InteractionRecord&, const InteractionRecord&) = default;
};

enum class AdverseEvent : std::uint8_t {
    death = 1,
    hospitalization = 2,
    disability = 4,
    life_threatening = 8,
};

std::optional<AdverseEvent> parse_adverse_event(std::string_view text);
std::string_view to_string(AdverseEvent e);

// Small bit set over AdverseEvent.
class EventSet {
public:
    constexpr EventSet() = default;
    constexpr EventSet(std::initializer_list<AdverseEvent> events) {
        for (AdverseEvent e : events) insert(e);
    }

    constexpr void insert(AdverseEvent e) { bits_ |= static_cast<std::uint8_t>(e); }
    constexpr bool contains(AdverseEvent e) const {
        return (bits_ & static_cast<std::uint8_t>(e)) != 0;
    }
    constexpr bool empty() const { return bits_ == 0; }
    constexpr std::uint8_t bits() const { return bits_; }

    std::vector<AdverseEvent> to_vector() const;

    friend constexpr bool operator==(EventSet, EventSet) = default;

private:
    std::uint8_t bits_ = 0;
};

inline constexpr AdverseEvent kAllAdverseEvents[] = {
    AdverseEvent::death,
    AdverseEvent::hospitalization,
    AdverseEvent::disability,
    AdverseEvent::life_threatening,
};

struct AdverseEventRecord {
    std::string drug_name;
    int age = 0;
    Gender gender = Gender::unspecified;
    std::string reaction;
    EventSet events;
    std::vector<std::string> other_drugs;

    friend bool operator==(const AdverseEventRecord&, const AdverseEventRecord&) = default;
};

struct DatasetBundle {
    std::vector<RatingRecord> ratings;
    std::vector<DrugProfile> drugs;
    std::vector<InteractionRecord> interactions;
    std::vector<AdverseEventRecord> adverse_events;

    friend bool operator==(const DatasetBundle&, const DatasetBundle&) = default;
};

// Order-independent severity lookup over drug pairs.
class InteractionIndex {
public:
    InteractionIndex() = default;
    explicit InteractionIndex(std::span<const InteractionRecord> records);

    // A repeated pair keeps the most severe level.
    void add(const InteractionRecord& record);
    std::optional<Severity> lookup(std::string_view a, std::string_view b) const;
    bool knows(std::string_view drug) const;
    std::size_t size() const noexcept { return pairs_.size(); }
    bool empty() const noexcept { return pairs_.empty(); }

    // Pairs in canonical (lexicographically ordered) form.
    std::vector<InteractionRecord> records() const;

private:
    std::map<std::pair<std::string, std::string>, Severity, std::less<>> pairs_;
    std::map<std::string, std::size_t, std::less<>> drugs_;
};

// Loaders. `source` names the input in error messages.
std::vector<RatingRecord> parse_ratings(std::istream& in, const std::string& source);
std::vector<DrugProfile> parse_drugs(std::istream& in, const std::string& source,
                                     Diagnostics* diagnostics = nullptr);
std::vector<InteractionRecord> parse_interactions(std::istream& in, const std::string& source);
std::vector<AdverseEventRecord> parse_adverse_events(std::istream& in,
                                                     const std::string& source);

std::vector<RatingRecord> load_ratings(const std::filesystem::path& path);
std::vector<DrugProfile> load_drugs(const std::filesystem::path& path,
                                    Diagnostics* diagnostics = nullptr);
std::vector<InteractionRecord> load_interactions(const std::filesystem::path& path);
std::vector<AdverseEventRecord> load_adverse_events(const std::filesystem::path& path);

void write_ratings(const std::filesystem::path& path, std::span<const RatingRecord> records);
void write_drugs(const std::filesystem::path& path, std::span<const DrugProfile> records);
void write_interactions(const std::filesystem::path& path,
                        std::span<const InteractionRecord> records);
void write_adverse_events(const std::filesystem::path& path,
                          std::span<const AdverseEventRecord> records);

struct DatasetPaths {
    std::filesystem::path ratings;
    std::filesystem::path drugs;
    std::filesystem::path interactions;
    std::filesystem::path adverse_events;

    // ratings.csv, drugs.csv, interactions.csv, adverse_events.csv under dir.
    static DatasetPaths in_directory(const std::filesystem::path& dir);
};

DatasetBundle load_bundle(const DatasetPaths& paths, Diagnostics* diagnostics = nullptr);
void write_bundle(const std::filesystem::path& dir, const DatasetBundle& bundle);

struct ValidationReport {
    std::size_t rating_rows = 0;
    std::size_t drug_rows = 0;
    std::size_t interaction_rows = 0;
    std::size_t adverse_event_rows = 0;
    // Drug names referenced by a table but missing from the drugs table.
    std::vector<std::string> unresolved_in_ratings;
    std::vector<std::string> unresolved_in_interactions;
    std::vector<std::string> unresolved_in_adverse_events;

    bool ok() const {
        return unresolved_in_ratings.empty() && unresolved_in_interactions.empty() &&
               unresolved_in_adverse_events.empty();
    }
};

ValidationReport validate(const DatasetBundle& bundle);

struct Fractions {
    double train = 0.7;
    double validation = 0.2;
    double test = 0.1;
};

template <class T>
struct Split {
    std::vector<T> train;
    std::vector<T> validation;
    std::vector<T> test;
};

struct SplitSizes {
    std::size_t train = 0;
    std::size_t validation = 0;
    std::size_t test = 0;
};

// validation and test get floor(n*f); train takes the remainder.
SplitSizes split_sizes(std::size_t n, const Fractions& fractions);

// Seeded permutation of [0, n) cut into the three parts.
Split<std::size_t> split_indices(std::size_t n, const Fractions& fractions, std::uint64_t seed);

template <class T>
Split<T> split_dataset(std::span<const T> records, const Fractions& fractions,
                       std::uint64_t seed) {
    const Split<std::size_t> idx = split_indices(records.size(), fractions, seed);
    Split<T> out;
    auto gather = [&](const std::vector<std::size_t>& from, std::vector<T>& to) {
        to.reserve(from.size());
        for (std::size_t i : from) to.push_back(records[i]);
    };
    gather(idx.train, out.train);
    gather(idx.validation, out.validation);
    gather(idx.test, out.test);
    return out;
}

}  // namespace drugrec
