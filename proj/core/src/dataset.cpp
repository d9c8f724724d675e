#include "drugrec/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "drugrec/csv.hpp"
#include "drugrec/io.hpp"
#include "drugrec/random.hpp"

namespace drugrec {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

// Column name -> index for a header row.
class Header {
public:
    Header(const csv::Row& row, std::string source) : source_(std::move(source)) {
        for (std::size_t i = 0; i < row.size(); ++i) index_.emplace(csv::trim(row[i]), i);
    }

    std::size_t require(const std::string& column) const {
        auto it = index_.find(column);
        if (it == index_.end()) throw SchemaError(source_, column);
        return it->second;
    }

private:
    std::string source_;
    std::unordered_map<std::string, std::size_t> index_;
};

struct RowReader {
    const std::string& source;
    std::size_t row_number;
    const csv::Row& row;

    const std::string& cell(std::size_t col) const {
        if (col >= row.size()) {
            throw RowError(source, row_number,
                           "expected at least " + std::to_string(col + 1) + " columns, got " +
                               std::to_string(row.size()));
        }
        return row[col];
    }

    int integer(std::size_t col, const char* name) const {
        const std::string text = csv::trim(cell(col));
        int value = 0;
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
        if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
            throw RowError(source, row_number,
                           std::string(name) + " is not an integer: '" + text + "'");
        }
        return value;
    }

    int bounded(std::size_t col, const char* name, int lo, int hi) const {
        const int v = integer(col, name);
        if (v < lo || v > hi) {
            throw RowError(source, row_number,
                           std::string(name) + " out of range [" + std::to_string(lo) + "," +
                               std::to_string(hi) + "]");
        }
        return v;
    }

    bool boolean(std::size_t col, const char* name) const {
        const std::string v = lower(csv::trim(cell(col)));
        if (v == "true" || v == "1" || v == "yes" || v == "caregiver") return true;
        if (v == "false" || v == "0" || v == "no" || v == "patient" || v.empty()) return false;
        throw RowError(source, row_number, std::string(name) + " is not a boolean: '" + v + "'");
    }
};

std::vector<csv::Row> read_table(std::istream& in, const std::string& source,
                                 csv::Row& header) {
    std::vector<csv::Row> rows = csv::read_all(in);
    if (rows.empty()) throw SchemaError(source, "<header>");
    header = std::move(rows.front());
    rows.erase(rows.begin());
    return rows;
}

template <class Parse>
auto load_with(const std::filesystem::path& path, Parse parse) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path.string(), "cannot open file for reading");
    return parse(in, path.string());
}

template <class Write>
void write_with(const std::filesystem::path& path, Write write) {
    std::ostringstream out;
    write(out);
    io::write_file_atomic(path, out.str());
}

std::string bits_to_string(std::uint8_t b) { return b ? "1" : "0"; }

}  // namespace

Gender parse_gender(std::string_view text) {
    const std::string g = lower(csv::trim(text));
    if (g == "female" || g == "f" || g == "woman") return Gender::female;
    if (g == "male" || g == "m" || g == "man") return Gender::male;
    return Gender::unspecified;
}

std::string_view to_string(Gender g) {
    switch (g) {
        case Gender::female: return "female";
        case Gender::male: return "male";
        case Gender::unspecified: return "unspecified";
    }
    return "unspecified";
}

std::vector<double> DrugProfile::features() const {
    std::vector<double> out;
    out.reserve(feature_count());
    for (auto b : categories) out.push_back(b);
    for (auto b : side_effects) out.push_back(b);
    for (auto b : benefits) out.push_back(b);
    return out;
}

std::optional<Severity> parse_severity(std::string_view text) {
    const std::string s = lower(csv::trim(text));
    if (s == "major") return Severity::major;
    if (s == "moderate") return Severity::moderate;
    if (s == "minor") return Severity::minor;
    return std::nullopt;
}

std::string_view to_string(Severity s) {
    switch (s) {
        case Severity::major: return "major";
        case Severity::moderate: return "moderate";
        case Severity::minor: return "minor";
    }
    return "minor";
}

std::optional<AdverseEvent> parse_adverse_event(std::string_view text) {
    std::string s;
    for (char c : lower(csv::trim(text))) {
        if (std::isalpha(static_cast<unsigned char>(c))) s.push_back(c);
    }
    if (s == "death") return AdverseEvent::death;
    if (s == "hospitalization" || s == "hospitalisation") return AdverseEvent::hospitalization;
    if (s == "disability") return AdverseEvent::disability;
    if (s == "lifethreatening") return AdverseEvent::life_threatening;
    return std::nullopt;
}

std::string_view to_string(AdverseEvent e) {
    switch (e) {
        case AdverseEvent::death: return "death";
        case AdverseEvent::hospitalization: return "hospitalization";
        case AdverseEvent::disability: return "disability";
        case AdverseEvent::life_threatening: return "life_threatening";
    }
    return "death";
}

std::vector<AdverseEvent> EventSet::to_vector() const {
    std::vector<AdverseEvent> out;
    for (AdverseEvent e : kAllAdverseEvents) {
        if (contains(e)) out.push_back(e);
    }
    return out;
}

// --- InteractionIndex -------------------------------------------------------

InteractionIndex::InteractionIndex(std::span<const InteractionRecord> records) {
    for (const auto& r : records) add(r);
}

void InteractionIndex::add(const InteractionRecord& record) {
    auto key = std::minmax(record.drug_a, record.drug_b);
    auto [it, inserted] =
        pairs_.emplace(std::pair<std::string, std::string>(key.first, key.second), record.severity);
    if (!inserted) {
        it->second = std::max(it->second, record.severity);
        return;
    }
    ++drugs_[record.drug_a];
    ++drugs_[record.drug_b];
}

std::optional<Severity> InteractionIndex::lookup(std::string_view a, std::string_view b) const {
    if (a > b) std::swap(a, b);
    auto it = pairs_.find(std::pair<std::string, std::string>(a, b));
    if (it == pairs_.end()) return std::nullopt;
    return it->second;
}

bool InteractionIndex::knows(std::string_view drug) const {
    return drugs_.find(drug) != drugs_.end();
}

std::vector<InteractionRecord> InteractionIndex::records() const {
    std::vector<InteractionRecord> out;
    out.reserve(pairs_.size());
    for (const auto& [key, severity] : pairs_) out.push_back({key.first, key.second, severity});
    return out;
}

// --- parsers ----------------------------------------------------------------

std::vector<RatingRecord> parse_ratings(std::istream& in, const std::string& source) {
    csv::Row header_row;
    const auto rows = read_table(in, source, header_row);
    const Header h(header_row, source);
    const std::size_t c_user = h.require("user_id");
    const std::size_t c_age = h.require("age");
    const std::size_t c_gender = h.require("gender");
    const std::size_t c_caregiver = h.require("is_caregiver");
    const std::size_t c_condition = h.require("condition");
    const std::size_t c_drug = h.require("drug_name");
    const std::size_t c_overall = h.require("overall_rating");
    const std::size_t c_doe = h.require("effectiveness");
    const std::size_t c_dos = h.require("side_effect_severity");
    const std::size_t c_comment = h.require("comment");

    std::vector<RatingRecord> out;
    out.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const RowReader r{source, i + 1, rows[i]};
        RatingRecord rec;
        rec.user_id = csv::trim(r.cell(c_user));
        rec.age = r.bounded(c_age, "age", 0, 150);
        rec.gender = parse_gender(r.cell(c_gender));
        rec.is_caregiver = r.boolean(c_caregiver, "is_caregiver");
        rec.condition_text = r.cell(c_condition);
        rec.drug_name = csv::trim(r.cell(c_drug));
        if (rec.drug_name.empty()) throw RowError(source, i + 1, "drug_name is empty");
        rec.overall_rating = r.bounded(c_overall, "overall_rating", 0, 10);
        rec.effectiveness = r.bounded(c_doe, "effectiveness", 0, 4);
        rec.side_effect_severity = r.bounded(c_dos, "side_effect_severity", 0, 4);
        rec.comment = r.cell(c_comment);
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<DrugProfile> parse_drugs(std::istream& in, const std::string& source,
                                     Diagnostics* diagnostics) {
    csv::Row header_row;
    const auto rows = read_table(in, source, header_row);
    const Header h(header_row, source);
    const std::size_t c_name = h.require("name");

    // Vector widths come from the header, grouped by column prefix.
    std::vector<std::size_t> cat_cols, se_cols, ben_cols;
    for (std::size_t i = 0; i < header_row.size(); ++i) {
        const std::string name = csv::trim(header_row[i]);
        if (name.rfind("cat_", 0) == 0) cat_cols.push_back(i);
        else if (name.rfind("se_", 0) == 0) se_cols.push_back(i);
        else if (name.rfind("ben_", 0) == 0) ben_cols.push_back(i);
    }

    std::vector<DrugProfile> out;
    std::unordered_map<std::string, std::size_t> position;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const RowReader r{source, i + 1, rows[i]};
        DrugProfile drug;
        drug.name = csv::trim(r.cell(c_name));
        if (drug.name.empty()) throw RowError(source, i + 1, "name is empty");
        auto read_bits = [&](const std::vector<std::size_t>& cols, std::vector<std::uint8_t>& bits) {
            bits.reserve(cols.size());
            for (std::size_t c : cols) {
                const std::string v = csv::trim(r.cell(c));
                if (v == "0") bits.push_back(0);
                else if (v == "1") bits.push_back(1);
                else
                    throw RowError(source, i + 1,
                                   "non-binary value '" + v + "' in column '" +
                                       csv::trim(header_row[c]) + "'");
            }
        };
        read_bits(cat_cols, drug.categories);
        read_bits(se_cols, drug.side_effects);
        read_bits(ben_cols, drug.benefits);

        auto it = position.find(drug.name);
        if (it != position.end()) {
            if (diagnostics) {
                diagnostics->note(source + ": row " + std::to_string(i + 1) +
                                  ": duplicate drug '" + drug.name + "', last row wins");
            }
            out[it->second] = std::move(drug);
        } else {
            position.emplace(drug.name, out.size());
            out.push_back(std::move(drug));
        }
    }
    return out;
}

std::vector<InteractionRecord> parse_interactions(std::istream& in, const std::string& source) {
    csv::Row header_row;
    const auto rows = read_table(in, source, header_row);
    const Header h(header_row, source);
    const std::size_t c_a = h.require("drug_a");
    const std::size_t c_b = h.require("drug_b");
    const std::size_t c_sev = h.require("severity");

    std::vector<InteractionRecord> out;
    out.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const RowReader r{source, i + 1, rows[i]};
        InteractionRecord rec;
        rec.drug_a = csv::trim(r.cell(c_a));
        rec.drug_b = csv::trim(r.cell(c_b));
        if (rec.drug_a.empty() || rec.drug_b.empty())
            throw RowError(source, i + 1, "empty drug name");
        if (rec.drug_a == rec.drug_b)
            throw RowError(source, i + 1, "drug interacts with itself: '" + rec.drug_a + "'");
        auto sev = parse_severity(r.cell(c_sev));
        if (!sev)
            throw RowError(source, i + 1,
                           "severity must be major, moderate or minor: '" + r.cell(c_sev) + "'");
        rec.severity = *sev;
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<AdverseEventRecord> parse_adverse_events(std::istream& in,
                                                     const std::string& source) {
    csv::Row header_row;
    const auto rows = read_table(in, source, header_row);
    const Header h(header_row, source);
    const std::size_t c_drug = h.require("drug_name");
    const std::size_t c_age = h.require("age");
    const std::size_t c_gender = h.require("gender");
    const std::size_t c_reaction = h.require("reaction");
    const std::size_t c_events = h.require("events");
    const std::size_t c_other = h.require("other_drugs");

    std::vector<AdverseEventRecord> out;
    out.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const RowReader r{source, i + 1, rows[i]};
        AdverseEventRecord rec;
        rec.drug_name = csv::trim(r.cell(c_drug));
        if (rec.drug_name.empty()) throw RowError(source, i + 1, "drug_name is empty");
        rec.age = r.bounded(c_age, "age", 0, 150);
        rec.gender = parse_gender(r.cell(c_gender));
        rec.reaction = r.cell(c_reaction);
        for (const auto& name : csv::split_multi(r.cell(c_events))) {
            auto e = parse_adverse_event(name);
            if (!e) throw RowError(source, i + 1, "unknown adverse event '" + name + "'");
            rec.events.insert(*e);
        }
        if (rec.events.empty()) throw RowError(source, i + 1, "events is empty");
        for (auto& d : csv::split_multi(r.cell(c_other))) {
            if (d != "-") rec.other_drugs.push_back(std::move(d));
        }
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<RatingRecord> load_ratings(const std::filesystem::path& path) {
    return load_with(path, [](std::istream& in, const std::string& src) {
        return parse_ratings(in, src);
    });
}

std::vector<DrugProfile> load_drugs(const std::filesystem::path& path, Diagnostics* diagnostics) {
    return load_with(path, [&](std::istream& in, const std::string& src) {
        return parse_drugs(in, src, diagnostics);
    });
}

std::vector<InteractionRecord> load_interactions(const std::filesystem::path& path) {
    return load_with(path, [](std::istream& in, const std::string& src) {
        return parse_interactions(in, src);
    });
}

std::vector<AdverseEventRecord> load_adverse_events(const std::filesystem::path& path) {
    return load_with(path, [](std::istream& in, const std::string& src) {
        return parse_adverse_events(in, src);
    });
}

// --- writers ----------------------------------------------------------------

void write_ratings(const std::filesystem::path& path, std::span<const RatingRecord> records) {
    write_with(path, [&](std::ostream& out) {
        csv::write_row(out, {"user_id", "age", "gender", "is_caregiver", "condition", "drug_name",
                             "overall_rating", "effectiveness", "side_effect_severity",
                             "comment"});
        for (const auto& r : records) {
            csv::write_row(out, {r.user_id, std::to_string(r.age), std::string(to_string(r.gender)),
                                 r.is_caregiver ? "true" : "false", r.condition_text, r.drug_name,
                                 std::to_string(r.overall_rating), std::to_string(r.effectiveness),
                                 std::to_string(r.side_effect_severity), r.comment});
        }
    });
}

void write_drugs(const std::filesystem::path& path, std::span<const DrugProfile> records) {
    const std::size_t n_cat = records.empty() ? 0 : records.front().categories.size();
    const std::size_t n_se = records.empty() ? 0 : records.front().side_effects.size();
    const std::size_t n_ben = records.empty() ? 0 : records.front().benefits.size();
    for (const auto& d : records) {
        if (d.categories.size() != n_cat || d.side_effects.size() != n_se ||
            d.benefits.size() != n_ben) {
            throw ArgumentError("write_drugs: drug '" + d.name +
                                "' has vector widths different from the first drug");
        }
    }
    write_with(path, [&](std::ostream& out) {
        csv::Row header{"name"};
        for (std::size_t i = 1; i <= n_cat; ++i) header.push_back("cat_" + std::to_string(i));
        for (std::size_t i = 1; i <= n_se; ++i) header.push_back("se_" + std::to_string(i));
        for (std::size_t i = 1; i <= n_ben; ++i) header.push_back("ben_" + std::to_string(i));
        csv::write_row(out, header);
        for (const auto& d : records) {
            csv::Row row{d.name};
            for (auto b : d.categories) row.push_back(bits_to_string(b));
            for (auto b : d.side_effects) row.push_back(bits_to_string(b));
            for (auto b : d.benefits) row.push_back(bits_to_string(b));
            csv::write_row(out, row);
        }
    });
}

void write_interactions(const std::filesystem::path& path,
                        std::span<const InteractionRecord> records) {
    write_with(path, [&](std::ostream& out) {
        csv::write_row(out, {"drug_a", "drug_b", "severity"});
        for (const auto& r : records)
            csv::write_row(out, {r.drug_a, r.drug_b, std::string(to_string(r.severity))});
    });
}

void write_adverse_events(const std::filesystem::path& path,
                          std::span<const AdverseEventRecord> records) {
    write_with(path, [&](std::ostream& out) {
        csv::write_row(out, {"drug_name", "age", "gender", "reaction", "events", "other_drugs"});
        for (const auto& r : records) {
            std::vector<std::string> events;
            for (AdverseEvent e : r.events.to_vector()) events.emplace_back(to_string(e));
            csv::write_row(out, {r.drug_name, std::to_string(r.age), std::string(to_string(r.gender)),
                                 r.reaction, csv::join_multi(events),
                                 csv::join_multi(r.other_drugs)});
        }
    });
}

DatasetPaths DatasetPaths::in_directory(const std::filesystem::path& dir) {
    return {dir / "ratings.csv", dir / "drugs.csv", dir / "interactions.csv",
            dir / "adverse_events.csv"};
}

DatasetBundle load_bundle(const DatasetPaths& paths, Diagnostics* diagnostics) {
    DatasetBundle bundle;
    bundle.ratings = load_ratings(paths.ratings);
    bundle.drugs = load_drugs(paths.drugs, diagnostics);
    bundle.interactions = load_interactions(paths.interactions);
    bundle.adverse_events = load_adverse_events(paths.adverse_events);
    return bundle;
}

void write_bundle(const std::filesystem::path& dir, const DatasetBundle& bundle) {
    const auto paths = DatasetPaths::in_directory(dir);
    write_ratings(paths.ratings, bundle.ratings);
    write_drugs(paths.drugs, bundle.drugs);
    write_interactions(paths.interactions, bundle.interactions);
    write_adverse_events(paths.adverse_events, bundle.adverse_events);
}

ValidationReport validate(const DatasetBundle& bundle) {
    ValidationReport report;
    report.rating_rows = bundle.ratings.size();
    report.drug_rows = bundle.drugs.size();
    report.interaction_rows = bundle.interactions.size();
    report.adverse_event_rows = bundle.adverse_events.size();

    std::set<std::string, std::less<>> known;
    for (const auto& d : bundle.drugs) known.insert(d.name);

    auto check = [&](std::string_view name, std::set<std::string, std::less<>>& missing) {
        if (!known.contains(name)) missing.emplace(name);
    };
    std::set<std::string, std::less<>> m_ratings, m_inter, m_adverse;
    for (const auto& r : bundle.ratings) check(r.drug_name, m_ratings);
    for (const auto& r : bundle.interactions) {
        check(r.drug_a, m_inter);
        check(r.drug_b, m_inter);
    }
    for (const auto& r : bundle.adverse_events) check(r.drug_name, m_adverse);
    report.unresolved_in_ratings.assign(m_ratings.begin(), m_ratings.end());
    report.unresolved_in_interactions.assign(m_inter.begin(), m_inter.end());
    report.unresolved_in_adverse_events.assign(m_adverse.begin(), m_adverse.end());
    return report;
}

// --- splitting --------------------------------------------------------------

SplitSizes split_sizes(std::size_t n, const Fractions& f) {
    if (f.train < 0.0 || f.validation < 0.0 || f.test < 0.0)
        throw ArgumentError("split fractions must be non-negative");
    if (!(f.train > 0.0 && f.validation > 0.0 && f.test > 0.0))
        throw ArgumentError("split fractions must be positive");
    if (std::abs(f.train + f.validation + f.test - 1.0) > 1e-9)
        throw ArgumentError("split fractions must sum to 1");
    // The epsilon absorbs products like 0.29 * 100 landing just below an integer.
    auto part = [n](double frac) {
        return static_cast<std::size_t>(std::floor(static_cast<double>(n) * frac + 1e-9));
    };
    SplitSizes s;
    s.validation = part(f.validation);
    s.test = part(f.test);
    s.train = n - s.validation - s.test;
    return s;
}

Split<std::size_t> split_indices(std::size_t n, const Fractions& fractions, std::uint64_t seed) {
    const SplitSizes sizes = split_sizes(n, fractions);
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(perm));

    Split<std::size_t> out;
    out.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(sizes.train));
    out.validation.assign(perm.begin() + static_cast<std::ptrdiff_t>(sizes.train),
                          perm.begin() + static_cast<std::ptrdiff_t>(sizes.train + sizes.validation));
    out.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(sizes.train + sizes.validation),
                    perm.end());
    return out;
}

}  // namespace drugrec
