#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "drugrec/dataset.hpp"
#include "drugrec/error.hpp"

namespace drugrec::kb {

enum class RiskMode {
    at_least_one,  // P(N >= 1) = 1 - e^-lambda
    pmf_at_one,    // P(N = 1) = lambda e^-lambda
};

enum class AgeRuleDirection {
    exclude_inside,  // ages inside the interval are elevated risk
    require_inside,  // only ages inside the interval are allowed
};

enum class AllowedGenders { none, female, male, both };

std::string_view to_string(RiskMode m);
RiskMode parse_risk_mode(std::string_view text);
std::string_view to_string(AgeRuleDirection d);
AgeRuleDirection parse_age_rule_direction(std::string_view text);
std::string_view to_string(AllowedGenders a);
AllowedGenders parse_allowed_genders(std::string_view text);

double poisson_risk(double lambda, RiskMode mode);

struct GenderRule {
    std::string drug_name;
    double lambda_female = 0.0;
    double lambda_male = 0.0;
    AllowedGenders allowed = AllowedGenders::both;
    double exposure_female = 0.0;
    double exposure_male = 0.0;

    bool allows(Gender g) const;

    friend bool operator==(const GenderRule&, const GenderRule&) = default;
};

struct AgeRule {
    std::string drug_name;
    double mean = 0.0;
    double stddev = 0.0;
    std::size_t sample_count = 0;
    double low = 0.0;
    double high = 0.0;

    // Closed interval membership.
    bool contains(double age) const { return age >= low && age <= high; }

    friend bool operator==(const AgeRule&, const AgeRule&) = default;
};

// Exposure counts eta keyed by (drug, gender).
class ExposureTable {
public:
    void set(const std::string& drug, Gender g, double count);
    void add(const std::string& drug, Gender g, double count);
    // 0 when absent.
    double get(std::string_view drug, Gender g) const;

    // Fallback used when no table is supplied: every rating of a drug counts
    // as one exposure for both genders.
    static ExposureTable from_ratings(std::span<const RatingRecord> ratings);

    bool operator==(const ExposureTable&) const = default;

private:
    std::map<std::pair<std::string, Gender>, double, std::less<>> counts_;
};

// Events per (drug, gender) / eta; gender disallowed when risk > threshold.
// Records with unspecified gender are not attributed to either gender.
// Throws ValidationError for events on a (drug, gender) with zero exposure.
std::vector<GenderRule> derive_gender_rules(std::span<const AdverseEventRecord> events,
                                            const ExposureTable& exposures, double threshold,
                                            RiskMode mode);

// mean +- 1.96 sd / sqrt(n) per drug, sample sd. Drugs with fewer than two
// records get no rule and a diagnostic.
std::vector<AgeRule> derive_age_rules(std::span<const AdverseEventRecord> events,
                                      Diagnostics* diagnostics = nullptr);

enum class InteractionVerdict { clear, warn, exclude };

struct InteractionCheck {
    InteractionVerdict verdict = InteractionVerdict::clear;
    // Current drugs responsible for the verdict: major pairs for exclude,
    // moderate pairs for warn.
    std::vector<std::string> major;
    std::vector<std::string> moderate;
    // Current drugs the index has never seen.
    std::vector<std::string> unknown;
};

InteractionCheck check_interactions(std::string_view candidate,
                                    std::span<const std::string> current_drugs,
                                    const InteractionIndex& index);

struct SafetyRuleSet {
    std::map<std::string, GenderRule, std::less<>> gender_rules;
    std::map<std::string, AgeRule, std::less<>> age_rules;
    InteractionIndex interactions;
    double threshold = 0.5;
    RiskMode risk_mode = RiskMode::at_least_one;
    AgeRuleDirection age_rule_direction = AgeRuleDirection::exclude_inside;

    bool empty() const {
        return gender_rules.empty() && age_rules.empty() && interactions.empty();
    }
};

struct RuleOptions {
    double threshold = 0.5;
    RiskMode risk_mode = RiskMode::at_least_one;
    AgeRuleDirection age_rule_direction = AgeRuleDirection::exclude_inside;
};

// Throws ArgumentError unless threshold is in (0, 1).
SafetyRuleSet build_rule_set(std::span<const AdverseEventRecord> events,
                             const ExposureTable& exposures,
                             std::span<const InteractionRecord> interactions,
                             const RuleOptions& options, Diagnostics* diagnostics = nullptr);

struct Patient {
    double age = 0.0;
    Gender gender = Gender::unspecified;
    std::vector<std::string> current_drugs;
};

struct Candidate {
    std::string drug_name;
    double score = 0.0;
    std::vector<std::string> warnings;

    friend bool operator==(const Candidate&, const Candidate&) = default;
};

enum class RemovalReason { gender, age, interaction };
std::string_view to_string(RemovalReason r);

struct Removal {
    std::string drug_name;
    RemovalReason reason = RemovalReason::gender;
    std::string detail;
};

struct FilterResult {
    std::vector<Candidate> kept;
    std::vector<Removal> removed;
};

// Keeps candidates in their input order. Warnings are rebuilt from the rule
// set on every call, so applying the filter twice changes nothing.
FilterResult apply_rules(std::span<const Candidate> candidates, const Patient& patient,
                         const SafetyRuleSet& rules);

// The reason a single drug would be removed for this patient, if any.
std::optional<Removal> violation(std::string_view drug, const Patient& patient,
                                 const SafetyRuleSet& rules);

}  // namespace drugrec::kb
