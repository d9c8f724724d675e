#include "drugrec/knowledge_base.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

namespace drugrec::kb {

namespace {

constexpr double kZ975 = 1.96;

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

}  // namespace

std::string_view to_string(RiskMode m) {
    return m == RiskMode::pmf_at_one ? "pmf_at_one" : "at_least_one";
}

RiskMode parse_risk_mode(std::string_view text) {
    if (text == "at_least_one") return RiskMode::at_least_one;
    if (text == "pmf_at_one") return RiskMode::pmf_at_one;
    throw ArgumentError("unknown risk mode '" + std::string(text) + "'");
}

std::string_view to_string(AgeRuleDirection d) {
    return d == AgeRuleDirection::require_inside ? "require_inside" : "exclude_inside";
}

AgeRuleDirection parse_age_rule_direction(std::string_view text) {
    if (text == "exclude_inside") return AgeRuleDirection::exclude_inside;
    if (text == "require_inside") return AgeRuleDirection::require_inside;
    throw ArgumentError("unknown age rule direction '" + std::string(text) + "'");
}

std::string_view to_string(AllowedGenders a) {
    switch (a) {
        case AllowedGenders::none: return "none";
        case AllowedGenders::female: return "female";
        case AllowedGenders::male: return "male";
        case AllowedGenders::both: return "both";
    }
    return "both";
}

AllowedGenders parse_allowed_genders(std::string_view text) {
    if (text == "none") return AllowedGenders::none;
    if (text == "female") return AllowedGenders::female;
    if (text == "male") return AllowedGenders::male;
    if (text == "both") return AllowedGenders::both;
    throw ArgumentError("unknown allowed-gender value '" + std::string(text) + "'");
}

std::string_view to_string(RemovalReason r) {
    switch (r) {
        case RemovalReason::gender: return "gender";
        case RemovalReason::age: return "age";
        case RemovalReason::interaction: return "interaction";
    }
    return "gender";
}

double poisson_risk(double lambda, RiskMode mode) {
    if (!(lambda >= 0.0)) throw ArgumentError("poisson rate must be >= 0");
    if (mode == RiskMode::pmf_at_one) return lambda * std::exp(-lambda);
    return -std::expm1(-lambda);
}

bool GenderRule::allows(Gender g) const {
    switch (g) {
        case Gender::female:
            return allowed == AllowedGenders::female || allowed == AllowedGenders::both;
        case Gender::male:
            return allowed == AllowedGenders::male || allowed == AllowedGenders::both;
        case Gender::unspecified:
            return allowed == AllowedGenders::both;
    }
    return false;
}

// --- exposures ----------------------------------------------------------------

void ExposureTable::set(const std::string& drug, Gender g, double count) {
    counts_[{drug, g}] = count;
}

void ExposureTable::add(const std::string& drug, Gender g, double count) {
    counts_[{drug, g}] += count;
}

double ExposureTable::get(std::string_view drug, Gender g) const {
    auto it = counts_.find(std::pair<std::string, Gender>{std::string(drug), g});
    return it == counts_.end() ? 0.0 : it->second;
}

ExposureTable ExposureTable::from_ratings(std::span<const RatingRecord> ratings) {
    ExposureTable t;
    for (const auto& r : ratings) {
        t.add(r.drug_name, Gender::female, 1.0);
        t.add(r.drug_name, Gender::male, 1.0);
    }
    return t;
}

// --- rule derivation ----------------------------------------------------------

std::vector<GenderRule> derive_gender_rules(std::span<const AdverseEventRecord> events,
                                            const ExposureTable& exposures, double threshold,
                                            RiskMode mode) {
    std::map<std::string, std::pair<double, double>, std::less<>> counts;  // female, male
    for (const auto& e : events) {
        auto& c = counts[e.drug_name];
        if (e.gender == Gender::female) c.first += 1.0;
        else if (e.gender == Gender::male) c.second += 1.0;
    }
    std::vector<GenderRule> rules;
    std::vector<std::string> missing;
    for (const auto& [drug, c] : counts) {
        GenderRule rule;
        rule.drug_name = drug;
        rule.exposure_female = exposures.get(drug, Gender::female);
        rule.exposure_male = exposures.get(drug, Gender::male);
        if (c.first > 0.0 && !(rule.exposure_female > 0.0)) missing.push_back(drug + "/female");
        if (c.second > 0.0 && !(rule.exposure_male > 0.0)) missing.push_back(drug + "/male");
        rule.lambda_female = c.first > 0.0 && rule.exposure_female > 0.0 ? c.first / rule.exposure_female : 0.0;
        rule.lambda_male = c.second > 0.0 && rule.exposure_male > 0.0 ? c.second / rule.exposure_male : 0.0;
        const bool female_ok = poisson_risk(rule.lambda_female, mode) <= threshold;
        const bool male_ok = poisson_risk(rule.lambda_male, mode) <= threshold;
        rule.allowed = female_ok && male_ok ? AllowedGenders::both
                       : female_ok          ? AllowedGenders::female
                       : male_ok            ? AllowedGenders::male
                                            : AllowedGenders::none;
        rules.push_back(std::move(rule));
    }
    if (!missing.empty()) {
        std::string msg = "adverse events recorded without exposure for:";
        for (const auto& m : missing) msg += " " + m;
        throw ValidationError(msg, missing);
    }
    return rules;
}

std::vector<AgeRule> derive_age_rules(std::span<const AdverseEventRecord> events,
                                      Diagnostics* diagnostics) {
    std::map<std::string, std::vector<double>, std::less<>> ages;
    for (const auto& e : events) ages[e.drug_name].push_back(static_cast<double>(e.age));
    std::vector<AgeRule> rules;
    for (const auto& [drug, xs] : ages) {
        if (xs.size() < 2) {
            if (diagnostics)
                diagnostics->note("no age rule for " + drug + ": only " +
                                  std::to_string(xs.size()) + " adverse-event record");
            continue;
        }
        const double n = static_cast<double>(xs.size());
        double sum = 0.0;
        for (double x : xs) sum += x;
        const double mean = sum / n;
        double ss = 0.0;
        for (double x : xs) ss += (x - mean) * (x - mean);
        const double sd = std::sqrt(ss / (n - 1.0));
        const double half = kZ975 * sd / std::sqrt(n);
        rules.push_back({drug, mean, sd, xs.size(), mean - half, mean + half});
    }
    return rules;
}

SafetyRuleSet build_rule_set(std::span<const AdverseEventRecord> events,
                             const ExposureTable& exposures,
                             std::span<const InteractionRecord> interactions,
                             const RuleOptions& options, Diagnostics* diagnostics) {
    if (!(options.threshold > 0.0 && options.threshold < 1.0))
        throw ArgumentError("risk threshold must be in (0, 1)");
    SafetyRuleSet rules;
    rules.threshold = options.threshold;
    rules.risk_mode = options.risk_mode;
    rules.age_rule_direction = options.age_rule_direction;
    for (auto& g : derive_gender_rules(events, exposures, options.threshold, options.risk_mode))
        rules.gender_rules.emplace(g.drug_name, std::move(g));
    for (auto& a : derive_age_rules(events, diagnostics))
        rules.age_rules.emplace(a.drug_name, std::move(a));
    rules.interactions = InteractionIndex(interactions);
    return rules;
}

// --- filtering ----------------------------------------------------------------

InteractionCheck check_interactions(std::string_view candidate,
                                    std::span<const std::string> current_drugs,
                                    const InteractionIndex& index) {
    InteractionCheck out;
    for (const auto& other : current_drugs) {
        if (!index.knows(other)) {
            out.unknown.push_back(other);
            continue;
        }
        const auto sev = index.lookup(candidate, other);
        if (!sev) continue;
        if (*sev == Severity::major) out.major.push_back(other);
        else if (*sev == Severity::moderate) out.moderate.push_back(other);
    }
    if (!out.major.empty()) out.verdict = InteractionVerdict::exclude;
    else if (!out.moderate.empty()) out.verdict = InteractionVerdict::warn;
    return out;
}

std::optional<Removal> violation(std::string_view drug, const Patient& patient,
                                 const SafetyRuleSet& rules) {
    if (auto it = rules.gender_rules.find(drug); it != rules.gender_rules.end()) {
        const GenderRule& g = it->second;
        if (!g.allows(patient.gender)) {
            return Removal{std::string(drug), RemovalReason::gender,
                           "allowed genders: " + std::string(to_string(g.allowed)) +
                               "; risk female " +
                               format_number(poisson_risk(g.lambda_female, rules.risk_mode)) +
                               ", male " +
                               format_number(poisson_risk(g.lambda_male, rules.risk_mode)) +
                               ", threshold " + format_number(rules.threshold)};
        }
    }
    if (auto it = rules.age_rules.find(drug); it != rules.age_rules.end()) {
        const AgeRule& a = it->second;
        const bool inside = a.contains(patient.age);
        const bool excluded = rules.age_rule_direction == AgeRuleDirection::exclude_inside
                                  ? inside
                                  : !inside;
        if (excluded) {
            return Removal{std::string(drug), RemovalReason::age,
                           "age " + format_number(patient.age) +
                               (inside ? " inside " : " outside ") + "risk interval [" +
                               format_number(a.low) + ", " + format_number(a.high) + "]"};
        }
    }
    const InteractionCheck ic = check_interactions(drug, patient.current_drugs, rules.interactions);
    if (ic.verdict == InteractionVerdict::exclude) {
        std::string detail = "major interaction with";
        for (const auto& m : ic.major) detail += " " + m;
        return Removal{std::string(drug), RemovalReason::interaction, detail};
    }
    return std::nullopt;
}

FilterResult apply_rules(std::span<const Candidate> candidates, const Patient& patient,
                         const SafetyRuleSet& rules) {
    FilterResult out;
    for (const auto& c : candidates) {
        if (auto v = violation(c.drug_name, patient, rules)) {
            out.removed.push_back(std::move(*v));
            continue;
        }
        Candidate kept{c.drug_name, c.score, {}};
        const InteractionCheck ic =
            check_interactions(c.drug_name, patient.current_drugs, rules.interactions);
        for (const auto& m : ic.moderate) kept.warnings.push_back("moderate interaction with " + m);
        out.kept.push_back(std::move(kept));
    }
    return out;
}

}  // namespace drugrec::kb
