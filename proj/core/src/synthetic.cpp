#include "drugrec/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "drugrec/error.hpp"
#include "drugrec/matrix.hpp"
#include "drugrec/random.hpp"

namespace drugrec::synthetic {

namespace {

constexpr const char* kConditions[] = {
    "high blood pressure HBP", "chronic back pain",      "depression and anxiety",
    "acid reflux GERD",        "insomnia sleep problems", "migraine headaches",
    "type 2 diabetes",         "arthritis joint pain",
};

constexpr const char* kPositiveComments[] = {
    "works great, helped a lot",
    "excellent relief, would recommend",
    "very effective and easy, happy with it",
};
constexpr const char* kNeutralComments[] = {
    "took it for a few months",
    "it is ok for now",
};
constexpr const char* kNegativeComments[] = {
    "terrible, made me sick and dizzy",
    "useless and awful nausea",
    "did not work, worse than before",
};

constexpr const char* kReactions[] = {
    "cardiac arrest", "liver injury", "severe rash", "kidney failure", "fall", "seizure",
};

template <std::size_t N>
const char* pick_by_score(const char* const (&items)[N], double s) {
    const auto k = static_cast<std::size_t>(std::clamp(s, 0.0, 0.999999) * N);
    return items[std::min(k, N - 1)];
}

std::string comment_for(double s) {
    if (s >= 0.6) return pick_by_score(kPositiveComments, (s - 0.6) / 0.4);
    if (s <= 0.4) return pick_by_score(kNegativeComments, s / 0.4);
    return pick_by_score(kNeutralComments, (s - 0.4) / 0.2);
}

int scale(double s, int top) { return static_cast<int>(std::lround(s * top)); }

void validate(const SyntheticConfig& c) {
    if (c.users == 0) throw ArgumentError("synthetic: users must be > 0");
    if (c.drugs == 0) throw ArgumentError("synthetic: drugs must be > 0");
    if (c.user_clusters == 0) throw ArgumentError("synthetic: user_clusters must be > 0");
    if (c.drug_groups == 0) throw ArgumentError("synthetic: drug_groups must be > 0");
    if (c.category_bits == 0 || c.benefit_bits == 0)
        throw ArgumentError("synthetic: category_bits and benefit_bits must be > 0");
    if (c.ratings_per_user > c.drugs)
        throw ArgumentError("synthetic: ratings_per_user exceeds the drug count");
    if (c.preferred_per_cluster == 0 || c.preferred_per_cluster > c.drugs)
        throw ArgumentError("synthetic: preferred_per_cluster must be in [1, drugs]");
    if (!(c.preferred_share >= 0.0 && c.preferred_share <= 1.0))
        throw ArgumentError("synthetic: preferred_share must be in [0, 1]");
    if (!(c.noise >= 0.0)) throw ArgumentError("synthetic: noise must be >= 0");
    if (!(c.high_rate >= 0.0) || !(c.low_rate >= 0.0))
        throw ArgumentError("synthetic: rates must be >= 0");
    for (const auto& r : c.rates)
        if (!(r.rate >= 0.0)) throw ArgumentError("synthetic: rates must be >= 0");
}

}  // namespace

std::string user_id(std::size_t i) { return "u" + std::to_string(i); }

std::string drug_name(std::size_t j) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "drug%03zu", j);
    return buf;
}

SyntheticData generate_synthetic_with_truth(const SyntheticConfig& config, std::uint64_t seed) {
    validate(config);
    SyntheticData out;
    DatasetBundle& bundle = out.bundle;
    GroundTruth& truth = out.truth;
    const std::size_t C = config.user_clusters;
    const std::size_t M = config.drugs;

    // Drug profiles: group-aligned category and benefit bits plus random noise bits.
    Rng drug_rng(derive_seed(seed, "synthetic/drugs"));
    for (std::size_t j = 0; j < M; ++j) {
        DrugProfile d;
        d.name = drug_name(j);
        const std::size_t g = j % config.drug_groups;
        d.categories.assign(config.category_bits, 0);
        d.side_effects.assign(config.side_effect_bits, 0);
        d.benefits.assign(config.benefit_bits, 0);
        d.categories[g % config.category_bits] = 1;
        d.benefits[g % config.benefit_bits] = 1;
        for (auto& b : d.categories)
            if (drug_rng.bernoulli(0.1)) b = 1;
        for (auto& b : d.side_effects)
            if (drug_rng.bernoulli(0.2)) b = 1;
        for (auto& b : d.benefits)
            if (drug_rng.bernoulli(0.1)) b = 1;
        bundle.drugs.push_back(std::move(d));
    }

    // Preferred drugs per cluster: consecutive slices of a seeded permutation.
    Rng pref_rng(derive_seed(seed, "synthetic/preferences"));
    std::vector<std::size_t> order(M);
    for (std::size_t j = 0; j < M; ++j) order[j] = j;
    pref_rng.shuffle(std::span<std::size_t>(order));
    std::vector<std::vector<std::size_t>> preferred(C);
    std::vector<std::vector<std::uint8_t>> is_preferred(C, std::vector<std::uint8_t>(M, 0));
    for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t k = 0; k < config.preferred_per_cluster; ++k) {
            const std::size_t j = order[(c * config.preferred_per_cluster + k) % M];
            preferred[c].push_back(j);
            is_preferred[c][j] = 1;
        }
    }
    // Latent cluster x drug affinity.
    Matrix affinity(C, M);
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t j = 0; j < M; ++j)
            affinity(c, j) = is_preferred[c][j] ? 0.8 + 0.15 * pref_rng.uniform()
                                                : 0.1 + 0.25 * pref_rng.uniform();

    truth.preferred.resize(C);
    for (std::size_t c = 0; c < C; ++c) {
        truth.cluster_gender.push_back(c % 2 == 0 ? Gender::female : Gender::male);
        for (std::size_t j : preferred[c]) truth.preferred[c].push_back(drug_name(j));
    }

    // Users and their ratings.
    Rng user_rng(derive_seed(seed, "synthetic/users"));
    std::vector<std::size_t> exposure(M, 0);
    const double age_step = C > 1 ? 50.0 / static_cast<double>(C - 1) : 0.0;
    for (std::size_t i = 0; i < config.users; ++i) {
        const std::size_t c = i % C;
        truth.user_cluster.push_back(c);
        const double age_center = 22.0 + age_step * static_cast<double>(c);
        const int age = static_cast<int>(
            std::lround(std::clamp(user_rng.normal(age_center, 3.0), 18.0, 95.0)));
        std::vector<std::uint8_t> used(M, 0);
        for (std::size_t k = 0; k < config.ratings_per_user; ++k) {
            const bool want_preferred = user_rng.bernoulli(config.preferred_share);
            std::vector<std::size_t> pool;
            for (std::size_t j = 0; j < M; ++j)
                if (!used[j] && (is_preferred[c][j] != 0) == want_preferred) pool.push_back(j);
            if (pool.empty())
                for (std::size_t j = 0; j < M; ++j)
                    if (!used[j]) pool.push_back(j);
            const std::size_t j = pool[user_rng.index(pool.size())];
            used[j] = 1;
            ++exposure[j];

            double s = affinity(c, j);
            if (config.noise > 0.0) s = std::clamp(s + user_rng.normal(0.0, config.noise), 0.0, 1.0);
            RatingRecord r;
            r.user_id = user_id(i);
            r.age = age;
            r.gender = truth.cluster_gender[c];
            r.is_caregiver = c % 3 == 2;
            r.condition_text = kConditions[c % std::size(kConditions)];
            r.drug_name = drug_name(j);
            r.overall_rating = scale(s, 10);
            r.effectiveness = scale(s, 4);
            r.side_effect_severity = scale(s, 4);
            r.comment = comment_for(s);
            bundle.ratings.push_back(std::move(r));
        }
    }

    // Interactions between distinct random pairs.
    Rng inter_rng(derive_seed(seed, "synthetic/interactions"));
    if (M >= 2) {
        std::set<std::pair<std::size_t, std::size_t>> seen;
        const std::size_t max_pairs = M * (M - 1) / 2;
        const std::size_t wanted = std::min(config.interactions, max_pairs);
        while (seen.size() < wanted) {
            std::size_t a = inter_rng.index(M), b = inter_rng.index(M);
            if (a == b) continue;
            if (a > b) std::swap(a, b);
            if (!seen.insert({a, b}).second) continue;
            static constexpr Severity kLevels[] = {Severity::major, Severity::moderate,
                                                   Severity::minor};
            bundle.interactions.push_back({drug_name(a), drug_name(b), kLevels[inter_rng.index(3)]});
        }
    }

    // Planted adverse-event rates.
    std::map<std::pair<std::string, Gender>, double> rate;
    for (std::size_t j = 0; j < M; ++j) {
        if (exposure[j] == 0) continue;
        rate[{drug_name(j), Gender::female}] = config.low_rate;
        rate[{drug_name(j), Gender::male}] = config.low_rate;
    }
    for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t k = 0; k < std::min(config.high_rate_drugs_per_cluster, preferred[c].size()); ++k) {
            const std::size_t j = preferred[c][k];
            if (exposure[j] == 0) continue;
            rate[{drug_name(j), truth.cluster_gender[c]}] = config.high_rate;
        }
    }
    for (const auto& r : config.rates) rate[{r.drug, r.gender}] = r.rate;

    Rng ae_rng(derive_seed(seed, "synthetic/adverse_events"));
    std::vector<double> age_center(M);
    for (double& a : age_center) a = 30.0 + 40.0 * ae_rng.uniform();
    std::map<std::string, std::size_t> index_of;
    for (std::size_t j = 0; j < M; ++j) index_of[drug_name(j)] = j;
    for (const auto& [key, lambda] : rate) {
        const auto& [drug, gender] = key;
        truth.rates.push_back({drug, gender, lambda});
        auto it = index_of.find(drug);
        if (it == index_of.end()) continue;
        const std::size_t j = it->second;
        const auto count = static_cast<std::size_t>(
            std::llround(lambda * static_cast<double>(exposure[j])));
        for (std::size_t e = 0; e < count; ++e) {
            AdverseEventRecord rec;
            rec.drug_name = drug;
            rec.gender = gender;
            rec.age = static_cast<int>(
                std::lround(std::clamp(ae_rng.normal(age_center[j], 6.0), 1.0, 99.0)));
            rec.reaction = kReactions[ae_rng.index(std::size(kReactions))];
            if (ae_rng.bernoulli(0.4)) rec.events.insert(AdverseEvent::death);
            if (ae_rng.bernoulli(0.6)) rec.events.insert(AdverseEvent::hospitalization);
            if (ae_rng.bernoulli(0.25)) rec.events.insert(AdverseEvent::disability);
            if (ae_rng.bernoulli(0.2)) rec.events.insert(AdverseEvent::life_threatening);
            if (rec.events.empty()) rec.events.insert(AdverseEvent::hospitalization);
            const std::size_t others = M > 1 ? ae_rng.index(3) : 0;
            for (std::size_t o = 0; o < others; ++o) {
                const std::size_t k = ae_rng.index(M);
                if (k != j) rec.other_drugs.push_back(drug_name(k));
            }
            bundle.adverse_events.push_back(std::move(rec));
        }
    }
    return out;
}

DatasetBundle generate_synthetic(const SyntheticConfig& config, std::uint64_t seed) {
    return generate_synthetic_with_truth(config, seed).bundle;
}

}  // namespace drugrec::synthetic
