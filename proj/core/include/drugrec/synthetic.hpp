#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "drugrec/dataset.hpp"

namespace drugrec::synthetic {

struct PlantedRate {
    std::string drug;
    Gender gender = Gender::female;
    double rate = 0.0;

    friend bool operator==(const PlantedRate&, const PlantedRate&) = default;
};

struct SyntheticConfig {
    std::size_t users = 500;
    std::size_t drugs = 50;
    std::size_t user_clusters = 3;
    std::size_t drug_groups = 5;
    std::size_t category_bits = 12;
    std::size_t side_effect_bits = 8;
    std::size_t benefit_bits = 6;
    std::size_t ratings_per_user = 4;
    std::size_t preferred_per_cluster = 5;
    // Share of each user's ratings drawn from the cluster's preferred drugs.
    double preferred_share = 0.7;
    // Standard deviation of the per-rating perturbation of the latent score.
    double noise = 0.0;
    std::size_t interactions = 30;

    // Adverse events per (drug, gender) are round(rate * eta), eta being the
    // drug's rating count. Each cluster's first `high_rate_drugs_per_cluster`
    // preferred drugs get high_rate for the cluster's gender; every other
    // rated pair gets low_rate. Entries in `rates` override both.
    double high_rate = 1.5;
    double low_rate = 0.05;
    std::size_t high_rate_drugs_per_cluster = 1;
    std::vector<PlantedRate> rates;
};

struct GroundTruth {
    // Planted cluster of each user, indexed like the user ids "u0", "u1", ...
    std::vector<std::size_t> user_cluster;
    std::vector<Gender> cluster_gender;
    // Drug names preferred by each cluster.
    std::vector<std::vector<std::string>> preferred;
    // Effective rate of every (drug, gender) pair with at least one exposure
    // or an explicit override.
    std::vector<PlantedRate> rates;
};

struct SyntheticData {
    DatasetBundle bundle;
    GroundTruth truth;
};

// Throws ArgumentError for zero users or drugs and inconsistent settings.
SyntheticData generate_synthetic_with_truth(const SyntheticConfig& config, std::uint64_t seed);
DatasetBundle generate_synthetic(const SyntheticConfig& config, std::uint64_t seed);

// Names used by the generator.
std::string user_id(std::size_t i);
std::string drug_name(std::size_t j);

}  // namespace drugrec::synthetic
