#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "drugrec/clustering.hpp"
#include "drugrec/dataset.hpp"
#include "drugrec/error.hpp"
#include "drugrec/factorization.hpp"
#include "drugrec/knowledge_base.hpp"
#include "drugrec/rating_matrix.hpp"
#include "drugrec/textprep.hpp"

namespace drugrec::rec {

struct PipelineConfig {
    std::uint64_t seed = 0;
    std::size_t min_frequency = 2;
    text::CurMode cur_mode = text::CurMode::normalized_average;
    // Add comment terms to the user clustering features.
    bool comment_features = false;
    clustering::UKMeansParams user_clustering;
    clustering::UKMeansParams drug_clustering;
    factorization::TrainConfig training;
    kb::RuleOptions rules;
    // Ratings split (train/validation/test) and the adverse-event share used
    // for rule extraction.
    Fractions split;
    double rule_extraction_fraction = 0.8;
};

// Stage seeds derived from the master seed.
std::map<std::string, std::uint64_t> stage_seeds(std::uint64_t master);

// The ratings and adverse events held out from training.
struct HeldOut {
    std::vector<RatingRecord> validation_ratings;
    std::vector<RatingRecord> test_ratings;
    std::vector<AdverseEventRecord> test_adverse_events;
};

struct PreparedData {
    DatasetBundle training;  // train ratings, all drugs and interactions, rule-extraction events
    HeldOut held_out;
};

// Deterministic split of a bundle according to config.split,
// config.rule_extraction_fraction and the master seed.
PreparedData prepare_splits(const DatasetBundle& bundle, const PipelineConfig& config);

struct PatientQuery {
    double age = 0.0;
    Gender gender = Gender::unspecified;
    bool is_caregiver = false;
    std::string condition_text;
    std::vector<std::string> current_drugs;
    // Only used when the pipeline clusters on comment terms.
    std::string comment;
};

PatientQuery query_from_rating(const RatingRecord& r);
PatientQuery query_from_adverse_event(const AdverseEventRecord& r);

struct PipelineArtifacts {
    PipelineConfig config;
    std::map<std::string, std::uint64_t> seeds;
    text::Vocabulary vocabulary;
    clustering::MinMaxScaler user_scaler;
    clustering::MinMaxScaler drug_scaler;
    clustering::ClusterModel user_clusters;
    clustering::ClusterModel drug_clusters;
    std::vector<std::string> drug_names;
    SparseRatingMatrix observed;
    factorization::FactorizationModel model;
    std::vector<factorization::LossPoint> loss_trace;
    kb::SafetyRuleSet rules;
    Diagnostics diagnostics;

    // Derived on load or build: model predictions for every (cluster, drug).
    Matrix predictions;

    std::size_t drug_index(std::string_view name) const;  // npos if unknown
    void refresh_predictions();
};

// textprep -> CUR -> user and drug clustering -> compaction -> training ->
// rule derivation. Failures are rethrown as StageError naming the stage.
PipelineArtifacts build_pipeline(const DatasetBundle& bundle, const PipelineConfig& config);

// Unscaled user feature vector: gender one-hot (female, male, unspecified),
// age, caregiver flag, then vocabulary presence bits.
std::vector<double> raw_user_features(const PatientQuery& patient,
                                      const text::Vocabulary& vocabulary,
                                      bool comment_features);

std::size_t assign_user_cluster(const PatientQuery& patient, const PipelineArtifacts& artifacts);

struct Recommendation {
    std::string drug_name;
    double score = 0.0;
    double display_rating = 0.0;
    std::vector<std::string> warnings;
    std::size_t rank = 0;
};

struct RecommendOptions {
    std::size_t n = 10;
    bool use_knowledge_base = true;
};

struct RecommendResult {
    std::size_t user_cluster = 0;
    std::vector<Recommendation> recommendations;
    std::vector<kb::Removal> removed;
    Diagnostics diagnostics;
};

// Throws ArgumentError when n < 1.
RecommendResult recommend(const PatientQuery& patient, const PipelineArtifacts& artifacts,
                          const RecommendOptions& options = {});

// Every drug ranked by model score for one cluster, no filtering.
std::vector<std::string> ranked_drugs(const PipelineArtifacts& artifacts, std::size_t cluster);

struct ColdStartEstimate {
    std::size_t drug_cluster = 0;
    std::vector<double> scores;             // one per user cluster
    std::vector<std::uint8_t> fallback;     // 1 where the global mean was used
};

ColdStartEstimate cold_start_score(const DrugProfile& drug, const PipelineArtifacts& artifacts);

}  // namespace drugrec::rec
