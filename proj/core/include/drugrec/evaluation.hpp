#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "drugrec/dataset.hpp"
#include "drugrec/factorization.hpp"
#include "drugrec/recommender.hpp"

namespace drugrec::eval {

struct ConfusionMatrix {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;

    std::size_t total() const noexcept { return tp + fp + tn + fn; }
    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

// Positive means >= threshold, on the 0-10 display scale.
ConfusionMatrix binarize_and_count(std::span<const double> predicted,
                                   std::span<const double> actual, double threshold = 4.0);

struct ScalarMetrics {
    double accuracy = 0.0;
    double sensitivity = 0.0;
    double specificity = 0.0;
    double precision = 0.0;
    double f1 = 0.0;
    double f2 = 0.0;
    double mcc = 0.0;
    // Names of metrics whose denominator was zero; those report 0.
    std::vector<std::string> undefined;
};

ScalarMetrics metrics(const ConfusionMatrix& cm);

// (1 + b^2) P R / (b^2 P + R); 0 when the denominator is 0.
double f_beta(double precision, double recall, double beta);

struct RocPoint {
    double threshold = 0.0;
    double fpr = 0.0;
    double tpr = 0.0;
};

struct RocCurve {
    std::vector<RocPoint> points;  // from (0,0) to (1,1)
    double auc = 0.0;
};

// Throws UndefinedMetricError unless both classes are present.
RocCurve roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct HitSample {
    std::string user;
    std::string drug;
    double actual_rating = 0.0;  // display scale
};

using TopLists = std::map<std::string, std::vector<std::string>>;

// Share of samples whose drug is in the user's list. Throws on no samples.
double hit_rate(const TopLists& lists, std::span<const HitSample> samples);
// Counts only hits whose actual rating is >= threshold.
double cumulative_hit_rate(const TopLists& lists, std::span<const HitSample> samples,
                           double threshold = 4.0);

struct LoggedRecommendation {
    std::size_t patient = 0;  // index into the adverse-event ground truth
    std::string drug;
};

struct AdverseRatios {
    double death = 0.0;
    double hospitalization = 0.0;
    double disability = 0.0;
    std::size_t recommendations = 0;
    std::size_t deaths = 0;
    std::size_t hospitalizations = 0;
    std::size_t disabilities = 0;
};

// A recommendation counts toward an event when its drug is the patient's
// recorded drug and the record lists that event. Throws on an empty log.
AdverseRatios adverse_ratios(std::span<const LoggedRecommendation> log,
                             std::span<const AdverseEventRecord> ground_truth);

// --- pipeline evaluation --------------------------------------------------------

struct BaselineOptions {
    std::size_t rank = 5;
    double learning_rate = 0.02;
    std::size_t epochs = 300;
    double init_range = 0.1;
};

struct EvaluationOptions {
    double relevance_threshold = 4.0;
    std::size_t top_n = 10;
    BaselineOptions baseline;
};

struct ModelReport {
    std::string name;
    ConfusionMatrix confusion;
    ScalarMetrics scalars;
    std::optional<RocCurve> roc;  // empty when the test labels are single-class
    double rmse = 0.0;            // on the CUR scale
    double hit_rate = 0.0;
    double cumulative_hit_rate = 0.0;
    // hit rate when the knowledge base filters each list; proposed model only
    std::optional<double> hit_rate_with_kb;
    // cumulative hit rate at thresholds 0, 1, ..., 10
    std::vector<double> cumulative_curve;
};

struct KbAblation {
    std::size_t patients = 0;
    AdverseRatios without_kb;
    AdverseRatios with_kb;
};

struct MetricsReport {
    double relevance_threshold = 4.0;
    std::size_t top_n = 10;
    std::size_t test_samples = 0;
    ModelReport proposed;
    ModelReport baseline;
    std::optional<KbAblation> ablation;  // absent without held-out adverse events
};

// Scores the proposed pipeline and the conventional-MF baseline on the test
// ratings. Test samples are never part of the trained matrix, so each
// sample's rating is already withheld when its list is ranked.
MetricsReport evaluate_pipeline(const rec::PipelineArtifacts& artifacts,
                                std::span<const RatingRecord> train_ratings,
                                std::span<const RatingRecord> test_ratings,
                                std::span<const AdverseEventRecord> test_adverse_events,
                                const EvaluationOptions& options = {});

// Knowledge-base ablation over held-out adverse-event patients.
KbAblation run_kb_ablation(const rec::PipelineArtifacts& artifacts,
                           std::span<const AdverseEventRecord> patients, std::size_t top_n);

}  // namespace drugrec::eval
