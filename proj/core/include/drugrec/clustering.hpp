#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "drugrec/matrix.hpp"
#include "drugrec/rating_matrix.hpp"

namespace drugrec::clustering {

// Per-column min-max scaling to [0, 1]. Constant columns map to 0.
class MinMaxScaler {
public:
    MinMaxScaler() = default;
    MinMaxScaler(std::vector<double> mins, std::vector<double> ranges)
        : mins_(std::move(mins)), ranges_(std::move(ranges)) {}

    static MinMaxScaler fit(const Matrix& points);

    std::vector<double> transform(std::span<const double> x) const;
    Matrix transform(const Matrix& points) const;

    std::size_t dimension() const noexcept { return mins_.size(); }
    const std::vector<double>& mins() const noexcept { return mins_; }
    const std::vector<double>& ranges() const noexcept { return ranges_; }

private:
    std::vector<double> mins_;
    std::vector<double> ranges_;
};

// Parameters of the self-tuning K-means that starts from one cluster per
// distinct point and discards clusters whose mixing weight falls to 1/n.
struct UKMeansParams {
    double epsilon = 1e-6;
    std::size_t max_iterations = 1000;
    std::uint64_t seed = 0;
    // Entropy weight B is zeroed once the cluster count has not changed for
    // this many iterations.
    std::size_t stale_count_window = 60;
    // Penalty weight L = exp(-c / l_decay_constant), c = current cluster count.
    double l_decay_constant = 250.0;
    // Spread of the seeded log-weight perturbation applied to the initial
    // mixing weights. With all weights equal the first update is a tie.
    double initial_weight_jitter = 1.0;

    // Fixed-k switches used to compare against plain Lloyd iterations.
    bool pin_penalties_to_zero = false;
    bool disable_discard = false;
    // Start from these centers (uniform weights) instead of the distinct points.
    std::optional<Matrix> initial_centers;
    // Keep per-iteration assignments and centers in the diagnostics.
    bool record_history = false;
};

struct FitDiagnostics {
    // Times an update produced a non-finite value and fell back.
    std::size_t alpha_clamps = 0;
    std::size_t beta_clamps = 0;
    // Cluster count after each iteration's discard step; [0] is the start.
    std::vector<std::size_t> cluster_counts;
    // Sum of mixing weights after each renormalization.
    std::vector<double> weight_sums;
    std::vector<std::vector<std::size_t>> assignment_history;
    std::vector<Matrix> center_history;
};

struct ClusterModel {
    Matrix centers;                         // final_k x dim
    std::vector<double> mixing_weights;     // sums to 1, each > 0
    std::vector<std::size_t> assignments;   // one-hot membership as an index per point
    std::vector<std::size_t> cluster_sizes;
    std::size_t iterations_run = 0;
    std::vector<double> objective_trace;
    // L and B when the fit stopped. assign() uses penalty_weight.
    double penalty_weight = 0.0;
    double entropy_weight = 0.0;
    UKMeansParams params;
    FitDiagnostics diagnostics;

    std::size_t final_k() const noexcept { return centers.rows(); }
    std::size_t dimension() const noexcept { return centers.cols(); }
    // Dense n x k one-hot membership matrix.
    Matrix membership_matrix() const;
};

// Throws ArgumentError on empty input, ragged rows, or non-finite values.
ClusterModel ukmeans_fit(const Matrix& points, const UKMeansParams& params = {});

// sum_ij M_ij |x_i - a_j|^2 - B sum_j alpha_j ln alpha_j - L sum_ij M_ij ln alpha_j
double kmeans_objective(const Matrix& points, const ClusterModel& model, double entropy_weight,
                        double penalty_weight);

// argmin_k |x - a_k|^2 - L ln alpha_k with L = model.penalty_weight; ties go
// to the lowest index.
std::size_t assign(const ClusterModel& model, std::span<const double> point);

struct ObservedRating {
    std::vector<double> user_features;  // already scaled like the model's points
    std::string drug_name;
    double cur = 0.0;
};

// Rows are user clusters, columns follow drug_index. Each observed cell is the
// mean CUR of the ratings mapped to it. Throws ValidationError naming every
// unknown drug.
SparseRatingMatrix compact_rating_matrix(std::span<const ObservedRating> ratings,
                                         const ClusterModel& user_model,
                                         std::span<const std::string> drug_index);

}  // namespace drugrec::clustering
