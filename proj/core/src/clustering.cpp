#include "drugrec/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <unordered_map>

#include "drugrec/error.hpp"
#include "drugrec/random.hpp"

namespace drugrec::clustering {

namespace {

constexpr std::size_t kUnassigned = static_cast<std::size_t>(-1);

double log_weight(double alpha) {
    return alpha > 0.0 ? std::log(alpha) : -std::numeric_limits<double>::infinity();
}

// alpha ln alpha with the 0 ln 0 = 0 convention.
double entropy_term(double alpha) { return alpha > 0.0 ? alpha * std::log(alpha) : 0.0; }

std::size_t penalized_argmin(const Matrix& centers, std::span<const double> log_alpha,
                             double penalty, std::span<const double> x) {
    std::size_t best = 0;
    double best_score = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < centers.rows(); ++k) {
        double score = squared_distance(x, centers.row(k));
        if (penalty != 0.0) score -= penalty * log_alpha[k];
        if (score < best_score) {
            best_score = score;
            best = k;
        }
    }
    return best;
}

double objective(const Matrix& points, const Matrix& centers, std::span<const double> alpha,
                 std::span<const std::size_t> assignments, double B, double L) {
    double distortion = 0.0;
    double membership_log = 0.0;
    for (std::size_t i = 0; i < points.rows(); ++i) {
        const std::size_t k = assignments[i];
        if (k == kUnassigned) continue;
        distortion += squared_distance(points.row(i), centers.row(k));
        if (L != 0.0) membership_log += std::log(alpha[k]);
    }
    double entropy = 0.0;
    if (B != 0.0) {
        for (double a : alpha) entropy += entropy_term(a);
    }
    double value = distortion;
    if (B != 0.0) value -= B * entropy;
    if (L != 0.0) value -= L * membership_log;
    return value;
}

void validate_points(const Matrix& points) {
    if (points.rows() == 0) throw ArgumentError("ukmeans_fit: no points");
    for (double v : points.data()) {
        if (!std::isfinite(v)) throw ArgumentError("ukmeans_fit: non-finite feature value");
    }
}

}  // namespace

// --- MinMaxScaler -------------------------------------------------------------

MinMaxScaler MinMaxScaler::fit(const Matrix& points) {
    const std::size_t d = points.cols();
    std::vector<double> mins(d, 0.0), ranges(d, 0.0);
    if (points.rows() == 0) return MinMaxScaler(std::move(mins), std::move(ranges));
    for (std::size_t j = 0; j < d; ++j) {
        double lo = points(0, j), hi = points(0, j);
        for (std::size_t i = 1; i < points.rows(); ++i) {
            lo = std::min(lo, points(i, j));
            hi = std::max(hi, points(i, j));
        }
        mins[j] = lo;
        ranges[j] = hi - lo;
    }
    return MinMaxScaler(std::move(mins), std::move(ranges));
}

std::vector<double> MinMaxScaler::transform(std::span<const double> x) const {
    if (x.size() != mins_.size())
        throw ArgumentError("MinMaxScaler: expected " + std::to_string(mins_.size()) +
                            " features, got " + std::to_string(x.size()));
    std::vector<double> out(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
        out[j] = ranges_[j] > 0.0 ? (x[j] - mins_[j]) / ranges_[j] : 0.0;
    }
    return out;
}

Matrix MinMaxScaler::transform(const Matrix& points) const {
    Matrix out(points.rows(), points.cols());
    for (std::size_t i = 0; i < points.rows(); ++i) {
        const auto row = transform(points.row(i));
        std::copy(row.begin(), row.end(), out.row(i).begin());
    }
    return out;
}

// --- ClusterModel -------------------------------------------------------------

Matrix ClusterModel::membership_matrix() const {
    Matrix m(assignments.size(), final_k());
    for (std::size_t i = 0; i < assignments.size(); ++i) m(i, assignments[i]) = 1.0;
    return m;
}

// --- fit ----------------------------------------------------------------------

ClusterModel ukmeans_fit(const Matrix& points, const UKMeansParams& params) {
    validate_points(points);
    if (!(params.epsilon > 0.0)) throw ArgumentError("ukmeans_fit: epsilon must be > 0");
    if (params.max_iterations < 1) throw ArgumentError("ukmeans_fit: max_iterations must be >= 1");
    if (!(params.l_decay_constant > 0.0))
        throw ArgumentError("ukmeans_fit: l_decay_constant must be > 0");

    const std::size_t n = points.rows();
    const std::size_t dim = points.cols();
    const double n_real = static_cast<double>(n);
    const bool pinned = params.pin_penalties_to_zero;

    ClusterModel model;
    model.params = params;
    FitDiagnostics& diag = model.diagnostics;

    Matrix centers;
    std::vector<double> alpha;
    if (params.initial_centers) {
        centers = *params.initial_centers;
        if (centers.rows() == 0 || centers.cols() != dim)
            throw ArgumentError("ukmeans_fit: initial centers do not match point dimension");
        alpha.assign(centers.rows(), 1.0 / static_cast<double>(centers.rows()));
    } else {
        // One cluster per distinct point; duplicates add to its weight.
        std::map<std::vector<double>, std::size_t> distinct;
        std::vector<std::size_t> first_row;
        std::vector<double> multiplicity;
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> key(points.row(i).begin(), points.row(i).end());
            auto [it, inserted] = distinct.emplace(std::move(key), first_row.size());
            if (inserted) {
                first_row.push_back(i);
                multiplicity.push_back(1.0);
            } else {
                multiplicity[it->second] += 1.0;
            }
        }
        centers = Matrix(first_row.size(), dim);
        for (std::size_t k = 0; k < first_row.size(); ++k) {
            const auto src = points.row(first_row[k]);
            std::copy(src.begin(), src.end(), centers.row(k).begin());
        }
        Rng rng(params.seed);
        alpha.resize(first_row.size());
        double total = 0.0;
        for (std::size_t k = 0; k < alpha.size(); ++k) {
            alpha[k] = multiplicity[k] * std::exp(params.initial_weight_jitter * rng.uniform());
            total += alpha[k];
        }
        for (double& a : alpha) a /= total;
    }

    double L = pinned ? 0.0 : 1.0;
    double B = pinned ? 0.0 : 1.0;
    diag.cluster_counts.push_back(centers.rows());

    std::vector<std::size_t> z(n, kUnassigned);
    std::vector<double> log_alpha;

    for (std::size_t t = 0; t < params.max_iterations; ++t) {
        const std::size_t c = centers.rows();
        const double c_real = static_cast<double>(c);

        // Penalized hard assignment.
        log_alpha.resize(c);
        for (std::size_t k = 0; k < c; ++k) log_alpha[k] = log_weight(alpha[k]);
        std::vector<double> counts(c, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            z[i] = penalized_argmin(centers, log_alpha, L, points.row(i));
            counts[z[i]] += 1.0;
        }
        if (params.record_history) diag.assignment_history.push_back(z);

        const double L_next = pinned ? 0.0 : std::exp(-c_real / params.l_decay_constant);

        // Mixing weights: member frequency plus the entropy correction.
        std::vector<double> freq(c);
        for (std::size_t k = 0; k < c; ++k) freq[k] = counts[k] / n_real;
        std::vector<double> alpha_next = freq;
        if (!pinned && B != 0.0) {
            double weighted_log = 0.0;
            for (std::size_t k = 0; k < c; ++k) weighted_log += entropy_term(alpha[k]);
            bool finite = true;
            for (std::size_t k = 0; k < c; ++k) {
                alpha_next[k] = freq[k] + (B / L_next) * alpha[k] * (log_alpha[k] - weighted_log);
                finite = finite && std::isfinite(alpha_next[k]);
            }
            if (!finite) {
                alpha_next = freq;
                ++diag.alpha_clamps;
            }
        }

        // Entropy weight B for the next round, capped so the weights stay in (0, 1).
        double B_next = 0.0;
        if (!pinned) {
            const double half_dim = std::floor(static_cast<double>(dim) / 2.0 - 1.0);
            const double eta =
                t == 0 ? 1.0 : std::min(1.0, std::pow(static_cast<double>(t), -half_dim));
            double term1 = 0.0;
            for (std::size_t k = 0; k < c; ++k)
                term1 += std::exp(-eta * n_real * std::abs(alpha_next[k] - alpha[k]));
            term1 /= c_real;
            const double max_freq = *std::max_element(freq.begin(), freq.end());
            const double max_alpha = *std::max_element(alpha.begin(), alpha.end());
            double neg_entropy = 0.0;
            for (double a : alpha) neg_entropy += entropy_term(a);
            const double term2 = (1.0 - max_freq) / (-max_alpha * neg_entropy);
            if (std::isfinite(term2) && term2 >= 0.0) {
                B_next = std::min(term1, term2);
            } else {
                B_next = term1;
                ++diag.beta_clamps;
            }
        }

        // Discard starved clusters and renormalize.
        std::vector<std::size_t> keep;
        for (std::size_t k = 0; k < c; ++k) {
            if (params.disable_discard || (alpha_next[k] > 1.0 / n_real && counts[k] > 0.0))
                keep.push_back(k);
        }
        if (keep.empty()) {
            keep.push_back(static_cast<std::size_t>(
                std::max_element(counts.begin(), counts.end()) - counts.begin()));
        }
        std::vector<std::size_t> remap(c, kUnassigned);
        std::vector<double> alpha_kept(keep.size());
        double alpha_sum = 0.0;
        for (std::size_t j = 0; j < keep.size(); ++j) {
            remap[keep[j]] = j;
            alpha_kept[j] = std::max(alpha_next[keep[j]], 0.0);
            alpha_sum += alpha_kept[j];
        }
        if (alpha_sum > 0.0) {
            for (double& a : alpha_kept) a /= alpha_sum;
        } else {
            std::fill(alpha_kept.begin(), alpha_kept.end(), 1.0 / static_cast<double>(keep.size()));
        }
        double renormalized_sum = 0.0;
        for (double a : alpha_kept) renormalized_sum += a;
        diag.weight_sums.push_back(renormalized_sum);
        for (auto& k : z) k = remap[k];

        const std::size_t c_next = keep.size();
        diag.cluster_counts.push_back(c_next);
        const std::size_t window = params.stale_count_window;
        const std::size_t step = diag.cluster_counts.size() - 1;  // == t + 1
        if (!pinned && step >= window && diag.cluster_counts[step - window] == c_next) {
            B_next = 0.0;
        }

        // Centers become member means; memberless clusters keep their center.
        Matrix next_centers(c_next, dim);
        std::vector<double> members(c_next, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            if (z[i] == kUnassigned) continue;
            auto dst = next_centers.row(z[i]);
            const auto x = points.row(i);
            for (std::size_t j = 0; j < dim; ++j) dst[j] += x[j];
            members[z[i]] += 1.0;
        }
        double shift = 0.0;
        for (std::size_t j = 0; j < c_next; ++j) {
            auto dst = next_centers.row(j);
            const auto old = centers.row(keep[j]);
            if (members[j] > 0.0) {
                for (double& v : dst) v /= members[j];
            } else {
                std::copy(old.begin(), old.end(), dst.begin());
            }
            shift = std::max(shift, std::sqrt(squared_distance(dst, old)));
        }
        if (params.record_history) diag.center_history.push_back(next_centers);

        centers = std::move(next_centers);
        alpha = std::move(alpha_kept);
        L = L_next;
        B = B_next;
        model.objective_trace.push_back(objective(points, centers, alpha, z, B, L));
        model.iterations_run = t + 1;

        if (c_next == c && shift < params.epsilon) break;
    }

    // Final penalized pass defines the memberships; empty clusters are dropped.
    log_alpha.resize(centers.rows());
    for (std::size_t k = 0; k < centers.rows(); ++k) log_alpha[k] = log_weight(alpha[k]);
    std::vector<std::size_t> sizes(centers.rows(), 0);
    for (std::size_t i = 0; i < n; ++i) {
        z[i] = penalized_argmin(centers, log_alpha, L, points.row(i));
        ++sizes[z[i]];
    }
    std::vector<std::size_t> remap(centers.rows(), kUnassigned);
    std::vector<std::size_t> live;
    for (std::size_t k = 0; k < centers.rows(); ++k) {
        if (sizes[k] > 0) {
            remap[k] = live.size();
            live.push_back(k);
        }
    }
    model.centers = Matrix(live.size(), dim);
    model.mixing_weights.resize(live.size());
    model.cluster_sizes.resize(live.size());
    double total = 0.0;
    for (std::size_t j = 0; j < live.size(); ++j) {
        const auto src = centers.row(live[j]);
        std::copy(src.begin(), src.end(), model.centers.row(j).begin());
        // Pinned runs can carry zero weights; fall back to member frequency.
        model.mixing_weights[j] = alpha[live[j]] > 0.0
                                      ? alpha[live[j]]
                                      : static_cast<double>(sizes[live[j]]) / n_real;
        model.cluster_sizes[j] = sizes[live[j]];
        total += model.mixing_weights[j];
    }
    for (double& a : model.mixing_weights) a /= total;
    model.assignments.resize(n);
    for (std::size_t i = 0; i < n; ++i) model.assignments[i] = remap[z[i]];
    model.penalty_weight = L;
    model.entropy_weight = B;
    return model;
}

double kmeans_objective(const Matrix& points, const ClusterModel& model, double entropy_weight,
                        double penalty_weight) {
    if (points.rows() != model.assignments.size())
        throw ArgumentError("kmeans_objective: point count does not match the model");
    return objective(points, model.centers, model.mixing_weights, model.assignments,
                     entropy_weight, penalty_weight);
}

std::size_t assign(const ClusterModel& model, std::span<const double> point) {
    if (model.final_k() == 0) throw ArgumentError("assign: model has no clusters");
    if (point.size() != model.dimension())
        throw ArgumentError("assign: expected " + std::to_string(model.dimension()) +
                            " features, got " + std::to_string(point.size()));
    std::vector<double> log_alpha(model.final_k());
    for (std::size_t k = 0; k < log_alpha.size(); ++k)
        log_alpha[k] = log_weight(model.mixing_weights[k]);
    return penalized_argmin(model.centers, log_alpha, model.penalty_weight, point);
}

SparseRatingMatrix compact_rating_matrix(std::span<const ObservedRating> ratings,
                                         const ClusterModel& user_model,
                                         std::span<const std::string> drug_index) {
    std::unordered_map<std::string, std::size_t> column;
    for (std::size_t j = 0; j < drug_index.size(); ++j) column.emplace(drug_index[j], j);

    SparseRatingMatrix out(user_model.final_k(), drug_index.size());
    Matrix sums(user_model.final_k(), drug_index.size());
    std::set<std::string> unknown;
    for (const auto& r : ratings) {
        auto it = column.find(r.drug_name);
        if (it == column.end()) {
            unknown.insert(r.drug_name);
            continue;
        }
        const std::size_t row = assign(user_model, r.user_features);
        sums(row, it->second) += r.cur;
        ++out.counts[row * out.cols() + it->second];
    }
    if (!unknown.empty()) {
        std::string msg = "ratings reference unknown drugs:";
        for (const auto& d : unknown) msg += " " + d;
        throw ValidationError(msg, std::vector<std::string>(unknown.begin(), unknown.end()));
    }
    for (std::size_t r = 0; r < out.rows(); ++r) {
        for (std::size_t c = 0; c < out.cols(); ++c) {
            const std::size_t cnt = out.counts[r * out.cols() + c];
            if (cnt > 0) out.set(r, c, sums(r, c) / static_cast<double>(cnt));
        }
    }
    return out;
}

}  // namespace drugrec::clustering
