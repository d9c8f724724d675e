#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "drugrec/matrix.hpp"
#include "drugrec/rating_matrix.hpp"

namespace drugrec::nn {

// identity is a linear hook for tests; it is never chosen by the pipeline.
enum class Activation { sigmoid, relu, identity };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view text);

struct Layer {
    Matrix weights;               // out x in
    std::vector<double> biases;   // out

    friend bool operator==(const Layer&, const Layer&) = default;
};

struct NetworkParams {
    std::vector<std::size_t> layer_sizes;  // input, hidden..., output
    std::vector<Layer> layers;             // layer_sizes.size() - 1 entries
    Activation hidden_activation = Activation::sigmoid;
    Activation output_activation = Activation::sigmoid;
    std::uint64_t seed = 0;

    std::size_t input_size() const { return layer_sizes.empty() ? 0 : layer_sizes.front(); }
    std::size_t output_size() const { return layer_sizes.empty() ? 0 : layer_sizes.back(); }
    std::size_t parameter_count() const;

    // Weights and biases uniform in [-init_range, init_range].
    static NetworkParams random(std::vector<std::size_t> layer_sizes, std::uint64_t seed,
                                double init_range = 0.5,
                                Activation hidden = Activation::sigmoid);

    // Throws ArgumentError if shapes do not chain or a parameter is not finite.
    void validate() const;

    friend bool operator==(const NetworkParams&, const NetworkParams&) = default;
};

// a^{z+1} = f(W^{z+1} a^z + b^{z+1}). Throws ArgumentError on a size mismatch.
std::vector<double> forward(const NetworkParams& net, std::span<const double> input);

// Samples for one network: row s of inputs feeds the net, row s of targets
// and mask give its supervised outputs.
struct LossContext {
    Matrix inputs;
    Matrix targets;
    std::vector<std::uint8_t> mask;  // same shape as targets

    bool observed(std::size_t s, std::size_t o) const {
        return mask[s * targets.cols() + o] != 0;
    }
};

// Test hook that corrupts the backward pass.
enum class BackwardMutation { none, flip_output_delta_sign };

// 1/2 sum over observed cells of (target - output)^2. Unobserved cells are
// skipped, never multiplied by zero, so their contents cannot leak in.
double network_loss(const NetworkParams& net, const LossContext& ctx);

// dLoss/dParameter with the same layout as net.layers.
std::vector<Layer> network_gradients(const NetworkParams& net, const LossContext& ctx,
                                     BackwardMutation mutation = BackwardMutation::none);

// Max over all parameters of |analytic - numeric| / max(|analytic|, |numeric|, floor)
// with central differences of step h.
double gradient_check(const NetworkParams& net, const LossContext& ctx, double h = 1e-5,
                      BackwardMutation mutation = BackwardMutation::none,
                      double floor = 1e-6);

}  // namespace drugrec::nn

namespace drugrec::factorization {

using nn::Activation;
using nn::NetworkParams;

enum class CombineRule { mean, user_only, drug_only };

std::string_view to_string(CombineRule r);
CombineRule parse_combine_rule(std::string_view text);

struct FactorizationModel {
    NetworkParams user_net;      // cluster features -> one output per drug
    NetworkParams drug_net;      // drug features -> one output per user cluster
    Matrix user_feature_matrix;  // clusters x K_user
    Matrix drug_feature_matrix;  // drugs x K_drug
    CombineRule combine_rule = CombineRule::mean;

    std::size_t clusters() const { return user_feature_matrix.rows(); }
    std::size_t drugs() const { return drug_feature_matrix.rows(); }

    friend bool operator==(const FactorizationModel&, const FactorizationModel&) = default;
};

struct TrainConfig {
    double learning_rate = 0.01;
    std::size_t epochs = 200;
    std::uint64_t seed = 0;
    double init_range = 0.5;
    std::vector<std::size_t> hidden_layers = {16, 8};
    Activation hidden_activation = Activation::sigmoid;
    CombineRule combine_rule = CombineRule::mean;
    // Optional per-layer rates; when set, one entry per weight layer and
    // learning_rate is ignored.
    std::vector<double> layer_learning_rates;

    void validate() const;
};

// Fresh model with seeded weights sized for the given feature matrices.
FactorizationModel initialize(Matrix user_features, Matrix drug_features,
                              const TrainConfig& config);

struct LossPoint {
    std::size_t epoch = 0;
    double user = 0.0;      // user_net training loss
    double drug = 0.0;      // drug_net training loss
    double combined = 0.0;  // masked_loss under the combine rule
};

struct TrainResult {
    FactorizationModel model;
    // Entry 0 is before the first update; entry e follows epoch e.
    std::vector<LossPoint> trace;
};

// Loss contexts seen by each network: rows of R for user_net, columns for drug_net.
nn::LossContext user_context(const FactorizationModel& model, const SparseRatingMatrix& ratings);
nn::LossContext drug_context(const FactorizationModel& model, const SparseRatingMatrix& ratings);

// 1/2 sum over observed cells of (R - predict)^2.
double masked_loss(const FactorizationModel& model, const SparseRatingMatrix& ratings);

// Full-batch gradient descent of both networks on their own masked losses.
// Throws TrainingError when a loss turns non-finite.
TrainResult train(FactorizationModel model, const SparseRatingMatrix& ratings,
                  const TrainConfig& config);

// Convenience: initialize() then train().
TrainResult fit(const Matrix& user_features, const Matrix& drug_features,
                const SparseRatingMatrix& ratings, const TrainConfig& config);

// Full prediction table, clusters x drugs, in (0, 1).
Matrix predict_all(const FactorizationModel& model);
double predict(const FactorizationModel& model, std::size_t cluster, std::size_t drug);

// Plain masked matrix factorization R ~ U V^T.
struct BaselineMF {
    Matrix user_factors;  // rows x rank
    Matrix item_factors;  // cols x rank
    std::vector<double> loss_trace;

    double predict(std::size_t row, std::size_t col) const;

    friend bool operator==(const BaselineMF&, const BaselineMF&) = default;
};

// Uses learning_rate, epochs, seed, init_range from config.
BaselineMF fit_baseline_mf(const SparseRatingMatrix& ratings, std::size_t rank,
                           const TrainConfig& config);

}  // namespace drugrec::factorization
