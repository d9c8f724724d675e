#include "drugrec/factorization.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "drugrec/error.hpp"
#include "drugrec/random.hpp"

namespace drugrec::nn {

namespace {

double activate(Activation a, double z) {
    switch (a) {
        case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-z));
        case Activation::relu: return z > 0.0 ? z : 0.0;
        case Activation::identity: return z;
    }
    return z;
}

// Derivative expressed through the pre-activation z and output a.
double derivative(Activation f, double z, double a) {
    switch (f) {
        case Activation::sigmoid: return a * (1.0 - a);
        case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
        case Activation::identity: return 1.0;
    }
    return 1.0;
}

Activation layer_activation(const NetworkParams& net, std::size_t layer) {
    return layer + 1 == net.layers.size() ? net.output_activation : net.hidden_activation;
}

struct Trace {
    std::vector<std::vector<double>> z;  // per layer pre-activation
    std::vector<std::vector<double>> a;  // a[0] = input, a[l+1] = layer l output
};

void forward_trace(const NetworkParams& net, std::span<const double> input, Trace& t) {
    t.a.resize(net.layers.size() + 1);
    t.z.resize(net.layers.size());
    t.a[0].assign(input.begin(), input.end());
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const Layer& layer = net.layers[l];
        const Activation f = layer_activation(net, l);
        const auto& prev = t.a[l];
        auto& z = t.z[l];
        auto& out = t.a[l + 1];
        z.assign(layer.weights.rows(), 0.0);
        out.assign(layer.weights.rows(), 0.0);
        for (std::size_t o = 0; o < layer.weights.rows(); ++o) {
            const auto w = layer.weights.row(o);
            double sum = layer.biases[o];
            for (std::size_t i = 0; i < w.size(); ++i) sum += w[i] * prev[i];
            z[o] = sum;
            out[o] = activate(f, sum);
        }
    }
}

void check_context(const NetworkParams& net, const LossContext& ctx) {
    if (ctx.inputs.rows() != ctx.targets.rows())
        throw ArgumentError("loss context: input and target row counts differ");
    if (ctx.inputs.cols() != net.input_size())
        throw ArgumentError("loss context: input width does not match the network");
    if (ctx.targets.cols() != net.output_size())
        throw ArgumentError("loss context: target width does not match the network");
    if (ctx.mask.size() != ctx.targets.rows() * ctx.targets.cols())
        throw ArgumentError("loss context: mask shape does not match targets");
}

std::vector<Layer> zero_like(const NetworkParams& net) {
    std::vector<Layer> out(net.layers.size());
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        out[l].weights = Matrix(net.layers[l].weights.rows(), net.layers[l].weights.cols());
        out[l].biases.assign(net.layers[l].biases.size(), 0.0);
    }
    return out;
}

}  // namespace

std::string_view to_string(Activation a) {
    switch (a) {
        case Activation::sigmoid: return "sigmoid";
        case Activation::relu: return "relu";
        case Activation::identity: return "identity";
    }
    return "sigmoid";
}

Activation parse_activation(std::string_view text) {
    if (text == "sigmoid") return Activation::sigmoid;
    if (text == "relu") return Activation::relu;
    if (text == "identity") return Activation::identity;
    throw ArgumentError("unknown activation '" + std::string(text) + "'");
}

std::size_t NetworkParams::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weights.rows() * l.weights.cols() + l.biases.size();
    return n;
}

NetworkParams NetworkParams::random(std::vector<std::size_t> sizes, std::uint64_t seed,
                                    double init_range, Activation hidden) {
    if (sizes.empty()) throw ArgumentError("network needs at least an input layer");
    NetworkParams net;
    net.layer_sizes = std::move(sizes);
    net.hidden_activation = hidden;
    net.seed = seed;
    Rng rng(seed);
    for (std::size_t l = 0; l + 1 < net.layer_sizes.size(); ++l) {
        Layer layer;
        layer.weights = Matrix(net.layer_sizes[l + 1], net.layer_sizes[l]);
        for (double& w : layer.weights.data()) w = rng.uniform(-init_range, init_range);
        layer.biases.resize(net.layer_sizes[l + 1]);
        for (double& b : layer.biases) b = rng.uniform(-init_range, init_range);
        net.layers.push_back(std::move(layer));
    }
    return net;
}

void NetworkParams::validate() const {
    if (layer_sizes.empty()) throw ArgumentError("network has no layer sizes");
    if (layers.size() + 1 != layer_sizes.size())
        throw ArgumentError("network layer count does not match layer_sizes");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const Layer& layer = layers[l];
        if (layer.weights.rows() != layer_sizes[l + 1] || layer.weights.cols() != layer_sizes[l] ||
            layer.biases.size() != layer_sizes[l + 1])
            throw ArgumentError("network layer " + std::to_string(l) + " has the wrong shape");
        for (double w : layer.weights.data())
            if (!std::isfinite(w)) throw ArgumentError("network has a non-finite weight");
        for (double b : layer.biases)
            if (!std::isfinite(b)) throw ArgumentError("network has a non-finite bias");
    }
}

std::vector<double> forward(const NetworkParams& net, std::span<const double> input) {
    if (input.size() != net.input_size())
        throw ArgumentError("forward: expected " + std::to_string(net.input_size()) +
                            " inputs, got " + std::to_string(input.size()));
    Trace t;
    forward_trace(net, input, t);
    return std::move(t.a.back());
}

double network_loss(const NetworkParams& net, const LossContext& ctx) {
    check_context(net, ctx);
    double loss = 0.0;
    Trace t;
    for (std::size_t s = 0; s < ctx.inputs.rows(); ++s) {
        forward_trace(net, ctx.inputs.row(s), t);
        const auto& out = t.a.back();
        for (std::size_t o = 0; o < out.size(); ++o) {
            if (!ctx.observed(s, o)) continue;
            const double e = ctx.targets(s, o) - out[o];
            loss += 0.5 * e * e;
        }
    }
    return loss;
}

std::vector<Layer> network_gradients(const NetworkParams& net, const LossContext& ctx,
                                     BackwardMutation mutation) {
    check_context(net, ctx);
    std::vector<Layer> grads = zero_like(net);
    if (net.layers.empty()) return grads;
    Trace t;
    std::vector<double> delta, next_delta;
    for (std::size_t s = 0; s < ctx.inputs.rows(); ++s) {
        forward_trace(net, ctx.inputs.row(s), t);
        const std::size_t last = net.layers.size() - 1;
        const auto& out = t.a.back();
        delta.assign(out.size(), 0.0);
        bool any = false;
        for (std::size_t o = 0; o < out.size(); ++o) {
            if (!ctx.observed(s, o)) continue;
            // dL/dz = -(R - a) f'(z) on observed cells.
            delta[o] = -(ctx.targets(s, o) - out[o]) *
                       derivative(net.output_activation, t.z[last][o], out[o]);
            if (mutation == BackwardMutation::flip_output_delta_sign) delta[o] = -delta[o];
            any = true;
        }
        if (!any) continue;
        for (std::size_t l = net.layers.size(); l-- > 0;) {
            const Layer& layer = net.layers[l];
            const auto& prev = t.a[l];
            Layer& g = grads[l];
            for (std::size_t o = 0; o < delta.size(); ++o) {
                if (delta[o] == 0.0) continue;
                auto grow = g.weights.row(o);
                for (std::size_t i = 0; i < prev.size(); ++i) grow[i] += delta[o] * prev[i];
                g.biases[o] += delta[o];
            }
            if (l == 0) break;
            const Activation f = layer_activation(net, l - 1);
            next_delta.assign(prev.size(), 0.0);
            for (std::size_t o = 0; o < delta.size(); ++o) {
                if (delta[o] == 0.0) continue;
                const auto w = layer.weights.row(o);
                for (std::size_t i = 0; i < prev.size(); ++i) next_delta[i] += w[i] * delta[o];
            }
            for (std::size_t i = 0; i < prev.size(); ++i)
                next_delta[i] *= derivative(f, t.z[l - 1][i], prev[i]);
            delta.swap(next_delta);
        }
    }
    return grads;
}

double gradient_check(const NetworkParams& net, const LossContext& ctx, double h,
                      BackwardMutation mutation, double floor) {
    if (!(h > 0.0)) throw ArgumentError("gradient_check: h must be > 0");
    const std::vector<Layer> analytic = network_gradients(net, ctx, mutation);
    NetworkParams probe = net;
    double worst = 0.0;
    auto compare = [&](double& param, double a) {
        const double saved = param;
        param = saved + h;
        const double up = network_loss(probe, ctx);
        param = saved - h;
        const double down = network_loss(probe, ctx);
        param = saved;
        const double numeric = (up - down) / (2.0 * h);
        const double scale = std::max({std::abs(a), std::abs(numeric), floor});
        worst = std::max(worst, std::abs(a - numeric) / scale);
    };
    for (std::size_t l = 0; l < probe.layers.size(); ++l) {
        auto w = probe.layers[l].weights.data();
        const auto gw = analytic[l].weights.data();
        for (std::size_t i = 0; i < w.size(); ++i) compare(w[i], gw[i]);
        auto& b = probe.layers[l].biases;
        for (std::size_t i = 0; i < b.size(); ++i) compare(b[i], analytic[l].biases[i]);
    }
    return worst;
}

}  // namespace drugrec::nn

namespace drugrec::factorization {

namespace {

std::vector<std::size_t> layer_sizes(std::size_t in, const std::vector<std::size_t>& hidden,
                                     std::size_t out) {
    std::vector<std::size_t> sizes{in};
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(out);
    return sizes;
}

void check_dimensions(const FactorizationModel& model, const SparseRatingMatrix& ratings) {
    if (ratings.rows() != model.clusters() || ratings.cols() != model.drugs())
        throw ArgumentError("rating matrix is " + std::to_string(ratings.rows()) + "x" +
                            std::to_string(ratings.cols()) + " but the model expects " +
                            std::to_string(model.clusters()) + "x" +
                            std::to_string(model.drugs()));
}

void apply_update(nn::NetworkParams& net, const std::vector<nn::Layer>& grads,
                  const TrainConfig& config) {
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const double rate = config.layer_learning_rates.empty() ? config.learning_rate
                                                                : config.layer_learning_rates[l];
        if (rate == 0.0) continue;
        auto w = net.layers[l].weights.data();
        const auto g = grads[l].weights.data();
        for (std::size_t i = 0; i < w.size(); ++i) w[i] -= rate * g[i];
        auto& b = net.layers[l].biases;
        for (std::size_t i = 0; i < b.size(); ++i) b[i] -= rate * grads[l].biases[i];
    }
}

}  // namespace

std::string_view to_string(CombineRule r) {
    switch (r) {
        case CombineRule::mean: return "mean";
        case CombineRule::user_only: return "user_only";
        case CombineRule::drug_only: return "drug_only";
    }
    return "mean";
}

CombineRule parse_combine_rule(std::string_view text) {
    if (text == "mean") return CombineRule::mean;
    if (text == "user_only") return CombineRule::user_only;
    if (text == "drug_only") return CombineRule::drug_only;
    throw ArgumentError("unknown combine rule '" + std::string(text) + "'");
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
        throw ArgumentError("learning_rate must be finite and > 0");
    if (epochs < 1) throw ArgumentError("epochs must be >= 1");
    if (!(init_range >= 0.0)) throw ArgumentError("init_range must be >= 0");
    if (!layer_learning_rates.empty() && layer_learning_rates.size() != hidden_layers.size() + 1)
        throw ArgumentError("layer_learning_rates needs one rate per weight layer (" +
                            std::to_string(hidden_layers.size() + 1) + ")");
    for (double r : layer_learning_rates)
        if (!(r >= 0.0) || !std::isfinite(r))
            throw ArgumentError("layer learning rates must be finite and >= 0");
}

FactorizationModel initialize(Matrix user_features, Matrix drug_features,
                              const TrainConfig& config) {
    config.validate();
    FactorizationModel m;
    const std::size_t clusters = user_features.rows();
    const std::size_t drugs = drug_features.rows();
    m.user_net = NetworkParams::random(layer_sizes(user_features.cols(), config.hidden_layers, drugs),
                                       derive_seed(config.seed, "user_net"), config.init_range,
                                       config.hidden_activation);
    m.drug_net =
        NetworkParams::random(layer_sizes(drug_features.cols(), config.hidden_layers, clusters),
                              derive_seed(config.seed, "drug_net"), config.init_range,
                              config.hidden_activation);
    m.user_feature_matrix = std::move(user_features);
    m.drug_feature_matrix = std::move(drug_features);
    m.combine_rule = config.combine_rule;
    return m;
}

nn::LossContext user_context(const FactorizationModel& model, const SparseRatingMatrix& ratings) {
    check_dimensions(model, ratings);
    return {model.user_feature_matrix, ratings.values, ratings.mask};
}

nn::LossContext drug_context(const FactorizationModel& model, const SparseRatingMatrix& ratings) {
    check_dimensions(model, ratings);
    nn::LossContext ctx;
    ctx.inputs = model.drug_feature_matrix;
    ctx.targets = Matrix(ratings.cols(), ratings.rows());
    ctx.mask.assign(ratings.rows() * ratings.cols(), 0);
    for (std::size_t r = 0; r < ratings.rows(); ++r) {
        for (std::size_t c = 0; c < ratings.cols(); ++c) {
            if (!ratings.observed(r, c)) continue;
            ctx.targets(c, r) = ratings.value(r, c);
            ctx.mask[c * ratings.rows() + r] = 1;
        }
    }
    return ctx;
}

Matrix predict_all(const FactorizationModel& model) {
    const std::size_t n = model.clusters();
    const std::size_t m = model.drugs();
    Matrix out(n, m);
    Matrix user_side(n, m);
    Matrix drug_side(n, m);
    if (model.combine_rule != CombineRule::drug_only) {
        for (std::size_t r = 0; r < n; ++r) {
            const auto y = nn::forward(model.user_net, model.user_feature_matrix.row(r));
            std::copy(y.begin(), y.end(), user_side.row(r).begin());
        }
    }
    if (model.combine_rule != CombineRule::user_only) {
        for (std::size_t c = 0; c < m; ++c) {
            const auto y = nn::forward(model.drug_net, model.drug_feature_matrix.row(c));
            for (std::size_t r = 0; r < n; ++r) drug_side(r, c) = y[r];
        }
    }
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < m; ++c) {
            switch (model.combine_rule) {
                case CombineRule::mean: out(r, c) = 0.5 * (user_side(r, c) + drug_side(r, c)); break;
                case CombineRule::user_only: out(r, c) = user_side(r, c); break;
                case CombineRule::drug_only: out(r, c) = drug_side(r, c); break;
            }
        }
    }
    return out;
}

double predict(const FactorizationModel& model, std::size_t cluster, std::size_t drug) {
    if (cluster >= model.clusters() || drug >= model.drugs())
        throw ArgumentError("predict: index out of range");
    const double u = model.combine_rule == CombineRule::drug_only
                         ? 0.0
                         : nn::forward(model.user_net, model.user_feature_matrix.row(cluster))[drug];
    const double d = model.combine_rule == CombineRule::user_only
                         ? 0.0
                         : nn::forward(model.drug_net, model.drug_feature_matrix.row(drug))[cluster];
    switch (model.combine_rule) {
        case CombineRule::user_only: return u;
        case CombineRule::drug_only: return d;
        case CombineRule::mean: break;
    }
    return 0.5 * (u + d);
}

double masked_loss(const FactorizationModel& model, const SparseRatingMatrix& ratings) {
    check_dimensions(model, ratings);
    if (ratings.observed_count() == 0) return 0.0;
    const Matrix pred = predict_all(model);
    double loss = 0.0;
    for (std::size_t r = 0; r < ratings.rows(); ++r) {
        for (std::size_t c = 0; c < ratings.cols(); ++c) {
            if (!ratings.observed(r, c)) continue;
            const double e = ratings.value(r, c) - pred(r, c);
            loss += 0.5 * e * e;
        }
    }
    return loss;
}

TrainResult train(FactorizationModel model, const SparseRatingMatrix& ratings,
                  const TrainConfig& config) {
    config.validate();
    if (!config.layer_learning_rates.empty() &&
        (config.layer_learning_rates.size() != model.user_net.layers.size() ||
         config.layer_learning_rates.size() != model.drug_net.layers.size()))
        throw ArgumentError("layer_learning_rates does not match the network depth");
    model.user_net.validate();
    model.drug_net.validate();
    const nn::LossContext uctx = user_context(model, ratings);
    const nn::LossContext dctx = drug_context(model, ratings);

    TrainResult result;
    auto record = [&](std::size_t epoch) {
        LossPoint p;
        p.epoch = epoch;
        p.user = nn::network_loss(model.user_net, uctx);
        p.drug = nn::network_loss(model.drug_net, dctx);
        p.combined = masked_loss(model, ratings);
        if (!std::isfinite(p.user) || !std::isfinite(p.drug) || !std::isfinite(p.combined))
            throw TrainingError("loss became non-finite", epoch);
        result.trace.push_back(p);
    };
    record(0);
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        if (model.combine_rule != CombineRule::drug_only)
            apply_update(model.user_net, nn::network_gradients(model.user_net, uctx), config);
        if (model.combine_rule != CombineRule::user_only)
            apply_update(model.drug_net, nn::network_gradients(model.drug_net, dctx), config);
        record(epoch);
    }
    result.model = std::move(model);
    return result;
}

TrainResult fit(const Matrix& user_features, const Matrix& drug_features,
                const SparseRatingMatrix& ratings, const TrainConfig& config) {
    return train(initialize(user_features, drug_features, config), ratings, config);
}

// --- conventional MF baseline -------------------------------------------------

double BaselineMF::predict(std::size_t row, std::size_t col) const {
    if (row >= user_factors.rows() || col >= item_factors.rows())
        throw ArgumentError("baseline predict: index out of range");
    double s = 0.0;
    const auto u = user_factors.row(row);
    const auto v = item_factors.row(col);
    for (std::size_t k = 0; k < u.size(); ++k) s += u[k] * v[k];
    return s;
}

BaselineMF fit_baseline_mf(const SparseRatingMatrix& ratings, std::size_t rank,
                           const TrainConfig& config) {
    if (rank < 1) throw ArgumentError("baseline rank must be >= 1");
    config.validate();
    BaselineMF mf;
    mf.user_factors = Matrix(ratings.rows(), rank);
    mf.item_factors = Matrix(ratings.cols(), rank);
    Rng rng(derive_seed(config.seed, "baseline_mf"));
    for (double& v : mf.user_factors.data()) v = rng.uniform(-config.init_range, config.init_range);
    for (double& v : mf.item_factors.data()) v = rng.uniform(-config.init_range, config.init_range);

    Matrix error(ratings.rows(), ratings.cols());
    auto compute_loss = [&]() {
        double loss = 0.0;
        for (std::size_t r = 0; r < ratings.rows(); ++r) {
            for (std::size_t c = 0; c < ratings.cols(); ++c) {
                if (!ratings.observed(r, c)) continue;
                const double e = ratings.value(r, c) - mf.predict(r, c);
                error(r, c) = e;
                loss += 0.5 * e * e;
            }
        }
        return loss;
    };
    const double rate = config.learning_rate;
    mf.loss_trace.push_back(compute_loss());
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        Matrix du(ratings.rows(), rank);
        Matrix dv(ratings.cols(), rank);
        for (std::size_t r = 0; r < ratings.rows(); ++r) {
            for (std::size_t c = 0; c < ratings.cols(); ++c) {
                if (!ratings.observed(r, c)) continue;
                const double e = error(r, c);
                for (std::size_t k = 0; k < rank; ++k) {
                    du(r, k) += e * mf.item_factors(c, k);
                    dv(c, k) += e * mf.user_factors(r, k);
                }
            }
        }
        auto u = mf.user_factors.data();
        const auto gu = du.data();
        for (std::size_t i = 0; i < u.size(); ++i) u[i] += rate * gu[i];
        auto v = mf.item_factors.data();
        const auto gv = dv.data();
        for (std::size_t i = 0; i < v.size(); ++i) v[i] += rate * gv[i];
        const double loss = compute_loss();
        if (!std::isfinite(loss)) throw TrainingError("baseline loss became non-finite", epoch);
        mf.loss_trace.push_back(loss);
    }
    return mf;
}

}  // namespace drugrec::factorization
