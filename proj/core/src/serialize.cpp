#include "drugrec/serialize.hpp"

#include <cstdio>
#include <set>

#include "drugrec/error.hpp"
#include "drugrec/io.hpp"

namespace drugrec::serial {

namespace {

template <class T>
T as(const json& v, const std::string& where) {
    try {
        return v.get<T>();
    } catch (const json::exception& e) {
        throw ArgumentError(where + ": " + e.what());
    }
}

const json& at(const json& j, const char* key, const std::string& where) {
    if (!j.is_object()) throw ArgumentError(where + ": expected an object");
    auto it = j.find(key);
    if (it == j.end()) throw ArgumentError(where + ": missing field '" + key + "'");
    return *it;
}

template <class T>
T field(const json& j, const char* key, const std::string& where) {
    return as<T>(at(j, key, where), where + "." + key);
}

// Reads optional keys of a config object and rejects keys it never asked for.
class ConfigReader {
public:
    ConfigReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) throw ArgumentError(where_ + ": expected an object");
    }

    template <class T>
    void opt(const char* key, T& out) {
        seen_.insert(key);
        if (auto it = j_.find(key); it != j_.end()) out = as<T>(*it, where_ + "." + key);
    }

    template <class Fn>
    void nested(const char* key, Fn fn) {
        seen_.insert(key);
        if (auto it = j_.find(key); it != j_.end()) fn(*it);
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.contains(it.key()))
                throw ArgumentError(where_ + ": unknown field '" + it.key() + "'");
    }

private:
    const json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

json encode_diagnostics(const Diagnostics& d) { return d.messages; }

json encode_model_report(const eval::ModelReport& m) {
    json j;
    j["name"] = m.name;
    j["confusion"] = {{"tp", m.confusion.tp}, {"fp", m.confusion.fp},
                      {"tn", m.confusion.tn}, {"fn", m.confusion.fn}};
    j["accuracy"] = m.scalars.accuracy;
    j["sensitivity"] = m.scalars.sensitivity;
    j["specificity"] = m.scalars.specificity;
    j["precision"] = m.scalars.precision;
    j["f1"] = m.scalars.f1;
    j["f2"] = m.scalars.f2;
    j["mcc"] = m.scalars.mcc;
    j["auc"] = m.roc ? json(m.roc->auc) : json(nullptr);
    j["undefined_metrics"] = m.scalars.undefined;
    j["rmse"] = m.rmse;
    j["hit_rate"] = m.hit_rate;
    j["cumulative_hit_rate"] = m.cumulative_hit_rate;
    if (m.hit_rate_with_kb) j["hit_rate_with_kb"] = *m.hit_rate_with_kb;
    json curve = json::array();
    for (std::size_t t = 0; t < m.cumulative_curve.size(); ++t)
        curve.push_back({{"threshold", t}, {"value", m.cumulative_curve[t]}});
    j["cumulative_hit_rate_curve"] = curve;
    return j;
}

json encode_ratios(const eval::AdverseRatios& r) {
    return {{"death", r.death},
            {"hospitalization", r.hospitalization},
            {"disability", r.disability},
            {"recommendations", r.recommendations},
            {"deaths", r.deaths},
            {"hospitalizations", r.hospitalizations},
            {"disabilities", r.disabilities}};
}

}  // namespace

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// --- primitives -----------------------------------------------------------------

json encode(const Matrix& m) {
    return {{"rows", m.rows()}, {"cols", m.cols()},
            {"data", std::vector<double>(m.data().begin(), m.data().end())}};
}

void decode(const json& j, Matrix& m) {
    const auto rows = field<std::size_t>(j, "rows", "matrix");
    const auto cols = field<std::size_t>(j, "cols", "matrix");
    const auto data = field<std::vector<double>>(j, "data", "matrix");
    if (data.size() != rows * cols) throw ArgumentError("matrix: data size does not match shape");
    m = Matrix(rows, cols);
    std::copy(data.begin(), data.end(), m.data().begin());
}

json encode(const text::Vocabulary& v) {
    json terms = json::array();
    for (const auto& t : v.terms()) terms.push_back({{"token", t.token}, {"frequency", t.frequency}});
    return {{"min_frequency", v.min_frequency()}, {"terms", terms}};
}

void decode(const json& j, text::Vocabulary& v) {
    std::vector<text::Vocabulary::Term> terms;
    for (const auto& t : at(j, "terms", "vocabulary"))
        terms.push_back({field<std::string>(t, "token", "vocabulary term"),
                         field<std::size_t>(t, "frequency", "vocabulary term")});
    v = text::Vocabulary(std::move(terms), field<std::size_t>(j, "min_frequency", "vocabulary"));
}

// --- clustering -----------------------------------------------------------------

json encode(const clustering::UKMeansParams& p) {
    return {{"epsilon", p.epsilon},
            {"max_iterations", p.max_iterations},
            {"seed", p.seed},
            {"stale_count_window", p.stale_count_window},
            {"l_decay_constant", p.l_decay_constant},
            {"initial_weight_jitter", p.initial_weight_jitter}};
}

void decode(const json& j, clustering::UKMeansParams& p) {
    ConfigReader r(j, "clustering");
    r.opt("epsilon", p.epsilon);
    r.opt("max_iterations", p.max_iterations);
    r.opt("seed", p.seed);
    r.opt("stale_count_window", p.stale_count_window);
    r.opt("l_decay_constant", p.l_decay_constant);
    r.opt("initial_weight_jitter", p.initial_weight_jitter);
    r.finish();
    if (!(p.epsilon > 0.0)) throw ArgumentError("clustering.epsilon must be > 0");
    if (p.max_iterations < 1) throw ArgumentError("clustering.max_iterations must be >= 1");
}

json encode(const clustering::MinMaxScaler& s) {
    return {{"mins", s.mins()}, {"ranges", s.ranges()}};
}

void decode(const json& j, clustering::MinMaxScaler& s) {
    auto mins = field<std::vector<double>>(j, "mins", "scaler");
    auto ranges = field<std::vector<double>>(j, "ranges", "scaler");
    if (mins.size() != ranges.size()) throw ArgumentError("scaler: mins and ranges differ in size");
    s = clustering::MinMaxScaler(std::move(mins), std::move(ranges));
}

json encode(const clustering::ClusterModel& m) {
    return {{"final_k", m.final_k()},
            {"centers", encode(m.centers)},
            {"mixing_weights", m.mixing_weights},
            {"assignments", m.assignments},
            {"cluster_sizes", m.cluster_sizes},
            {"iterations_run", m.iterations_run},
            {"objective_trace", m.objective_trace},
            {"penalty_weight", m.penalty_weight},
            {"entropy_weight", m.entropy_weight},
            {"params", encode(m.params)},
            {"diagnostics",
             {{"alpha_clamps", m.diagnostics.alpha_clamps},
              {"beta_clamps", m.diagnostics.beta_clamps},
              {"cluster_counts", m.diagnostics.cluster_counts},
              {"weight_sums", m.diagnostics.weight_sums}}}};
}

void decode(const json& j, clustering::ClusterModel& m) {
    const std::string w = "cluster model";
    decode(at(j, "centers", w), m.centers);
    m.mixing_weights = field<std::vector<double>>(j, "mixing_weights", w);
    m.assignments = field<std::vector<std::size_t>>(j, "assignments", w);
    m.cluster_sizes = field<std::vector<std::size_t>>(j, "cluster_sizes", w);
    m.iterations_run = field<std::size_t>(j, "iterations_run", w);
    m.objective_trace = field<std::vector<double>>(j, "objective_trace", w);
    m.penalty_weight = field<double>(j, "penalty_weight", w);
    m.entropy_weight = field<double>(j, "entropy_weight", w);
    decode(at(j, "params", w), m.params);
    const json& d = at(j, "diagnostics", w);
    m.diagnostics.alpha_clamps = field<std::size_t>(d, "alpha_clamps", w);
    m.diagnostics.beta_clamps = field<std::size_t>(d, "beta_clamps", w);
    m.diagnostics.cluster_counts = field<std::vector<std::size_t>>(d, "cluster_counts", w);
    m.diagnostics.weight_sums = field<std::vector<double>>(d, "weight_sums", w);
    if (m.mixing_weights.size() != m.centers.rows() || m.cluster_sizes.size() != m.centers.rows())
        throw ArgumentError("cluster model: weights or sizes do not match the centers");
    for (auto a : m.assignments)
        if (a >= m.centers.rows()) throw ArgumentError("cluster model: assignment out of range");
}

json encode(const SparseRatingMatrix& r) {
    return {{"values", encode(r.values)},
            {"mask", r.mask},
            {"counts", r.counts},
            {"display_scale", r.display_scale}};
}

void decode(const json& j, SparseRatingMatrix& r) {
    const std::string w = "rating matrix";
    decode(at(j, "values", w), r.values);
    r.mask = field<std::vector<std::uint8_t>>(j, "mask", w);
    r.counts = field<std::vector<std::size_t>>(j, "counts", w);
    r.display_scale = field<double>(j, "display_scale", w);
    const std::size_t cells = r.values.rows() * r.values.cols();
    if (r.mask.size() != cells || r.counts.size() != cells)
        throw ArgumentError("rating matrix: mask or counts do not match the shape");
}

// --- factorization --------------------------------------------------------------

json encode(const nn::NetworkParams& n) {
    json layers = json::array();
    for (const auto& l : n.layers) layers.push_back({{"weights", encode(l.weights)}, {"biases", l.biases}});
    return {{"layer_sizes", n.layer_sizes},
            {"hidden_activation", nn::to_string(n.hidden_activation)},
            {"output_activation", nn::to_string(n.output_activation)},
            {"seed", n.seed},
            {"layers", layers}};
}

void decode(const json& j, nn::NetworkParams& n) {
    const std::string w = "network";
    n.layer_sizes = field<std::vector<std::size_t>>(j, "layer_sizes", w);
    n.hidden_activation = nn::parse_activation(field<std::string>(j, "hidden_activation", w));
    n.output_activation = nn::parse_activation(field<std::string>(j, "output_activation", w));
    n.seed = field<std::uint64_t>(j, "seed", w);
    n.layers.clear();
    for (const auto& l : at(j, "layers", w)) {
        nn::Layer layer;
        decode(at(l, "weights", w), layer.weights);
        layer.biases = field<std::vector<double>>(l, "biases", w);
        n.layers.push_back(std::move(layer));
    }
    n.validate();
}

json encode(const factorization::TrainConfig& c) {
    return {{"learning_rate", c.learning_rate},
            {"epochs", c.epochs},
            {"seed", c.seed},
            {"init_range", c.init_range},
            {"hidden_layers", c.hidden_layers},
            {"hidden_activation", nn::to_string(c.hidden_activation)},
            {"combine_rule", factorization::to_string(c.combine_rule)},
            {"layer_learning_rates", c.layer_learning_rates}};
}

void decode(const json& j, factorization::TrainConfig& c) {
    ConfigReader r(j, "training");
    r.opt("learning_rate", c.learning_rate);
    r.opt("epochs", c.epochs);
    r.opt("seed", c.seed);
    r.opt("init_range", c.init_range);
    r.opt("hidden_layers", c.hidden_layers);
    std::string act(nn::to_string(c.hidden_activation));
    r.opt("hidden_activation", act);
    c.hidden_activation = nn::parse_activation(act);
    std::string rule(factorization::to_string(c.combine_rule));
    r.opt("combine_rule", rule);
    c.combine_rule = factorization::parse_combine_rule(rule);
    r.opt("layer_learning_rates", c.layer_learning_rates);
    r.finish();
    c.validate();
}

json encode(const factorization::FactorizationModel& m) {
    return {{"combine_rule", factorization::to_string(m.combine_rule)},
            {"user_net", encode(m.user_net)},
            {"drug_net", encode(m.drug_net)},
            {"user_feature_matrix", encode(m.user_feature_matrix)},
            {"drug_feature_matrix", encode(m.drug_feature_matrix)}};
}

void decode(const json& j, factorization::FactorizationModel& m) {
    const std::string w = "factorization";
    m.combine_rule = factorization::parse_combine_rule(field<std::string>(j, "combine_rule", w));
    decode(at(j, "user_net", w), m.user_net);
    decode(at(j, "drug_net", w), m.drug_net);
    decode(at(j, "user_feature_matrix", w), m.user_feature_matrix);
    decode(at(j, "drug_feature_matrix", w), m.drug_feature_matrix);
    if (m.user_net.input_size() != m.user_feature_matrix.cols() ||
        m.user_net.output_size() != m.drugs() ||
        m.drug_net.input_size() != m.drug_feature_matrix.cols() ||
        m.drug_net.output_size() != m.clusters())
        throw ArgumentError("factorization: network shapes do not match the feature matrices");
}

// --- knowledge base -------------------------------------------------------------

json encode(const kb::RuleOptions& o) {
    return {{"threshold", o.threshold},
            {"risk_mode", kb::to_string(o.risk_mode)},
            {"age_rule_direction", kb::to_string(o.age_rule_direction)}};
}

void decode(const json& j, kb::RuleOptions& o) {
    ConfigReader r(j, "rules");
    r.opt("threshold", o.threshold);
    std::string mode(kb::to_string(o.risk_mode));
    r.opt("risk_mode", mode);
    o.risk_mode = kb::parse_risk_mode(mode);
    std::string dir(kb::to_string(o.age_rule_direction));
    r.opt("age_rule_direction", dir);
    o.age_rule_direction = kb::parse_age_rule_direction(dir);
    r.finish();
    if (!(o.threshold > 0.0 && o.threshold < 1.0))
        throw ArgumentError("rules.threshold must be in (0, 1)");
}

json encode(const kb::SafetyRuleSet& r) {
    json gender = json::array();
    for (const auto& [name, g] : r.gender_rules)
        gender.push_back({{"drug", name},
                          {"allowed", kb::to_string(g.allowed)},
                          {"lambda_female", g.lambda_female},
                          {"lambda_male", g.lambda_male},
                          {"exposure_female", g.exposure_female},
                          {"exposure_male", g.exposure_male}});
    json age = json::array();
    for (const auto& [name, a] : r.age_rules)
        age.push_back({{"drug", name},
                       {"min_age", a.low},
                       {"max_age", a.high},
                       {"mean", a.mean},
                       {"stddev", a.stddev},
                       {"sample_count", a.sample_count}});
    json inter = json::array();
    for (const auto& rec : r.interactions.records())
        inter.push_back({{"drug_a", rec.drug_a}, {"drug_b", rec.drug_b},
                         {"severity", to_string(rec.severity)}});
    return {{"threshold", r.threshold},
            {"risk_mode", kb::to_string(r.risk_mode)},
            {"age_rule_direction", kb::to_string(r.age_rule_direction)},
            {"gender_rules", gender},
            {"age_rules", age},
            {"interactions", inter}};
}

void decode(const json& j, kb::SafetyRuleSet& r) {
    const std::string w = "rules";
    r = kb::SafetyRuleSet{};
    r.threshold = field<double>(j, "threshold", w);
    r.risk_mode = kb::parse_risk_mode(field<std::string>(j, "risk_mode", w));
    r.age_rule_direction = kb::parse_age_rule_direction(field<std::string>(j, "age_rule_direction", w));
    for (const auto& g : at(j, "gender_rules", w)) {
        kb::GenderRule rule;
        rule.drug_name = field<std::string>(g, "drug", w);
        rule.allowed = kb::parse_allowed_genders(field<std::string>(g, "allowed", w));
        rule.lambda_female = field<double>(g, "lambda_female", w);
        rule.lambda_male = field<double>(g, "lambda_male", w);
        rule.exposure_female = field<double>(g, "exposure_female", w);
        rule.exposure_male = field<double>(g, "exposure_male", w);
        r.gender_rules.emplace(rule.drug_name, rule);
    }
    for (const auto& a : at(j, "age_rules", w)) {
        kb::AgeRule rule;
        rule.drug_name = field<std::string>(a, "drug", w);
        rule.low = field<double>(a, "min_age", w);
        rule.high = field<double>(a, "max_age", w);
        rule.mean = field<double>(a, "mean", w);
        rule.stddev = field<double>(a, "stddev", w);
        rule.sample_count = field<std::size_t>(a, "sample_count", w);
        r.age_rules.emplace(rule.drug_name, rule);
    }
    for (const auto& i : at(j, "interactions", w)) {
        const auto sev = parse_severity(field<std::string>(i, "severity", w));
        if (!sev) throw ArgumentError("rules: unknown interaction severity");
        r.interactions.add({field<std::string>(i, "drug_a", w), field<std::string>(i, "drug_b", w), *sev});
    }
}

// --- configs --------------------------------------------------------------------

json encode(const Fractions& f) {
    return {{"train", f.train}, {"validation", f.validation}, {"test", f.test}};
}

void decode(const json& j, Fractions& f) {
    ConfigReader r(j, "split");
    r.opt("train", f.train);
    r.opt("validation", f.validation);
    r.opt("test", f.test);
    r.finish();
    split_sizes(0, f);  // validates
}

json encode(const rec::PipelineConfig& c) {
    return {{"seed", c.seed},
            {"min_frequency", c.min_frequency},
            {"cur_mode", text::to_string(c.cur_mode)},
            {"comment_features", c.comment_features},
            {"user_clustering", encode(c.user_clustering)},
            {"drug_clustering", encode(c.drug_clustering)},
            {"training", encode(c.training)},
            {"rules", encode(c.rules)},
            {"split", encode(c.split)},
            {"rule_extraction_fraction", c.rule_extraction_fraction}};
}

void decode(const json& j, rec::PipelineConfig& c) {
    ConfigReader r(j, "pipeline");
    r.opt("seed", c.seed);
    r.opt("min_frequency", c.min_frequency);
    std::string mode(text::to_string(c.cur_mode));
    r.opt("cur_mode", mode);
    c.cur_mode = text::parse_cur_mode(mode);
    r.opt("comment_features", c.comment_features);
    r.nested("user_clustering", [&](const json& v) { decode(v, c.user_clustering); });
    r.nested("drug_clustering", [&](const json& v) { decode(v, c.drug_clustering); });
    r.nested("training", [&](const json& v) { decode(v, c.training); });
    r.nested("rules", [&](const json& v) { decode(v, c.rules); });
    r.nested("split", [&](const json& v) { decode(v, c.split); });
    r.opt("rule_extraction_fraction", c.rule_extraction_fraction);
    r.finish();
    if (c.min_frequency < 1) throw ArgumentError("min_frequency must be >= 1");
}

json encode(const synthetic::SyntheticConfig& c) {
    json rates = json::array();
    for (const auto& p : c.rates)
        rates.push_back({{"drug", p.drug}, {"gender", to_string(p.gender)}, {"rate", p.rate}});
    return {{"users", c.users},
            {"drugs", c.drugs},
            {"user_clusters", c.user_clusters},
            {"drug_groups", c.drug_groups},
            {"category_bits", c.category_bits},
            {"side_effect_bits", c.side_effect_bits},
            {"benefit_bits", c.benefit_bits},
            {"ratings_per_user", c.ratings_per_user},
            {"preferred_per_cluster", c.preferred_per_cluster},
            {"preferred_share", c.preferred_share},
            {"noise", c.noise},
            {"interactions", c.interactions},
            {"high_rate", c.high_rate},
            {"low_rate", c.low_rate},
            {"high_rate_drugs_per_cluster", c.high_rate_drugs_per_cluster},
            {"rates", rates}};
}

void decode(const json& j, synthetic::SyntheticConfig& c) {
    ConfigReader r(j, "synthetic");
    r.opt("users", c.users);
    r.opt("drugs", c.drugs);
    r.opt("user_clusters", c.user_clusters);
    r.opt("drug_groups", c.drug_groups);
    r.opt("category_bits", c.category_bits);
    r.opt("side_effect_bits", c.side_effect_bits);
    r.opt("benefit_bits", c.benefit_bits);
    r.opt("ratings_per_user", c.ratings_per_user);
    r.opt("preferred_per_cluster", c.preferred_per_cluster);
    r.opt("preferred_share", c.preferred_share);
    r.opt("noise", c.noise);
    r.opt("interactions", c.interactions);
    r.opt("high_rate", c.high_rate);
    r.opt("low_rate", c.low_rate);
    r.opt("high_rate_drugs_per_cluster", c.high_rate_drugs_per_cluster);
    r.nested("rates", [&](const json& v) {
        c.rates.clear();
        for (const auto& p : v) {
            const std::string w = "synthetic.rates";
            c.rates.push_back({field<std::string>(p, "drug", w),
                               parse_gender(field<std::string>(p, "gender", w)),
                               field<double>(p, "rate", w)});
        }
    });
    r.finish();
}

json encode(const eval::EvaluationOptions& o) {
    return {{"relevance_threshold", o.relevance_threshold},
            {"top_n", o.top_n},
            {"baseline",
             {{"rank", o.baseline.rank},
              {"learning_rate", o.baseline.learning_rate},
              {"epochs", o.baseline.epochs},
              {"init_range", o.baseline.init_range}}}};
}

void decode(const json& j, eval::EvaluationOptions& o) {
    ConfigReader r(j, "evaluation");
    r.opt("relevance_threshold", o.relevance_threshold);
    r.opt("top_n", o.top_n);
    r.nested("baseline", [&](const json& v) {
        ConfigReader b(v, "evaluation.baseline");
        b.opt("rank", o.baseline.rank);
        b.opt("learning_rate", o.baseline.learning_rate);
        b.opt("epochs", o.baseline.epochs);
        b.opt("init_range", o.baseline.init_range);
        b.finish();
    });
    r.finish();
    if (o.top_n < 1) throw ArgumentError("evaluation.top_n must be >= 1");
    if (o.baseline.rank < 1) throw ArgumentError("evaluation.baseline.rank must be >= 1");
}

// --- reports --------------------------------------------------------------------

json encode(const eval::MetricsReport& r) {
    json j;
    j["relevance_threshold"] = r.relevance_threshold;
    j["top_n"] = r.top_n;
    j["test_samples"] = r.test_samples;
    j["proposed"] = encode_model_report(r.proposed);
    j["baseline"] = encode_model_report(r.baseline);
    if (r.ablation) {
        j["adverse_ratios"] = {{"patients", r.ablation->patients},
                               {"without_kb", encode_ratios(r.ablation->without_kb)},
                               {"with_kb", encode_ratios(r.ablation->with_kb)}};
    } else {
        j["adverse_ratios"] = nullptr;
    }
    return j;
}

json encode(const ValidationReport& r) {
    const std::size_t errors = r.unresolved_in_ratings.size() +
                               r.unresolved_in_interactions.size() +
                               r.unresolved_in_adverse_events.size();
    return {{"ok", r.ok()},
            {"error_count", errors},
            {"rows",
             {{"ratings", r.rating_rows},
              {"drugs", r.drug_rows},
              {"interactions", r.interaction_rows},
              {"adverse_events", r.adverse_event_rows}}},
            {"unresolved_drugs",
             {{"ratings", r.unresolved_in_ratings},
              {"interactions", r.unresolved_in_interactions},
              {"adverse_events", r.unresolved_in_adverse_events}}}};
}

json encode(const rec::RecommendResult& r, bool explain) {
    json recs = json::array();
    for (const auto& x : r.recommendations)
        recs.push_back({{"rank", x.rank},
                        {"drug", x.drug_name},
                        {"score", x.score},
                        {"display_rating", x.display_rating},
                        {"warnings", x.warnings}});
    json j = {{"user_cluster", r.user_cluster},
              {"recommendations", recs},
              {"diagnostics", encode_diagnostics(r.diagnostics)}};
    if (explain) {
        json removed = json::array();
        for (const auto& m : r.removed)
            removed.push_back({{"drug", m.drug_name},
                               {"rule", kb::to_string(m.reason)},
                               {"detail", m.detail}});
        j["removed"] = removed;
    }
    return j;
}

rec::PatientQuery decode_patient(const json& j) {
    ConfigReader r(j, "patient");
    rec::PatientQuery q;
    if (!j.contains("age")) throw ArgumentError("patient: missing field 'age'");
    r.opt("age", q.age);
    std::string gender = "unspecified";
    r.opt("gender", gender);
    q.gender = parse_gender(gender);
    r.opt("is_caregiver", q.is_caregiver);
    r.opt("condition", q.condition_text);
    r.opt("current_drugs", q.current_drugs);
    r.opt("comment", q.comment);
    r.finish();
    if (!(q.age >= 0.0)) throw ArgumentError("patient: age must be >= 0");
    return q;
}

std::string loss_trace_csv(const std::vector<factorization::LossPoint>& trace) {
    std::string out = "epoch,user,drug,combined\n";
    for (const auto& p : trace)
        out += std::to_string(p.epoch) + "," + num(p.user) + "," + num(p.drug) + "," +
               num(p.combined) + "\n";
    return out;
}

std::string roc_csv(const eval::MetricsReport& report) {
    std::string out = "model,threshold,fpr,tpr\n";
    for (const auto* m : {&report.proposed, &report.baseline}) {
        if (!m->roc) continue;
        for (const auto& p : m->roc->points)
            out += m->name + "," + (std::isinf(p.threshold) ? std::string("inf") : num(p.threshold)) +
                   "," + num(p.fpr) + "," + num(p.tpr) + "\n";
    }
    return out;
}

std::string metrics_csv(const eval::MetricsReport& report) {
    std::string out = "model,accuracy,sensitivity,specificity,precision,f1,f2,mcc,auc,rmse,"
                      "hit_rate,cumulative_hit_rate\n";
    for (const auto* m : {&report.proposed, &report.baseline}) {
        out += m->name + "," + num(m->scalars.accuracy) + "," + num(m->scalars.sensitivity) + "," +
               num(m->scalars.specificity) + "," + num(m->scalars.precision) + "," +
               num(m->scalars.f1) + "," + num(m->scalars.f2) + "," + num(m->scalars.mcc) + "," +
               (m->roc ? num(m->roc->auc) : std::string()) + "," + num(m->rmse) + "," +
               num(m->hit_rate) + "," + num(m->cumulative_hit_rate) + "\n";
    }
    return out;
}

// --- artifacts ------------------------------------------------------------------

const std::vector<std::string> kArtifactFiles = {
    "pipeline.json",     "vocabulary.json", "user_clusters.json", "drug_clusters.json",
    "factorization.json", "rules.json",     "loss_trace.csv",
};

std::vector<std::string> save_artifacts(const std::filesystem::path& dir,
                                        const rec::PipelineArtifacts& a) {
    json seeds = json::object();
    for (const auto& [k, v] : a.seeds) seeds[k] = v;
    json pipeline = {{"format_version", 1},
                     {"config", encode(a.config)},
                     {"seeds", seeds},
                     {"drug_names", a.drug_names},
                     {"user_scaler", encode(a.user_scaler)},
                     {"drug_scaler", encode(a.drug_scaler)},
                     {"observed", encode(a.observed)},
                     {"diagnostics", encode_diagnostics(a.diagnostics)}};
    io::write_file_atomic(dir / "pipeline.json", dump(pipeline));
    io::write_file_atomic(dir / "vocabulary.json", dump(encode(a.vocabulary)));
    io::write_file_atomic(dir / "user_clusters.json", dump(encode(a.user_clusters)));
    io::write_file_atomic(dir / "drug_clusters.json", dump(encode(a.drug_clusters)));
    io::write_file_atomic(dir / "factorization.json", dump(encode(a.model)));
    io::write_file_atomic(dir / "rules.json", dump(encode(a.rules)));
    io::write_file_atomic(dir / "loss_trace.csv", loss_trace_csv(a.loss_trace));
    return kArtifactFiles;
}

rec::PipelineArtifacts load_artifacts(const std::filesystem::path& dir) {
    for (const auto& f : kArtifactFiles)
        if (!std::filesystem::exists(dir / f))
            throw IoError((dir / f).string(), "missing artifact " + f);
    auto read = [&](const char* name) {
        const auto path = dir / name;
        try {
            return json::parse(io::read_file(path));
        } catch (const json::parse_error& e) {
            throw IoError(path.string(), std::string("malformed JSON: ") + e.what());
        }
    };
    rec::PipelineArtifacts a;
    const json pipeline = read("pipeline.json");
    decode(at(pipeline, "config", "pipeline"), a.config);
    for (const auto& [k, v] : at(pipeline, "seeds", "pipeline").items())
        a.seeds[k] = as<std::uint64_t>(v, "pipeline.seeds");
    a.drug_names = field<std::vector<std::string>>(pipeline, "drug_names", "pipeline");
    decode(at(pipeline, "user_scaler", "pipeline"), a.user_scaler);
    decode(at(pipeline, "drug_scaler", "pipeline"), a.drug_scaler);
    decode(at(pipeline, "observed", "pipeline"), a.observed);
    a.diagnostics.messages = field<std::vector<std::string>>(pipeline, "diagnostics", "pipeline");
    decode(read("vocabulary.json"), a.vocabulary);
    decode(read("user_clusters.json"), a.user_clusters);
    decode(read("drug_clusters.json"), a.drug_clusters);
    decode(read("factorization.json"), a.model);
    decode(read("rules.json"), a.rules);
    if (a.model.drugs() != a.drug_names.size() || a.model.clusters() != a.user_clusters.final_k())
        throw ArgumentError("artifacts are not dimension-consistent");
    a.refresh_predictions();
    return a;
}

}  // namespace drugrec::serial
