#include "drugrec/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "drugrec/error.hpp"
#include "drugrec/textprep.hpp"

namespace drugrec::eval {

namespace {

double ratio(double num, double den, const char* name, std::vector<std::string>& undefined) {
    if (den == 0.0) {
        undefined.emplace_back(name);
        return 0.0;
    }
    return num / den;
}

bool contains(const std::vector<std::string>& list, const std::string& item) {
    return std::find(list.begin(), list.end(), item) != list.end();
}

double actual_cur(const RatingRecord& r, text::CurMode mode) {
    static const text::Preprocessor prep = text::Preprocessor::with_defaults();
    static const text::SentimentLexicon lexicon = text::SentimentLexicon::with_defaults();
    const text::CurInputs in{r.overall_rating, r.effectiveness, r.side_effect_severity,
                             text::polarity(prep(r.comment), lexicon)};
    return text::compute_cur(in, mode);
}

std::vector<std::string> top_by_score(std::span<const double> scores,
                                      const std::vector<std::string>& names, std::size_t n) {
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    std::vector<std::string> out;
    for (std::size_t k = 0; k < idx.size() && k < n; ++k) out.push_back(names[idx[k]]);
    return out;
}

void fill_scores(ModelReport& report, std::span<const double> predicted,
                 std::span<const double> actual, const TopLists& lists,
                 std::span<const HitSample> samples, double threshold) {
    std::vector<double> pred_display(predicted.size()), actual_display(actual.size());
    std::vector<std::uint8_t> labels(actual.size());
    double sq = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        pred_display[i] = predicted[i] * 10.0;
        actual_display[i] = actual[i] * 10.0;
        labels[i] = actual_display[i] >= threshold ? 1 : 0;
        sq += (predicted[i] - actual[i]) * (predicted[i] - actual[i]);
    }
    report.confusion = binarize_and_count(pred_display, actual_display, threshold);
    report.scalars = metrics(report.confusion);
    report.rmse = predicted.empty() ? 0.0 : std::sqrt(sq / static_cast<double>(predicted.size()));
    try {
        report.roc = roc_auc(predicted, labels);
    } catch (const UndefinedMetricError&) {
        report.scalars.undefined.emplace_back("auc");
    }
    report.hit_rate = hit_rate(lists, samples);
    report.cumulative_hit_rate = cumulative_hit_rate(lists, samples, threshold);
    for (int t = 0; t <= 10; ++t)
        report.cumulative_curve.push_back(cumulative_hit_rate(lists, samples, t));
}

}  // namespace

ConfusionMatrix binarize_and_count(std::span<const double> predicted,
                                   std::span<const double> actual, double threshold) {
    if (predicted.size() != actual.size())
        throw ArgumentError("binarize_and_count: " + std::to_string(predicted.size()) +
                            " predictions vs " + std::to_string(actual.size()) + " actuals");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const bool p = predicted[i] >= threshold;
        const bool a = actual[i] >= threshold;
        if (p && a) ++cm.tp;
        else if (p) ++cm.fp;
        else if (a) ++cm.fn;
        else ++cm.tn;
    }
    return cm;
}

double f_beta(double precision, double recall, double beta) {
    const double b2 = beta * beta;
    const double den = b2 * precision + recall;
    return den == 0.0 ? 0.0 : (1.0 + b2) * precision * recall / den;
}

ScalarMetrics metrics(const ConfusionMatrix& cm) {
    ScalarMetrics m;
    const auto tp = static_cast<double>(cm.tp), fp = static_cast<double>(cm.fp);
    const auto tn = static_cast<double>(cm.tn), fn = static_cast<double>(cm.fn);
    m.accuracy = ratio(tp + tn, tp + tn + fp + fn, "accuracy", m.undefined);
    m.sensitivity = ratio(tp, tp + fn, "sensitivity", m.undefined);
    m.specificity = ratio(tn, tn + fp, "specificity", m.undefined);
    m.precision = ratio(tp, tp + fp, "precision", m.undefined);
    if (m.precision + m.sensitivity == 0.0) m.undefined.emplace_back("f1");
    m.f1 = f_beta(m.precision, m.sensitivity, 1.0);
    if (4.0 * m.precision + m.sensitivity == 0.0) m.undefined.emplace_back("f2");
    m.f2 = f_beta(m.precision, m.sensitivity, 2.0);
    const double den = std::sqrt((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn));
    m.mcc = ratio(tp * tn - fp * fn, den, "mcc", m.undefined);
    return m;
}

RocCurve roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    if (scores.size() != labels.size())
        throw ArgumentError("roc_auc: scores and labels differ in length");
    std::size_t pos = 0;
    for (auto l : labels) pos += l != 0;
    const std::size_t neg = labels.size() - pos;
    if (pos == 0 || neg == 0) throw UndefinedMetricError("AUC needs both classes present");

    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    RocCurve curve;
    curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
    std::size_t tp = 0, fp = 0;
    double auc = 0.0;
    for (std::size_t k = 0; k < idx.size();) {
        const double s = scores[idx[k]];
        // Equal scores enter the curve together.
        while (k < idx.size() && scores[idx[k]] == s) {
            if (labels[idx[k]]) ++tp;
            else ++fp;
            ++k;
        }
        RocPoint p{s, static_cast<double>(fp) / static_cast<double>(neg),
                   static_cast<double>(tp) / static_cast<double>(pos)};
        const RocPoint& prev = curve.points.back();
        auc += (p.fpr - prev.fpr) * (p.tpr + prev.tpr) / 2.0;
        curve.points.push_back(p);
    }
    curve.auc = auc;
    return curve;
}

double hit_rate(const TopLists& lists, std::span<const HitSample> samples) {
    return cumulative_hit_rate(lists, samples, -std::numeric_limits<double>::infinity());
}

double cumulative_hit_rate(const TopLists& lists, std::span<const HitSample> samples,
                           double threshold) {
    if (samples.empty()) throw UndefinedMetricError("hit rate needs at least one test sample");
    std::size_t hits = 0;
    for (const auto& s : samples) {
        if (s.actual_rating < threshold) continue;
        auto it = lists.find(s.user);
        if (it != lists.end() && contains(it->second, s.drug)) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(samples.size());
}

AdverseRatios adverse_ratios(std::span<const LoggedRecommendation> log,
                             std::span<const AdverseEventRecord> ground_truth) {
    if (log.empty()) throw UndefinedMetricError("adverse ratios need at least one recommendation");
    AdverseRatios r;
    r.recommendations = log.size();
    for (const auto& entry : log) {
        if (entry.patient >= ground_truth.size())
            throw ArgumentError("recommendation log references an unknown patient");
        const auto& rec = ground_truth[entry.patient];
        if (rec.drug_name != entry.drug) continue;
        if (rec.events.contains(AdverseEvent::death)) ++r.deaths;
        if (rec.events.contains(AdverseEvent::hospitalization)) ++r.hospitalizations;
        if (rec.events.contains(AdverseEvent::disability)) ++r.disabilities;
    }
    const auto n = static_cast<double>(r.recommendations);
    r.death = static_cast<double>(r.deaths) / n;
    r.hospitalization = static_cast<double>(r.hospitalizations) / n;
    r.disability = static_cast<double>(r.disabilities) / n;
    return r;
}

KbAblation run_kb_ablation(const rec::PipelineArtifacts& artifacts,
                           std::span<const AdverseEventRecord> patients, std::size_t top_n) {
    KbAblation out;
    out.patients = patients.size();
    std::vector<LoggedRecommendation> without, with;
    for (std::size_t i = 0; i < patients.size(); ++i) {
        const rec::PatientQuery q = rec::query_from_adverse_event(patients[i]);
        for (const auto& r : rec::recommend(q, artifacts, {top_n, false}).recommendations)
            without.push_back({i, r.drug_name});
        for (const auto& r : rec::recommend(q, artifacts, {top_n, true}).recommendations)
            with.push_back({i, r.drug_name});
    }
    if (!without.empty()) out.without_kb = adverse_ratios(without, patients);
    if (!with.empty()) out.with_kb = adverse_ratios(with, patients);
    return out;
}

MetricsReport evaluate_pipeline(const rec::PipelineArtifacts& artifacts,
                                std::span<const RatingRecord> train_ratings,
                                std::span<const RatingRecord> test_ratings,
                                std::span<const AdverseEventRecord> test_adverse_events,
                                const EvaluationOptions& options) {
    if (test_ratings.empty()) throw UndefinedMetricError("no test ratings to evaluate");
    if (options.top_n < 1) throw ArgumentError("top_n must be >= 1");
    MetricsReport report;
    report.relevance_threshold = options.relevance_threshold;
    report.top_n = options.top_n;
    report.test_samples = test_ratings.size();
    const text::CurMode mode = artifacts.config.cur_mode;
    const std::size_t M = artifacts.drug_names.size();

    std::unordered_map<std::string, std::size_t> drug_col;
    for (std::size_t j = 0; j < M; ++j) drug_col.emplace(artifacts.drug_names[j], j);
    auto column = [&](const std::string& drug) {
        auto it = drug_col.find(drug);
        if (it == drug_col.end()) throw ValidationError("test rating references unknown drug " + drug, {drug});
        return it->second;
    };

    // Baseline: plain MF on the user x drug matrix of the training ratings.
    std::unordered_map<std::string, std::size_t> user_row;
    for (const auto& r : train_ratings) user_row.emplace(r.user_id, user_row.size());
    SparseRatingMatrix user_matrix(user_row.size(), M);
    {
        Matrix sums(user_row.size(), M);
        for (const auto& r : train_ratings) {
            const std::size_t u = user_row.at(r.user_id), j = column(r.drug_name);
            sums(u, j) += actual_cur(r, mode);
            ++user_matrix.counts[u * M + j];
        }
        for (std::size_t u = 0; u < user_matrix.rows(); ++u)
            for (std::size_t j = 0; j < M; ++j)
                if (const auto n = user_matrix.counts[u * M + j])
                    user_matrix.set(u, j, sums(u, j) / static_cast<double>(n));
    }
    factorization::TrainConfig bc;
    bc.learning_rate = options.baseline.learning_rate;
    bc.epochs = options.baseline.epochs;
    bc.init_range = options.baseline.init_range;
    bc.seed = artifacts.seeds.count("baseline") ? artifacts.seeds.at("baseline") : 0;
    const factorization::BaselineMF mf = factorization::fit_baseline_mf(user_matrix, options.baseline.rank, bc);

    // Fallback for users absent from training: per-drug mean, then global mean.
    std::vector<double> drug_mean(M, 0.0);
    {
        double gsum = 0.0;
        std::size_t gn = 0;
        for (std::size_t j = 0; j < M; ++j) {
            double s = 0.0;
            std::size_t n = 0;
            for (std::size_t u = 0; u < user_matrix.rows(); ++u)
                if (user_matrix.observed(u, j)) {
                    s += user_matrix.value(u, j);
                    ++n;
                }
            gsum += s;
            gn += n;
            drug_mean[j] = n > 0 ? s / static_cast<double>(n) : -1.0;
        }
        const double global = gn > 0 ? gsum / static_cast<double>(gn) : 0.0;
        for (double& d : drug_mean)
            if (d < 0.0) d = global;
    }
    auto baseline_row = [&](const std::string& user) {
        std::vector<double> s(M);
        auto it = user_row.find(user);
        for (std::size_t j = 0; j < M; ++j)
            s[j] = it == user_row.end() ? drug_mean[j]
                                        : std::clamp(mf.predict(it->second, j), 0.0, 1.0);
        return s;
    };

    std::vector<double> actual, proposed_pred, baseline_pred;
    std::vector<HitSample> samples;
    TopLists proposed_lists, proposed_kb_lists, baseline_lists;
    for (const auto& r : test_ratings) {
        const std::size_t j = column(r.drug_name);
        const double a = actual_cur(r, mode);
        actual.push_back(a);
        samples.push_back({r.user_id, r.drug_name, a * 10.0});

        const rec::PatientQuery q = rec::query_from_rating(r);
        const std::size_t cluster = rec::assign_user_cluster(q, artifacts);
        proposed_pred.push_back(artifacts.predictions(cluster, j));
        const auto brow = baseline_row(r.user_id);
        baseline_pred.push_back(brow[j]);

        if (!proposed_lists.count(r.user_id)) {
            auto ranked = rec::ranked_drugs(artifacts, cluster);
            ranked.resize(std::min(ranked.size(), options.top_n));
            proposed_lists.emplace(r.user_id, std::move(ranked));
            std::vector<std::string> filtered;
            for (const auto& rc : rec::recommend(q, artifacts, {options.top_n, true}).recommendations)
                filtered.push_back(rc.drug_name);
            proposed_kb_lists.emplace(r.user_id, std::move(filtered));
            baseline_lists.emplace(r.user_id, top_by_score(brow, artifacts.drug_names, options.top_n));
        }
    }

    report.proposed.name = "clustered_nn_mf";
    fill_scores(report.proposed, proposed_pred, actual, proposed_lists, samples,
                options.relevance_threshold);
    report.proposed.hit_rate_with_kb = hit_rate(proposed_kb_lists, samples);
    report.baseline.name = "conventional_mf";
    fill_scores(report.baseline, baseline_pred, actual, baseline_lists, samples,
                options.relevance_threshold);

    if (!test_adverse_events.empty())
        report.ablation = run_kb_ablation(artifacts, test_adverse_events, options.top_n);
    return report;
}

}  // namespace drugrec::eval
