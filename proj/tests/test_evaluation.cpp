#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "drugrec/error.hpp"
#include "drugrec/evaluation.hpp"
#include "drugrec/random.hpp"

using namespace drugrec;
using namespace drugrec::eval;

namespace {

struct OracleCounts {
    double tp = 0, fp = 0, tn = 0, fn = 0;
};

OracleCounts count_pairs(const std::vector<double>& pred, const std::vector<double>& actual) {
    OracleCounts c;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool p = pred[i] >= 4.0, a = actual[i] >= 4.0;
        if (p && a) c.tp += 1;
        else if (p) c.fp += 1;
        else if (a) c.fn += 1;
        else c.tn += 1;
    }
    return c;
}

double safe(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

double mann_whitney(const std::vector<double>& s, const std::vector<std::uint8_t>& y) {
    double wins = 0.0, pairs = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = 0; j < s.size(); ++j)
            if (y[i] && !y[j]) {
                pairs += 1.0;
                wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
            }
    return wins / pairs;
}

std::vector<double> random_scores(Rng& rng, std::size_t n, bool discrete) {
    std::vector<double> v(n);
    for (double& x : v) x = discrete ? static_cast<double>(rng.index(11)) : rng.uniform(0.0, 10.0);
    return v;
}

}  // namespace

TEST_CASE("confusion counts and rates match a counting oracle") {
    Rng rng(1);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng.index(500);
        const bool discrete = trial % 2 == 0;
        const auto pred = random_scores(rng, n, discrete);
        const auto actual = random_scores(rng, n, discrete);
        const OracleCounts o = count_pairs(pred, actual);
        const ConfusionMatrix cm = binarize_and_count(pred, actual);
        CHECK(cm.tp == static_cast<std::size_t>(o.tp));
        CHECK(cm.fp == static_cast<std::size_t>(o.fp));
        CHECK(cm.tn == static_cast<std::size_t>(o.tn));
        CHECK(cm.fn == static_cast<std::size_t>(o.fn));

        const ScalarMetrics m = metrics(cm);
        const double P = safe(o.tp, o.tp + o.fp), R = safe(o.tp, o.tp + o.fn);
        const double mcc_den = std::sqrt((o.tp + o.fp) * (o.tp + o.fn) * (o.tn + o.fp) * (o.tn + o.fn));
        CHECK(std::abs(m.accuracy - (o.tp + o.tn) / static_cast<double>(n)) <= 1e-12);
        CHECK(std::abs(m.sensitivity - R) <= 1e-12);
        CHECK(std::abs(m.specificity - safe(o.tn, o.tn + o.fp)) <= 1e-12);
        CHECK(std::abs(m.precision - P) <= 1e-12);
        CHECK(std::abs(m.f1 - safe(2 * P * R, P + R)) <= 1e-12);
        CHECK(std::abs(m.f2 - safe(5 * P * R, 4 * P + R)) <= 1e-12);
        CHECK(std::abs(m.mcc - safe(o.tp * o.tn - o.fp * o.fn, mcc_den)) <= 1e-12);
    }
}

TEST_CASE("threshold boundary counts as positive") {
    const std::vector<double> pred{4.0, 3.999999}, actual{4.0, 4.0};
    const ConfusionMatrix cm = binarize_and_count(pred, actual);
    CHECK(cm.tp == 1);
    CHECK(cm.fn == 1);
    const std::vector<double> shorter{1.0};
    CHECK_THROWS_AS(binarize_and_count(pred, shorter), ArgumentError);
}

TEST_CASE("F-beta worked example") {
    CHECK(f_beta(0.5, 1.0, 2.0) == doctest::Approx(5.0 * 0.5 / (4.0 * 0.5 + 1.0)).epsilon(1e-15));
    CHECK(f_beta(0.5, 1.0, 2.0) == doctest::Approx(0.8333).epsilon(1e-4));
    CHECK(f_beta(0.0, 0.0, 2.0) == 0.0);
}

TEST_CASE("undefined ratios report zero and are flagged") {
    ConfusionMatrix cm;
    cm.tn = 5;
    const ScalarMetrics m = metrics(cm);
    CHECK(m.accuracy == 1.0);
    CHECK(m.sensitivity == 0.0);
    CHECK(m.precision == 0.0);
    CHECK(m.mcc == 0.0);
    auto has = [&](const char* n) {
        return std::find(m.undefined.begin(), m.undefined.end(), n) != m.undefined.end();
    };
    CHECK(has("sensitivity"));
    CHECK(has("precision"));
    CHECK(has("mcc"));
    CHECK_FALSE(has("specificity"));
    const ScalarMetrics empty = metrics(ConfusionMatrix{});
    CHECK(empty.accuracy == 0.0);
    CHECK(std::find(empty.undefined.begin(), empty.undefined.end(), "accuracy") != empty.undefined.end());
}

TEST_CASE("MCC under label flips") {
    Rng rng(2);
    for (int t = 0; t < 200; ++t) {
        ConfusionMatrix cm{1 + rng.index(50), 1 + rng.index(50), 1 + rng.index(50), 1 + rng.index(50)};
        const double mcc = metrics(cm).mcc;
        const ConfusionMatrix both{cm.tn, cm.fn, cm.tp, cm.fp};
        const ConfusionMatrix preds{cm.fn, cm.tn, cm.fp, cm.tp};
        CHECK(metrics(both).mcc == doctest::Approx(mcc).epsilon(1e-12));
        CHECK(metrics(preds).mcc == doctest::Approx(-mcc).epsilon(1e-12));
        const ScalarMetrics m = metrics(cm);
        CHECK(m.accuracy == doctest::Approx(static_cast<double>(cm.tp + cm.tn) / cm.total()));
        CHECK(m.f1 == doctest::Approx(2.0 / (1.0 / m.precision + 1.0 / m.sensitivity)));
        for (double r : {m.accuracy, m.sensitivity, m.specificity, m.precision, m.f1, m.f2}) {
            CHECK(r >= 0.0);
            CHECK(r <= 1.0);
        }
        CHECK(std::abs(m.mcc) <= 1.0);
    }
}

TEST_CASE("AUC matches the pair-counting oracle") {
    Rng rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng.index(99);
        const auto s = random_scores(rng, n, trial % 2 == 0);
        std::vector<std::uint8_t> y(n);
        for (auto& v : y) v = rng.bernoulli(0.5);
        y[0] = 1;
        y[1] = 0;
        const RocCurve roc = roc_auc(s, y);
        CHECK(std::abs(roc.auc - mann_whitney(s, y)) <= 1e-12);
        CHECK(roc.points.front().fpr == 0.0);
        CHECK(roc.points.front().tpr == 0.0);
        CHECK(roc.points.back().fpr == 1.0);
        CHECK(roc.points.back().tpr == 1.0);
        for (std::size_t k = 1; k < roc.points.size(); ++k) {
            CHECK(roc.points[k].fpr >= roc.points[k - 1].fpr);
            CHECK(roc.points[k].tpr >= roc.points[k - 1].tpr);
        }
        // Strictly monotonic transforms leave the ranking, hence the AUC, unchanged.
        std::vector<double> t(n);
        for (std::size_t i = 0; i < n; ++i) t[i] = std::exp(0.7 * s[i]) - 3.0;
        CHECK(roc_auc(t, y).auc == roc.auc);
    }
}

TEST_CASE("AUC needs both classes") {
    const std::vector<double> s{0.1, 0.2};
    const std::vector<std::uint8_t> y{1, 1};
    CHECK_THROWS_AS(roc_auc(s, y), UndefinedMetricError);
}

TEST_CASE("hit rates") {
    TopLists lists;
    lists["u"] = {"a", "b", "c"};
    std::vector<HitSample> samples;
    samples.push_back({"u", "a", 3.0});
    samples.push_back({"u", "b", 5.0});
    samples.push_back({"u", "c", 7.0});
    for (int i = 0; i < 7; ++i) samples.push_back({"u", "z" + std::to_string(i), 9.0});
    CHECK(hit_rate(lists, samples) == doctest::Approx(0.3));
    CHECK(cumulative_hit_rate(lists, samples, 4.0) == doctest::Approx(0.2));
    samples.push_back({"nobody", "a", 9.0});
    CHECK(hit_rate(lists, samples) == doctest::Approx(3.0 / 11.0));
    CHECK_THROWS_AS(hit_rate(lists, std::vector<HitSample>{}), UndefinedMetricError);
}

TEST_CASE("cumulative hit rate never exceeds hit rate") {
    Rng rng(4);
    for (int trial = 0; trial < 100; ++trial) {
        TopLists lists;
        std::vector<HitSample> samples;
        for (int u = 0; u < 10; ++u) {
            const std::string user = "u" + std::to_string(u);
            for (int k = 0; k < 5; ++k) lists[user].push_back("d" + std::to_string(rng.index(20)));
            samples.push_back({user, "d" + std::to_string(rng.index(20)), rng.uniform(0, 10)});
        }
        const double h = hit_rate(lists, samples);
        double prev = h;
        for (double th = 0.0; th <= 10.0; th += 0.5) {
            const double c = cumulative_hit_rate(lists, samples, th);
            CHECK(c <= h);
            CHECK(c <= prev);
            prev = c;
        }
    }
}

TEST_CASE("adverse ratios join recommendation and record by drug") {
    std::vector<AdverseEventRecord> truth(2);
    truth[0].drug_name = "A";
    truth[0].events = {AdverseEvent::death, AdverseEvent::hospitalization};
    truth[1].drug_name = "B";
    truth[1].events = {AdverseEvent::disability};
    const std::vector<LoggedRecommendation> log{{0, "A"}, {0, "C"}, {1, "B"}, {1, "A"}};
    const AdverseRatios r = adverse_ratios(log, truth);
    CHECK(r.recommendations == 4);
    CHECK(r.deaths == 1);
    CHECK(r.hospitalizations == 1);
    CHECK(r.disabilities == 1);
    CHECK(r.death == 0.25);
    CHECK_THROWS_AS(adverse_ratios(std::vector<LoggedRecommendation>{}, truth), UndefinedMetricError);
    const std::vector<LoggedRecommendation> bad{{5, "A"}};
    CHECK_THROWS_AS(adverse_ratios(bad, truth), ArgumentError);
}
