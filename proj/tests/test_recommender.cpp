#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <set>

#include "drugrec/error.hpp"
#include "drugrec/recommender.hpp"
#include "drugrec/synthetic.hpp"
#include "support.hpp"

using namespace drugrec;
using namespace drugrec::rec;

namespace {

struct Fixture {
    synthetic::SyntheticData data;
    PipelineConfig config;
    PreparedData prepared;
    PipelineArtifacts artifacts;
};

const Fixture& small_pipeline() {
    static const Fixture f = [] {
        Fixture x;
        synthetic::SyntheticConfig sc;
        sc.users = 150;
        sc.drugs = 20;
        sc.preferred_per_cluster = 4;
        sc.interactions = 25;
        x.data = synthetic::generate_synthetic_with_truth(sc, 31);
        x.config.seed = 31;
        x.config.training.learning_rate = 0.3;
        x.config.training.epochs = 500;
        x.prepared = prepare_splits(x.data.bundle, x.config);
        x.artifacts = build_pipeline(x.prepared.training, x.config);
        return x;
    }();
    return f;
}

}  // namespace

TEST_CASE("pipeline artifacts are dimension-consistent") {
    const auto& a = small_pipeline().artifacts;
    CHECK(a.drug_names.size() == 20);
    CHECK(a.observed.rows() == a.user_clusters.final_k());
    CHECK(a.observed.cols() == a.drug_names.size());
    CHECK(a.model.clusters() == a.user_clusters.final_k());
    CHECK(a.model.drugs() == a.drug_names.size());
    CHECK(a.predictions.rows() == a.observed.rows());
    CHECK(a.predictions.cols() == a.observed.cols());
    CHECK(a.user_scaler.dimension() == a.user_clusters.dimension());
    CHECK(a.drug_scaler.dimension() == a.drug_clusters.dimension());
    CHECK(a.loss_trace.size() == a.config.training.epochs + 1);
    CHECK(a.seeds == stage_seeds(a.config.seed));
}

TEST_CASE("splits hold out test ratings and rule-extraction events") {
    const auto& f = small_pipeline();
    const std::size_t n = f.data.bundle.ratings.size();
    const SplitSizes s = split_sizes(n, f.config.split);
    CHECK(f.prepared.training.ratings.size() == s.train);
    CHECK(f.prepared.held_out.validation_ratings.size() == s.validation);
    CHECK(f.prepared.held_out.test_ratings.size() == s.test);
    const std::size_t events = f.data.bundle.adverse_events.size();
    CHECK(f.prepared.held_out.test_adverse_events.size() ==
          static_cast<std::size_t>(std::floor(events * 0.2 + 1e-9)));
    CHECK(f.prepared.training.adverse_events.size() + f.prepared.held_out.test_adverse_events.size() ==
          events);
}

TEST_CASE("recommendations exclude current drugs and respect the rules") {
    const auto& f = small_pipeline();
    std::size_t checked = 0;
    for (const auto& r : f.prepared.held_out.test_ratings) {
        PatientQuery q = query_from_rating(r);
        q.current_drugs = {r.drug_name, synthetic::drug_name(checked % 20)};
        const RecommendResult out = recommend(q, f.artifacts, {10, true});
        kb::Patient p{q.age, q.gender, q.current_drugs};
        for (std::size_t k = 0; k < out.recommendations.size(); ++k) {
            const auto& rec = out.recommendations[k];
            CHECK(std::find(q.current_drugs.begin(), q.current_drugs.end(), rec.drug_name) ==
                  q.current_drugs.end());
            CHECK_FALSE(kb::violation(rec.drug_name, p, f.artifacts.rules).has_value());
            CHECK(rec.rank == k + 1);
            CHECK(rec.display_rating == doctest::Approx(rec.score * 10.0));
            if (k > 0) CHECK(rec.score <= out.recommendations[k - 1].score);
        }
        ++checked;
    }
    CHECK(checked > 0);
}

TEST_CASE("disabling the filter gives a superset in the same order") {
    const auto& f = small_pipeline();
    for (const auto& r : f.prepared.held_out.test_ratings) {
        const PatientQuery q = query_from_rating(r);
        const auto with = recommend(q, f.artifacts, {20, true});
        const auto without = recommend(q, f.artifacts, {20, false});
        CHECK(without.removed.empty());
        std::size_t j = 0;
        for (const auto& x : without.recommendations)
            if (j < with.recommendations.size() && with.recommendations[j].drug_name == x.drug_name) ++j;
        CHECK(j == with.recommendations.size());
    }
}

TEST_CASE("n bounds the list and n = 1 is the best safe drug") {
    const auto& f = small_pipeline();
    const PatientQuery q = query_from_rating(f.prepared.held_out.test_ratings.front());
    const auto all = recommend(q, f.artifacts, {100, true});
    const auto one = recommend(q, f.artifacts, {1, true});
    REQUIRE(one.recommendations.size() == 1);
    CHECK(one.recommendations[0].drug_name == all.recommendations[0].drug_name);
    CHECK(recommend(q, f.artifacts, {3, true}).recommendations.size() == 3);
    CHECK_THROWS_AS(recommend(q, f.artifacts, {0, true}), ArgumentError);
}

TEST_CASE("a patient on every drug gets an empty list and a diagnostic") {
    const auto& f = small_pipeline();
    PatientQuery q = query_from_rating(f.prepared.held_out.test_ratings.front());
    q.current_drugs = f.artifacts.drug_names;
    const auto out = recommend(q, f.artifacts);
    CHECK(out.recommendations.empty());
    CHECK_FALSE(out.diagnostics.empty());
}

TEST_CASE("ranked drugs cover every drug once") {
    const auto& a = small_pipeline().artifacts;
    for (std::size_t c = 0; c < a.user_clusters.final_k(); ++c) {
        const auto ranked = ranked_drugs(a, c);
        CHECK(std::set<std::string>(ranked.begin(), ranked.end()).size() == a.drug_names.size());
        for (std::size_t k = 1; k < ranked.size(); ++k)
            CHECK(a.predictions(c, a.drug_index(ranked[k])) <=
                  a.predictions(c, a.drug_index(ranked[k - 1])));
    }
}

TEST_CASE("pipeline is deterministic") {
    const auto& f = small_pipeline();
    const PipelineArtifacts again = build_pipeline(f.prepared.training, f.config);
    CHECK(again.model == f.artifacts.model);
    CHECK(again.predictions == f.artifacts.predictions);
    CHECK(again.user_clusters.assignments == f.artifacts.user_clusters.assignments);
}

TEST_CASE("user features") {
    text::Vocabulary vocab({{"pain", 3}, {"sleep", 2}}, 2);
    PatientQuery q;
    q.age = 40;
    q.gender = Gender::male;
    q.is_caregiver = true;
    q.condition_text = "back pain";
    const auto x = raw_user_features(q, vocab, false);
    CHECK(x == std::vector<double>{0, 1, 0, 40, 1, 1, 0});
}

TEST_CASE("cold-start drugs are scored from their drug cluster") {
    const auto& a = small_pipeline().artifacts;
    const DrugProfile known = small_pipeline().data.bundle.drugs[0];
    const ColdStartEstimate est = cold_start_score(known, a);
    CHECK(est.scores.size() == a.user_clusters.final_k());
    CHECK(est.fallback.size() == est.scores.size());
    CHECK(est.drug_cluster < a.drug_clusters.final_k());
    for (double s : est.scores) {
        CHECK(s > 0.0);
        CHECK(s < 1.0);
    }
    DrugProfile wrong = known;
    wrong.benefits.push_back(1);
    CHECK_THROWS_AS(cold_start_score(wrong, a), ArgumentError);
}

TEST_CASE("stage failures name the stage") {
    DatasetBundle b = small_pipeline().prepared.training;
    b.ratings[0].drug_name = "NotADrug";
    try {
        build_pipeline(b, small_pipeline().config);
        FAIL("expected StageError");
    } catch (const StageError& e) {
        CHECK(e.stage() == "validate");
        CHECK(e.validation());
    }
    b = small_pipeline().prepared.training;
    PipelineConfig cfg = small_pipeline().config;
    cfg.training.learning_rate = 1e308;
    cfg.training.hidden_activation = nn::Activation::identity;
    try {
        build_pipeline(b, cfg);
        FAIL("expected StageError");
    } catch (const StageError& e) {
        CHECK(e.stage() == "training");
        CHECK_FALSE(e.validation());
    }
}

TEST_SUITE("benchmark") {
    TEST_CASE("desk-scale pipeline within budget, planted preferences surface") {
        const auto data = testing::benchmark_bundle(7);
        const PipelineConfig cfg = testing::benchmark_pipeline(7);
        const auto start = std::chrono::steady_clock::now();
        const auto prepared = prepare_splits(data.bundle, cfg);
        const auto art = build_pipeline(prepared.training, cfg);
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        CHECK(seconds < 60.0);

        // A planted patient gets a preferred drug of their cluster in the top 10.
        std::size_t hits = 0, total = 0;
        for (std::size_t i = 0; i < data.truth.user_cluster.size(); i += 5) {
            const std::size_t c = data.truth.user_cluster[i];
            const auto it = std::find_if(data.bundle.ratings.begin(), data.bundle.ratings.end(),
                                         [&](const RatingRecord& r) { return r.user_id == synthetic::user_id(i); });
            PatientQuery q = query_from_rating(*it);
            q.current_drugs.clear();
            const auto out = recommend(q, art, {10, false});
            const auto& pref = data.truth.preferred[c];
            for (const auto& p : pref) {
                ++total;
                for (const auto& r : out.recommendations) hits += r.drug_name == p;
            }
        }
        const double rate = static_cast<double>(hits) / static_cast<double>(total);
        CHECK(rate >= 2.0 * 10.0 / 50.0);
    }
}
