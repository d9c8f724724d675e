#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "drugrec/dataset.hpp"
#include "drugrec/synthetic.hpp"
#include "support.hpp"

using namespace drugrec;

TEST_CASE("drug rows parse bit groups positionally") {
    std::istringstream in(
        "name,cat_1,cat_2,cat_3,se_1,se_2,ben_1,ben_2,ben_3\n"
        "Hytrin Terazosin,1,0,0,0,0,1,1,0\n");
    const auto drugs = parse_drugs(in, "drugs.csv");
    REQUIRE(drugs.size() == 1);
    CHECK(drugs[0].name == "Hytrin Terazosin");
    CHECK(drugs[0].categories == std::vector<std::uint8_t>{1, 0, 0});
    CHECK(drugs[0].side_effects == std::vector<std::uint8_t>{0, 0});
    CHECK(drugs[0].benefits == std::vector<std::uint8_t>{1, 1, 0});
    CHECK(drugs[0].features() == std::vector<double>{1, 0, 0, 0, 0, 1, 1, 0});
}

TEST_CASE("non-binary vector cell is a row error") {
    std::istringstream in("name,cat_1,se_1,ben_1\nA,1,2,0\n");
    CHECK_THROWS_AS(parse_drugs(in, "drugs.csv"), RowError);
}

TEST_CASE("duplicate drug name keeps the last row and warns") {
    std::istringstream in("name,cat_1,se_1,ben_1\nA,1,0,0\nA,0,1,0\n");
    Diagnostics diag;
    const auto drugs = parse_drugs(in, "drugs.csv", &diag);
    REQUIRE(drugs.size() == 1);
    CHECK(drugs[0].side_effects == std::vector<std::uint8_t>{1});
    CHECK_FALSE(diag.empty());
}

TEST_CASE("adverse event row with multi-valued cells") {
    std::istringstream in(
        "drug_name,age,gender,reaction,events,other_drugs\n"
        "Acterma,47,female,,\"Death;Hospitalization\",\"Insulin\"\n");
    const auto rows = parse_adverse_events(in, "adverse_events.csv");
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].drug_name == "Acterma");
    CHECK(rows[0].age == 47);
    CHECK(rows[0].gender == Gender::female);
    CHECK(rows[0].events == EventSet{AdverseEvent::death, AdverseEvent::hospitalization});
    CHECK(rows[0].other_drugs == std::vector<std::string>{"Insulin"});
}

TEST_CASE("adverse event row without events is rejected") {
    std::istringstream in("drug_name,age,gender,reaction,events,other_drugs\nA,47,female,,,\n");
    CHECK_THROWS_AS(parse_adverse_events(in, "adverse_events.csv"), RowError);
}

TEST_CASE("rating rows enforce scale ranges and lenient gender") {
    const std::string header =
        "user_id,age,gender,is_caregiver,condition,drug_name,overall_rating,effectiveness,"
        "side_effect_severity,comment\n";
    std::istringstream ok(header + "u1,40,Woman?,true,HBP,A,10,4,0,fine\n");
    const auto rows = parse_ratings(ok, "ratings.csv");
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].gender == Gender::unspecified);
    CHECK(rows[0].is_caregiver);
    CHECK(rows[0].overall_rating == 10);

    std::istringstream bad_overall(header + "u1,40,male,false,x,A,11,4,0,\n");
    CHECK_THROWS_AS(parse_ratings(bad_overall, "ratings.csv"), RowError);
    std::istringstream bad_doe(header + "u1,40,male,false,x,A,5,5,0,\n");
    CHECK_THROWS_AS(parse_ratings(bad_doe, "ratings.csv"), RowError);
    std::istringstream empty_drug(header + "u1,40,male,false,x,,5,2,0,\n");
    CHECK_THROWS_AS(parse_ratings(empty_drug, "ratings.csv"), RowError);
}

TEST_CASE("missing column is a schema error naming it") {
    std::istringstream in("drug_a,severity\nA,major\n");
    try {
        parse_interactions(in, "interactions.csv");
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(e.column() == "drug_b");
    }
}

TEST_CASE("interaction lookup is symmetric") {
    std::istringstream in("drug_a,drug_b,severity\nA,B,major\n");
    const InteractionIndex index(parse_interactions(in, "interactions.csv"));
    CHECK(index.lookup("A", "B") == Severity::major);
    CHECK(index.lookup("B", "A") == Severity::major);
    CHECK_FALSE(index.lookup("A", "C").has_value());
}

TEST_CASE("self interaction is rejected") {
    std::istringstream in("drug_a,drug_b,severity\nA,A,major\n");
    CHECK_THROWS_AS(parse_interactions(in, "interactions.csv"), RowError);
}

TEST_CASE("split sizes follow the floor rule") {
    const SplitSizes small = split_sizes(10, {});
    CHECK(small.train == 7);
    CHECK(small.validation == 2);
    CHECK(small.test == 1);

    // 0.2 * 3294 = 658.8, 0.1 * 3294 = 329.4; train keeps the remaining 2307.
    const SplitSizes s = split_sizes(3294, {});
    CHECK(s.validation == 658);
    CHECK(s.test == 329);
    CHECK(s.train == 2307);
    CHECK(s.train + s.validation + s.test == 3294);
    // Held-out parts land within 2 of the published 660 / 330.
    CHECK(std::abs(static_cast<long>(s.validation) - 660) <= 2);
    CHECK(std::abs(static_cast<long>(s.test) - 330) <= 2);
}

TEST_CASE("split rejects bad fractions") {
    CHECK_THROWS_AS(split_sizes(10, {-0.1, 0.6, 0.5}), ArgumentError);
    CHECK_THROWS_AS(split_sizes(10, {0.5, 0.2, 0.1}), ArgumentError);
}

TEST_CASE("split is a deterministic partition for any size") {
    for (std::size_t n : {0, 1, 2, 3, 9, 10, 11, 57, 100, 999, 1000, 4321, 10000}) {
        for (std::uint64_t seed : {0ull, 1ull, 99ull}) {
            const auto a = split_indices(n, {}, seed);
            const auto b = split_indices(n, {}, seed);
            CHECK(a.train == b.train);
            CHECK(a.validation == b.validation);
            CHECK(a.test == b.test);
            std::vector<std::size_t> all;
            for (const auto* part : {&a.train, &a.validation, &a.test})
                all.insert(all.end(), part->begin(), part->end());
            std::sort(all.begin(), all.end());
            REQUIRE(all.size() == n);
            for (std::size_t i = 0; i < n; ++i) CHECK(all[i] == i);
            const SplitSizes s = split_sizes(n, {});
            CHECK(a.train.size() == s.train);
        }
    }
}

TEST_CASE("different seeds shuffle differently") {
    const auto a = split_indices(1000, {}, 1);
    const auto b = split_indices(1000, {}, 2);
    CHECK(a.test != b.test);
}

TEST_CASE("bundle round-trips through CSV") {
    synthetic::SyntheticConfig cfg;
    cfg.users = 40;
    cfg.drugs = 12;
    cfg.preferred_per_cluster = 3;
    cfg.interactions = 10;
    DatasetBundle bundle = synthetic::generate_synthetic(cfg, 3);
    bundle.ratings[0].comment = "has, a comma and \"quotes\"\nand a newline";
    bundle.ratings[1].gender = Gender::unspecified;
    const auto dir = testing::scratch_dir("roundtrip");
    write_bundle(dir, bundle);
    const DatasetBundle back = load_bundle(DatasetPaths::in_directory(dir));
    CHECK(back == bundle);
}

TEST_CASE("validation reports unresolved drug names") {
    DatasetBundle b;
    b.drugs.push_back({"A", {1}, {0}, {0}});
    RatingRecord r;
    r.drug_name = "Ghost";
    b.ratings.push_back(r);
    b.interactions.push_back({"A", "Phantom", Severity::minor});
    AdverseEventRecord e;
    e.drug_name = "A";
    e.events.insert(AdverseEvent::death);
    b.adverse_events.push_back(e);
    const ValidationReport v = validate(b);
    CHECK_FALSE(v.ok());
    CHECK(v.unresolved_in_ratings == std::vector<std::string>{"Ghost"});
    CHECK(v.unresolved_in_interactions == std::vector<std::string>{"Phantom"});
    CHECK(v.unresolved_in_adverse_events.empty());
}

TEST_CASE("synthetic generator arguments") {
    synthetic::SyntheticConfig cfg;
    cfg.users = 0;
    CHECK_THROWS_AS(synthetic::generate_synthetic(cfg, 1), ArgumentError);
    cfg = {};
    cfg.drugs = 0;
    CHECK_THROWS_AS(synthetic::generate_synthetic(cfg, 1), ArgumentError);
}

TEST_CASE("synthetic generator is reproducible") {
    const auto a = synthetic::generate_synthetic({}, 11);
    const auto b = synthetic::generate_synthetic({}, 11);
    const auto c = synthetic::generate_synthetic({}, 12);
    CHECK(a == b);
    CHECK_FALSE(a == c);
    CHECK(validate(a).ok());
}

TEST_CASE("zero planted rate yields no rows") {
    synthetic::SyntheticConfig cfg;
    const std::string drug = synthetic::drug_name(0);
    cfg.rates.push_back({drug, Gender::female, 0.0});
    const auto bundle = synthetic::generate_synthetic(cfg, 5);
    for (const auto& e : bundle.adverse_events)
        CHECK_FALSE((e.drug_name == drug && e.gender == Gender::female));
}

TEST_CASE("noise-free planted clusters rate a drug identically") {
    const auto data = synthetic::generate_synthetic_with_truth({}, 21);
    std::map<std::string, std::size_t> cluster_of;
    for (std::size_t i = 0; i < data.truth.user_cluster.size(); ++i)
        cluster_of[synthetic::user_id(i)] = data.truth.user_cluster[i];
    std::map<std::pair<std::size_t, std::string>, std::tuple<int, int, int, std::string>> seen;
    std::size_t groups_checked = 0;
    for (const auto& r : data.bundle.ratings) {
        const auto key = std::make_pair(cluster_of.at(r.user_id), r.drug_name);
        const auto value = std::make_tuple(r.overall_rating, r.effectiveness,
                                           r.side_effect_severity, r.comment);
        auto [it, inserted] = seen.emplace(key, value);
        if (!inserted) {
            CHECK(it->second == value);
            ++groups_checked;
        }
    }
    CHECK(groups_checked > 100);
}

TEST_CASE("synthetic adverse counts follow planted rates") {
    const auto data = synthetic::generate_synthetic_with_truth({}, 4);
    std::map<std::string, std::size_t> exposure;
    for (const auto& r : data.bundle.ratings) ++exposure[r.drug_name];
    std::map<std::pair<std::string, Gender>, std::size_t> events;
    for (const auto& e : data.bundle.adverse_events) ++events[{e.drug_name, e.gender}];
    for (const auto& p : data.truth.rates) {
        const double expected = p.rate * static_cast<double>(exposure[p.drug]);
        CHECK(std::abs(static_cast<double>(events[{p.drug, p.gender}]) - expected) <= 0.5);
    }
}
