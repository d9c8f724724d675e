#include "drugrec/recommender.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <unordered_map>

#include "drugrec/random.hpp"

namespace drugrec::rec {

namespace {

template <class F>
auto run_stage(const char* name, F&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const ValidationError& e) {
        throw StageError(name, e.what(), true);
    } catch (const ArgumentError& e) {
        throw StageError(name, e.what(), true);
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

void append_tokens(const text::Tokens& tokens, const text::Vocabulary& vocab,
                   std::vector<double>& out, std::size_t offset) {
    for (const auto& t : tokens) {
        const std::size_t j = vocab.index_of(t);
        if (j != text::npos) out[offset + j] = 1.0;
    }
}

constexpr std::size_t kFixedUserFeatures = 5;

}  // namespace

std::map<std::string, std::uint64_t> stage_seeds(std::uint64_t master) {
    std::map<std::string, std::uint64_t> s;
    for (const char* name : {"split", "adverse_split", "user_clustering", "drug_clustering",
                             "training", "baseline"})
        s[name] = derive_seed(master, name);
    return s;
}

PreparedData prepare_splits(const DatasetBundle& bundle, const PipelineConfig& config) {
    if (!(config.rule_extraction_fraction > 0.0 && config.rule_extraction_fraction <= 1.0))
        throw ArgumentError("rule_extraction_fraction must be in (0, 1]");
    const auto seeds = stage_seeds(config.seed);
    PreparedData out;
    auto split = split_dataset<RatingRecord>(bundle.ratings, config.split, seeds.at("split"));
    out.training.ratings = std::move(split.train);
    out.held_out.validation_ratings = std::move(split.validation);
    out.held_out.test_ratings = std::move(split.test);
    out.training.drugs = bundle.drugs;
    out.training.interactions = bundle.interactions;

    const std::size_t n = bundle.adverse_events.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seeds.at("adverse_split"));
    rng.shuffle(std::span<std::size_t>(order));
    const auto test_n = static_cast<std::size_t>(
        static_cast<double>(n) * (1.0 - config.rule_extraction_fraction) + 1e-9);
    for (std::size_t k = 0; k < n; ++k) {
        const auto& rec = bundle.adverse_events[order[k]];
        if (k < test_n) out.held_out.test_adverse_events.push_back(rec);
        else out.training.adverse_events.push_back(rec);
    }
    return out;
}

PatientQuery query_from_rating(const RatingRecord& r) {
    PatientQuery q;
    q.age = r.age;
    q.gender = r.gender;
    q.is_caregiver = r.is_caregiver;
    q.condition_text = r.condition_text;
    q.comment = r.comment;
    return q;
}

PatientQuery query_from_adverse_event(const AdverseEventRecord& r) {
    PatientQuery q;
    q.age = r.age;
    q.gender = r.gender;
    q.current_drugs = r.other_drugs;
    return q;
}

std::size_t PipelineArtifacts::drug_index(std::string_view name) const {
    for (std::size_t j = 0; j < drug_names.size(); ++j)
        if (drug_names[j] == name) return j;
    return text::npos;
}

void PipelineArtifacts::refresh_predictions() { predictions = factorization::predict_all(model); }

std::vector<double> raw_user_features(const PatientQuery& patient,
                                      const text::Vocabulary& vocabulary, bool comment_features) {
    static const text::Preprocessor prep = text::Preprocessor::with_defaults();
    std::vector<double> x(kFixedUserFeatures + vocabulary.size(), 0.0);
    x[patient.gender == Gender::female ? 0 : patient.gender == Gender::male ? 1 : 2] = 1.0;
    x[3] = patient.age;
    x[4] = patient.is_caregiver ? 1.0 : 0.0;
    append_tokens(prep(patient.condition_text), vocabulary, x, kFixedUserFeatures);
    if (comment_features) append_tokens(prep(patient.comment), vocabulary, x, kFixedUserFeatures);
    return x;
}

PipelineArtifacts build_pipeline(const DatasetBundle& bundle, const PipelineConfig& config) {
    PipelineArtifacts art;
    art.config = config;
    art.seeds = stage_seeds(config.seed);

    run_stage("validate", [&] {
        config.training.validate();
        if (bundle.ratings.empty()) throw ValidationError("no ratings to train on");
        if (bundle.drugs.empty()) throw ValidationError("no drugs in the bundle");
        const ValidationReport report = validate(bundle);
        if (!report.unresolved_in_ratings.empty()) {
            std::string msg = "ratings reference unknown drugs:";
            for (const auto& d : report.unresolved_in_ratings) msg += " " + d;
            throw ValidationError(msg, report.unresolved_in_ratings);
        }
        return 0;
    });

    // Text: one document per rating for conditions and comments.
    const text::Preprocessor prep = text::Preprocessor::with_defaults();
    const text::SentimentLexicon lexicon = text::SentimentLexicon::with_defaults();
    std::vector<text::Tokens> condition_docs, comment_docs;
    run_stage("textprep", [&] {
        for (const auto& r : bundle.ratings) {
            condition_docs.push_back(prep(r.condition_text));
            comment_docs.push_back(prep(r.comment));
        }
        std::vector<text::Tokens> vocab_docs = condition_docs;
        if (config.comment_features)
            vocab_docs.insert(vocab_docs.end(), comment_docs.begin(), comment_docs.end());
        art.vocabulary = text::build_vocabulary(vocab_docs, config.min_frequency);
        return 0;
    });

    std::vector<double> cur(bundle.ratings.size());
    run_stage("cur", [&] {
        for (std::size_t i = 0; i < bundle.ratings.size(); ++i) {
            const auto& r = bundle.ratings[i];
            text::CurInputs in{r.overall_rating, r.effectiveness, r.side_effect_severity,
                               text::polarity(comment_docs[i], lexicon)};
            cur[i] = text::compute_cur(in, config.cur_mode);
        }
        return 0;
    });

    // Users: demographics from their first record, terms OR'd across records.
    std::vector<std::string> user_order;
    std::unordered_map<std::string, std::size_t> user_row;
    std::vector<std::size_t> rating_user(bundle.ratings.size());
    Matrix user_points;
    run_stage("user_clustering", [&] {
        std::vector<std::vector<double>> rows;
        for (std::size_t i = 0; i < bundle.ratings.size(); ++i) {
            const auto& r = bundle.ratings[i];
            auto [it, inserted] = user_row.emplace(r.user_id, rows.size());
            if (inserted) {
                user_order.push_back(r.user_id);
                std::vector<double> x(kFixedUserFeatures + art.vocabulary.size(), 0.0);
                x[r.gender == Gender::female ? 0 : r.gender == Gender::male ? 1 : 2] = 1.0;
                x[3] = r.age;
                x[4] = r.is_caregiver ? 1.0 : 0.0;
                rows.push_back(std::move(x));
            }
            rating_user[i] = it->second;
            append_tokens(condition_docs[i], art.vocabulary, rows[it->second], kFixedUserFeatures);
            if (config.comment_features)
                append_tokens(comment_docs[i], art.vocabulary, rows[it->second],
                              kFixedUserFeatures);
        }
        Matrix raw(rows.size(), kFixedUserFeatures + art.vocabulary.size());
        for (std::size_t u = 0; u < rows.size(); ++u)
            std::copy(rows[u].begin(), rows[u].end(), raw.row(u).begin());
        art.user_scaler = clustering::MinMaxScaler::fit(raw);
        user_points = art.user_scaler.transform(raw);
        clustering::UKMeansParams params = config.user_clustering;
        params.seed = art.seeds.at("user_clustering");
        art.user_clusters = clustering::ukmeans_fit(user_points, params);
        return 0;
    });

    Matrix drug_points;
    run_stage("drug_clustering", [&] {
        const std::size_t width = bundle.drugs.front().feature_count();
        Matrix raw(bundle.drugs.size(), width);
        for (std::size_t j = 0; j < bundle.drugs.size(); ++j) {
            const auto f = bundle.drugs[j].features();
            if (f.size() != width) throw ValidationError("drug feature widths differ");
            std::copy(f.begin(), f.end(), raw.row(j).begin());
            art.drug_names.push_back(bundle.drugs[j].name);
        }
        art.drug_scaler = clustering::MinMaxScaler::fit(raw);
        drug_points = art.drug_scaler.transform(raw);
        clustering::UKMeansParams params = config.drug_clustering;
        params.seed = art.seeds.at("drug_clustering");
        art.drug_clusters = clustering::ukmeans_fit(drug_points, params);
        return 0;
    });

    run_stage("compaction", [&] {
        std::vector<clustering::ObservedRating> observed;
        observed.reserve(bundle.ratings.size());
        for (std::size_t i = 0; i < bundle.ratings.size(); ++i) {
            const auto row = user_points.row(rating_user[i]);
            observed.push_back({std::vector<double>(row.begin(), row.end()),
                                bundle.ratings[i].drug_name, cur[i]});
        }
        art.observed = clustering::compact_rating_matrix(observed, art.user_clusters, art.drug_names);
        return 0;
    });

    run_stage("training", [&] {
        factorization::TrainConfig tc = config.training;
        tc.seed = art.seeds.at("training");
        auto result = factorization::fit(art.user_clusters.centers, drug_points, art.observed, tc);
        art.model = std::move(result.model);
        art.loss_trace = std::move(result.trace);
        return 0;
    });

    run_stage("rules", [&] {
        const kb::ExposureTable exposures = kb::ExposureTable::from_ratings(bundle.ratings);
        art.rules = kb::build_rule_set(bundle.adverse_events, exposures, bundle.interactions,
                                       config.rules, &art.diagnostics);
        return 0;
    });

    art.refresh_predictions();
    return art;
}

std::size_t assign_user_cluster(const PatientQuery& patient, const PipelineArtifacts& artifacts) {
    if (patient.age < 0) throw ArgumentError("patient age must be >= 0");
    const auto raw = raw_user_features(patient, artifacts.vocabulary, artifacts.config.comment_features);
    return clustering::assign(artifacts.user_clusters, artifacts.user_scaler.transform(raw));
}

std::vector<std::string> ranked_drugs(const PipelineArtifacts& artifacts, std::size_t cluster) {
    std::vector<std::size_t> idx(artifacts.drug_names.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return artifacts.predictions(cluster, a) > artifacts.predictions(cluster, b);
    });
    std::vector<std::string> out;
    out.reserve(idx.size());
    for (std::size_t j : idx) out.push_back(artifacts.drug_names[j]);
    return out;
}

RecommendResult recommend(const PatientQuery& patient, const PipelineArtifacts& artifacts,
                          const RecommendOptions& options) {
    if (options.n < 1) throw ArgumentError("n must be >= 1");
    RecommendResult out;
    out.user_cluster = assign_user_cluster(patient, artifacts);

    const std::set<std::string, std::less<>> current(patient.current_drugs.begin(),
                                                     patient.current_drugs.end());
    std::vector<kb::Candidate> candidates;
    for (const auto& name : ranked_drugs(artifacts, out.user_cluster)) {
        if (current.contains(name)) continue;
        candidates.push_back({name, artifacts.predictions(out.user_cluster, artifacts.drug_index(name)), {}});
    }

    std::vector<kb::Candidate> kept;
    if (options.use_knowledge_base) {
        kb::Patient p{patient.age, patient.gender, patient.current_drugs};
        auto filtered = kb::apply_rules(candidates, p, artifacts.rules);
        kept = std::move(filtered.kept);
        out.removed = std::move(filtered.removed);
    } else {
        kept = std::move(candidates);
    }
    if (kept.empty()) out.diagnostics.note("no candidate drugs survived filtering");

    const double scale = artifacts.observed.display_scale;
    for (std::size_t k = 0; k < kept.size() && k < options.n; ++k) {
        Recommendation r;
        r.drug_name = kept[k].drug_name;
        r.score = kept[k].score;
        r.display_rating = kept[k].score * scale;
        r.warnings = kept[k].warnings;
        r.rank = k + 1;
        out.recommendations.push_back(std::move(r));
    }
    return out;
}

ColdStartEstimate cold_start_score(const DrugProfile& drug, const PipelineArtifacts& artifacts) {
    const auto raw = drug.features();
    if (raw.size() != artifacts.drug_scaler.dimension())
        throw ArgumentError("drug has " + std::to_string(raw.size()) + " features, expected " +
                            std::to_string(artifacts.drug_scaler.dimension()));
    ColdStartEstimate out;
    out.drug_cluster = clustering::assign(artifacts.drug_clusters, artifacts.drug_scaler.transform(raw));

    const SparseRatingMatrix& R = artifacts.observed;
    double global_sum = 0.0;
    std::size_t global_n = 0;
    for (std::size_t r = 0; r < R.rows(); ++r)
        for (std::size_t c = 0; c < R.cols(); ++c)
            if (R.observed(r, c)) {
                global_sum += R.value(r, c);
                ++global_n;
            }
    const double global_mean = global_n > 0 ? global_sum / static_cast<double>(global_n) : 0.0;

    const auto& members = artifacts.drug_clusters.assignments;
    for (std::size_t r = 0; r < R.rows(); ++r) {
        double sum = 0.0;
        std::size_t n = 0;
        for (std::size_t c = 0; c < R.cols() && c < members.size(); ++c) {
            if (members[c] != out.drug_cluster || !R.observed(r, c)) continue;
            sum += R.value(r, c);
            ++n;
        }
        out.scores.push_back(n > 0 ? sum / static_cast<double>(n) : global_mean);
        out.fallback.push_back(n > 0 ? 0 : 1);
    }
    return out;
}

}  // namespace drugrec::rec
