// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any fail.
//
//   acceptance [--cli PATH] [--config PATH] [--work DIR]
//
// Criterion 10 drives the command-line tool when --cli is given and falls back
// to the library otherwise.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "drugrec/clustering.hpp"
#include "drugrec/evaluation.hpp"
#include "drugrec/factorization.hpp"
#include "drugrec/io.hpp"
#include "drugrec/knowledge_base.hpp"
#include "drugrec/random.hpp"
#include "drugrec/recommender.hpp"
#include "drugrec/serialize.hpp"
#include "drugrec/textprep.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace drugrec;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

bool bit_equal(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

// --- 1. metric oracle --------------------------------------------------------------

Outcome metric_oracle() {
    const auto t0 = Clock::now();
    Rng rng(derive_seed(1, "acceptance/metrics"));
    std::size_t count_mismatch = 0;
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng.index(500);
        std::vector<double> pred(n), actual(n);
        for (std::size_t i = 0; i < n; ++i) {
            pred[i] = trial % 2 ? rng.uniform(0, 10) : static_cast<double>(rng.index(11));
            actual[i] = trial % 2 ? rng.uniform(0, 10) : static_cast<double>(rng.index(11));
        }
        double tp = 0, fp = 0, tn = 0, fn = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const bool p = pred[i] >= 4.0, a = actual[i] >= 4.0;
            tp += p && a;
            fp += p && !a;
            fn += !p && a;
            tn += !p && !a;
        }
        const eval::ConfusionMatrix cm = eval::binarize_and_count(pred, actual, 4.0);
        if (cm.tp != tp || cm.fp != fp || cm.tn != tn || cm.fn != fn) ++count_mismatch;
        auto q = [](double a, double b) { return b == 0 ? 0.0 : a / b; };
        const double P = q(tp, tp + fp), R = q(tp, tp + fn);
        const double expected[] = {
            (tp + tn) / n,  R, q(tn, tn + fp), P, q(2 * P * R, P + R), q(5 * P * R, 4 * P + R),
            q(tp * tn - fp * fn, std::sqrt((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)))};
        const eval::ScalarMetrics m = eval::metrics(cm);
        const double got[] = {m.accuracy, m.sensitivity, m.specificity, m.precision,
                              m.f1,       m.f2,          m.mcc};
        for (int k = 0; k < 7; ++k) worst = std::max(worst, std::abs(got[k] - expected[k]));
    }
    const double secs = seconds_since(t0);
    return {count_mismatch == 0 && worst <= 1e-12 && secs < 5.0,
            "count mismatches " + std::to_string(count_mismatch) + ", max rate error " +
                fmt("%.3g", worst) + ", " + fmt("%.2f s", secs)};
}

// --- 2. AUC oracle -------------------------------------------------------------------

Outcome auc_oracle() {
    const auto t0 = Clock::now();
    Rng rng(derive_seed(1, "acceptance/auc"));
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng.index(99);
        std::vector<double> s(n);
        std::vector<std::uint8_t> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = trial % 2 ? rng.uniform() : static_cast<double>(rng.index(6));
            y[i] = rng.bernoulli(0.5);
        }
        y[0] = 1;
        y[1] = 0;
        double wins = 0, pairs = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (y[i] && !y[j]) {
                    pairs += 1;
                    wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
                }
        worst = std::max(worst, std::abs(eval::roc_auc(s, y).auc - wins / pairs));
    }
    const double secs = seconds_since(t0);
    return {worst <= 1e-12 && secs < 5.0,
            "max |auc - pair count| " + fmt("%.3g", worst) + ", " + fmt("%.2f s", secs)};
}

// --- 3. gradient verification --------------------------------------------------------

Outcome gradient_verification() {
    const auto t0 = Clock::now();
    Rng rng(derive_seed(1, "acceptance/gradients"));
    double worst = 0.0, weakest_mutant = std::numeric_limits<double>::infinity();
    for (int net_i = 0; net_i < 10; ++net_i) {
        std::vector<std::size_t> sizes{1 + rng.index(10)};
        const std::size_t hidden = rng.index(3);  // 0, 1 or 2 hidden layers
        for (std::size_t h = 0; h < hidden; ++h) sizes.push_back(1 + rng.index(20));
        sizes.push_back(1 + rng.index(10));
        const auto net = nn::NetworkParams::random(sizes, rng.next_u64());
        nn::LossContext ctx;
        const std::size_t samples = 1 + rng.index(8);
        ctx.inputs = Matrix(samples, sizes.front());
        ctx.targets = Matrix(samples, sizes.back());
        for (double& v : ctx.inputs.data()) v = rng.uniform();
        for (double& v : ctx.targets.data()) v = rng.uniform();
        ctx.mask.resize(samples * sizes.back());
        for (auto& m : ctx.mask) m = rng.bernoulli(0.7);
        ctx.mask[0] = 1;
        worst = std::max(worst, nn::gradient_check(net, ctx, 1e-5));
        weakest_mutant = std::min(
            weakest_mutant,
            nn::gradient_check(net, ctx, 1e-5, nn::BackwardMutation::flip_output_delta_sign));
    }
    const double secs = seconds_since(t0);
    return {worst < 1e-4 && weakest_mutant >= 1e-4 && secs < 30.0,
            "max relative error " + fmt("%.3g", worst) + ", sign-flip mutant min error " +
                fmt("%.3g", weakest_mutant) + ", " + fmt("%.2f s", secs)};
}

// --- 4. mask fidelity ----------------------------------------------------------------

bool same_layers(const std::vector<nn::Layer>& a, const std::vector<nn::Layer>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t z = 0; z < a.size(); ++z) {
        const auto wa = a[z].weights.data(), wb = b[z].weights.data();
        if (wa.size() != wb.size() || std::memcmp(wa.data(), wb.data(), wa.size() * sizeof(double)))
            return false;
        if (std::memcmp(a[z].biases.data(), b[z].biases.data(), a[z].biases.size() * sizeof(double)))
            return false;
    }
    return true;
}

Outcome mask_fidelity() {
    Rng rng(derive_seed(1, "acceptance/mask"));
    std::size_t failures = 0;
    for (int inst = 0; inst < 50; ++inst) {
        const std::size_t rows = 1 + rng.index(6), cols = 1 + rng.index(10);
        SparseRatingMatrix r(rows, cols);
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j)
                if (rng.bernoulli(0.35)) r.set(i, j, rng.uniform());
        r.set(rng.index(rows), rng.index(cols), rng.uniform());
        Matrix uf(rows, 1 + rng.index(5)), df(cols, 1 + rng.index(5));
        for (double& v : uf.data()) v = rng.uniform();
        for (double& v : df.data()) v = rng.uniform();
        factorization::TrainConfig cfg;
        cfg.seed = rng.next_u64();
        cfg.epochs = 5;
        const auto model = factorization::initialize(uf, df, cfg);

        SparseRatingMatrix mutated = r;
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j)
                if (!r.observed(i, j))
                    mutated.values(i, j) = rng.bernoulli(0.2) ? std::nan("") : rng.uniform(-1e9, 1e9);

        bool ok = bit_equal(factorization::masked_loss(model, r),
                            factorization::masked_loss(model, mutated));
        ok = ok && same_layers(
                       nn::network_gradients(model.user_net, factorization::user_context(model, r)),
                       nn::network_gradients(model.user_net,
                                             factorization::user_context(model, mutated)));
        ok = ok && same_layers(
                       nn::network_gradients(model.drug_net, factorization::drug_context(model, r)),
                       nn::network_gradients(model.drug_net,
                                             factorization::drug_context(model, mutated)));
        const auto ta = factorization::train(model, r, cfg);
        const auto tb = factorization::train(model, mutated, cfg);
        ok = ok && ta.model == tb.model;
        for (std::size_t e = 0; ok && e < ta.trace.size(); ++e)
            ok = bit_equal(ta.trace[e].combined, tb.trace[e].combined);
        failures += !ok;
    }
    return {failures == 0, std::to_string(50 - failures) + "/50 instances bit-identical"};
}

// --- 5. U-K-means oracle -------------------------------------------------------------

Outcome ukmeans_oracle() {
    const auto t0 = Clock::now();
    Rng rng(derive_seed(1, "acceptance/ukmeans"));
    double worst_center = 0.0;
    std::size_t assignment_mismatch = 0, compared = 0;
    for (int inst = 0; inst < 20; ++inst) {
        const std::size_t n = 5 + rng.index(46), dim = 1 + rng.index(4), k = 1 + rng.index(5);
        Matrix x(n, dim);
        for (double& v : x.data()) v = rng.uniform();
        Matrix centers(k, dim);
        for (std::size_t c = 0; c < k; ++c)
            for (std::size_t j = 0; j < dim; ++j) centers(c, j) = x(rng.index(n), j);

        clustering::UKMeansParams p;
        p.pin_penalties_to_zero = true;
        p.disable_discard = true;
        p.initial_centers = centers;
        p.record_history = true;
        const auto m = clustering::ukmeans_fit(x, p);

        Matrix a = centers;
        for (std::size_t t = 0; t < m.iterations_run; ++t) {
            std::vector<std::size_t> z(n);
            for (std::size_t i = 0; i < n; ++i) {
                double best = std::numeric_limits<double>::infinity();
                for (std::size_t c = 0; c < k; ++c) {
                    double d = 0;
                    for (std::size_t j = 0; j < dim; ++j) d += (x(i, j) - a(c, j)) * (x(i, j) - a(c, j));
                    if (d < best) best = d, z[i] = c;
                }
            }
            Matrix next(k, dim);
            std::vector<double> cnt(k, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                cnt[z[i]] += 1;
                for (std::size_t j = 0; j < dim; ++j) next(z[i], j) += x(i, j);
            }
            for (std::size_t c = 0; c < k; ++c)
                for (std::size_t j = 0; j < dim; ++j)
                    next(c, j) = cnt[c] > 0 ? next(c, j) / cnt[c] : a(c, j);
            a = next;
            ++compared;
            assignment_mismatch += z != m.diagnostics.assignment_history[t];
            const Matrix& got = m.diagnostics.center_history[t];
            for (std::size_t i = 0; i < got.data().size(); ++i)
                worst_center = std::max(worst_center, std::abs(got.data()[i] - a.data()[i]));
        }
    }

    std::size_t found_three = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng g(derive_seed(seed, "acceptance/blobs"));
        const double means[3][2] = {{0.0, 0.0}, {0.8, 0.0}, {0.4, 0.7}};
        Matrix x(200, 2);
        for (std::size_t i = 0; i < 200; ++i)
            for (std::size_t j = 0; j < 2; ++j) x(i, j) = g.normal(means[i % 3][j], 0.1);
        clustering::UKMeansParams p;
        p.seed = seed;
        found_three += clustering::ukmeans_fit(x, p).final_k() == 3;
    }
    const double secs = seconds_since(t0);
    return {compared >= 20 && worst_center <= 1e-6 && assignment_mismatch == 0 && found_three >= 9 && secs < 60.0,
            std::to_string(compared) + " Lloyd iterations, center error " + fmt("%.3g", worst_center) + ", assignment mismatches " +
                std::to_string(assignment_mismatch) + ", final_k = 3 in " +
                std::to_string(found_three) + "/10 seeds, " + fmt("%.2f s", secs)};
}

// --- shared benchmark runs (criteria 6-8) --------------------------------------------

struct BenchmarkRun {
    synthetic::SyntheticData data;
    rec::PipelineArtifacts artifacts;
    eval::MetricsReport report;
    double seconds = 0.0;
};

BenchmarkRun run_benchmark(std::uint64_t seed) {
    BenchmarkRun run;
    const auto t0 = Clock::now();
    run.data = testing::benchmark_bundle(seed);
    const rec::PipelineConfig cfg = testing::benchmark_pipeline(seed);
    const auto prepared = rec::prepare_splits(run.data.bundle, cfg);
    run.artifacts = rec::build_pipeline(prepared.training, cfg);
    run.report = eval::evaluate_pipeline(run.artifacts, prepared.training.ratings,
                                         prepared.held_out.test_ratings,
                                         prepared.held_out.test_adverse_events, {});
    run.seconds = seconds_since(t0);
    return run;
}

// --- 6. safety filter direction -------------------------------------------------------

Outcome safety_direction(const BenchmarkRun& run) {
    const auto& rules = run.artifacts.rules;
    std::size_t high = 0, wrong = 0;
    for (const auto& p : run.data.truth.rates) {
        const bool planted_high = p.rate == 1.5;
        high += planted_high;
        auto it = rules.gender_rules.find(p.drug);
        const bool allowed = it == rules.gender_rules.end() || it->second.allows(p.gender);
        wrong += allowed == planted_high;
    }
    if (!run.report.ablation) return {false, "no held-out adverse events to ablate"};
    const double with = run.report.ablation->with_kb.death;
    const double without = run.report.ablation->without_kb.death;
    return {wrong == 0 && high > 0 && with < without,
            std::to_string(high) + " planted high-rate pairs, " + std::to_string(wrong) +
                " misclassified pairs; death ratio " + fmt("%.4f", without) + " without KB -> " +
                fmt("%.4f", with) + " with KB"};
}

// --- 7. hit-rate harness --------------------------------------------------------------

Outcome hit_rate_harness(const BenchmarkRun& run) {
    const auto& p = run.report.proposed;
    bool ordered = true;
    for (double c : p.cumulative_curve) ordered = ordered && c <= p.hit_rate;
    ordered = ordered && p.cumulative_hit_rate <= p.hit_rate;
    return {p.hit_rate >= 2.0 * 10.0 / 50.0 && ordered && run.seconds < 120.0,
            "hit-rate@10 " + fmt("%.3f", p.hit_rate) + " vs random 0.200, cumulative (>=4) " +
                fmt("%.3f", p.cumulative_hit_rate) + (ordered ? ", curve <= hit-rate" : ", curve exceeds hit-rate") +
                ", " + fmt("%.2f s", run.seconds)};
}

// --- 8. baseline direction ------------------------------------------------------------

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : (v[m - 1] + v[m]) / 2.0;
}

Outcome baseline_direction(const std::vector<BenchmarkRun>& runs) {
    std::vector<double> acc_p, acc_b, hit_p, hit_b;
    for (const auto& r : runs) {
        acc_p.push_back(r.report.proposed.scalars.accuracy);
        acc_b.push_back(r.report.baseline.scalars.accuracy);
        hit_p.push_back(r.report.proposed.hit_rate);
        hit_b.push_back(r.report.baseline.hit_rate);
    }
    const double ap = median(acc_p), ab = median(acc_b), hp = median(hit_p), hb = median(hit_b);
    return {ap >= ab && hp >= hb,
            "median accuracy " + fmt("%.3f", ap) + " vs baseline " + fmt("%.3f", ab) +
                ", median hit-rate@10 " + fmt("%.3f", hp) + " vs baseline " + fmt("%.3f", hb) +
                " over " + std::to_string(runs.size()) + " seeds"};
}

// --- 9. CUR properties ----------------------------------------------------------------

Outcome cur_properties() {
    Rng rng(derive_seed(1, "acceptance/cur"));
    std::size_t out_of_range = 0, non_monotone = 0;
    for (int i = 0; i < 10000; ++i) {
        text::CurInputs a{static_cast<int>(rng.index(11)), static_cast<int>(rng.index(5)),
                          static_cast<int>(rng.index(5)), rng.uniform()};
        text::CurInputs b = a;
        switch (i % 3) {
            case 0: b.overall_rating = static_cast<int>(a.overall_rating + rng.index(11 - a.overall_rating)); break;
            case 1: b.doe = static_cast<int>(a.doe + rng.index(5 - a.doe)); break;
            default: b.puc = a.puc + (1.0 - a.puc) * rng.uniform(); break;
        }
        const double ca = text::compute_cur(a), cb = text::compute_cur(b);
        out_of_range += !(ca >= 0.0 && ca <= 1.0) + !(cb >= 0.0 && cb <= 1.0);
        non_monotone += cb < ca;
    }
    const bool examples = text::compute_cur({10, 4, 4, 1.0}) == 1.0 &&
                          text::compute_cur({0, 0, 0, 0.0}) == 0.0 &&
                          text::compute_cur({10, 4, 4, 0.0}, text::CurMode::literal) == 0.5;
    return {out_of_range == 0 && non_monotone == 0 && examples,
            std::to_string(out_of_range) + " out-of-range, " + std::to_string(non_monotone) +
                " monotonicity violations over 10^4 pairs; worked examples " +
                (examples ? "exact" : "WRONG")};
}

// --- 10. determinism ------------------------------------------------------------------

std::map<std::string, std::string> read_tree(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file())
            files[fs::relative(e.path(), root).generic_string()] = io::read_file(e.path());
    return files;
}

std::string quote(const std::string& s) { return "'" + s + "'"; }

Outcome determinism(const std::string& cli, const std::string& config, const fs::path& work) {
    std::vector<std::map<std::string, std::string>> trees;
    for (int run = 0; run < 2; ++run) {
        const fs::path out = work / ("run" + std::to_string(run));
        fs::remove_all(out);
        if (!cli.empty()) {
            const std::string train = quote(cli) + " train --config " + quote(config) + " --out " +
                                      quote(out.string()) + " > /dev/null";
            const std::string evaluate = quote(cli) + " evaluate --artifacts " +
                                         quote(out.string()) + " > /dev/null";
            if (std::system(train.c_str()) != 0 || std::system(evaluate.c_str()) != 0)
                return {false, "command-line run " + std::to_string(run) + " failed"};
        } else {
            const BenchmarkRun r = run_benchmark(7);
            serial::save_artifacts(out, r.artifacts);
            io::write_file_atomic(out / "evaluation" / "metrics.json",
                                  serial::dump(serial::encode(r.report)));
        }
        trees.push_back(read_tree(out));
    }
    std::size_t differing = 0;
    for (const auto& [name, bytes] : trees[0]) {
        auto it = trees[1].find(name);
        differing += it == trees[1].end() || it->second != bytes;
    }
    differing += trees[1].size() > trees[0].size() ? trees[1].size() - trees[0].size() : 0;
    return {differing == 0 && !trees[0].empty(),
            std::to_string(trees[0].size()) + " files compared, " + std::to_string(differing) +
                " differ (" + (cli.empty() ? "library" : "command-line tool") + ")"};
}

}  // namespace

int main(int argc, char** argv) {
    std::string cli, config;
    fs::path work = fs::temp_directory_path() / "drugrec_acceptance";
    for (int i = 1; i + 1 < argc; i += 2) {
        const std::string flag = argv[i];
        if (flag == "--cli") cli = argv[i + 1];
        else if (flag == "--config") config = argv[i + 1];
        else if (flag == "--work") work = argv[i + 1];
        else {
            std::fprintf(stderr, "usage: acceptance [--cli PATH] [--config PATH] [--work DIR]\n");
            return 2;
        }
    }
    if (config.empty()) config = (fs::path(DRUGREC_SOURCE_DIR) / "configs" / "synthetic_benchmark.json").string();
    fs::create_directories(work);

    int failed = 0;
    auto report = [&](int id, const char* name, const std::function<Outcome()>& check) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
        std::fflush(stdout);
        failed += !o.pass;
    };

    report(1, "metric oracle equivalence", metric_oracle);
    report(2, "AUC oracle", auc_oracle);
    report(3, "gradient verification", gradient_verification);
    report(4, "mask fidelity", mask_fidelity);
    report(5, "U-K-means oracle", ukmeans_oracle);

    std::vector<BenchmarkRun> runs;
    std::string bench_error;
    try {
        for (std::uint64_t seed : {7, 11, 23, 42, 101}) runs.push_back(run_benchmark(seed));
    } catch (const std::exception& e) {
        bench_error = e.what();
    }
    auto needs_runs = [&](auto f) {
        return [&, f]() -> Outcome {
            if (!bench_error.empty()) return {false, "benchmark run threw: " + bench_error};
            return f();
        };
    };
    report(6, "safety-filter direction", needs_runs([&] { return safety_direction(runs[0]); }));
    report(7, "hit-rate harness", needs_runs([&] { return hit_rate_harness(runs[0]); }));
    report(8, "baseline direction", needs_runs([&] { return baseline_direction(runs); }));
    report(9, "CUR properties", cur_properties);
    report(10, "determinism", [&] { return determinism(cli, config, work); });

    std::printf("%d of 10 criteria passed\n", 10 - failed);
    return failed == 0 ? 0 : 1;
}
