// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "commands.hpp"
#include "dataset.hpp"
#include "shadowrec/factorize.hpp"
#include "shadowrec/influence.hpp"
#include "shadowrec/shadow.hpp"
#include "shadowrec/stats.hpp"
#include "shadowrec/sweep.hpp"
#include "shadowrec/synth.hpp"

using namespace shadowrec;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, double budget_s, const std::function<Verdict()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
        v = body();
    } catch (const std::exception& e) {
        v = {false, std::string("exception: ") + e.what()};
    }
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (elapsed >= budget_s) {
        v.pass = false;
        v.detail += " [over time budget]";
    }
    if (!v.pass) {
        ++failures;
    }
    char timing[64];
    std::snprintf(timing, sizeof timing, " (%.2fs, budget %.0fs)", elapsed, budget_s);
    std::cout << (v.pass ? "PASS" : "FAIL") << "  " << id << " " << name << ": " << v.detail << timing << std::endl;
}

std::string fmt(const char* pattern, double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, value);
    return buf;
}

// ------------------------------------------------------------ 1: QII oracle

Verdict qii_oracle() {
    double worst_exact = 0.0;
    double worst_mc = 0.0;
    std::size_t shadows = 0;
    for (std::size_t n_features = 1; n_features <= 8; ++n_features) {
        for (auto spec : {ShadowSpec::linear(1e-2), ShadowSpec::make_tree({4, 32, 1})}) {
            const std::uint64_t seed = 100 + n_features;
            auto base = std::make_shared<const FactorModel>(fixtures::random_model(4, 60, 3, seed));
            const auto meta = fixtures::random_meta(60, n_features, 0.45, seed + 7);
            const auto shadow = train_shadow(base, meta, {}, spec, {0.8, seed});
            ++shadows;
            for (std::size_t item = 0; item < 60; item += 6) {
                const auto x = item_attributes(shadow, meta, item);
                for (std::size_t u = 0; u < 4; ++u) {
                    const RatingFn fn = [&](std::span<const double> a) { return shadow_predict(shadow, u, a); };
                    for (std::size_t f = 0; f < n_features; ++f) {
                        const double p = meta.marginals()[f];
                        // Enumerate both substituted values.
                        std::vector<double> probe = x;
                        double expectation = 0.0;
                        for (double value : {0.0, 1.0}) {
                            probe[f] = value;
                            expectation += (value == 1.0 ? p : 1.0 - p) * fn(probe);
                        }
                        const double brute = fn(x) - expectation;
                        const double exact = qii_exact_binary(fn, x, f, p);
                        worst_exact = std::max(worst_exact, std::abs(exact - brute));
                        if (item % 30 == 0 && u == 0) {
                            std::vector<double> column(60, 0.0);
                            for (std::size_t i : meta.column(f)) {
                                column[i] = 1.0;
                            }
                            const double mc = qii_monte_carlo(fn, x, f, column, 100000, seed * 31 + f);
                            worst_mc = std::max(worst_mc, std::abs(mc - exact));
                        }
                    }
                }
            }
        }
    }
    return {worst_exact <= 1e-12 && worst_mc <= 0.02,
            std::to_string(shadows) + " shadows, max |exact-enum| " + fmt("%.2e", worst_exact) +
                " (tol 1e-12), max |mc-exact| " + fmt("%.4f", worst_mc) + " (tol 0.02)"};
}

// --------------------------------------------------------- 2: ALS correctness

Verdict als_correctness() {
    const auto truth = fixtures::random_model(60, 40, 3, 2024, 0.6, 1.2);
    std::vector<Rating> entries;
    for (std::size_t u = 0; u < 60; ++u) {
        for (std::size_t i = 0; i < 40; ++i) {
            entries.push_back({u, i, predict_rating(truth, u, i)});
        }
    }
    const RatingsMatrix ratings(60, 40, entries);
    AlsConfig cfg;
    cfg.rank = 3;
    cfg.lambda = 1e-6;
    cfg.max_iterations = 30;
    cfg.convergence_tol = 0.0;
    AlsTrace trace;
    const auto model = train_als(ratings, cfg, &trace);
    bool monotone = true;
    for (std::size_t i = 1; i < trace.rmse.size(); ++i) {
        monotone = monotone && trace.rmse[i] <= trace.rmse[i - 1] + 1e-12;
    }
    const double rmse = training_rmse(model, ratings);
    return {rmse < 0.05 && monotone && trace.rmse.size() <= 30,
            "rmse " + fmt("%.2e", rmse) + " (tol 0.05) after " + std::to_string(trace.rmse.size()) +
                " iterations, non-increasing " + (monotone ? "yes" : "no")};
}

// ---------------------------------------------------- 3: shadow composition

Verdict shadow_composition() {
    // Baseline from ALS on simulated ratings over 40 items.
    const std::size_t n_items = 40;
    const auto sim_meta = fixtures::random_meta(n_items, 10, 0.4, 77);
    SimConfig sim;
    sim.n_users = 120;
    sim.ratings_per_user = 20;
    std::vector<std::size_t> pool(10);
    for (std::size_t f = 0; f < 10; ++f) {
        pool[f] = f;
    }
    const auto profiles = generate_profiles(pool, sim, 5);
    const auto simulated = simulate_ratings(profiles, sim_meta, sim, 6);
    AlsConfig als;
    als.rank = 5;
    auto base = std::make_shared<const FactorModel>(train_als(simulated.ratings, als));

    std::vector<std::string> names;
    std::vector<std::vector<std::size_t>> columns;
    for (std::size_t i = 0; i < n_items; ++i) {
        names.push_back("item=" + std::to_string(i));
        columns.push_back({i});
    }
    const MetadataMatrix identity(n_items, names, columns);
    // One-hot identity splits peel off a single item each, so the tree needs
    // a depth of n_items (which satisfies depth >= log2 n_items).
    const auto shadow = train_shadow(base, identity, {}, ShadowSpec::make_tree({n_items, 32, 1}), {0.8, 3});
    const auto agreement = measure_agreement(shadow, identity, AgreementScope::Train, 1);
    return {agreement.observational_mae < 0.05,
            "observational MAE on " + std::to_string(agreement.n_items) + " training items " +
                fmt("%.2e", agreement.observational_mae) + " (tol 0.05), depth " + std::to_string(n_items)};
}

// ------------------------------------------------- 4 and 5: synthetic tests

std::string means_line(const ExperimentResult& r) {
    return "true " + fmt("%.3f", mean(r.true_means)) + " semi " + fmt("%.3f", mean(r.semi_random_means)) +
           " random " + fmt("%.3f", mean(r.random_means));
}

Verdict hypothesis_ordering() {
    const ExperimentConfig cfg;  // 20 reps, 3 profiles, rank 3, 15 h.e.f., 500 users x 200 items, 50 ratings
    const auto r = run_hypothesis_experiment(cfg);
    const double t = mean(r.true_means);
    const double s = mean(r.semi_random_means);
    const double rnd = mean(r.random_means);
    const double p = r.true_vs_random ? r.true_vs_random->welch.p : 1.0;
    return {t > s && s > rnd && p < 0.01 && rnd < 0.10,
            cfg.label() + ": " + means_line(r) + ", true-vs-random p " + fmt("%.2e", p) +
                " (tol 0.01), random < 0.10"};
}

Verdict direct_encoding() {
    ExperimentConfig cfg;
    cfg.direct_encode = true;
    const auto r = run_hypothesis_experiment(cfg);
    const double t = mean(r.true_means);
    return {t >= 0.95, "direct-encoded " + means_line(r) + " (true >= 0.95)"};
}

// ------------------------------------------------ 6: tree beats linear

struct InteractionTaste {
    std::size_t x1, x2;  // rewarded when exactly one is present
    std::size_t a1, a2;  // rewarded when both are present
    double wx, wa;
};

struct CellRange {
    double worst_tree = 0.0;
    double best_tree = INFINITY;
    double best_linear = INFINITY;
    std::size_t cells = 0;
    std::string error;
};

// Ratings depend on features only through the tastes' XOR and AND terms.
CellRange interaction_sweep(const std::vector<InteractionTaste>& tastes, std::uint64_t seed) {
    const std::size_t n_items = 300;
    const std::size_t n_users = 150;
    const auto meta = fixtures::random_meta(n_items, 6, 0.5, seed);
    Rng rng(seed + 1);
    std::vector<Rating> entries;
    for (std::size_t u = 0; u < n_users; ++u) {
        const auto& t = tastes[u % tastes.size()];
        for (std::size_t item = 0; item < n_items; ++item) {
            if (uniform01(rng) >= 0.3) {
                continue;
            }
            const bool x = meta.holds(item, t.x1) != meta.holds(item, t.x2);
            const bool a = meta.holds(item, t.a1) && meta.holds(item, t.a2);
            const double value = 3.0 + t.wx * (x ? 0.5 : -0.5) + t.wa * (a ? 1.0 : 0.0);
            entries.push_back({u, item, std::clamp(value, 1.0, 5.0)});
        }
    }
    const RatingsMatrix ratings(n_users, n_items, entries);
    PrunedMetadata prepared;
    prepared.meta = meta;
    prepared.kept_mask.assign(n_items, true);
    prepared.kept_items.resize(n_items);
    for (std::size_t i = 0; i < n_items; ++i) {
        prepared.kept_items[i] = i;
    }

    SweepGrid grid;
    grid.ranks = {3, 6};
    grid.lambdas = {0.05};
    grid.kinds = {ShadowSpec::Kind::Linear, ShadowSpec::Kind::Tree};
    grid.depths = {2, 3, 4, 6};
    grid.bins = {8};
    const auto rows = run_sweep(ratings, prepared, grid.expand(), SweepOptions{});

    CellRange range;
    range.cells = rows.size();
    for (const auto& row : rows) {
        if (!row.error.empty()) {
            range.error = "cell " + row.cell.key() + " failed: " + row.error;
            return range;
        }
        if (std::getenv("SHADOWREC_VERBOSE") != nullptr) {
            std::cout << "    " << row.cell.key() << " obs " << *row.observational_mae << " latent "
                      << *row.mean_latent_mae << '\n';
        }
        if (row.cell.shadow.kind == ShadowSpec::Kind::Tree) {
            range.worst_tree = std::max(range.worst_tree, *row.observational_mae);
            range.best_tree = std::min(range.best_tree, *row.observational_mae);
        } else {
            range.best_linear = std::min(range.best_linear, *row.observational_mae);
        }
    }
    return range;
}

Verdict tree_vs_linear() {
    // Every taste is an interaction of the same two features (0 and 1);
    // features 2..5 are irrelevant.
    const auto pair = interaction_sweep({{0, 1, 0, 1, 3.0, 0.0}, {0, 1, 0, 1, 0.0, 2.0}, {0, 1, 0, 1, -2.0, 1.5}}, 606);
    if (!pair.error.empty()) {
        return {false, pair.error};
    }
    // Informational: three different interacting pairs need deeper trees.
    const auto mixed = interaction_sweep({{0, 1, 2, 3, 1.5, 1.0}, {2, 4, 5, 1, -1.5, 1.0}, {3, 5, 0, 4, 1.0, -1.5}}, 606);
    std::string note = "; three-pair fixture: best tree " + fmt("%.4f", mixed.best_tree) + ", worst tree " +
                       fmt("%.4f", mixed.worst_tree) + ", best linear " + fmt("%.4f", mixed.best_linear);
    return {pair.worst_tree < pair.best_linear,
            std::to_string(pair.cells) + " cells, worst tree MAE " + fmt("%.4f", pair.worst_tree) +
                " < best linear MAE " + fmt("%.4f", pair.best_linear) + note};
}

// ---------------------------------------------------------- 7: statistics

Verdict statistics_oracle() {
    std::ifstream in(std::string(SHADOWREC_TEST_DATA) + "/welch_reference.json");
    const auto cases = nlohmann::json::parse(in);
    double worst = 0.0;
    for (const auto& c : cases) {
        const auto a = c.at("a").get<std::vector<double>>();
        const auto b = c.at("b").get<std::vector<double>>();
        const auto w = welch_t(a, b);
        worst = std::max({worst, std::abs(w.t - c.at("t").get<double>()), std::abs(w.p - c.at("p").get<double>()),
                          std::abs(cohens_d(a, b) - c.at("d").get<double>())});
    }
    return {cases.size() == 20 && worst <= 1e-6,
            std::to_string(cases.size()) + " reference pairs, max deviation " + fmt("%.2e", worst) + " (tol 1e-6)"};
}

// ---------------------------------------------------------- 8: determinism

std::string run_cli(const std::vector<std::string>& args, const fixtures::fs::path& out_file) {
    std::vector<std::string> argv = {"shadowrec"};
    argv.insert(argv.end(), args.begin(), args.end());
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::run(argv, out, err);
    if (code != 0) {
        throw std::runtime_error("cli exited " + std::to_string(code) + ": " + err.str());
    }
    return out.str() + "\n--\n" + fixtures::read_file(out_file);
}

Verdict determinism() {
    fixtures::TempDir dir("acceptance");
    fixtures::write_dataset(dir.path(), 120, 150, 9);
    const std::string ratings = (dir / "ratings.csv").string();
    const std::string items = (dir / "items.jsonl").string();
    bool same = true;
    std::string detail;
    for (const std::string command : {"sweep", "synth"}) {
        std::string outputs[2];
        int slot = 0;
        for (const std::string threads : {"1", "8"}) {
            const auto out = dir / (command + threads + ".jsonl");
            std::vector<std::string> args = {"--threads", threads, "--seed", "13", command, "--out", out.string()};
            if (command == "sweep") {
                args.insert(args.end(), {"--ratings", ratings, "--metadata", items, "--iters", "8"});
            } else {
                args.insert(args.end(), {"--repetitions", "6", "--users", "200", "--items", "120"});
            }
            outputs[slot++] = run_cli(args, out);
        }
        const bool equal = outputs[0] == outputs[1];
        same = same && equal;
        detail += command + (equal ? " identical" : " DIFFERS") + " (" + std::to_string(outputs[0].size()) +
                  " bytes); ";
    }
    return {same, detail + "threads 1 vs 8, seed 13"};
}

// ---------------------------------------------- 9: correctness score property

Verdict score_properties() {
    Rng rng(9090);
    std::size_t checked = 0;
    std::size_t exact_top = 0;
    std::size_t degenerate = 0;
    std::size_t violations = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t size = 2 + uniform_index(rng, 19);
        const std::size_t n = 1 + uniform_index(rng, size);
        // A coarse grid makes ties common; a quarter of lists are continuous.
        const bool coarse = uniform_index(rng, 4) != 0;
        std::vector<FeatureInfluence> influences;
        for (std::size_t f = 0; f < size; ++f) {
            double v = uniform_real(rng, -1.0, 1.0);
            if (coarse) {
                v = std::round(v * 4.0) / 4.0;
            }
            influences.push_back({f, "f" + std::to_string(f), v});
        }
        // Half the lists plant the truth at the top to exercise the "iff".
        std::vector<std::size_t> order(size);
        for (std::size_t i = 0; i < size; ++i) {
            order[i] = i;
        }
        for (std::size_t i = size; i > 1; --i) {
            std::swap(order[i - 1], order[uniform_index(rng, i)]);
        }
        for (Ranking ranking : {Ranking::Signed, Ranking::Magnitude}) {
            auto value = [&](std::size_t f) {
                return ranking == Ranking::Signed ? influences[f].influence : std::abs(influences[f].influence);
            };
            std::vector<std::size_t> truth(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n));
            if (trial % 2 == 0) {
                std::vector<std::size_t> by_value = order;
                std::stable_sort(by_value.begin(), by_value.end(),
                                 [&](std::size_t a, std::size_t b) { return value(a) > value(b); });
                truth.assign(by_value.begin(), by_value.begin() + static_cast<std::ptrdiff_t>(n));
            }
            const double score = correctness_score(influences, truth, ranking);
            ++checked;
            if (!(score >= 0.0 && score <= 1.0)) {
                ++violations;
                continue;
            }
            // Independent top-n test: nothing outside the truth beats anything inside.
            double min_in = INFINITY;
            double max_out = -INFINITY;
            std::vector<double> sorted;
            for (std::size_t f = 0; f < size; ++f) {
                const bool in = std::find(truth.begin(), truth.end(), f) != truth.end();
                if (in) {
                    min_in = std::min(min_in, value(f));
                } else {
                    max_out = std::max(max_out, value(f));
                }
                sorted.push_back(value(f));
            }
            std::sort(sorted.begin(), sorted.end(), std::greater<>());
            double top_mass = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                top_mass += sorted[i];
            }
            const bool is_top = min_in >= max_out;
            if (!(top_mass > 0.0)) {
                // No positive top-n mass: the ratio is undefined and scored 0.
                ++degenerate;
                violations += score == 0.0 ? 0 : 1;
                continue;
            }
            exact_top += is_top ? 1 : 0;
            violations += (score == 1.0) == is_top ? 0 : 1;
        }
    }
    return {violations == 0, std::to_string(checked) + " scores over 1000 lists, " + std::to_string(exact_top) +
                                 " exact top-n, " + std::to_string(degenerate) + " without positive top-n mass, " +
                                 std::to_string(violations) + " violations"};
}

}  // namespace

int main() {
    report(1, "QII exact vs enumeration and Monte Carlo", 10, qii_oracle);
    report(2, "ALS on a complete rank-3 matrix", 5, als_correctness);
    report(3, "shadow composition with identity metadata", 10, shadow_composition);
    report(4, "synthetic hypothesis ordering", 180, hypothesis_ordering);
    report(5, "direct-encoding control", 120, direct_encoding);
    report(6, "tree shadows beat linear on interactions", 120, tree_vs_linear);
    report(7, "Welch t and Cohen's d reference", 5, statistics_oracle);
    report(8, "sweep and synth determinism across threads", 300, determinism);
    report(9, "correctness score property suite", 10, score_properties);
    std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << std::endl;
    return failures == 0 ? 0 : 1;
}
