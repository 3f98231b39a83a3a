#include "commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <memory>
#include <ostream>
#include <set>

#include "CLI11.hpp"

#include "shadowrec/error.hpp"
#include "shadowrec/factorize.hpp"
#include "shadowrec/influence.hpp"
#include "shadowrec/ingest.hpp"
#include "shadowrec/serialize.hpp"
#include "shadowrec/shadow.hpp"
#include "shadowrec/sweep.hpp"
#include "shadowrec/synth.hpp"

namespace shadowrec::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Globals {
    std::size_t threads = 1;
    std::uint64_t seed = 42;
};

struct FilterFlags {
    double entropy_threshold = 0.01;
    std::size_t top_k_entropy = 0;
    std::size_t min_support = 0;
    std::size_t min_features = 1;

    void attach(CLI::App* app) {
        auto* entropy = app->add_option("--entropy-threshold", entropy_threshold,
                                        "Drop features below this binary entropy (bits)")
                            ->capture_default_str();
        auto* top_k = app->add_option("--top-k-entropy", top_k_entropy, "Keep only the N highest-entropy features");
        auto* support = app->add_option("--min-support", min_support, "Keep features held by at least N items");
        top_k->excludes(entropy)->excludes(support);
        support->excludes(entropy);
        app->add_option("--min-features", min_features, "Prune items holding fewer features")->capture_default_str();
    }

    MetadataPipeline pipeline() const {
        MetadataPipeline p;
        if (top_k_entropy > 0) {
            p.filter = FeatureFilterSpec::top_k_entropy(top_k_entropy);
        } else if (min_support > 0) {
            p.filter = FeatureFilterSpec::min_support(min_support);
        } else {
            p.filter = FeatureFilterSpec::entropy_threshold(entropy_threshold);
        }
        p.min_features = min_features;
        return p;
    }
};

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream file(path);
    if (!file) {
        throw IoError("cannot write " + path.string());
    }
    file << text;
    if (!file) {
        throw IoError("failed writing " + path.string());
    }
}

std::vector<RawItemRecord> load_all_metadata(const std::vector<std::string>& paths) {
    if (paths.size() == 1) {
        return load_metadata(paths.front());
    }
    std::vector<std::pair<std::string, std::vector<RawItemRecord>>> sources;
    for (const auto& path : paths) {
        sources.emplace_back(fs::path(path).stem().string(), load_metadata(path));
    }
    return merge_metadata_sources(sources);
}

IdDictionary item_ids_of(const FactorModel& model) {
    if (model.item_ids.size() == model.n_items()) {
        return model.item_ids;
    }
    IdDictionary ids;
    for (std::size_t i = 0; i < model.n_items(); ++i) {
        ids.intern(std::to_string(i));
    }
    return ids;
}

std::size_t user_index(const FactorModel& model, const std::string& id) {
    if (model.user_ids.size() == model.n_users()) {
        return model.user_ids.index_of(id);
    }
    IdDictionary ids;
    for (std::size_t u = 0; u < model.n_users(); ++u) {
        ids.intern(std::to_string(u));
    }
    return ids.index_of(id);
}

json agreement_to_json(const AgreementReport& report) {
    return {
        {"item_set", report.item_set},
        {"n_items", report.n_items},
        {"n_pairs", report.n_pairs},
        {"per_factor_mae", report.per_factor_mae},
        {"mean_latent_mae", report.mean_latent_mae},
        {"observational_mae", report.observational_mae},
        {"observational_mse", report.observational_mse},
        {"faithfulness",
         {{"ratio", report.faithfulness.ratio},
          {"mse_shadow", report.faithfulness.mse_shadow},
          {"mse_random", report.faithfulness.mse_random},
          {"exact", report.faithfulness.exact}}},
    };
}

// ---------------------------------------------------------------------- train

struct TrainCommand {
    std::string ratings;
    std::string out;
    AlsConfig als;
    RatingScale scale;

    void attach(CLI::App* app) {
        app->add_option("--ratings", ratings, "Ratings CSV (userId,movieId,rating[,timestamp])")->required();
        app->add_option("--rank", als.rank, "Number of latent factors")->capture_default_str();
        app->add_option("--lambda", als.lambda, "Regularisation weight")->capture_default_str();
        app->add_option("--iters", als.max_iterations, "Maximum ALS iterations")->capture_default_str();
        app->add_option("--tol", als.convergence_tol, "Stop when RMSE improves by less")->capture_default_str();
        app->add_option("--scale-low", scale.low, "Lowest valid rating")->capture_default_str();
        app->add_option("--scale-high", scale.high, "Highest valid rating")->capture_default_str();
        app->add_option("--out", out, "Model file to write")->required();
    }

    int run(const Globals& g, std::ostream& out_stream, std::ostream& err) {
        als.seed = g.seed;
        als.threads = g.threads;
        als.validate();
        const auto loaded = load_ratings(ratings, {',', true, scale});
        AlsTrace trace;
        FactorModel model = train_als(loaded.ratings, als, &trace);
        model.user_ids = loaded.user_ids;
        model.item_ids = loaded.item_ids;
        for (std::size_t i = 0; i < trace.rmse.size(); ++i) {
            err << "iteration " << i + 1 << " rmse " << trace.rmse[i] << '\n';
        }
        save_factor_model(model, out);
        out_stream << json{{"model", out},
                           {"rank", model.rank},
                           {"lambda", model.lambda},
                           {"users", model.n_users()},
                           {"items", model.n_items()},
                           {"ratings", loaded.ratings.size()},
                           {"iterations", trace.rmse.size()},
                           {"training_rmse", trace.rmse.empty() ? 0.0 : trace.rmse.back()}}
                          .dump()
                   << '\n';
        return kOk;
    }
};

// --------------------------------------------------------------------- shadow

struct ShadowCommand {
    std::string model;
    std::vector<std::string> metadata;
    std::string kind = "tree";
    TreeParams tree;
    double ridge = 1e-3;
    double split = 0.8;
    std::string out;
    std::string report;
    std::string scope = "eval";
    std::size_t max_pairs = 200000;
    FilterFlags filter;
    CLI::Option* depth_flag = nullptr;
    CLI::Option* bins_flag = nullptr;
    CLI::Option* min_leaf_flag = nullptr;

    void attach(CLI::App* app) {
        app->add_option("--model", model, "Factor model file from `train`")->required();
        app->add_option("--metadata", metadata, "Item metadata JSONL (repeat for several sources)")->required();
        app->add_option("--kind", kind, "Shadow regressor family")
            ->check(CLI::IsMember({"linear", "tree"}))
            ->capture_default_str();
        depth_flag = app->add_option("--depth", tree.max_depth, "Tree max depth")->capture_default_str();
        bins_flag = app->add_option("--bins", tree.bins, "Tree quantile bins")->capture_default_str();
        min_leaf_flag = app->add_option("--min-leaf", tree.min_leaf, "Tree minimum leaf size")->capture_default_str();
        app->add_option("--ridge", ridge, "Linear ridge penalty")->capture_default_str();
        app->add_option("--split", split, "Training fraction of items")->capture_default_str();
        app->add_option("--agreement-scope", scope, "Items used for agreement")
            ->check(CLI::IsMember({"eval", "train", "all"}))
            ->capture_default_str();
        app->add_option("--max-pairs", max_pairs, "Cap on (user, item) pairs for agreement")->capture_default_str();
        app->add_option("--out", out, "Shadow model file to write")->required();
        app->add_option("--report", report, "Also write the agreement report here");
        filter.attach(app);
    }

    int run(const Globals& g, std::ostream& out_stream, std::ostream& err) {
        ShadowSpec spec = kind == "linear" ? ShadowSpec::linear(ridge) : ShadowSpec::make_tree(tree);
        spec.validate();
        if (spec.kind == ShadowSpec::Kind::Linear) {
            for (const auto* flag : {depth_flag, bins_flag, min_leaf_flag}) {
                if (flag->count() > 0) {
                    err << "warning: " << flag->get_name() << " only applies to tree shadows; ignored\n";
                }
            }
        }
        auto baseline = std::make_shared<const FactorModel>(load_factor_model(model));
        std::vector<std::string> warnings;
        const auto prepared =
            prepare_metadata(load_all_metadata(metadata), item_ids_of(*baseline), filter.pipeline(), &warnings);
        for (const auto& w : warnings) {
            err << "warning: " << w << '\n';
        }
        const auto shadow = train_shadow(baseline, prepared.meta, prepared.kept_items, spec, {split, g.seed}, g.threads);
        const auto agreement = measure_agreement(shadow, prepared.meta, parse_agreement_scope(scope), g.seed, max_pairs);
        save_shadow_model(shadow, out);

        json doc = agreement_to_json(agreement);
        doc["shadow"] = out;
        doc["kind"] = spec.describe();
        doc["features"] = prepared.meta.n_features();
        doc["items_with_metadata"] = prepared.kept_items.size();
        doc["train_items"] = shadow.train_items.size();
        doc["eval_items"] = shadow.eval_items.size();
        if (!report.empty()) {
            write_text(report, doc.dump(2) + "\n");
        }
        out_stream << doc.dump() << '\n';
        if (agreement.item_set == "train-set") {
            err << "note: agreement metrics are measured on the training items (train-set)\n";
        }
        return kOk;
    }
};

// -------------------------------------------------------------------- explain

struct ExplainCommand {
    std::string shadow_path;
    std::vector<std::string> metadata;
    std::string user;
    std::string item;
    bool aggregate = false;
    std::string ratings;
    std::size_t top_k = 10;
    std::string svg;
    std::string estimator = "exact";
    std::size_t samples = 1000;
    std::size_t min_features = 1;
    std::string out;
    std::string format = "json";

    void attach(CLI::App* app) {
        app->add_option("--shadow", shadow_path, "Shadow model file from `shadow`")->required();
        app->add_option("--metadata", metadata, "Item metadata JSONL used to train the shadow")->required();
        app->add_option("--user", user, "External user id")->required();
        auto* item_opt = app->add_option("--item", item, "External item id to explain");
        auto* agg = app->add_flag("--user-aggregate", aggregate, "Explain the user's preferences in general");
        item_opt->excludes(agg);
        app->add_option("--ratings", ratings, "Ratings CSV; restricts --user-aggregate to the user's rated items");
        app->add_option("--top-k", top_k, "Number of features listed")->capture_default_str();
        app->add_option("--svg", svg, "Write a bar chart of the listed influences");
        app->add_option("--estimator", estimator, "QII estimator")
            ->check(CLI::IsMember({"exact", "monte_carlo"}))
            ->capture_default_str();
        app->add_option("--samples", samples, "Monte Carlo samples per feature")->capture_default_str();
        app->add_option("--min-features", min_features, "Item pruning threshold used for the shadow")
            ->capture_default_str();
        app->add_option("--format", format, "Output format")->check(CLI::IsMember({"json", "text"}))->capture_default_str();
        app->add_option("--out", out, "Write the report here instead of standard output");
    }

    int run(const Globals& g, std::ostream& out_stream, std::ostream& err) {
        if (item.empty() && !aggregate) {
            throw ConfigError("pass --item <id> or --user-aggregate");
        }
        if (top_k < 1) {
            throw ConfigError("--top-k must be >= 1");
        }
        const ShadowModel shadow = load_shadow_model(shadow_path);
        const FactorModel& base = *shadow.baseline;
        const auto item_ids = item_ids_of(base);
        const auto projected = project_metadata(load_all_metadata(metadata), item_ids, shadow.feature_names, min_features);
        if (projected.kept_items != shadow.meta_items) {
            throw IntegrityError("metadata does not reproduce the item set the shadow model was trained on");
        }

        const std::size_t u = user_index(base, user);
        Estimator est = estimator == "exact" ? Estimator::exact() : Estimator::monte_carlo(samples, g.seed);
        InfluenceQuery query;
        if (!aggregate) {
            const std::size_t i = item_ids.index_of(item);
            if (shadow.meta_row(i) == ShadowModel::npos) {
                throw LookupError("item " + item + " was pruned for missing or negligible metadata; no explanation");
            }
            query = InfluenceQuery::single(u, i, est);
        } else {
            std::vector<std::size_t> items;
            if (!ratings.empty()) {
                const auto loaded = load_ratings(ratings);
                const std::string& uid = base.user_ids.size() == base.n_users() ? base.user_ids.id(u) : user;
                std::set<std::size_t> chosen;
                for (const auto& r : loaded.ratings.entries()) {
                    if (loaded.user_ids.id(r.user) != uid) {
                        continue;
                    }
                    std::size_t i = 0;
                    if (item_ids.find(loaded.item_ids.id(r.item), &i) != nullptr &&
                        shadow.meta_row(i) != ShadowModel::npos) {
                        chosen.insert(i);
                    }
                }
                items.assign(chosen.begin(), chosen.end());
                if (items.empty()) {
                    throw LookupError("user " + user + " has no rated items with metadata");
                }
            } else {
                items = shadow.meta_items;
                std::sort(items.begin(), items.end());
            }
            query = InfluenceQuery::item_set(u, std::move(items), est);
        }

        const auto report = explain(shadow, projected.meta, query, top_k);
        for (const auto& w : report.warnings) {
            err << "warning: " << w << '\n';
        }
        std::string text;
        if (format == "json") {
            text = influence_report_to_json(report, &shadow).dump() + "\n";
        } else {
            char line[512];
            std::snprintf(line, sizeof line, "shadow rating %.4f", report.shadow_rating);
            text += line;
            if (report.baseline_rating) {
                std::snprintf(line, sizeof line, ", baseline rating %.4f", *report.baseline_rating);
                text += line;
            }
            text += "\n";
            for (const auto& entry : report.influences) {
                std::snprintf(line, sizeof line, "%+9.4f  %s\n", entry.influence, entry.name.c_str());
                text += line;
            }
        }
        if (out.empty()) {
            out_stream << text;
        } else {
            write_text(out, text);
        }
        if (!svg.empty()) {
            write_text(svg, render_influence_svg(report, top_k));
        }
        return kOk;
    }
};

// ---------------------------------------------------------------------- sweep

struct SweepCommand {
    std::string ratings;
    std::vector<std::string> metadata;
    std::vector<std::size_t> ranks;
    std::vector<double> lambdas;
    std::vector<std::string> kinds;
    std::vector<std::size_t> depths;
    std::vector<std::size_t> bins;
    double ridge = 1e-3;
    std::size_t min_leaf = 1;
    SweepOptions options;
    std::string scope = "eval";
    std::string out;
    std::string config_file;
    FilterFlags filter;

    void attach(CLI::App* app) {
        app->add_option("--grid", config_file, "TOML file setting any of these flags (flags override it)");
        app->add_option("--ratings", ratings, "Ratings CSV");
        app->add_option("--metadata", metadata, "Item metadata JSONL");
        app->add_option("--ranks", ranks, "Baseline ranks");
        app->add_option("--lambdas", lambdas, "Baseline regularisation weights");
        app->add_option("--kinds", kinds, "Shadow kinds")->check(CLI::IsMember({"linear", "tree"}));
        app->add_option("--depths", depths, "Tree depths");
        app->add_option("--bins", bins, "Tree bin counts");
        app->add_option("--ridge", ridge, "Linear ridge penalty")->capture_default_str();
        app->add_option("--min-leaf", min_leaf, "Tree minimum leaf size")->capture_default_str();
        app->add_option("--iters", options.max_iterations, "ALS iterations")->capture_default_str();
        app->add_option("--tol", options.convergence_tol, "ALS convergence tolerance")->capture_default_str();
        app->add_option("--split", options.train_fraction, "Training fraction of items")->capture_default_str();
        app->add_option("--agreement-scope", scope, "Items used for agreement")
            ->check(CLI::IsMember({"eval", "train", "all"}))
            ->capture_default_str();
        app->add_option("--max-pairs", options.max_pairs, "Cap on (user, item) pairs per cell")->capture_default_str();
        app->add_option("--out", out, "Write one JSON record per cell here");
        filter.attach(app);
    }

    int run(const Globals& g, std::ostream& out_stream, std::ostream& err) {
        if (ratings.empty() || metadata.empty()) {
            throw ConfigError("sweep needs --ratings and --metadata (on the command line or in --grid)");
        }
        std::vector<SweepCell> cells;
        if (ranks.empty() && lambdas.empty() && kinds.empty() && depths.empty() && bins.empty()) {
            cells = default_sweep_cells(ridge);
        } else {
            SweepGrid grid;
            grid.ranks = ranks.empty() ? std::vector<std::size_t>{10} : ranks;
            grid.lambdas = lambdas.empty() ? std::vector<double>{0.1} : lambdas;
            if (kinds.empty()) {
                grid.kinds = {ShadowSpec::Kind::Linear, ShadowSpec::Kind::Tree};
            }
            for (const auto& k : kinds) {
                grid.kinds.push_back(parse_shadow_kind(k));
            }
            grid.depths = depths.empty() ? std::vector<std::size_t>{5} : depths;
            grid.bins = bins.empty() ? std::vector<std::size_t>{32} : bins;
            grid.ridge = ridge;
            grid.min_leaf = min_leaf;
            cells = grid.expand();
        }
        for (const auto& cell : cells) {
            AlsConfig{cell.rank, cell.lambda, options.max_iterations, options.convergence_tol, 0, 1}.validate();
            cell.shadow.validate();
        }
        options.scope = parse_agreement_scope(scope);
        options.seed = g.seed;
        options.threads = g.threads;

        const auto loaded = load_ratings(ratings);
        std::vector<std::string> warnings;
        const auto prepared = prepare_metadata(load_all_metadata(metadata), loaded.item_ids, filter.pipeline(), &warnings);
        for (const auto& w : warnings) {
            err << "warning: " << w << '\n';
        }
        err << "sweeping " << cells.size() << " cells\n";
        const auto rows = run_sweep(loaded.ratings, prepared, cells, options);

        std::string records;
        for (const auto& row : rows) {
            records += sweep_row_to_json(row).dump() + "\n";
            if (!row.error.empty()) {
                err << "cell " << row.cell.key() << " failed: " << row.error << '\n';
            }
        }
        if (!out.empty()) {
            write_text(out, records);
        }
        out_stream << sweep_table(rows);
        return kOk;
    }
};

// ---------------------------------------------------------------------- synth

struct SynthCommand {
    ExperimentConfig cfg;
    std::string kind = "linear";
    std::string ranking = "magnitude";
    std::size_t pool_top_k = 15;
    std::size_t pool_min_support = 0;
    std::vector<std::string> metadata;
    std::string out;
    std::string samples_out;
    std::string config_file;
    FilterFlags filter;

    void attach(CLI::App* app) {
        app->add_option("--config", config_file, "TOML experiment manifest setting any of these flags (flags override it)");
        app->add_option("--repetitions", cfg.repetitions, "Independent repetitions (N)")->capture_default_str();
        app->add_option("--profiles", cfg.sim.n_profiles, "Preference profiles")->capture_default_str();
        app->add_option("--features-per-profile", cfg.sim.features_per_profile, "Features per profile")
            ->capture_default_str();
        app->add_option("--users", cfg.sim.n_users, "Simulated users")->capture_default_str();
        app->add_option("--ratings-per-user", cfg.sim.ratings_per_user, "Ratings per user")->capture_default_str();
        app->add_option("--base-rating", cfg.sim.base_rating, "Rating of an item matching nothing")
            ->capture_default_str();
        app->add_option("--delta", cfg.sim.delta, "Rating change per matched feature")->capture_default_str();
        app->add_option("--scale-low", cfg.sim.scale.low, "Lowest rating")->capture_default_str();
        app->add_option("--scale-high", cfg.sim.scale.high, "Highest rating")->capture_default_str();
        auto* top = app->add_option("--pool-top-k", pool_top_k, "Profile features come from the N highest-entropy")
                        ->capture_default_str();
        app->add_option("--pool-min-support", pool_min_support, "Profile features come from features with support >= N")
            ->excludes(top);
        app->add_option("--items", cfg.universe.n_items, "Generated items")->capture_default_str();
        app->add_option("--item-features", cfg.universe.n_features, "Generated binary features")->capture_default_str();
        app->add_option("--metadata", metadata, "Use this item metadata instead of a generated universe");
        app->add_option("--rank", cfg.als.rank, "ALS rank")->capture_default_str();
        app->add_option("--lambda", cfg.als.lambda, "ALS regularisation")->capture_default_str();
        app->add_option("--iters", cfg.als.max_iterations, "ALS iterations")->capture_default_str();
        app->add_option("--kind", kind, "Shadow kind")->check(CLI::IsMember({"linear", "tree"}))->capture_default_str();
        app->add_option("--depth", cfg.shadow.tree.max_depth, "Tree depth")->capture_default_str();
        app->add_option("--bins", cfg.shadow.tree.bins, "Tree bins")->capture_default_str();
        app->add_option("--ridge", cfg.shadow.ridge, "Linear ridge penalty")->capture_default_str();
        app->add_option("--split", cfg.train_fraction, "Shadow training fraction")->capture_default_str();
        app->add_option("--ranking", ranking, "Correctness ranking")
            ->check(CLI::IsMember({"signed", "magnitude"}))
            ->capture_default_str();
        app->add_option("--keep-fraction", cfg.keep_fraction, "Share of features semi-random controls keep")
            ->capture_default_str();
        app->add_flag("--direct-encode", cfg.direct_encode, "Replace ALS with the directly encoded model");
        app->add_option("--out", out, "Write JSON records (per repetition + summary) here");
        app->add_option("--samples-out", samples_out, "Write one JSON record per user score here");
        filter.attach(app);
    }

    int run(const Globals& g, std::ostream& out_stream, std::ostream& err) {
        cfg.sim.seed = g.seed;
        cfg.threads = g.threads;
        cfg.ranking = parse_ranking(ranking);
        cfg.sim.feature_pool = pool_min_support > 0 ? FeatureFilterSpec::min_support(pool_min_support)
                                                    : FeatureFilterSpec::top_k_entropy(pool_top_k);
        const TreeParams tree = cfg.shadow.tree;
        const double ridge = cfg.shadow.ridge;
        cfg.shadow = kind == "linear" ? ShadowSpec::linear(ridge) : ShadowSpec::make_tree(tree);
        cfg.pipeline = filter.pipeline();
        cfg.validate();

        std::vector<RawItemRecord> records;
        if (!metadata.empty()) {
            records = load_all_metadata(metadata);
        }
        err << "running " << cfg.repetitions << " repetitions: " << cfg.label() << '\n';
        const auto result = run_hypothesis_experiment(cfg, metadata.empty() ? nullptr : &records);

        if (!out.empty()) {
            std::string lines;
            for (std::size_t r = 0; r < result.true_means.size(); ++r) {
                lines += json{{"record", "repetition"},
                              {"repetition", r},
                              {"true", result.true_means[r]},
                              {"semi_random", result.semi_random_means[r]},
                              {"random", result.random_means[r]}}
                             .dump() +
                         "\n";
            }
            json summary = experiment_to_json(cfg, result);
            summary["record"] = "summary";
            lines += summary.dump() + "\n";
            write_text(out, lines);
        }
        if (!samples_out.empty()) {
            std::string lines;
            for (const auto& s : result.samples) {
                lines += json{{"condition", to_string(s.condition)},
                              {"repetition", s.repetition},
                              {"user", s.user},
                              {"score", s.score}}
                             .dump() +
                         "\n";
            }
            write_text(samples_out, lines);
        }
        out_stream << experiment_table(cfg, result);
        return kOk;
    }
};

// CLI11 only reads config files attached to the root app, so subcommand
// manifests are applied here: a key fills its option unless the flag was given.
void apply_config_file(CLI::App* sub, const std::string& path, const std::string& own_flag) {
    if (path.empty()) {
        return;
    }
    if (!fs::exists(path)) {
        throw IoError("cannot open config file " + path);
    }
    std::vector<CLI::ConfigItem> items;
    try {
        items = CLI::ConfigTOML().from_file(path);
    } catch (const CLI::Error& e) {
        throw ParseError(path + ": " + e.what());
    }
    for (const auto& item : items) {
        if (item.name == "++" || item.name == "--") {
            continue;  // section markers
        }
        if (!item.parents.empty()) {
            throw ConfigError(path + ": unexpected section for key '" + item.fullname() + "'");
        }
        if ("--" + item.name == own_flag) {
            continue;
        }
        CLI::Option* opt = sub->get_option_no_throw("--" + item.name);
        if (opt == nullptr && sub->get_parent() != nullptr) {
            opt = sub->get_parent()->get_option_no_throw("--" + item.name);  // --threads, --seed
        }
        if (opt == nullptr) {
            throw ConfigError(path + ": unknown key '" + item.name + "' for " + sub->get_name());
        }
        if (opt->count() > 0) {
            continue;
        }
        try {
            opt->add_result(item.inputs);
            opt->run_callback();
        } catch (const CLI::Error& e) {
            throw ConfigError(path + ": bad value for '" + item.name + "': " + e.what());
        }
    }
}

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Config:
        case ErrorKind::Validation: return kUsage;
        case ErrorKind::Io: return kIo;
        case ErrorKind::Parse: return kBadInput;
        case ErrorKind::Lookup: return kLookup;
        default: return kPipeline;
    }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Interpret matrix-factorisation recommenders with metadata shadow models and QII", "shadowrec"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals globals;
    app.add_option("--threads", globals.threads, "Worker threads")->capture_default_str();
    app.add_option("--seed", globals.seed, "Master random seed")->capture_default_str();

    TrainCommand train;
    ShadowCommand shadow;
    ExplainCommand explain_cmd;
    SweepCommand sweep;
    SynthCommand synth;
    auto* train_app = app.add_subcommand("train", "Train the ALS baseline recommender");
    auto* shadow_app = app.add_subcommand("shadow", "Train a metadata shadow model and report agreement");
    auto* explain_app = app.add_subcommand("explain", "Explain a recommendation with QII");
    auto* sweep_app = app.add_subcommand("sweep", "Parameter sweep over baselines and shadow models");
    auto* synth_app = app.add_subcommand("synth", "Synthetic-preference hypothesis experiment");
    train.attach(train_app);
    shadow.attach(shadow_app);
    explain_cmd.attach(explain_app);
    sweep.attach(sweep_app);
    synth.attach(synth_app);

    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }
    try {
        if (sweep_app->parsed()) {
            apply_config_file(sweep_app, sweep.config_file, "--grid");
        }
        if (synth_app->parsed()) {
            apply_config_file(synth_app, synth.config_file, "--config");
        }
        if (globals.threads < 1) {
            throw ConfigError("--threads must be >= 1");
        }
        if (train_app->parsed()) {
            return train.run(globals, out, err);
        }
        if (shadow_app->parsed()) {
            return shadow.run(globals, out, err);
        }
        if (explain_app->parsed()) {
            return explain_cmd.run(globals, out, err);
        }
        if (sweep_app->parsed()) {
            return sweep.run(globals, out, err);
        }
        if (synth_app->parsed()) {
            return synth.run(globals, out, err);
        }
    } catch (const Error& e) {
        err << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kFailure;
    }
    return kFailure;
}

}  // namespace shadowrec::cli
