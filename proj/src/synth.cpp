#include "shadowrec/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <set>

#include "shadowrec/error.hpp"
#include "shadowrec/parallel.hpp"
#include "shadowrec/rng.hpp"

namespace shadowrec {

// ------------------------------------------------------------------ profiles

std::vector<std::size_t> PreferenceProfile::features() const {
    std::vector<std::size_t> all;
    all.reserve(size());
    std::merge(liked.begin(), liked.end(), disliked.begin(), disliked.end(), std::back_inserter(all));
    return all;
}

void PreferenceProfile::validate() const {
    if (size() == 0) {
        throw ConfigError("preference profile needs at least one feature");
    }
    const auto all = features();
    if (std::adjacent_find(all.begin(), all.end()) != all.end()) {
        throw ConfigError("preference profile lists a feature as both liked and disliked (or twice)");
    }
}

void SimConfig::validate() const {
    if (n_profiles < 1 || features_per_profile < 1 || n_users < 1 || ratings_per_user < 1) {
        throw ConfigError("simulation counts must all be >= 1");
    }
    if (n_users <= n_profiles) {
        throw ConfigError("simulation needs more users than profiles");
    }
    if (!(scale.low < scale.high)) {
        throw ConfigError("simulation scale requires low < high");
    }
    feature_pool.validate();
}

namespace {

// First `count` entries of a seeded shuffle of `values`.
std::vector<std::size_t> draw_distinct(std::vector<std::size_t> values, std::size_t count, Rng& rng) {
    count = std::min(count, values.size());
    for (std::size_t i = 0; i < count; ++i) {
        std::swap(values[i], values[i + uniform_index(rng, values.size() - i)]);
    }
    values.resize(count);
    return values;
}

PreferenceProfile assign_signs(const std::vector<std::size_t>& features, Rng& rng) {
    PreferenceProfile profile;
    for (std::size_t f : features) {
        (coin_flip(rng) ? profile.liked : profile.disliked).push_back(f);
    }
    std::sort(profile.liked.begin(), profile.liked.end());
    std::sort(profile.disliked.begin(), profile.disliked.end());
    return profile;
}

std::size_t count_held(const MetadataMatrix& meta, std::size_t item, const std::vector<std::size_t>& features) {
    const auto& row = meta.item_features(item);
    std::size_t n = 0;
    for (std::size_t f : features) {
        n += std::binary_search(row.begin(), row.end(), f) ? 1 : 0;
    }
    return n;
}

}  // namespace

std::vector<PreferenceProfile> generate_profiles(std::span<const std::size_t> pool, const SimConfig& cfg,
                                                 std::uint64_t seed) {
    if (pool.size() < cfg.features_per_profile) {
        throw ConfigError("feature pool of " + std::to_string(pool.size()) + " is smaller than features_per_profile " +
                          std::to_string(cfg.features_per_profile));
    }
    if (cfg.n_profiles < 1 || cfg.features_per_profile < 1) {
        throw ConfigError("profile generation needs n_profiles >= 1 and features_per_profile >= 1");
    }
    Rng rng(seed);
    std::vector<PreferenceProfile> profiles;
    profiles.reserve(cfg.n_profiles);
    const std::vector<std::size_t> candidates(pool.begin(), pool.end());
    for (std::size_t p = 0; p < cfg.n_profiles; ++p) {
        profiles.push_back(assign_signs(draw_distinct(candidates, cfg.features_per_profile, rng), rng));
    }
    return profiles;
}

double generative_rating(const PreferenceProfile& profile, const MetadataMatrix& meta, std::size_t item,
                         const SimConfig& cfg) {
    const auto liked = static_cast<double>(count_held(meta, item, profile.liked));
    const auto disliked = static_cast<double>(count_held(meta, item, profile.disliked));
    return cfg.base_rating + cfg.delta * liked - cfg.delta * disliked;
}

SimulatedRatings simulate_ratings(std::span<const PreferenceProfile> profiles, const MetadataMatrix& meta,
                                  const SimConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    if (meta.n_items() == 0) {
        throw ConfigError("simulation needs a non-empty item set");
    }
    if (profiles.empty()) {
        throw ConfigError("simulation needs at least one profile");
    }
    if (cfg.ratings_per_user > meta.n_items()) {
        throw ConfigError("ratings_per_user " + std::to_string(cfg.ratings_per_user) + " exceeds the " +
                          std::to_string(meta.n_items()) + " available items");
    }
    Rng rng(seed);
    SimulatedRatings out;
    out.user_profile.resize(cfg.n_users);
    for (std::size_t u = 0; u < cfg.n_users; ++u) {
        out.user_profile[u] = u < profiles.size() ? u : uniform_index(rng, profiles.size());
    }

    std::vector<std::size_t> items(meta.n_items());
    for (std::size_t i = 0; i < items.size(); ++i) {
        items[i] = i;
    }
    std::vector<Rating> entries;
    entries.reserve(cfg.n_users * cfg.ratings_per_user);
    for (std::size_t u = 0; u < cfg.n_users; ++u) {
        auto chosen = draw_distinct(items, cfg.ratings_per_user, rng);
        std::sort(chosen.begin(), chosen.end());
        for (std::size_t item : chosen) {
            const double raw = generative_rating(profiles[out.user_profile[u]], meta, item, cfg);
            entries.push_back({u, item, std::clamp(raw, cfg.scale.low, cfg.scale.high)});
        }
    }
    out.ratings = RatingsMatrix(cfg.n_users, meta.n_items(), std::move(entries), cfg.scale);
    return out;
}

FactorModel direct_encode_model(std::span<const PreferenceProfile> profiles, std::span<const std::size_t> user_profile,
                                const MetadataMatrix& meta, std::span<const std::size_t> pool, const SimConfig& cfg) {
    const std::size_t k = pool.size() + 1;
    std::vector<std::size_t> position(meta.n_features(), MetadataMatrix::npos);
    for (std::size_t q = 0; q < pool.size(); ++q) {
        position.at(pool[q]) = q;
    }

    FactorModel model;
    model.rank = k;
    model.lambda = 0.0;
    model.item_factors = Matrix::Zero(static_cast<Eigen::Index>(meta.n_items()), static_cast<Eigen::Index>(k));
    for (std::size_t item = 0; item < meta.n_items(); ++item) {
        for (std::size_t f : meta.item_features(item)) {
            if (position[f] != MetadataMatrix::npos) {
                model.item_factors(static_cast<Eigen::Index>(item), static_cast<Eigen::Index>(position[f])) = 1.0;
            }
        }
        model.item_factors(static_cast<Eigen::Index>(item), static_cast<Eigen::Index>(k - 1)) = 1.0;
    }

    model.user_factors = Matrix::Zero(static_cast<Eigen::Index>(user_profile.size()), static_cast<Eigen::Index>(k));
    for (std::size_t u = 0; u < user_profile.size(); ++u) {
        const auto& profile = profiles[user_profile[u]];
        const auto r = static_cast<Eigen::Index>(u);
        auto place = [&](std::size_t f, double weight) {
            if (f >= position.size() || position[f] == MetadataMatrix::npos) {
                throw ConfigError("profile feature " + std::to_string(f) + " is not in the feature pool");
            }
            model.user_factors(r, static_cast<Eigen::Index>(position[f])) = weight;
        };
        for (std::size_t f : profile.liked) {
            place(f, cfg.delta);
        }
        for (std::size_t f : profile.disliked) {
            place(f, -cfg.delta);
        }
        model.user_factors(r, static_cast<Eigen::Index>(k - 1)) = cfg.base_rating;
    }
    return model;
}

// ------------------------------------------------------------------- scoring

const char* to_string(Ranking ranking) noexcept {
    return ranking == Ranking::Signed ? "signed" : "magnitude";
}

Ranking parse_ranking(const std::string& text) {
    if (text == "signed") {
        return Ranking::Signed;
    }
    if (text == "magnitude") {
        return Ranking::Magnitude;
    }
    throw ConfigError("unknown ranking '" + text + "' (expected signed or magnitude)");
}

double correctness_score(std::span<const FeatureInfluence> influences, std::span<const std::size_t> true_features,
                         Ranking ranking) {
    const std::size_t n = true_features.size();
    if (n < 1) {
        throw ConfigError("correctness score needs at least one true feature");
    }
    if (n > influences.size()) {
        throw IntegrityError("more true features than reported influences");
    }
    auto value = [&](const FeatureInfluence& entry) {
        return ranking == Ranking::Signed ? entry.influence : std::abs(entry.influence);
    };

    std::vector<double> all;
    all.reserve(influences.size());
    bool all_zero = true;
    for (const auto& entry : influences) {
        all.push_back(value(entry));
        all_zero = all_zero && entry.influence == 0.0;
    }
    std::vector<double> chosen;
    chosen.reserve(n);
    for (std::size_t f : true_features) {
        const auto it = std::find_if(influences.begin(), influences.end(),
                                     [&](const FeatureInfluence& entry) { return entry.feature == f; });
        if (it == influences.end()) {
            throw IntegrityError("true feature " + std::to_string(f) + " is absent from the influence report");
        }
        chosen.push_back(value(*it));
    }
    if (all_zero) {
        return 0.0;
    }

    // Both sums run over descending values, so an exact top-n set yields
    // bit-identical sums and a ratio of exactly 1.
    std::sort(all.begin(), all.end(), std::greater<>());
    std::sort(chosen.begin(), chosen.end(), std::greater<>());
    double top = 0.0;
    double truth = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        top += all[i];
        truth += chosen[i];
    }
    if (!(top > 0.0)) {
        return 0.0;
    }
    return std::clamp(truth / top, 0.0, 1.0);
}

PreferenceProfile control_profile(const PreferenceProfile& profile, std::span<const std::size_t> pool,
                                  const ControlMode& mode, std::uint64_t seed) {
    profile.validate();
    const std::size_t size = profile.size();
    const auto original = profile.features();
    Rng rng(seed);

    std::size_t keep = 0;
    if (mode.kind == ControlMode::Kind::SemiRandom) {
        if (!(mode.keep_fraction >= 0.0 && mode.keep_fraction <= 1.0)) {
            throw ConfigError("keep_fraction must lie in [0, 1]");
        }
        keep = std::min(size, static_cast<std::size_t>(std::floor(mode.keep_fraction * static_cast<double>(size))));
        keep = std::max<std::size_t>(keep, 1);
    }

    PreferenceProfile out;
    for (std::size_t f : draw_distinct(original, keep, rng)) {
        (std::binary_search(profile.liked.begin(), profile.liked.end(), f) ? out.liked : out.disliked).push_back(f);
    }
    const std::set<std::size_t> own(original.begin(), original.end());
    std::vector<std::size_t> fresh;
    for (std::size_t f : pool) {
        if (!own.contains(f)) {
            fresh.push_back(f);
        }
    }
    const std::size_t needed = size - keep;
    if (fresh.size() < needed) {
        // Pool too small to avoid the profile's own features; allow them back.
        const auto kept = out.features();
        fresh.clear();
        for (std::size_t f : pool) {
            if (!std::binary_search(kept.begin(), kept.end(), f)) {
                fresh.push_back(f);
            }
        }
        std::sort(fresh.begin(), fresh.end());
        fresh.erase(std::unique(fresh.begin(), fresh.end()), fresh.end());
    }
    const auto redrawn = assign_signs(draw_distinct(fresh, needed, rng), rng);
    out.liked.insert(out.liked.end(), redrawn.liked.begin(), redrawn.liked.end());
    out.disliked.insert(out.disliked.end(), redrawn.disliked.begin(), redrawn.disliked.end());
    std::sort(out.liked.begin(), out.liked.end());
    std::sort(out.disliked.begin(), out.disliked.end());
    return out;
}

// ---------------------------------------------------------------- experiment

std::vector<RawItemRecord> generate_item_universe(const ItemUniverseConfig& cfg, std::uint64_t seed) {
    if (cfg.n_items < 1 || cfg.n_features < 1) {
        throw ConfigError("item universe needs at least one item and one feature");
    }
    if (!(cfg.min_marginal >= 0.0 && cfg.min_marginal <= cfg.max_marginal && cfg.max_marginal <= 1.0)) {
        throw ConfigError("item universe marginals must satisfy 0 <= min <= max <= 1");
    }
    Rng rng(seed);
    std::vector<double> marginal(cfg.n_features);
    for (auto& p : marginal) {
        p = uniform_real(rng, cfg.min_marginal, cfg.max_marginal);
    }
    std::vector<RawItemRecord> records(cfg.n_items);
    char name[32];
    for (std::size_t i = 0; i < cfg.n_items; ++i) {
        std::snprintf(name, sizeof name, "m%04zu", i);
        records[i].item_id = name;
        auto& traits = records[i].attributes["trait"];
        for (std::size_t f = 0; f < cfg.n_features; ++f) {
            if (uniform01(rng) < marginal[f]) {
                std::snprintf(name, sizeof name, "t%02zu", f);
                traits.insert(name);
            }
        }
    }
    return records;
}

const char* to_string(Condition condition) noexcept {
    switch (condition) {
        case Condition::True: return "true";
        case Condition::SemiRandom: return "semi_random";
        case Condition::Random: return "random";
    }
    return "true";
}

void ExperimentConfig::validate() const {
    sim.validate();
    als.validate();
    shadow.validate();
    if (repetitions < 1) {
        throw ConfigError("experiment needs at least one repetition");
    }
    if (!(keep_fraction >= 0.0 && keep_fraction <= 1.0)) {
        throw ConfigError("keep_fraction must lie in [0, 1]");
    }
    if (!(train_fraction > 0.0 && train_fraction <= 1.0)) {
        throw ConfigError("train_fraction must lie in (0, 1]");
    }
}

std::string ExperimentConfig::label() const {
    std::string pool;
    switch (sim.feature_pool.mode) {
        case FeatureFilterSpec::Mode::TopKEntropy: pool = std::to_string(sim.feature_pool.count) + " h.e.f."; break;
        case FeatureFilterSpec::Mode::MinSupport: pool = "any " + std::to_string(sim.feature_pool.count); break;
        case FeatureFilterSpec::Mode::EntropyThreshold: pool = sim.feature_pool.describe(); break;
    }
    return "N=" + std::to_string(repetitions) + ", " + std::to_string(sim.n_profiles) + " pr, rn " +
           (direct_encode ? std::string("direct") : std::to_string(als.rank)) + ", " + pool;
}

namespace {

struct RepetitionOutcome {
    std::vector<ScoreSample> samples;
    double means[3] = {0.0, 0.0, 0.0};
};

std::optional<ComparisonResult> compare(const std::vector<double>& a, const std::vector<double>& b) {
    try {
        ComparisonResult out;
        out.welch = welch_t(a, b);
        try {
            out.effect_size = cohens_d(a, b);
        } catch (const StatisticsError&) {
        }
        return out;
    } catch (const StatisticsError&) {
        return std::nullopt;
    }
}

}  // namespace

ExperimentResult run_hypothesis_experiment(const ExperimentConfig& cfg, const std::vector<RawItemRecord>* metadata) {
    cfg.validate();

    const std::vector<RawItemRecord> records =
        metadata != nullptr ? *metadata : generate_item_universe(cfg.universe, derive_seed(cfg.sim.seed, 0x11));
    IdDictionary item_ids;
    for (const auto& record : records) {
        item_ids.intern(record.item_id);
    }
    const MetadataMatrix encoded = encode_one_hot(align_records(records, item_ids));
    const MetadataMatrix meta = filter_features(encoded, cfg.pipeline.filter);
    const PrunedMetadata pruned = prune_items(meta, cfg.pipeline.min_features);
    const std::vector<std::size_t> pool = select_features(pruned.meta, cfg.sim.feature_pool);
    if (pool.size() < cfg.sim.features_per_profile) {
        throw ConfigError("feature pool of " + std::to_string(pool.size()) + " features cannot fill profiles of " +
                          std::to_string(cfg.sim.features_per_profile));
    }

    std::vector<RepetitionOutcome> outcomes(cfg.repetitions);
    parallel_for(cfg.repetitions, cfg.threads, [&](std::size_t rep) {
        try {
            const std::uint64_t seed = derive_seed(cfg.sim.seed, rep);
            const auto profiles = generate_profiles(pool, cfg.sim, derive_seed(seed, 1));
            const auto simulated = simulate_ratings(profiles, meta, cfg.sim, derive_seed(seed, 2));

            std::shared_ptr<const FactorModel> model;
            if (cfg.direct_encode) {
                model = std::make_shared<const FactorModel>(
                    direct_encode_model(profiles, simulated.user_profile, meta, pool, cfg.sim));
            } else {
                AlsConfig als = cfg.als;
                als.seed = derive_seed(seed, 3);
                als.threads = 1;
                model = std::make_shared<const FactorModel>(train_als(simulated.ratings, als));
            }
            const auto shadow = train_shadow(model, pruned.meta, pruned.kept_items, cfg.shadow,
                                             {cfg.train_fraction, derive_seed(seed, 4)});

            // Per-item influence bases are user independent; build them once.
            std::vector<Matrix> basis(meta.n_items());
            std::vector<std::vector<std::size_t>> rated(cfg.sim.n_users);
            for (const auto& r : simulated.ratings.entries()) {
                if (shadow.meta_row(r.item) != ShadowModel::npos) {
                    rated[r.user].push_back(r.item);
                }
            }

            RepetitionOutcome outcome;
            double sums[3] = {0.0, 0.0, 0.0};
            std::size_t scored = 0;
            const std::size_t n_features = shadow.n_features();
            for (std::size_t user = 0; user < cfg.sim.n_users; ++user) {
                if (rated[user].empty()) {
                    continue;
                }
                const auto u = model->user_factors.row(static_cast<Eigen::Index>(user));
                std::vector<double> influence(n_features, 0.0);
                for (std::size_t item : rated[user]) {
                    if (basis[item].size() == 0) {
                        basis[item] = factor_influence_basis(shadow, pruned.meta, item);
                    }
                    const Vector contribution = basis[item].transpose() * u.transpose();
                    for (std::size_t f = 0; f < n_features; ++f) {
                        influence[f] += contribution(static_cast<Eigen::Index>(f));
                    }
                }
                std::vector<FeatureInfluence> report(n_features);
                for (std::size_t f = 0; f < n_features; ++f) {
                    report[f] = {f, shadow.feature_names[f], influence[f] / static_cast<double>(rated[user].size())};
                }

                const auto& profile = profiles[simulated.user_profile[user]];
                const std::uint64_t user_seed = derive_seed(seed, 1000 + user);
                const PreferenceProfile controls[3] = {
                    profile,
                    control_profile(profile, pool, ControlMode::semi_random(cfg.keep_fraction), derive_seed(user_seed, 1)),
                    control_profile(profile, pool, ControlMode::random(), derive_seed(user_seed, 2)),
                };
                for (int c = 0; c < 3; ++c) {
                    const double score = correctness_score(report, controls[c].features(), cfg.ranking);
                    outcome.samples.push_back({static_cast<Condition>(c), rep, user, score});
                    sums[c] += score;
                }
                ++scored;
            }
            if (scored == 0) {
                throw InsufficientDataError("no user has rated items with metadata");
            }
            for (int c = 0; c < 3; ++c) {
                outcome.means[c] = sums[c] / static_cast<double>(scored);
            }
            outcomes[rep] = std::move(outcome);
        } catch (const Error& e) {
            throw Error(e.kind(), "repetition " + std::to_string(rep) + ": " + e.what());
        }
    });

    ExperimentResult result;
    result.pool_size = pool.size();
    result.n_features = pruned.meta.n_features();
    for (auto& outcome : outcomes) {
        result.samples.insert(result.samples.end(), outcome.samples.begin(), outcome.samples.end());
        result.true_means.push_back(outcome.means[0]);
        result.semi_random_means.push_back(outcome.means[1]);
        result.random_means.push_back(outcome.means[2]);
    }
    result.true_vs_semi = compare(result.true_means, result.semi_random_means);
    result.semi_vs_random = compare(result.semi_random_means, result.random_means);
    result.true_vs_random = compare(result.true_means, result.random_means);
    return result;
}

nlohmann::json experiment_to_json(const ExperimentConfig& cfg, const ExperimentResult& result) {
    using nlohmann::json;
    auto comparison = [](const std::optional<ComparisonResult>& c) -> json {
        if (!c) {
            return nullptr;
        }
        return {{"t", c->welch.t},
                {"p", c->welch.p},
                {"df", c->welch.df},
                {"effect_size", c->effect_size ? json(*c->effect_size) : json(nullptr)}};
    };
    auto safe_mean = [](const std::vector<double>& v) { return v.empty() ? 0.0 : mean(v); };
    return {
        {"parameters", cfg.label()},
        {"repetitions", cfg.repetitions},
        {"profiles", cfg.sim.n_profiles},
        {"features_per_profile", cfg.sim.features_per_profile},
        {"rank", cfg.direct_encode ? json("direct") : json(cfg.als.rank)},
        {"pool", cfg.sim.feature_pool.describe()},
        {"pool_size", result.pool_size},
        {"n_features", result.n_features},
        {"ranking", to_string(cfg.ranking)},
        {"shadow", cfg.shadow.describe()},
        {"true_mean", safe_mean(result.true_means)},
        {"semi_random_mean", safe_mean(result.semi_random_means)},
        {"random_mean", safe_mean(result.random_means)},
        {"true_vs_semi_random", comparison(result.true_vs_semi)},
        {"semi_random_vs_random", comparison(result.semi_vs_random)},
        {"true_vs_random", comparison(result.true_vs_random)},
    };
}

std::string experiment_table(const ExperimentConfig& cfg, const ExperimentResult& result) {
    auto num = [](double v, const char* format) {
        char buf[32];
        std::snprintf(buf, sizeof buf, format, v);
        return std::string(buf);
    };
    auto p_of = [&](const std::optional<ComparisonResult>& c) {
        return c ? num(c->welch.p, "%.2g") : std::string("n/a");
    };
    auto es_of = [&](const std::optional<ComparisonResult>& c) {
        return c && c->effect_size ? num(*c->effect_size, "%.2f") : std::string("n/a");
    };
    auto safe_mean = [](const std::vector<double>& v) { return v.empty() ? 0.0 : mean(v); };

    const std::vector<std::string> header = {"parameters", "t. mean", "s.r. mean", "r. mean",
                                             "t>s.r. p",   "e.s.",    "s.r.>r. p", "e.s."};
    const std::vector<std::string> row = {cfg.label(),
                                          num(safe_mean(result.true_means), "%.2f"),
                                          num(safe_mean(result.semi_random_means), "%.2f"),
                                          num(safe_mean(result.random_means), "%.2f"),
                                          p_of(result.true_vs_semi),
                                          es_of(result.true_vs_semi),
                                          p_of(result.semi_vs_random),
                                          es_of(result.semi_vs_random)};
    std::string out;
    for (const auto* line : {&header, &row}) {
        for (std::size_t c = 0; c < line->size(); ++c) {
            const std::size_t width = std::max(header[c].size(), row[c].size());
            std::string cell = (*line)[c];
            cell.resize(width, ' ');
            out += (c == 0 ? "" : " | ") + cell;
        }
        while (!out.empty() && out.back() == ' ') {
            out.pop_back();
        }
        out += '\n';
    }
    return out;
}

}  // namespace shadowrec
