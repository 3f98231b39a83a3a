#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "shadowrec/datamodel.hpp"
#include "shadowrec/factorize.hpp"
#include "shadowrec/influence.hpp"
#include "shadowrec/ingest.hpp"
#include "shadowrec/shadow.hpp"
#include "shadowrec/stats.hpp"

namespace shadowrec {

/// Ground-truth tastes of a simulated user, as metadata feature indices.
struct PreferenceProfile {
    std::vector<std::size_t> liked;     // ascending
    std::vector<std::size_t> disliked;  // ascending

    /// liked and disliked, ascending.
    std::vector<std::size_t> features() const;
    std::size_t size() const noexcept { return liked.size() + disliked.size(); }
    void validate() const;

    friend bool operator==(const PreferenceProfile&, const PreferenceProfile&) = default;
};

struct SimConfig {
    std::size_t n_profiles = 3;
    std::size_t features_per_profile = 3;
    std::size_t n_users = 500;
    std::size_t ratings_per_user = 50;
    double base_rating = 3.0;
    double delta = 1.0;
    RatingScale scale;
    FeatureFilterSpec feature_pool = FeatureFilterSpec::top_k_entropy(15);
    std::uint64_t seed = 1;

    void validate() const;
};

/// n_profiles profiles, each with features_per_profile distinct pool features
/// assigned to liked or disliked by a fair coin.
std::vector<PreferenceProfile> generate_profiles(std::span<const std::size_t> pool, const SimConfig& cfg,
                                                 std::uint64_t seed);

/// base + delta * |liked in item| - delta * |disliked in item|, unclamped.
double generative_rating(const PreferenceProfile& profile, const MetadataMatrix& meta, std::size_t item,
                         const SimConfig& cfg);

struct SimulatedRatings {
    RatingsMatrix ratings;
    std::vector<std::size_t> user_profile;  // profile index of each user
};

/// Assigns profiles round-robin then uniformly, and has every user rate
/// ratings_per_user distinct uniformly drawn items with the clamped
/// generative rating.
SimulatedRatings simulate_ratings(std::span<const PreferenceProfile> profiles, const MetadataMatrix& meta,
                                  const SimConfig& cfg, std::uint64_t seed);

/// Rank pool.size() + 1 model reproducing the unclamped generative rule:
/// item rows are pool indicators plus a constant 1, user rows carry
/// +/-delta on liked/disliked pool features and base_rating on the constant.
FactorModel direct_encode_model(std::span<const PreferenceProfile> profiles,
                                std::span<const std::size_t> user_profile, const MetadataMatrix& meta,
                                std::span<const std::size_t> pool, const SimConfig& cfg);

enum class Ranking { Signed, Magnitude };

const char* to_string(Ranking ranking) noexcept;
Ranking parse_ranking(const std::string& text);

/// Mean influence of the true features over the mean of the n largest
/// influences (n = true_features.size()), clamped to [0, 1]. Values are raw
/// influences under Signed and |influence| under Magnitude. Zero when the
/// top-n mean is not positive.
double correctness_score(std::span<const FeatureInfluence> influences, std::span<const std::size_t> true_features,
                         Ranking ranking);

struct ControlMode {
    enum class Kind { SemiRandom, Random };

    Kind kind = Kind::Random;
    double keep_fraction = 0.5;

    static ControlMode semi_random(double keep_fraction = 0.5) { return {Kind::SemiRandom, keep_fraction}; }
    static ControlMode random() { return {Kind::Random, 0.0}; }
};

/// Control profile of the same size. Random redraws every feature and sign;
/// semi-random keeps floor(keep_fraction * size) (at least one) original
/// features with their signs and redraws the rest. Redrawn features come
/// from the pool minus the profile's own features when the pool allows it.
PreferenceProfile control_profile(const PreferenceProfile& profile, std::span<const std::size_t> pool,
                                  const ControlMode& mode, std::uint64_t seed);

struct ItemUniverseConfig {
    std::size_t n_items = 200;
    std::size_t n_features = 40;
    double min_marginal = 0.05;
    double max_marginal = 0.6;
};

/// Seeded binary item metadata: feature f is held independently by each item
/// with a marginal drawn uniformly from [min_marginal, max_marginal].
std::vector<RawItemRecord> generate_item_universe(const ItemUniverseConfig& cfg, std::uint64_t seed);

enum class Condition { True, SemiRandom, Random };

const char* to_string(Condition condition) noexcept;

struct ScoreSample {
    Condition condition = Condition::True;
    std::size_t repetition = 0;
    std::size_t user = 0;
    double score = 0.0;
};

struct ExperimentConfig {
    SimConfig sim;
    AlsConfig als{3, 0.01, 20, 1e-6, 0, 1};
    ShadowSpec shadow = ShadowSpec::linear(1e-3);
    double train_fraction = 0.8;
    std::size_t repetitions = 20;
    double keep_fraction = 0.5;
    Ranking ranking = Ranking::Magnitude;
    bool direct_encode = false;
    ItemUniverseConfig universe;
    MetadataPipeline pipeline;
    std::size_t threads = 1;

    void validate() const;
    /// Short parameter label in the style "N=20, 3 pr, rn 3, 15 h.e.f.".
    std::string label() const;
};

struct ComparisonResult {
    WelchResult welch;
    std::optional<double> effect_size;  // absent when the pooled deviation is zero
};

struct ExperimentResult {
    std::vector<ScoreSample> samples;              // repetition, then user, then condition order
    std::vector<double> true_means;                // per repetition
    std::vector<double> semi_random_means;
    std::vector<double> random_means;
    std::optional<ComparisonResult> true_vs_semi;  // absent for degenerate samples
    std::optional<ComparisonResult> semi_vs_random;
    std::optional<ComparisonResult> true_vs_random;
    std::size_t pool_size = 0;
    std::size_t n_features = 0;
};

/// Full pipeline per repetition (simulate, factorise, shadow, explain every
/// user over their rated items, score the three conditions), then Welch tests
/// and effect sizes on the per-repetition condition means. When `metadata`
/// is given it replaces the generated item universe.
ExperimentResult run_hypothesis_experiment(const ExperimentConfig& cfg,
                                           const std::vector<RawItemRecord>* metadata = nullptr);

nlohmann::json experiment_to_json(const ExperimentConfig& cfg, const ExperimentResult& result);

/// Aligned text table: parameters, condition means, p and effect size for
/// true > semi-random and semi-random > random.
std::string experiment_table(const ExperimentConfig& cfg, const ExperimentResult& result);

}  // namespace shadowrec
