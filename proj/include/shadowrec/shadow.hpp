#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "shadowrec/datamodel.hpp"
#include "shadowrec/regressors.hpp"

namespace shadowrec {

/// Which regressor family predicts the item latent factors.
struct ShadowSpec {
    enum class Kind { Linear, Tree };

    Kind kind = Kind::Tree;
    double ridge = 1e-3;
    TreeParams tree;

    static ShadowSpec linear(double ridge) { return {Kind::Linear, ridge, {}}; }
    static ShadowSpec make_tree(TreeParams params) { return {Kind::Tree, 0.0, params}; }

    void validate() const;
    std::string describe() const;
};

const char* to_string(ShadowSpec::Kind kind) noexcept;
ShadowSpec::Kind parse_shadow_kind(const std::string& text);

struct SplitSpec {
    double train_fraction = 0.8;
    std::uint64_t seed = 7;
};

/// r~_u(a) = sum_j U[u][j] f_j(a): one regressor per item latent factor,
/// recombined with the baseline's user factors.
struct ShadowModel {
    ShadowSpec spec;
    SplitSpec split;
    std::vector<Regressor> predictors;
    std::shared_ptr<const FactorModel> baseline;
    std::vector<std::string> feature_names;
    std::vector<std::size_t> meta_items;   // baseline item index of each metadata row
    std::vector<std::size_t> train_items;  // baseline indices, ascending
    std::vector<std::size_t> eval_items;   // baseline indices, ascending
    bool eval_is_train = false;

    std::size_t rank() const noexcept { return predictors.size(); }
    std::size_t n_features() const noexcept { return feature_names.size(); }

    /// Metadata row of a baseline item, or npos when the item was pruned.
    std::size_t meta_row(std::size_t item) const;
    bool in_eval(std::size_t item) const;
    bool in_train(std::size_t item) const;

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    /// Rebuilds the baseline-item -> metadata-row lookup from meta_items.
    void index_items();

    std::vector<std::size_t> row_of_item;
};

/// Fits f_j on (attribute rows, item_factors column j) over a seeded
/// per-item training split. `meta_items[r]` is the baseline index of
/// metadata row r; an empty span means rows align with baseline items.
ShadowModel train_shadow(std::shared_ptr<const FactorModel> baseline, const MetadataMatrix& meta,
                         std::span<const std::size_t> meta_items, const ShadowSpec& spec,
                         const SplitSpec& split, std::size_t threads = 1);

/// Per-factor outputs f_1(a) .. f_k(a).
std::vector<double> factor_outputs(const ShadowModel& shadow, std::span<const double> a);

double shadow_predict(const ShadowModel& shadow, std::size_t user, std::span<const double> a);

/// Attribute row of a baseline item (throws LookupError if it was pruned).
std::vector<double> item_attributes(const ShadowModel& shadow, const MetadataMatrix& meta, std::size_t item);

struct LatentAgreement {
    std::vector<double> per_factor_mae;
    double mean = 0.0;
};

LatentAgreement latent_agreement(const ShadowModel& shadow, const MetadataMatrix& meta,
                                 std::span<const std::size_t> items);

struct ErrorSummary {
    double mae = 0.0;
    double mse = 0.0;
};

using UserItem = std::pair<std::size_t, std::size_t>;

/// Error of the shadow against the baseline's own predictions (never the
/// ground-truth ratings).
ErrorSummary observational_agreement(const ShadowModel& shadow, const MetadataMatrix& meta,
                                     std::span<const UserItem> pairs);

struct Faithfulness {
    double ratio = 0.0;  // mse_random / max(mse_shadow, epsilon)
    double mse_shadow = 0.0;
    double mse_random = 0.0;
    bool exact = false;  // mse_shadow <= epsilon; ratio is then a capped sentinel

    static constexpr double epsilon = 1e-12;
};

/// Compares the shadow against latent vectors drawn uniformly per factor
/// from the empirical [min, max] of that factor over the metadata items.
Faithfulness faithfulness(const ShadowModel& shadow, const MetadataMatrix& meta,
                          std::span<const UserItem> pairs, std::uint64_t seed);

enum class AgreementScope { Eval, Train, All };

const char* to_string(AgreementScope scope) noexcept;
AgreementScope parse_agreement_scope(const std::string& text);

struct AgreementReport {
    std::vector<double> per_factor_mae;
    double mean_latent_mae = 0.0;
    double observational_mae = 0.0;
    double observational_mse = 0.0;
    Faithfulness faithfulness;
    std::string item_set;  // "eval", "train-set" or "all"
    std::size_t n_items = 0;
    std::size_t n_pairs = 0;
};

/// Items of the requested scope.
std::vector<std::size_t> scope_items(const ShadowModel& shadow, AgreementScope scope);

/// Every (user, item) pair over `items`, uniformly subsampled (seeded) to at
/// most `max_pairs` when larger.
std::vector<UserItem> all_pairs(std::size_t n_users, std::span<const std::size_t> items,
                                std::size_t max_pairs, std::uint64_t seed);

AgreementReport measure_agreement(const ShadowModel& shadow, const MetadataMatrix& meta, AgreementScope scope,
                                  std::uint64_t seed, std::size_t max_pairs = 200000);

void save_shadow_model(const ShadowModel& shadow, const std::filesystem::path& path);
ShadowModel load_shadow_model(const std::filesystem::path& path);

}  // namespace shadowrec
