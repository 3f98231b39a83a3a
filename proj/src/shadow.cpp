#include "shadowrec/shadow.hpp"

#include <algorithm>
#include <cmath>

#include "shadowrec/error.hpp"
#include "shadowrec/parallel.hpp"
#include "shadowrec/rng.hpp"
#include "shadowrec/serialize.hpp"

namespace shadowrec {

void ShadowSpec::validate() const {
    if (kind == Kind::Linear) {
        if (!(ridge >= 0.0) || !std::isfinite(ridge)) {
            throw ConfigError("shadow ridge must be a finite value >= 0");
        }
    } else {
        tree.validate();
    }
}

std::string ShadowSpec::describe() const {
    if (kind == Kind::Linear) {
        return "linear(ridge=" + std::to_string(ridge) + ")";
    }
    return "tree(depth=" + std::to_string(tree.max_depth) + ", bins=" + std::to_string(tree.bins) +
           ", min_leaf=" + std::to_string(tree.min_leaf) + ")";
}

const char* to_string(ShadowSpec::Kind kind) noexcept {
    return kind == ShadowSpec::Kind::Linear ? "linear" : "tree";
}

ShadowSpec::Kind parse_shadow_kind(const std::string& text) {
    if (text == "linear") {
        return ShadowSpec::Kind::Linear;
    }
    if (text == "tree") {
        return ShadowSpec::Kind::Tree;
    }
    throw ConfigError("unknown shadow kind '" + text + "' (expected linear or tree)");
}

const char* to_string(AgreementScope scope) noexcept {
    switch (scope) {
        case AgreementScope::Eval: return "eval";
        case AgreementScope::Train: return "train";
        case AgreementScope::All: return "all";
    }
    return "eval";
}

AgreementScope parse_agreement_scope(const std::string& text) {
    if (text == "eval") {
        return AgreementScope::Eval;
    }
    if (text == "train") {
        return AgreementScope::Train;
    }
    if (text == "all") {
        return AgreementScope::All;
    }
    throw ConfigError("unknown agreement scope '" + text + "' (expected eval, train or all)");
}

// ------------------------------------------------------------------ ShadowModel

void ShadowModel::index_items() {
    const std::size_t n_items = baseline ? baseline->n_items() : 0;
    row_of_item.assign(n_items, npos);
    for (std::size_t row = 0; row < meta_items.size(); ++row) {
        if (meta_items[row] >= n_items) {
            throw IndexError("metadata row " + std::to_string(row) + " maps to item " +
                             std::to_string(meta_items[row]) + " outside the baseline");
        }
        row_of_item[meta_items[row]] = row;
    }
}

std::size_t ShadowModel::meta_row(std::size_t item) const {
    return item < row_of_item.size() ? row_of_item[item] : npos;
}

bool ShadowModel::in_eval(std::size_t item) const {
    return std::binary_search(eval_items.begin(), eval_items.end(), item);
}

bool ShadowModel::in_train(std::size_t item) const {
    return std::binary_search(train_items.begin(), train_items.end(), item);
}

ShadowModel train_shadow(std::shared_ptr<const FactorModel> baseline, const MetadataMatrix& meta,
                         std::span<const std::size_t> meta_items, const ShadowSpec& spec,
                         const SplitSpec& split, std::size_t threads) {
    if (!baseline) {
        throw ValidationError("shadow model needs a baseline factor model");
    }
    spec.validate();
    if (!(split.train_fraction > 0.0 && split.train_fraction <= 1.0)) {
        throw ConfigError("train_fraction must lie in (0, 1]");
    }

    ShadowModel shadow;
    shadow.spec = spec;
    shadow.split = split;
    shadow.baseline = baseline;
    shadow.feature_names = meta.feature_names();
    if (meta_items.empty()) {
        if (meta.n_items() != baseline->n_items()) {
            throw DimensionError("metadata has " + std::to_string(meta.n_items()) + " items, baseline has " +
                                 std::to_string(baseline->n_items()));
        }
        shadow.meta_items.resize(meta.n_items());
        for (std::size_t i = 0; i < meta.n_items(); ++i) {
            shadow.meta_items[i] = i;
        }
    } else {
        if (meta_items.size() != meta.n_items()) {
            throw DimensionError("item map length does not match metadata rows");
        }
        shadow.meta_items.assign(meta_items.begin(), meta_items.end());
    }
    shadow.index_items();

    // Seeded per-item split over the metadata rows.
    const std::size_t n = meta.n_items();
    std::vector<std::size_t> order(n);
    for (std::size_t r = 0; r < n; ++r) {
        order[r] = r;
    }
    Rng rng(split.seed);
    for (std::size_t i = n; i > 1; --i) {
        std::swap(order[i - 1], order[uniform_index(rng, i)]);
    }
    const auto n_train = std::min<std::size_t>(
        n, static_cast<std::size_t>(std::floor(split.train_fraction * static_cast<double>(n) + 0.5)));
    if (n_train < 2) {
        throw InsufficientDataError("shadow training needs at least 2 training items, split gives " +
                                    std::to_string(n_train));
    }
    std::vector<std::size_t> train_rows(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<std::size_t> eval_rows(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    std::sort(train_rows.begin(), train_rows.end());
    std::sort(eval_rows.begin(), eval_rows.end());
    if (eval_rows.empty()) {
        eval_rows = train_rows;
        shadow.eval_is_train = true;
    }
    for (std::size_t r : train_rows) {
        shadow.train_items.push_back(shadow.meta_items[r]);
    }
    for (std::size_t r : eval_rows) {
        shadow.eval_items.push_back(shadow.meta_items[r]);
    }
    std::sort(shadow.train_items.begin(), shadow.train_items.end());
    std::sort(shadow.eval_items.begin(), shadow.eval_items.end());

    Matrix X = Matrix::Zero(static_cast<Eigen::Index>(n_train), static_cast<Eigen::Index>(meta.n_features()));
    for (std::size_t s = 0; s < n_train; ++s) {
        for (std::size_t f : meta.item_features(train_rows[s])) {
            X(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(f)) = 1.0;
        }
    }

    const std::size_t k = baseline->rank;
    shadow.predictors.resize(k);
    parallel_for(k, threads, [&](std::size_t j) {
        std::vector<double> target(n_train);
        for (std::size_t s = 0; s < n_train; ++s) {
            target[s] = baseline->item_factors(static_cast<Eigen::Index>(shadow.meta_items[train_rows[s]]),
                                               static_cast<Eigen::Index>(j));
        }
        if (spec.kind == ShadowSpec::Kind::Linear) {
            shadow.predictors[j] = fit_linear(X, target, spec.ridge);
        } else {
            shadow.predictors[j] = fit_tree(X, target, spec.tree);
        }
    });
    return shadow;
}

std::vector<double> factor_outputs(const ShadowModel& shadow, std::span<const double> a) {
    if (a.size() != shadow.n_features()) {
        throw DimensionError("attribute vector has length " + std::to_string(a.size()) + ", shadow expects " +
                             std::to_string(shadow.n_features()));
    }
    std::vector<double> out(shadow.rank());
    for (std::size_t j = 0; j < shadow.rank(); ++j) {
        out[j] = predict(shadow.predictors[j], a);
    }
    return out;
}

double shadow_predict(const ShadowModel& shadow, std::size_t user, std::span<const double> a) {
    if (user >= shadow.baseline->n_users()) {
        throw IndexError("user index " + std::to_string(user) + " out of range " +
                         std::to_string(shadow.baseline->n_users()));
    }
    const auto outputs = factor_outputs(shadow, a);
    const auto u = shadow.baseline->user_factors.row(static_cast<Eigen::Index>(user));
    double total = 0.0;
    for (std::size_t j = 0; j < outputs.size(); ++j) {
        total += u(static_cast<Eigen::Index>(j)) * outputs[j];
    }
    return total;
}

std::vector<double> item_attributes(const ShadowModel& shadow, const MetadataMatrix& meta, std::size_t item) {
    if (shadow.baseline && item >= shadow.baseline->n_items()) {
        throw IndexError("item index " + std::to_string(item) + " out of range " +
                         std::to_string(shadow.baseline->n_items()));
    }
    const std::size_t row = shadow.meta_row(item);
    if (row == ShadowModel::npos) {
        throw LookupError("item " + std::to_string(item) + " has no usable metadata (pruned)");
    }
    if (meta.n_features() != shadow.n_features()) {
        throw DimensionError("metadata has " + std::to_string(meta.n_features()) + " features, shadow expects " +
                             std::to_string(shadow.n_features()));
    }
    return dense_attribute_row(meta, row);
}

LatentAgreement latent_agreement(const ShadowModel& shadow, const MetadataMatrix& meta,
                                 std::span<const std::size_t> items) {
    if (items.empty()) {
        throw DomainError("latent agreement over an empty item set");
    }
    LatentAgreement out;
    out.per_factor_mae.assign(shadow.rank(), 0.0);
    for (std::size_t item : items) {
        const auto outputs = factor_outputs(shadow, item_attributes(shadow, meta, item));
        for (std::size_t j = 0; j < outputs.size(); ++j) {
            out.per_factor_mae[j] += std::abs(
                outputs[j] - shadow.baseline->item_factors(static_cast<Eigen::Index>(item), static_cast<Eigen::Index>(j)));
        }
    }
    double total = 0.0;
    for (auto& mae : out.per_factor_mae) {
        mae /= static_cast<double>(items.size());
        total += mae;
    }
    out.mean = out.per_factor_mae.empty() ? 0.0 : total / static_cast<double>(out.per_factor_mae.size());
    return out;
}

namespace {

// Shadow latent vector of every distinct item in `pairs`, computed once.
std::vector<std::vector<double>> latent_cache(const ShadowModel& shadow, const MetadataMatrix& meta,
                                              std::span<const UserItem> pairs) {
    std::vector<std::vector<double>> cache(shadow.baseline->n_items());
    for (const auto& [user, item] : pairs) {
        if (item >= cache.size()) {
            throw IndexError("item index " + std::to_string(item) + " out of range");
        }
        if (cache[item].empty()) {
            cache[item] = factor_outputs(shadow, item_attributes(shadow, meta, item));
        }
    }
    return cache;
}

double dot_user(const FactorModel& model, std::size_t user, const std::vector<double>& latent) {
    if (user >= model.n_users()) {
        throw IndexError("user index " + std::to_string(user) + " out of range " + std::to_string(model.n_users()));
    }
    double total = 0.0;
    for (std::size_t j = 0; j < latent.size(); ++j) {
        total += model.user_factors(static_cast<Eigen::Index>(user), static_cast<Eigen::Index>(j)) * latent[j];
    }
    return total;
}

}  // namespace

ErrorSummary observational_agreement(const ShadowModel& shadow, const MetadataMatrix& meta,
                                     std::span<const UserItem> pairs) {
    if (pairs.empty()) {
        throw DomainError("observational agreement over an empty pair set");
    }
    const auto cache = latent_cache(shadow, meta, pairs);
    ErrorSummary out;
    for (const auto& [user, item] : pairs) {
        const double residual = predict_rating(*shadow.baseline, user, item) - dot_user(*shadow.baseline, user, cache[item]);
        out.mae += std::abs(residual);
        out.mse += residual * residual;
    }
    out.mae /= static_cast<double>(pairs.size());
    out.mse /= static_cast<double>(pairs.size());
    return out;
}

Faithfulness faithfulness(const ShadowModel& shadow, const MetadataMatrix& meta, std::span<const UserItem> pairs,
                          std::uint64_t seed) {
    if (pairs.empty()) {
        throw DomainError("faithfulness over an empty pair set");
    }
    const FactorModel& base = *shadow.baseline;
    const std::size_t k = base.rank;

    std::vector<double> lo(k, INFINITY);
    std::vector<double> hi(k, -INFINITY);
    for (std::size_t item : shadow.meta_items) {
        for (std::size_t j = 0; j < k; ++j) {
            const double v = base.item_factors(static_cast<Eigen::Index>(item), static_cast<Eigen::Index>(j));
            lo[j] = std::min(lo[j], v);
            hi[j] = std::max(hi[j], v);
        }
    }

    // One random latent vector per item, drawn in ascending item order.
    const auto cache = latent_cache(shadow, meta, pairs);
    std::vector<std::vector<double>> random(base.n_items());
    Rng rng(seed);
    for (std::size_t item = 0; item < cache.size(); ++item) {
        if (cache[item].empty()) {
            continue;
        }
        random[item].resize(k);
        for (std::size_t j = 0; j < k; ++j) {
            random[item][j] = uniform_real(rng, lo[j], hi[j]);
        }
    }

    Faithfulness out;
    for (const auto& [user, item] : pairs) {
        const double truth = predict_rating(base, user, item);
        const double s = truth - dot_user(base, user, cache[item]);
        const double r = truth - dot_user(base, user, random[item]);
        out.mse_shadow += s * s;
        out.mse_random += r * r;
    }
    out.mse_shadow /= static_cast<double>(pairs.size());
    out.mse_random /= static_cast<double>(pairs.size());
    out.exact = out.mse_shadow <= Faithfulness::epsilon;
    out.ratio = out.mse_random / std::max(out.mse_shadow, Faithfulness::epsilon);
    return out;
}

std::vector<std::size_t> scope_items(const ShadowModel& shadow, AgreementScope scope) {
    switch (scope) {
        case AgreementScope::Eval: return shadow.eval_items;
        case AgreementScope::Train: return shadow.train_items;
        case AgreementScope::All: {
            std::vector<std::size_t> all = shadow.meta_items;
            std::sort(all.begin(), all.end());
            return all;
        }
    }
    return shadow.eval_items;
}

std::vector<UserItem> all_pairs(std::size_t n_users, std::span<const std::size_t> items, std::size_t max_pairs,
                                std::uint64_t seed) {
    std::vector<UserItem> pairs;
    pairs.reserve(n_users * items.size());
    for (std::size_t user = 0; user < n_users; ++user) {
        for (std::size_t item : items) {
            pairs.emplace_back(user, item);
        }
    }
    if (max_pairs > 0 && pairs.size() > max_pairs) {
        Rng rng(seed);
        for (std::size_t i = 0; i < max_pairs; ++i) {
            std::swap(pairs[i], pairs[i + uniform_index(rng, pairs.size() - i)]);
        }
        pairs.resize(max_pairs);
        std::sort(pairs.begin(), pairs.end());
    }
    return pairs;
}

AgreementReport measure_agreement(const ShadowModel& shadow, const MetadataMatrix& meta, AgreementScope scope,
                                  std::uint64_t seed, std::size_t max_pairs) {
    const auto items = scope_items(shadow, scope);
    const auto pairs = all_pairs(shadow.baseline->n_users(), items, max_pairs, derive_seed(seed, 1));

    AgreementReport report;
    const auto latent = latent_agreement(shadow, meta, items);
    report.per_factor_mae = latent.per_factor_mae;
    report.mean_latent_mae = latent.mean;
    const auto observed = observational_agreement(shadow, meta, pairs);
    report.observational_mae = observed.mae;
    report.observational_mse = observed.mse;
    report.faithfulness = faithfulness(shadow, meta, pairs, derive_seed(seed, 2));
    if (scope == AgreementScope::Train || (scope == AgreementScope::Eval && shadow.eval_is_train)) {
        report.item_set = "train-set";
    } else {
        report.item_set = to_string(scope);
    }
    report.n_items = items.size();
    report.n_pairs = pairs.size();
    return report;
}

void save_shadow_model(const ShadowModel& shadow, const std::filesystem::path& path) {
    write_json_file(path, shadow_model_to_json(shadow));
}

ShadowModel load_shadow_model(const std::filesystem::path& path) {
    return shadow_model_from_json(read_json_file(path));
}

}  // namespace shadowrec
