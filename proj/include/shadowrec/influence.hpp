#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "shadowrec/datamodel.hpp"
#include "shadowrec/shadow.hpp"

namespace shadowrec {

/// A side-effect-free model evaluated on an attribute vector.
using RatingFn = std::function<double(std::span<const double>)>;

/// Unary QII with the feature resampled from its Bernoulli marginal, in
/// closed form: m(x) - [p m(x_i=1) + (1-p) m(x_i=0)].
double qii_exact_binary(const RatingFn& rating_fn, std::span<const double> x, std::size_t feature, double marginal);

/// Unary QII estimated from `samples` seeded draws of the feature value from
/// the empirical pool `column_values`.
double qii_monte_carlo(const RatingFn& rating_fn, std::span<const double> x, std::size_t feature,
                       std::span<const double> column_values, std::size_t samples, std::uint64_t seed);

struct Estimator {
    enum class Kind { ExactBinary, MonteCarlo };

    Kind kind = Kind::ExactBinary;
    std::size_t samples = 1000;
    std::uint64_t seed = 0;

    static Estimator exact() { return {}; }
    static Estimator monte_carlo(std::size_t samples, std::uint64_t seed) { return {Kind::MonteCarlo, samples, seed}; }
};

struct InfluenceQuery {
    enum class Scope { SingleItem, ItemSet };

    std::size_t user = 0;
    Scope scope = Scope::SingleItem;
    std::vector<std::size_t> items;  // exactly one for SingleItem
    Estimator estimator;

    static InfluenceQuery single(std::size_t user, std::size_t item, Estimator estimator = {}) {
        return {user, Scope::SingleItem, {item}, estimator};
    }
    static InfluenceQuery item_set(std::size_t user, std::vector<std::size_t> items, Estimator estimator = {}) {
        return {user, Scope::ItemSet, std::move(items), estimator};
    }

    void validate() const;
};

struct FeatureInfluence {
    std::size_t feature = 0;
    std::string name;
    double influence = 0.0;  // in rating units (stars)
};

struct InfluenceReport {
    InfluenceQuery query;
    std::vector<FeatureInfluence> influences;  // by descending |influence|, then name
    std::size_t total_features = 0;            // before truncation
    double shadow_rating = 0.0;                // mean over the scope's items
    std::optional<double> baseline_rating;     // single-item scope only
    std::vector<std::string> warnings;
};

/// Orders entries by descending |influence|, ties by ascending name.
void sort_influences(std::vector<FeatureInfluence>& influences);

/// k x F matrix whose (j, f) entry is the exact-binary QII of feature f on
/// factor predictor f_j at the item's attributes. Because the shadow is
/// linear in the user factors, a user's influence vector is U[u] times this.
Matrix factor_influence_basis(const ShadowModel& shadow, const MetadataMatrix& meta, std::size_t item);

/// QII of every metadata feature on the shadow rating for the query. Single
/// items use the item's attribute row; item sets average per-item
/// influences. The result is truncated to `top_k` after sorting.
InfluenceReport explain(const ShadowModel& shadow, const MetadataMatrix& meta, const InfluenceQuery& query,
                        std::size_t top_k);

nlohmann::json influence_report_to_json(const InfluenceReport& report, const ShadowModel* shadow = nullptr);

/// Horizontal bar chart: feature names on the y axis, influence in stars on
/// the x axis. One <rect class="bar"> per listed feature.
std::string render_influence_svg(const InfluenceReport& report, std::size_t max_bars = 10);

}  // namespace shadowrec
