#include "shadowrec/influence.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "shadowrec/error.hpp"
#include "shadowrec/rng.hpp"

namespace shadowrec {

namespace {

void check_feature(std::span<const double> x, std::size_t feature) {
    if (feature >= x.size()) {
        throw IndexError("feature index " + std::to_string(feature) + " out of range " + std::to_string(x.size()));
    }
}

}  // namespace

double qii_exact_binary(const RatingFn& rating_fn, std::span<const double> x, std::size_t feature, double marginal) {
    check_feature(x, feature);
    if (x[feature] != 0.0 && x[feature] != 1.0) {
        throw EstimatorMismatchError("feature " + std::to_string(feature) + " has non-binary value " +
                                     std::to_string(x[feature]) + "; use the monte_carlo estimator");
    }
    if (!(marginal >= 0.0 && marginal <= 1.0)) {
        throw DomainError("marginal must lie in [0, 1], got " + std::to_string(marginal));
    }
    std::vector<double> probe(x.begin(), x.end());
    const double base = rating_fn(probe);
    probe[feature] = 1.0;
    const double on = rating_fn(probe);
    probe[feature] = 0.0;
    const double off = rating_fn(probe);
    return base - (marginal * on + (1.0 - marginal) * off);
}

double qii_monte_carlo(const RatingFn& rating_fn, std::span<const double> x, std::size_t feature,
                       std::span<const double> column_values, std::size_t samples, std::uint64_t seed) {
    check_feature(x, feature);
    if (column_values.empty()) {
        throw DomainError("monte carlo QII needs a non-empty value pool");
    }
    if (samples < 1) {
        throw ConfigError("monte carlo QII needs at least one sample");
    }
    std::vector<double> probe(x.begin(), x.end());
    const double base = rating_fn(probe);
    Rng rng(seed);
    double total = 0.0;
    for (std::size_t s = 0; s < samples; ++s) {
        probe[feature] = column_values[uniform_index(rng, column_values.size())];
        total += base - rating_fn(probe);
    }
    return total / static_cast<double>(samples);
}

void InfluenceQuery::validate() const {
    if (items.empty()) {
        throw ConfigError("influence query needs at least one item");
    }
    if (scope == Scope::SingleItem && items.size() != 1) {
        throw ConfigError("single-item influence query must name exactly one item");
    }
    if (estimator.kind == Estimator::Kind::MonteCarlo && estimator.samples < 1) {
        throw ConfigError("monte carlo estimator needs samples >= 1");
    }
}

void sort_influences(std::vector<FeatureInfluence>& influences) {
    std::sort(influences.begin(), influences.end(), [](const FeatureInfluence& a, const FeatureInfluence& b) {
        const double ma = std::abs(a.influence);
        const double mb = std::abs(b.influence);
        if (ma != mb) {
            return ma > mb;
        }
        return a.name < b.name;
    });
}

Matrix factor_influence_basis(const ShadowModel& shadow, const MetadataMatrix& meta, std::size_t item) {
    auto probe = item_attributes(shadow, meta, item);
    const std::size_t k = shadow.rank();
    const std::size_t n_features = probe.size();
    const auto base = factor_outputs(shadow, probe);

    Matrix basis(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(n_features));
    for (std::size_t f = 0; f < n_features; ++f) {
        const double original = probe[f];
        const double p = meta.marginals()[f];
        probe[f] = 1.0;
        const auto on = factor_outputs(shadow, probe);
        probe[f] = 0.0;
        const auto off = factor_outputs(shadow, probe);
        probe[f] = original;
        for (std::size_t j = 0; j < k; ++j) {
            basis(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(f)) = base[j] - (p * on[j] + (1.0 - p) * off[j]);
        }
    }
    return basis;
}

namespace {

std::vector<double> item_influences(const ShadowModel& shadow, const MetadataMatrix& meta, std::size_t user,
                                    std::size_t item, const Estimator& estimator) {
    const std::size_t n_features = shadow.n_features();
    std::vector<double> out(n_features, 0.0);
    if (estimator.kind == Estimator::Kind::ExactBinary) {
        const Matrix basis = factor_influence_basis(shadow, meta, item);
        const auto u = shadow.baseline->user_factors.row(static_cast<Eigen::Index>(user));
        for (std::size_t f = 0; f < n_features; ++f) {
            double total = 0.0;
            for (std::size_t j = 0; j < shadow.rank(); ++j) {
                total += u(static_cast<Eigen::Index>(j)) * basis(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(f));
            }
            out[f] = total;
        }
        return out;
    }

    const auto x = item_attributes(shadow, meta, item);
    const RatingFn rating_fn = [&](std::span<const double> a) { return shadow_predict(shadow, user, a); };
    std::vector<double> column(meta.n_items());
    for (std::size_t f = 0; f < n_features; ++f) {
        std::fill(column.begin(), column.end(), 0.0);
        for (std::size_t row : meta.column(f)) {
            column[row] = 1.0;
        }
        out[f] = qii_monte_carlo(rating_fn, x, f, column, estimator.samples,
                                 derive_seed(derive_seed(estimator.seed, item), f));
    }
    return out;
}

}  // namespace

InfluenceReport explain(const ShadowModel& shadow, const MetadataMatrix& meta, const InfluenceQuery& query,
                        std::size_t top_k) {
    query.validate();
    if (top_k < 1) {
        throw ConfigError("top_k must be >= 1");
    }
    if (query.user >= shadow.baseline->n_users()) {
        throw IndexError("user index " + std::to_string(query.user) + " out of range " +
                         std::to_string(shadow.baseline->n_users()));
    }
    if (meta.n_features() != shadow.n_features()) {
        throw DimensionError("metadata has " + std::to_string(meta.n_features()) + " features, shadow expects " +
                             std::to_string(shadow.n_features()));
    }

    InfluenceReport report;
    report.query = query;
    report.total_features = shadow.n_features();

    std::vector<double> mean(shadow.n_features(), 0.0);
    std::size_t outside_eval = 0;
    for (std::size_t item : query.items) {
        const auto influences = item_influences(shadow, meta, query.user, item, query.estimator);
        for (std::size_t f = 0; f < mean.size(); ++f) {
            mean[f] += influences[f];
        }
        report.shadow_rating += shadow_predict(shadow, query.user, item_attributes(shadow, meta, item));
        if (!shadow.in_eval(item)) {
            ++outside_eval;
        }
    }
    const auto count = static_cast<double>(query.items.size());
    for (auto& value : mean) {
        value /= count;
    }
    report.shadow_rating /= count;
    if (query.scope == InfluenceQuery::Scope::SingleItem) {
        report.baseline_rating = predict_rating(*shadow.baseline, query.user, query.items.front());
    }
    if (outside_eval > 0 && !shadow.eval_is_train) {
        if (query.scope == InfluenceQuery::Scope::SingleItem) {
            const auto& ids = shadow.baseline->item_ids;
            const std::size_t item = query.items.front();
            const std::string label = item < ids.size() ? ids.id(item) : std::to_string(item);
            report.warnings.push_back("item " + label +
                                      " is outside the evaluation set; the explanation may be unreliable");
        } else {
            report.warnings.push_back(std::to_string(outside_eval) + " of " + std::to_string(query.items.size()) +
                                      " items are outside the evaluation set; the explanation may be unreliable");
        }
    }

    report.influences.reserve(mean.size());
    for (std::size_t f = 0; f < mean.size(); ++f) {
        report.influences.push_back({f, shadow.feature_names[f], mean[f]});
    }
    sort_influences(report.influences);
    if (report.influences.size() > top_k) {
        report.influences.resize(top_k);
    }
    return report;
}

nlohmann::json influence_report_to_json(const InfluenceReport& report, const ShadowModel* shadow) {
    using nlohmann::json;
    json query = {
        {"user", report.query.user},
        {"scope", report.query.scope == InfluenceQuery::Scope::SingleItem ? "single_item" : "item_set"},
        {"items", report.query.items},
        {"estimator", report.query.estimator.kind == Estimator::Kind::ExactBinary ? "exact_binary" : "monte_carlo"},
    };
    if (report.query.estimator.kind == Estimator::Kind::MonteCarlo) {
        query["samples"] = report.query.estimator.samples;
        query["seed"] = report.query.estimator.seed;
    }
    if (shadow != nullptr && shadow->baseline) {
        const auto& base = *shadow->baseline;
        if (base.user_ids.size() > report.query.user) {
            query["user_id"] = base.user_ids.id(report.query.user);
        }
        if (base.item_ids.size() == base.n_items()) {
            json ids = json::array();
            for (std::size_t item : report.query.items) {
                ids.push_back(base.item_ids.id(item));
            }
            query["item_ids"] = ids;
        }
    }
    json influences = json::array();
    for (const auto& entry : report.influences) {
        influences.push_back({{"feature", entry.name}, {"influence", entry.influence}});
    }
    json doc = {
        {"query", query},
        {"influences", influences},
        {"total_features", report.total_features},
        {"shadow_rating", report.shadow_rating},
        {"baseline_rating", report.baseline_rating ? json(*report.baseline_rating) : json(nullptr)},
        {"warnings", report.warnings},
    };
    return doc;
}

namespace {

std::string escape_xml(const std::string& text) {
    std::string out;
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

}  // namespace

std::string render_influence_svg(const InfluenceReport& report, std::size_t max_bars) {
    const std::size_t bars = std::min(max_bars, report.influences.size());
    const double label_width = 260.0;
    const double plot_width = 420.0;
    const double bar_height = 22.0;
    const double top = 40.0;
    const double height = top + bar_height * static_cast<double>(bars) + 50.0;
    const double width = label_width + plot_width + 40.0;

    double lo = 0.0;
    double hi = 0.0;
    for (std::size_t i = 0; i < bars; ++i) {
        lo = std::min(lo, report.influences[i].influence);
        hi = std::max(hi, report.influences[i].influence);
    }
    if (hi - lo <= 0.0) {
        hi = lo + 1.0;
    }
    auto x_of = [&](double v) { return label_width + (v - lo) / (hi - lo) * plot_width; };
    const double zero = x_of(0.0);

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(width) + "\" height=\"" + fmt(height) +
           "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg += "  <text x=\"" + fmt(width / 2) + "\" y=\"20\" text-anchor=\"middle\">Feature influence (stars)</text>\n";
    for (std::size_t i = 0; i < bars; ++i) {
        const auto& entry = report.influences[i];
        const double y = top + bar_height * static_cast<double>(i);
        const double x = std::min(zero, x_of(entry.influence));
        const double w = std::abs(x_of(entry.influence) - zero);
        svg += "  <text x=\"" + fmt(label_width - 6) + "\" y=\"" + fmt(y + bar_height * 0.7) +
               "\" text-anchor=\"end\">" + escape_xml(entry.name) + "</text>\n";
        svg += "  <rect class=\"bar\" x=\"" + fmt(x) + "\" y=\"" + fmt(y + 3) + "\" width=\"" + fmt(w) +
               "\" height=\"" + fmt(bar_height - 6) + "\" fill=\"" +
               (entry.influence >= 0 ? "#4878a8" : "#c0504d") + "\"><title>" + escape_xml(entry.name) + ": " +
               fmt(entry.influence) + "</title></rect>\n";
    }
    const double axis_y = top + bar_height * static_cast<double>(bars) + 4;
    svg += "  <line x1=\"" + fmt(label_width) + "\" y1=\"" + fmt(axis_y) + "\" x2=\"" + fmt(label_width + plot_width) +
           "\" y2=\"" + fmt(axis_y) + "\" stroke=\"black\"/>\n";
    svg += "  <line x1=\"" + fmt(zero) + "\" y1=\"" + fmt(top) + "\" x2=\"" + fmt(zero) + "\" y2=\"" + fmt(axis_y) +
           "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        const double v = lo + (hi - lo) * t / 4.0;
        svg += "  <text x=\"" + fmt(x_of(v)) + "\" y=\"" + fmt(axis_y + 16) + "\" text-anchor=\"middle\">" + fmt(v) +
               "</text>\n";
    }
    svg += "  <text x=\"" + fmt(label_width + plot_width / 2) + "\" y=\"" + fmt(axis_y + 34) +
           "\" text-anchor=\"middle\">influence (stars)</text>\n";
    svg += "</svg>\n";
    return svg;
}

}  // namespace shadowrec
