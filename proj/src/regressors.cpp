#include "shadowrec/regressors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "shadowrec/error.hpp"

namespace shadowrec {

namespace {

void check_length(std::size_t got, std::size_t expected) {
    if (got != expected) {
        throw DimensionError("attribute vector has length " + std::to_string(got) + ", regressor expects " +
                             std::to_string(expected));
    }
}

void check_training_shape(const Matrix& X, std::span<const double> y) {
    if (X.rows() < 1 || static_cast<std::size_t>(X.rows()) != y.size()) {
        throw DimensionError("training matrix has " + std::to_string(X.rows()) + " rows for " +
                             std::to_string(y.size()) + " targets");
    }
}

}  // namespace

// ----------------------------------------------------------------------- linear

double LinearRegressor::predict(std::span<const double> a) const {
    check_length(a.size(), weights.size());
    double out = intercept;
    for (std::size_t f = 0; f < a.size(); ++f) {
        out += weights[f] * a[f];
    }
    return out;
}

LinearRegressor fit_linear(const Matrix& X, std::span<const double> y, double ridge) {
    check_training_shape(X, y);
    if (!(ridge >= 0.0) || !std::isfinite(ridge)) {
        throw ConfigError("ridge must be a finite value >= 0");
    }
    const Eigen::Index n = X.rows();
    const Eigen::Index p = X.cols();
    const Eigen::Map<const Eigen::VectorXd> target(y.data(), n);

    // [X 1]^T [X 1] with ridge on the weight block only.
    Eigen::MatrixXd normal(p + 1, p + 1);
    normal.topLeftCorner(p, p) = X.transpose() * X;
    normal.topLeftCorner(p, p).diagonal().array() += ridge;
    const Eigen::VectorXd column_sums = X.colwise().sum().transpose();
    normal.topRightCorner(p, 1) = column_sums;
    normal.bottomLeftCorner(1, p) = column_sums.transpose();
    normal(p, p) = static_cast<double>(n);

    Eigen::VectorXd rhs(p + 1);
    rhs.head(p) = X.transpose() * target;
    rhs(p) = target.sum();

    Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
    const auto& pivots = ldlt.vectorD();
    const double largest = pivots.cwiseAbs().maxCoeff();
    if (ldlt.info() != Eigen::Success || pivots.minCoeff() <= 1e-12 * std::max(1.0, largest)) {
        throw SolverError("linear regression normal equations are singular; use ridge > 0");
    }
    const Eigen::VectorXd solution = ldlt.solve(rhs);
    if (!solution.allFinite()) {
        throw SolverError("linear regression produced non-finite weights; use ridge > 0");
    }

    LinearRegressor model;
    model.weights.assign(solution.data(), solution.data() + p);
    model.intercept = solution(p);
    model.ridge = ridge;
    return model;
}

// ------------------------------------------------------------------------- tree

void TreeParams::validate() const {
    if (bins < 2) {
        throw ConfigError("tree bins must be >= 2");
    }
    if (min_leaf < 1) {
        throw ConfigError("tree min_leaf must be >= 1");
    }
}

RegressionTree::RegressionTree(std::vector<Node> nodes, TreeParams params, std::size_t n_features)
    : nodes_(std::move(nodes)), params_(params), n_features_(n_features) {
    if (nodes_.empty()) {
        throw ValidationError("regression tree needs at least one node");
    }
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const auto& node = nodes_[i];
        if (node.is_leaf()) {
            continue;
        }
        if (node.feature >= n_features_ || node.left <= i || node.right <= i || node.left >= nodes_.size() ||
            node.right >= nodes_.size()) {
            throw ValidationError("malformed regression tree node " + std::to_string(i));
        }
    }
}

RegressionTree RegressionTree::constant(double value, std::size_t n_features, TreeParams params) {
    Node leaf;
    leaf.value = value;
    return RegressionTree({leaf}, params, n_features);
}

double RegressionTree::predict(std::span<const double> a) const {
    check_length(a.size(), n_features_);
    std::size_t at = 0;
    while (!nodes_[at].is_leaf()) {
        const auto& node = nodes_[at];
        at = a[node.feature] <= node.threshold ? node.left : node.right;
    }
    return nodes_[at].value;
}

std::size_t RegressionTree::depth() const {
    std::vector<std::size_t> level(nodes_.size(), 0);
    std::size_t deepest = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        deepest = std::max(deepest, level[i]);
        if (!nodes_[i].is_leaf()) {
            level[nodes_[i].left] = level[i] + 1;
            level[nodes_[i].right] = level[i] + 1;
        }
    }
    return deepest;
}

std::size_t RegressionTree::leaf_count() const {
    return static_cast<std::size_t>(
        std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.is_leaf(); }));
}

std::vector<double> candidate_thresholds(std::span<const double> column, std::size_t bins) {
    std::vector<double> sorted(column.begin(), column.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> distinct = sorted;
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

    std::vector<double> thresholds;
    if (distinct.size() < 2) {
        return thresholds;
    }
    auto midpoint_above = [&](double boundary) {
        const auto next = std::upper_bound(distinct.begin(), distinct.end(), boundary);
        return next == distinct.end() ? NAN : 0.5 * (boundary + *next);
    };
    if (distinct.size() <= bins) {
        for (std::size_t t = 0; t + 1 < distinct.size(); ++t) {
            thresholds.push_back(0.5 * (distinct[t] + distinct[t + 1]));
        }
        return thresholds;
    }
    const std::size_t n = sorted.size();
    for (std::size_t q = 1; q < bins; ++q) {
        const double boundary = sorted[std::min(n - 1, q * n / bins)];
        const double threshold = midpoint_above(boundary);
        if (!std::isnan(threshold)) {
            thresholds.push_back(threshold);
        }
    }
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    return thresholds;
}

namespace {

class TreeBuilder {
public:
    TreeBuilder(const Matrix& X, std::span<const double> y, const TreeParams& params)
        : y_(y), params_(params), n_features_(static_cast<std::size_t>(X.cols())) {
        const std::size_t n = y.size();
        thresholds_.resize(n_features_);
        bin_of_.assign(n_features_, std::vector<std::size_t>(n));
        std::vector<double> column(n);
        for (std::size_t f = 0; f < n_features_; ++f) {
            for (std::size_t s = 0; s < n; ++s) {
                column[s] = X(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(f));
            }
            thresholds_[f] = candidate_thresholds(column, params.bins);
            const auto& cuts = thresholds_[f];
            for (std::size_t s = 0; s < n; ++s) {
                bin_of_[f][s] = static_cast<std::size_t>(std::lower_bound(cuts.begin(), cuts.end(), column[s]) -
                                                         cuts.begin());
            }
        }
    }

    RegressionTree build() {
        std::vector<std::size_t> all(y_.size());
        std::iota(all.begin(), all.end(), 0);
        nodes_.clear();
        grow(all, 0);
        return RegressionTree(std::move(nodes_), params_, n_features_);
    }

private:
    struct Split {
        std::size_t feature = RegressionTree::Node::leaf;
        std::size_t cut = 0;
        double gain = -1.0;
    };

    std::size_t grow(const std::vector<std::size_t>& samples, std::size_t depth) {
        const std::size_t id = nodes_.size();
        nodes_.emplace_back();

        double sum = 0.0;
        double lo = INFINITY;
        double hi = -INFINITY;
        for (std::size_t s : samples) {
            sum += y_[s];
            lo = std::min(lo, y_[s]);
            hi = std::max(hi, y_[s]);
        }
        nodes_[id].value = sum / static_cast<double>(samples.size());

        if (depth >= params_.max_depth || samples.size() < 2 * params_.min_leaf || lo == hi) {
            return id;
        }
        const Split best = find_split(samples, sum);
        if (best.feature == RegressionTree::Node::leaf) {
            return id;
        }

        std::vector<std::size_t> left;
        std::vector<std::size_t> right;
        for (std::size_t s : samples) {
            (bin_of_[best.feature][s] <= best.cut ? left : right).push_back(s);
        }
        nodes_[id].feature = best.feature;
        nodes_[id].threshold = thresholds_[best.feature][best.cut];
        const std::size_t left_id = grow(left, depth + 1);
        const std::size_t right_id = grow(right, depth + 1);
        nodes_[id].left = left_id;
        nodes_[id].right = right_id;
        return id;
    }

    Split find_split(const std::vector<std::size_t>& samples, double total_sum) const {
        const double n = static_cast<double>(samples.size());
        const double parent_term = total_sum * total_sum / n;
        double sse = 0.0;
        for (std::size_t s : samples) {
            const double d = y_[s] - total_sum / n;
            sse += d * d;
        }
        const double tie_tol = 1e-12 * std::max(1.0, sse);

        Split best;
        std::vector<double> bin_sum;
        std::vector<std::size_t> bin_count;
        for (std::size_t f = 0; f < n_features_; ++f) {
            const auto& cuts = thresholds_[f];
            if (cuts.empty()) {
                continue;
            }
            bin_sum.assign(cuts.size() + 1, 0.0);
            bin_count.assign(cuts.size() + 1, 0);
            for (std::size_t s : samples) {
                bin_sum[bin_of_[f][s]] += y_[s];
                ++bin_count[bin_of_[f][s]];
            }
            double left_sum = 0.0;
            std::size_t left_count = 0;
            for (std::size_t t = 0; t < cuts.size(); ++t) {
                left_sum += bin_sum[t];
                left_count += bin_count[t];
                const std::size_t right_count = samples.size() - left_count;
                if (left_count < params_.min_leaf || right_count < params_.min_leaf) {
                    continue;
                }
                const double right_sum = total_sum - left_sum;
                const double gain = left_sum * left_sum / static_cast<double>(left_count) +
                                    right_sum * right_sum / static_cast<double>(right_count) - parent_term;
                if (best.feature == RegressionTree::Node::leaf || gain > best.gain + tie_tol) {
                    best = {f, t, gain};
                }
            }
        }
        return best;
    }

    std::span<const double> y_;
    TreeParams params_;
    std::size_t n_features_;
    std::vector<std::vector<double>> thresholds_;
    std::vector<std::vector<std::size_t>> bin_of_;
    std::vector<RegressionTree::Node> nodes_;
};

}  // namespace

RegressionTree fit_tree(const Matrix& X, std::span<const double> y, const TreeParams& params) {
    params.validate();
    check_training_shape(X, y);
    return TreeBuilder(X, y, params).build();
}

// ---------------------------------------------------------------------- variant

double predict(const Regressor& regressor, std::span<const double> a) {
    return std::visit([&](const auto& r) { return r.predict(a); }, regressor);
}

std::size_t feature_count(const Regressor& regressor) {
    if (const auto* linear = std::get_if<LinearRegressor>(&regressor)) {
        return linear->weights.size();
    }
    return std::get<RegressionTree>(regressor).n_features();
}

}  // namespace shadowrec
