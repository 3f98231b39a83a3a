#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "shadowrec/datamodel.hpp"

namespace shadowrec {

struct LinearRegressor {
    std::vector<double> weights;
    double intercept = 0.0;
    double ridge = 0.0;

    double predict(std::span<const double> a) const;

    friend bool operator==(const LinearRegressor&, const LinearRegressor&) = default;
};

struct TreeParams {
    std::size_t max_depth = 5;
    std::size_t bins = 32;
    std::size_t min_leaf = 1;

    void validate() const;

    friend bool operator==(const TreeParams&, const TreeParams&) = default;
};

/// Binary regression tree. Internal nodes route left iff a[feature] <= threshold.
class RegressionTree {
public:
    struct Node {
        static constexpr std::size_t leaf = static_cast<std::size_t>(-1);

        std::size_t feature = leaf;
        double threshold = 0.0;
        double value = 0.0;  // mean training target; meaningful on leaves
        std::size_t left = 0;
        std::size_t right = 0;

        bool is_leaf() const noexcept { return feature == leaf; }
        friend bool operator==(const Node&, const Node&) = default;
    };

    RegressionTree() = default;
    RegressionTree(std::vector<Node> nodes, TreeParams params, std::size_t n_features);

    /// A depth-0 tree predicting `value`.
    static RegressionTree constant(double value, std::size_t n_features, TreeParams params = {});

    double predict(std::span<const double> a) const;

    const std::vector<Node>& nodes() const noexcept { return nodes_; }
    const TreeParams& params() const noexcept { return params_; }
    std::size_t n_features() const noexcept { return n_features_; }
    std::size_t depth() const;
    std::size_t leaf_count() const;

    friend bool operator==(const RegressionTree&, const RegressionTree&) = default;

private:
    std::vector<Node> nodes_;  // nodes_[0] is the root
    TreeParams params_;
    std::size_t n_features_ = 0;
};

using Regressor = std::variant<LinearRegressor, RegressionTree>;

/// Ridge regression with an unpenalised intercept, solved from the normal
/// equations of the intercept-augmented system.
LinearRegressor fit_linear(const Matrix& X, std::span<const double> y, double ridge);

/// Greedy CART on quantile-binned thresholds, maximising variance reduction.
RegressionTree fit_tree(const Matrix& X, std::span<const double> y, const TreeParams& params);

double predict(const Regressor& regressor, std::span<const double> a);
std::size_t feature_count(const Regressor& regressor);

/// Candidate split thresholds for one feature column: midpoints between
/// adjacent distinct values, reduced to at most bins-1 equal-frequency cuts.
std::vector<double> candidate_thresholds(std::span<const double> column, std::size_t bins);

}  // namespace shadowrec
