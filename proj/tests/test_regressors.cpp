#include <cmath>

#include "doctest.h"

#include "fixtures.hpp"
#include "shadowrec/error.hpp"
#include "shadowrec/regressors.hpp"

using namespace shadowrec;

namespace {

Matrix random_design(std::size_t n, std::size_t p, std::uint64_t seed, bool binary) {
    Rng rng(seed);
    Matrix X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
        for (Eigen::Index c = 0; c < X.cols(); ++c) {
            X(r, c) = binary ? (coin_flip(rng) ? 1.0 : 0.0) : uniform_real(rng, -2, 2);
        }
    }
    return X;
}

std::vector<double> row(const Matrix& X, Eigen::Index r) {
    return std::vector<double>(X.row(r).data(), X.row(r).data() + X.cols());
}

double sse_of(const std::vector<double>& values) {
    if (values.empty()) {
        return 0.0;
    }
    double m = 0.0;
    for (double v : values) {
        m += v;
    }
    m /= static_cast<double>(values.size());
    double s = 0.0;
    for (double v : values) {
        s += (v - m) * (v - m);
    }
    return s;
}

}  // namespace

TEST_CASE("ridge regression matches an augmented least-squares oracle") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Matrix X = random_design(40, 6, seed, false);
        Rng rng(seed * 31);
        std::vector<double> y(40);
        for (auto& v : y) {
            v = uniform_real(rng, -3, 3);
        }
        const double ridge = 0.1 * static_cast<double>(seed);
        const auto fit = fit_linear(X, y, ridge);

        // Oracle: QR on [X 1; sqrt(ridge) I 0] against [y; 0].
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(46, 7);
        Eigen::VectorXd b = Eigen::VectorXd::Zero(46);
        A.topLeftCorner(40, 6) = X;
        A.block(0, 6, 40, 1).setOnes();
        A.block(40, 0, 6, 6) = std::sqrt(ridge) * Eigen::MatrixXd::Identity(6, 6);
        for (int i = 0; i < 40; ++i) {
            b(i) = y[static_cast<std::size_t>(i)];
        }
        const Eigen::VectorXd beta = A.colPivHouseholderQr().solve(b);
        for (int f = 0; f < 6; ++f) {
            CHECK(fit.weights[static_cast<std::size_t>(f)] == doctest::Approx(beta(f)).epsilon(1e-9));
        }
        CHECK(fit.intercept == doctest::Approx(beta(6)).epsilon(1e-9));
    }
}

TEST_CASE("ridge regression recovers an exact linear target") {
    const Matrix X = random_design(30, 4, 8, false);
    std::vector<double> y(30);
    for (Eigen::Index r = 0; r < 30; ++r) {
        y[static_cast<std::size_t>(r)] = 2.0 + X(r, 0) - 3.0 * X(r, 2) + 0.5 * X(r, 3);
    }
    const auto fit = fit_linear(X, y, 0.0);
    CHECK(fit.intercept == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(fit.weights[1] == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(fit.weights[2] == doctest::Approx(-3.0).epsilon(1e-10));
    CHECK(fit.predict(row(X, 4)) == doctest::Approx(y[4]).epsilon(1e-10));
}

TEST_CASE("singular unregularised systems are reported") {
    Matrix X(4, 2);
    X << 1, 1, 0, 0, 1, 1, 0, 0;
    const std::vector<double> y = {1, 2, 3, 4};
    CHECK_THROWS_AS(fit_linear(X, y, 0.0), SolverError);
    CHECK_NOTHROW(fit_linear(X, y, 1e-3));
    CHECK_THROWS_AS(fit_linear(X, y, -1.0), ConfigError);
    CHECK_THROWS_AS(fit_linear(X, std::vector<double>{1, 2}, 1.0), DimensionError);
    const auto fit = fit_linear(X, y, 1.0);
    CHECK_THROWS_AS(fit.predict(std::vector<double>{1, 2, 3}), DimensionError);
}

TEST_CASE("candidate thresholds") {
    const std::vector<double> binary = {0, 1, 1, 0, 1};
    CHECK(candidate_thresholds(binary, 32) == std::vector<double>{0.5});
    CHECK(candidate_thresholds(std::vector<double>{1, 1, 1}, 8).empty());
    const std::vector<double> few = {3, 1, 2};
    CHECK(candidate_thresholds(few, 8) == std::vector<double>{1.5, 2.5});

    std::vector<double> many(100);
    for (std::size_t i = 0; i < many.size(); ++i) {
        many[i] = static_cast<double>(i);
    }
    const auto cuts = candidate_thresholds(many, 4);
    CHECK(cuts.size() == 3);
    CHECK(std::is_sorted(cuts.begin(), cuts.end()));
    CHECK(cuts[1] == doctest::Approx(50.5));
}

TEST_CASE("a stump matches brute-force best split") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const Matrix X = random_design(25, 5, seed, seed % 2 == 0);
        Rng rng(seed + 100);
        std::vector<double> y(25);
        for (auto& v : y) {
            v = uniform_real(rng, 0, 5);
        }
        const auto tree = fit_tree(X, y, {1, 64, 1});

        double best = sse_of(y);
        for (Eigen::Index f = 0; f < X.cols(); ++f) {
            for (Eigen::Index s = 0; s < X.rows(); ++s) {
                const double t = X(s, f);
                std::vector<double> left, right;
                for (Eigen::Index r = 0; r < X.rows(); ++r) {
                    (X(r, f) <= t ? left : right).push_back(y[static_cast<std::size_t>(r)]);
                }
                if (!left.empty() && !right.empty()) {
                    best = std::min(best, sse_of(left) + sse_of(right));
                }
            }
        }
        std::vector<double> residual;
        double fitted = 0.0;
        for (Eigen::Index r = 0; r < X.rows(); ++r) {
            const double e = y[static_cast<std::size_t>(r)] - tree.predict(row(X, r));
            fitted += e * e;
        }
        CHECK(fitted == doctest::Approx(best).epsilon(1e-9));
    }
}

TEST_CASE("trees of depth 2 fit XOR exactly") {
    Matrix X(8, 3);
    std::vector<double> y(8);
    for (int i = 0; i < 8; ++i) {
        X(i, 0) = i & 1;
        X(i, 1) = (i >> 1) & 1;
        X(i, 2) = (i >> 2) & 1;
        y[static_cast<std::size_t>(i)] = ((i & 1) ^ ((i >> 1) & 1)) ? 4.0 : 1.0;
    }
    const auto shallow = fit_tree(X, y, {1, 32, 1});
    const auto deep = fit_tree(X, y, {2, 32, 1});
    CHECK(deep.depth() == 2);
    for (int i = 0; i < 8; ++i) {
        CHECK(deep.predict(row(X, i)) == doctest::Approx(y[static_cast<std::size_t>(i)]));
        CHECK(shallow.predict(row(X, i)) == doctest::Approx(2.5));
    }
    // Linear models cannot represent the interaction at all.
    const auto linear = fit_linear(X, y, 1e-9);
    for (int i = 0; i < 8; ++i) {
        CHECK(linear.predict(row(X, i)) == doctest::Approx(2.5).epsilon(1e-6));
    }
}

TEST_CASE("tree structural properties") {
    const Matrix X = random_design(200, 6, 3, false);
    Rng rng(4);
    std::vector<double> y(200);
    for (auto& v : y) {
        v = uniform_real(rng, -1, 1);
    }
    for (std::size_t depth : {0u, 1u, 3u, 6u}) {
        for (std::size_t min_leaf : {1u, 5u, 20u}) {
            const auto tree = fit_tree(X, y, {depth, 16, min_leaf});
            CHECK(tree.depth() <= depth);
            CHECK(tree.leaf_count() <= (std::size_t{1} << depth));
            CHECK(tree.nodes().size() == 2 * tree.leaf_count() - 1);
            // Every leaf holds at least min_leaf training samples.
            std::vector<std::size_t> hits(tree.nodes().size(), 0);
            for (Eigen::Index r = 0; r < X.rows(); ++r) {
                const auto a = row(X, r);
                std::size_t at = 0;
                while (!tree.nodes()[at].is_leaf()) {
                    const auto& node = tree.nodes()[at];
                    at = a[node.feature] <= node.threshold ? node.left : node.right;
                }
                ++hits[at];
            }
            for (std::size_t i = 0; i < tree.nodes().size(); ++i) {
                if (tree.nodes()[i].is_leaf()) {
                    CHECK(hits[i] >= min_leaf);
                }
            }
        }
    }
    const auto a = fit_tree(X, y, {4, 8, 2});
    const auto b = fit_tree(X, y, {4, 8, 2});
    CHECK(a == b);
}

TEST_CASE("constant targets yield a single leaf") {
    const Matrix X = random_design(10, 3, 2, true);
    const std::vector<double> y(10, 2.5);
    const auto tree = fit_tree(X, y, {5, 32, 1});
    CHECK(tree.leaf_count() == 1);
    CHECK(tree.predict(row(X, 0)) == 2.5);
    CHECK_THROWS_AS(fit_tree(X, y, {5, 1, 1}), ConfigError);
    CHECK_THROWS_AS(fit_tree(X, y, {5, 32, 0}), ConfigError);
    const Regressor r = RegressionTree::constant(1.5, 3);
    CHECK(predict(r, row(X, 1)) == 1.5);
    CHECK(feature_count(r) == 3);
}
