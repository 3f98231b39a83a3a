#include "shadowrec/factorize.hpp"

#include <cmath>
#include <string>

#include "shadowrec/error.hpp"
#include "shadowrec/parallel.hpp"
#include "shadowrec/rng.hpp"
#include "shadowrec/serialize.hpp"

namespace shadowrec {

void AlsConfig::validate() const {
    if (rank < 1) {
        throw ConfigError("ALS rank must be >= 1");
    }
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw ConfigError("ALS lambda must be a finite value >= 0");
    }
    if (max_iterations < 1) {
        throw ConfigError("ALS max_iterations must be >= 1");
    }
    if (!(convergence_tol >= 0.0)) {
        throw ConfigError("ALS convergence_tol must be >= 0");
    }
}

namespace {

// Compressed adjacency: for row r, neighbours[offsets[r] .. offsets[r+1]).
struct Adjacency {
    std::vector<std::size_t> offsets;
    std::vector<std::size_t> neighbours;
    std::vector<double> values;
};

Adjacency build_adjacency(const RatingsMatrix& ratings, bool by_user) {
    const std::size_t rows = by_user ? ratings.n_users() : ratings.n_items();
    Adjacency adj;
    adj.offsets.assign(rows + 1, 0);
    for (const auto& r : ratings.entries()) {
        ++adj.offsets[(by_user ? r.user : r.item) + 1];
    }
    for (std::size_t i = 0; i < rows; ++i) {
        adj.offsets[i + 1] += adj.offsets[i];
    }
    adj.neighbours.resize(ratings.size());
    adj.values.resize(ratings.size());
    std::vector<std::size_t> cursor(adj.offsets.begin(), adj.offsets.end() - 1);
    for (const auto& r : ratings.entries()) {
        const std::size_t row = by_user ? r.user : r.item;
        const std::size_t slot = cursor[row]++;
        adj.neighbours[slot] = by_user ? r.item : r.user;
        adj.values[slot] = r.value;
    }
    return adj;
}

// Solves every row of `target` against the fixed factors of the other side.
void half_step(const Adjacency& adj, const Matrix& fixed, double lambda, std::size_t threads, Matrix& target,
               const char* side) {
    const auto k = fixed.cols();
    const std::size_t rows = adj.offsets.size() - 1;
    parallel_for(rows, threads, [&](std::size_t row) {
        const std::size_t begin = adj.offsets[row];
        const std::size_t end = adj.offsets[row + 1];
        const auto r = static_cast<Eigen::Index>(row);
        if (begin == end) {
            target.row(r).setZero();
            return;
        }
        Eigen::MatrixXd normal = Eigen::MatrixXd::Zero(k, k);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k);
        for (std::size_t e = begin; e < end; ++e) {
            const auto other = fixed.row(static_cast<Eigen::Index>(adj.neighbours[e])).transpose();
            normal.selfadjointView<Eigen::Lower>().rankUpdate(other);
            rhs.noalias() += adj.values[e] * other;
        }
        normal.diagonal().array() += lambda * static_cast<double>(end - begin);
        Eigen::LLT<Eigen::MatrixXd, Eigen::Lower> llt(normal);
        bool ok = llt.info() == Eigen::Success;
        Eigen::VectorXd solution;
        if (ok) {
            solution = llt.solve(rhs);
            ok = solution.allFinite();
        }
        if (!ok) {
            throw SolverError(std::string("normal equations for ") + side + " " + std::to_string(row) +
                              " are singular; use lambda > 0");
        }
        target.row(r) = solution.transpose();
    });
}

}  // namespace

FactorModel train_als(const RatingsMatrix& ratings, const AlsConfig& cfg, AlsTrace* trace) {
    cfg.validate();
    if (ratings.empty()) {
        throw ValidationError("ALS requires at least one rating");
    }
    const auto k = static_cast<Eigen::Index>(cfg.rank);

    FactorModel model;
    model.rank = cfg.rank;
    model.lambda = cfg.lambda;
    model.user_factors = Matrix::Zero(static_cast<Eigen::Index>(ratings.n_users()), k);
    model.item_factors = Matrix(static_cast<Eigen::Index>(ratings.n_items()), k);

    Rng rng(cfg.seed);
    const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.rank));
    for (Eigen::Index i = 0; i < model.item_factors.rows(); ++i) {
        for (Eigen::Index j = 0; j < k; ++j) {
            model.item_factors(i, j) = uniform_real(rng, 0.0, scale);
        }
    }

    const Adjacency by_user = build_adjacency(ratings, true);
    const Adjacency by_item = build_adjacency(ratings, false);

    double previous = INFINITY;
    for (std::size_t iteration = 0; iteration < cfg.max_iterations; ++iteration) {
        half_step(by_user, model.item_factors, cfg.lambda, cfg.threads, model.user_factors, "user");
        half_step(by_item, model.user_factors, cfg.lambda, cfg.threads, model.item_factors, "item");
        const double rmse = training_rmse(model, ratings);
        if (trace != nullptr) {
            trace->rmse.push_back(rmse);
        }
        if (previous - rmse < cfg.convergence_tol) {
            break;
        }
        previous = rmse;
    }
    return model;
}

double training_rmse(const FactorModel& model, const RatingsMatrix& ratings) {
    if (ratings.empty()) {
        throw DomainError("RMSE over an empty rating set");
    }
    if (ratings.n_users() > model.n_users() || ratings.n_items() > model.n_items()) {
        throw DimensionError("ratings dimensions exceed the factor model");
    }
    double sum = 0.0;
    for (const auto& r : ratings.entries()) {
        const double residual = r.value - predict_rating(model, r.user, r.item);
        sum += residual * residual;
    }
    return std::sqrt(sum / static_cast<double>(ratings.size()));
}

void save_factor_model(const FactorModel& model, const std::filesystem::path& path) {
    write_json_file(path, factor_model_to_json(model));
}

FactorModel load_factor_model(const std::filesystem::path& path) {
    return factor_model_from_json(read_json_file(path));
}

}  // namespace shadowrec
