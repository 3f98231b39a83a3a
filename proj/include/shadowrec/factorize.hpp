#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "shadowrec/datamodel.hpp"

namespace shadowrec {

struct AlsConfig {
    std::size_t rank = 10;
    double lambda = 0.1;
    std::size_t max_iterations = 20;
    double convergence_tol = 1e-4;
    std::uint64_t seed = 42;
    std::size_t threads = 1;

    void validate() const;
};

struct AlsTrace {
    std::vector<double> rmse;  // training RMSE after each full iteration
};

/// Alternating least squares with weighted regularisation: each user row
/// solves (I_obs^T I_obs + lambda n_u Id) u = I_obs^T r_u, then each item row
/// symmetrically. Rows without ratings get zero factors.
FactorModel train_als(const RatingsMatrix& ratings, const AlsConfig& cfg, AlsTrace* trace = nullptr);

/// Root mean squared error over the observed entries only.
double training_rmse(const FactorModel& model, const RatingsMatrix& ratings);

void save_factor_model(const FactorModel& model, const std::filesystem::path& path);
FactorModel load_factor_model(const std::filesystem::path& path);

}  // namespace shadowrec
