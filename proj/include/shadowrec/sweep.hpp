#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "shadowrec/factorize.hpp"
#include "shadowrec/ingest.hpp"
#include "shadowrec/shadow.hpp"

namespace shadowrec {

struct SweepCell {
    std::size_t rank = 10;
    double lambda = 0.1;
    ShadowSpec shadow;

    /// Stable sort/identity key, e.g. "rank=50 lambda=0.1 tree depth=5 bins=32".
    std::string key() const;
};

bool operator<(const SweepCell& a, const SweepCell& b);

/// Cross product of the axes; tree-only axes collapse for linear cells.
struct SweepGrid {
    std::vector<std::size_t> ranks;
    std::vector<double> lambdas;
    std::vector<ShadowSpec::Kind> kinds;
    std::vector<std::size_t> depths;
    std::vector<std::size_t> bins;
    double ridge = 1e-3;
    std::size_t min_leaf = 1;

    void validate() const;
    std::vector<SweepCell> expand() const;
};

/// The named configurations (rank 50 tree depth 5 bins 32; rank 20 tree
/// depth 3 bins 8; rank 12 tree depth 5 bins 8; all lambda 0.1) plus a
/// linear cell at each of those ranks.
std::vector<SweepCell> default_sweep_cells(double ridge = 1e-3);

struct SweepOptions {
    std::size_t max_iterations = 20;
    double convergence_tol = 1e-4;
    double train_fraction = 0.8;
    AgreementScope scope = AgreementScope::Eval;
    std::size_t max_pairs = 200000;
    std::uint64_t seed = 42;
    std::size_t threads = 1;
};

struct SweepRow {
    SweepCell cell;
    std::optional<double> mean_latent_mae;
    std::optional<double> observational_mae;
    std::optional<double> training_rmse;
    std::string item_set;
    std::string error;  // non-empty when the cell failed
};

/// Trains a baseline and a shadow per cell and reports agreement. Rows come
/// back sorted by cell key; a failing cell records its error and the sweep
/// continues.
std::vector<SweepRow> run_sweep(const RatingsMatrix& ratings, const PrunedMetadata& meta,
                                std::vector<SweepCell> cells, const SweepOptions& options);

nlohmann::json sweep_row_to_json(const SweepRow& row);
std::string sweep_table(const std::vector<SweepRow>& rows);

}  // namespace shadowrec
