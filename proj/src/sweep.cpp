#include "shadowrec/sweep.hpp"

#include <algorithm>
#include <cstdio>
#include <memory>
#include <tuple>

#include "shadowrec/error.hpp"
#include "shadowrec/parallel.hpp"
#include "shadowrec/rng.hpp"

namespace shadowrec {

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

}  // namespace

std::string SweepCell::key() const {
    std::string out = "rank=" + std::to_string(rank) + " lambda=" + num(lambda) + " " + to_string(shadow.kind);
    if (shadow.kind == ShadowSpec::Kind::Tree) {
        out += " depth=" + std::to_string(shadow.tree.max_depth) + " bins=" + std::to_string(shadow.tree.bins);
    } else {
        out += " ridge=" + num(shadow.ridge);
    }
    return out;
}

bool operator<(const SweepCell& a, const SweepCell& b) {
    auto tuple = [](const SweepCell& c) {
        return std::make_tuple(c.rank, c.lambda, static_cast<int>(c.shadow.kind), c.shadow.tree.max_depth,
                               c.shadow.tree.bins, c.shadow.ridge);
    };
    return tuple(a) < tuple(b);
}

void SweepGrid::validate() const {
    if (ranks.empty() || lambdas.empty() || kinds.empty()) {
        throw ConfigError("sweep grid needs at least one rank, lambda and kind");
    }
    const bool has_tree = std::find(kinds.begin(), kinds.end(), ShadowSpec::Kind::Tree) != kinds.end();
    if (has_tree && (depths.empty() || bins.empty())) {
        throw ConfigError("sweep grid with tree cells needs at least one depth and bin count");
    }
}

std::vector<SweepCell> SweepGrid::expand() const {
    validate();
    std::vector<SweepCell> cells;
    for (std::size_t rank : ranks) {
        for (double lambda : lambdas) {
            for (auto kind : kinds) {
                if (kind == ShadowSpec::Kind::Linear) {
                    cells.push_back({rank, lambda, ShadowSpec::linear(ridge)});
                    continue;
                }
                for (std::size_t depth : depths) {
                    for (std::size_t b : bins) {
                        cells.push_back({rank, lambda, ShadowSpec::make_tree({depth, b, min_leaf})});
                    }
                }
            }
        }
    }
    std::sort(cells.begin(), cells.end());
    cells.erase(std::unique(cells.begin(), cells.end(),
                            [](const SweepCell& a, const SweepCell& b) { return !(a < b) && !(b < a); }),
                cells.end());
    return cells;
}

std::vector<SweepCell> default_sweep_cells(double ridge) {
    std::vector<SweepCell> cells = {
        {50, 0.1, ShadowSpec::make_tree({5, 32, 1})},
        {20, 0.1, ShadowSpec::make_tree({3, 8, 1})},
        {12, 0.1, ShadowSpec::make_tree({5, 8, 1})},
        {50, 0.1, ShadowSpec::linear(ridge)},
        {20, 0.1, ShadowSpec::linear(ridge)},
        {12, 0.1, ShadowSpec::linear(ridge)},
    };
    std::sort(cells.begin(), cells.end());
    return cells;
}

std::vector<SweepRow> run_sweep(const RatingsMatrix& ratings, const PrunedMetadata& meta,
                                std::vector<SweepCell> cells, const SweepOptions& options) {
    std::sort(cells.begin(), cells.end());

    // Baselines depend only on (rank, lambda); train each once.
    std::vector<std::pair<std::size_t, double>> baselines;
    for (const auto& cell : cells) {
        baselines.emplace_back(cell.rank, cell.lambda);
    }
    std::sort(baselines.begin(), baselines.end());
    baselines.erase(std::unique(baselines.begin(), baselines.end()), baselines.end());

    struct Trained {
        std::shared_ptr<const FactorModel> model;
        double rmse = 0.0;
        std::string error;
    };
    std::vector<Trained> trained(baselines.size());
    parallel_for(baselines.size(), options.threads, [&](std::size_t b) {
        try {
            AlsConfig als;
            als.rank = baselines[b].first;
            als.lambda = baselines[b].second;
            als.max_iterations = options.max_iterations;
            als.convergence_tol = options.convergence_tol;
            als.seed = options.seed;
            als.threads = 1;
            auto model = std::make_shared<const FactorModel>(train_als(ratings, als));
            trained[b].rmse = training_rmse(*model, ratings);
            trained[b].model = std::move(model);
        } catch (const std::exception& e) {
            trained[b].error = e.what();
        }
    });

    std::vector<SweepRow> rows(cells.size());
    parallel_for(cells.size(), options.threads, [&](std::size_t c) {
        SweepRow& row = rows[c];
        row.cell = cells[c];
        const auto at = std::lower_bound(baselines.begin(), baselines.end(),
                                         std::make_pair(cells[c].rank, cells[c].lambda));
        const Trained& base = trained[static_cast<std::size_t>(at - baselines.begin())];
        if (!base.error.empty()) {
            row.error = base.error;
            return;
        }
        try {
            const auto shadow = train_shadow(base.model, meta.meta, meta.kept_items, cells[c].shadow,
                                             {options.train_fraction, derive_seed(options.seed, 7)});
            const auto report = measure_agreement(shadow, meta.meta, options.scope, options.seed, options.max_pairs);
            row.mean_latent_mae = report.mean_latent_mae;
            row.observational_mae = report.observational_mae;
            row.training_rmse = base.rmse;
            row.item_set = report.item_set;
        } catch (const std::exception& e) {
            row.error = e.what();
        }
    });
    return rows;
}

nlohmann::json sweep_row_to_json(const SweepRow& row) {
    using nlohmann::json;
    json doc = {
        {"cell", row.cell.key()},
        {"rank", row.cell.rank},
        {"lambda", row.cell.lambda},
        {"kind", to_string(row.cell.shadow.kind)},
    };
    if (row.cell.shadow.kind == ShadowSpec::Kind::Tree) {
        doc["depth"] = row.cell.shadow.tree.max_depth;
        doc["bins"] = row.cell.shadow.tree.bins;
    } else {
        doc["ridge"] = row.cell.shadow.ridge;
    }
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    doc["mean_latent_mae"] = opt(row.mean_latent_mae);
    doc["observational_mae"] = opt(row.observational_mae);
    doc["training_rmse"] = opt(row.training_rmse);
    doc["item_set"] = row.item_set;
    if (!row.error.empty()) {
        doc["error"] = row.error;
    }
    return doc;
}

std::string sweep_table(const std::vector<SweepRow>& rows) {
    std::vector<std::vector<std::string>> cells = {{"cell", "latent MAE", "observational MAE", "items"}};
    auto fmt = [](const std::optional<double>& v) {
        if (!v) {
            return std::string("-");
        }
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4f", *v);
        return std::string(buf);
    };
    for (const auto& row : rows) {
        cells.push_back({row.cell.key(), fmt(row.mean_latent_mae), fmt(row.observational_mae),
                         row.error.empty() ? row.item_set : "error: " + row.error});
    }
    std::vector<std::size_t> width(4, 0);
    for (const auto& line : cells) {
        for (std::size_t c = 0; c < line.size(); ++c) {
            width[c] = std::max(width[c], line[c].size());
        }
    }
    std::string out;
    for (const auto& line : cells) {
        std::string text;
        for (std::size_t c = 0; c < line.size(); ++c) {
            std::string cell = line[c];
            if (c + 1 < line.size()) {
                cell.resize(width[c], ' ');
            }
            text += (c == 0 ? "" : "  ") + cell;
        }
        out += text + '\n';
    }
    return out;
}

}  // namespace shadowrec
