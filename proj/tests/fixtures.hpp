#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <unistd.h>

#include "shadowrec/datamodel.hpp"
#include "shadowrec/rng.hpp"

namespace fixtures {

namespace fs = std::filesystem;

// Fresh directory under the system temp dir; removed by the destructor.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = fs::temp_directory_path() /
                ("shadowrec_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    fs::path operator/(const std::string& name) const { return path_ / name; }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

inline void write_file(const fs::path& path, const std::string& text) {
    std::ofstream(path) << text;
}

inline std::string read_file(const fs::path& path) {
    std::ifstream in(path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Metadata matrix from dense 0/1 rows; features named f0, f1, ...
inline shadowrec::MetadataMatrix dense_meta(const std::vector<std::vector<int>>& rows) {
    const std::size_t n_features = rows.empty() ? 0 : rows.front().size();
    std::vector<std::string> names;
    std::vector<std::vector<std::size_t>> columns(n_features);
    for (std::size_t f = 0; f < n_features; ++f) {
        names.push_back("f" + std::to_string(f));
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t f = 0; f < n_features; ++f) {
            if (rows[i][f] != 0) {
                columns[f].push_back(i);
            }
        }
    }
    return {rows.size(), names, columns};
}

// Random binary metadata with roughly the given density.
inline shadowrec::MetadataMatrix random_meta(std::size_t n_items, std::size_t n_features, double density,
                                             std::uint64_t seed) {
    shadowrec::Rng rng(seed);
    std::vector<std::vector<int>> rows(n_items, std::vector<int>(n_features, 0));
    for (auto& row : rows) {
        for (auto& v : row) {
            v = shadowrec::uniform01(rng) < density ? 1 : 0;
        }
    }
    return dense_meta(rows);
}

// Factor model with user and item factors drawn from [lo, hi).
inline shadowrec::FactorModel random_model(std::size_t users, std::size_t items, std::size_t rank,
                                           std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
    shadowrec::Rng rng(seed);
    shadowrec::FactorModel m;
    m.rank = rank;
    m.lambda = 0.1;
    m.user_factors.resize(static_cast<Eigen::Index>(users), static_cast<Eigen::Index>(rank));
    m.item_factors.resize(static_cast<Eigen::Index>(items), static_cast<Eigen::Index>(rank));
    for (Eigen::Index r = 0; r < m.user_factors.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.user_factors.cols(); ++c) {
            m.user_factors(r, c) = shadowrec::uniform_real(rng, lo, hi);
        }
    }
    for (Eigen::Index r = 0; r < m.item_factors.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.item_factors.cols(); ++c) {
            m.item_factors(r, c) = shadowrec::uniform_real(rng, lo, hi);
        }
    }
    return m;
}

}  // namespace fixtures
