#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace shadowrec {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

struct RatingScale {
    double low = 1.0;
    double high = 5.0;

    bool contains(double value) const noexcept { return value >= low && value <= high; }
};

struct Rating {
    std::size_t user = 0;
    std::size_t item = 0;
    double value = 0.0;

    friend bool operator==(const Rating&, const Rating&) = default;
};

/// Maps external identifiers onto dense 0-based indices in first-seen order.
class IdDictionary {
public:
    IdDictionary() = default;
    explicit IdDictionary(std::vector<std::string> ids);

    /// Returns the index of `id`, adding it if unseen.
    std::size_t intern(const std::string& id);

    /// Throws LookupError naming the closest known ids when `id` is unknown.
    std::size_t index_of(const std::string& id) const;
    const std::string* find(const std::string& id, std::size_t* index) const;
    bool contains(const std::string& id) const { return index_.contains(id); }

    const std::string& id(std::size_t index) const;
    const std::vector<std::string>& ids() const noexcept { return ids_; }
    std::size_t size() const noexcept { return ids_.size(); }

    /// Up to `count` known ids closest to `id` (numeric distance when both
    /// parse as integers, otherwise lexicographic neighbourhood).
    std::vector<std::string> nearest(const std::string& id, std::size_t count = 3) const;

    friend bool operator==(const IdDictionary& a, const IdDictionary& b) { return a.ids_ == b.ids_; }

private:
    std::vector<std::string> ids_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Sparse ground-truth ratings. Each (user, item) pair appears at most once.
class RatingsMatrix {
public:
    RatingsMatrix() = default;
    RatingsMatrix(std::size_t n_users, std::size_t n_items, std::vector<Rating> entries,
                  RatingScale scale = {});

    std::size_t n_users() const noexcept { return n_users_; }
    std::size_t n_items() const noexcept { return n_items_; }
    const std::vector<Rating>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }
    const RatingScale& scale() const noexcept { return scale_; }

private:
    std::size_t n_users_ = 0;
    std::size_t n_items_ = 0;
    std::vector<Rating> entries_;
    RatingScale scale_;
};

/// Rank-k baseline recommender: rating(u, i) = user_factors.row(u) . item_factors.row(i).
struct FactorModel {
    std::size_t rank = 0;
    double lambda = 0.0;
    Matrix user_factors;
    Matrix item_factors;
    IdDictionary user_ids;
    IdDictionary item_ids;

    std::size_t n_users() const noexcept { return static_cast<std::size_t>(user_factors.rows()); }
    std::size_t n_items() const noexcept { return static_cast<std::size_t>(item_factors.rows()); }

    /// Checks column counts and finiteness; throws ValidationError.
    void validate() const;
};

/// Raw model output u_u . i_i, unclamped.
double predict_rating(const FactorModel& model, std::size_t user, std::size_t item);

/// Items x binary features, stored column-wise as sorted item-index sets.
class MetadataMatrix {
public:
    MetadataMatrix() = default;
    MetadataMatrix(std::size_t n_items, std::vector<std::string> feature_names,
                   std::vector<std::vector<std::size_t>> columns);

    std::size_t n_items() const noexcept { return n_items_; }
    std::size_t n_features() const noexcept { return feature_names_.size(); }
    const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
    const std::vector<std::vector<std::size_t>>& columns() const noexcept { return columns_; }
    const std::vector<std::size_t>& column(std::size_t feature) const { return columns_.at(feature); }
    const std::vector<double>& marginals() const noexcept { return marginals_; }
    std::size_t support(std::size_t feature) const { return columns_.at(feature).size(); }

    /// Sorted feature indices held by `item`.
    const std::vector<std::size_t>& item_features(std::size_t item) const;
    bool holds(std::size_t item, std::size_t feature) const;

    /// Index of a feature by name, or npos.
    std::size_t feature_index(const std::string& name) const;

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
    std::size_t n_items_ = 0;
    std::vector<std::string> feature_names_;
    std::vector<std::vector<std::size_t>> columns_;
    std::vector<double> marginals_;
    std::vector<std::vector<std::size_t>> rows_;
    std::unordered_map<std::string, std::size_t> name_index_;
};

/// Dense 0/1 attribute vector of one item.
std::vector<double> dense_attribute_row(const MetadataMatrix& meta, std::size_t item);

/// Sparse support of a dense 0/1 row (inverse of dense_attribute_row).
std::vector<std::size_t> sparse_support(std::span<const double> row);

}  // namespace shadowrec
