#include "shadowrec/datamodel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <set>
#include <utility>

#include "shadowrec/error.hpp"

namespace shadowrec {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::Index: return "index error";
        case ErrorKind::Parse: return "parse error";
        case ErrorKind::Validation: return "validation error";
        case ErrorKind::Domain: return "domain error";
        case ErrorKind::Solver: return "solver error";
        case ErrorKind::Config: return "config error";
        case ErrorKind::InsufficientData: return "insufficient data";
        case ErrorKind::EmptyResult: return "empty result";
        case ErrorKind::EstimatorMismatch: return "estimator mismatch";
        case ErrorKind::Dimension: return "dimension error";
        case ErrorKind::Integrity: return "integrity error";
        case ErrorKind::Statistics: return "statistics error";
        case ErrorKind::Lookup: return "lookup error";
        case ErrorKind::Io: return "I/O error";
    }
    return "error";
}

// ---------------------------------------------------------------- IdDictionary

IdDictionary::IdDictionary(std::vector<std::string> ids) {
    ids_.reserve(ids.size());
    for (auto& id : ids) {
        if (index_.contains(id)) {
            throw ValidationError("duplicate id in dictionary: " + id);
        }
        index_.emplace(id, ids_.size());
        ids_.push_back(std::move(id));
    }
}

std::size_t IdDictionary::intern(const std::string& id) {
    auto [it, inserted] = index_.try_emplace(id, ids_.size());
    if (inserted) {
        ids_.push_back(id);
    }
    return it->second;
}

const std::string* IdDictionary::find(const std::string& id, std::size_t* index) const {
    auto it = index_.find(id);
    if (it == index_.end()) {
        return nullptr;
    }
    if (index != nullptr) {
        *index = it->second;
    }
    return &ids_[it->second];
}

std::size_t IdDictionary::index_of(const std::string& id) const {
    auto it = index_.find(id);
    if (it != index_.end()) {
        return it->second;
    }
    std::string message = "unknown id '" + id + "'";
    const auto close = nearest(id);
    if (!close.empty()) {
        message += "; nearest known ids:";
        for (const auto& candidate : close) {
            message += " " + candidate;
        }
    }
    throw LookupError(message);
}

const std::string& IdDictionary::id(std::size_t index) const {
    if (index >= ids_.size()) {
        throw IndexError("id index " + std::to_string(index) + " out of range " +
                         std::to_string(ids_.size()));
    }
    return ids_[index];
}

namespace {

bool parse_int(const std::string& text, std::int64_t& out) {
    if (text.empty()) {
        return false;
    }
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, out);
    return ec == std::errc{} && ptr == end;
}

}  // namespace

std::vector<std::string> IdDictionary::nearest(const std::string& id, std::size_t count) const {
    std::vector<std::string> result;
    if (ids_.empty() || count == 0) {
        return result;
    }
    std::int64_t target = 0;
    if (parse_int(id, target)) {
        std::vector<std::pair<std::uint64_t, std::string>> numeric;
        for (const auto& candidate : ids_) {
            std::int64_t value = 0;
            if (parse_int(candidate, value)) {
                const auto diff = value > target ? static_cast<std::uint64_t>(value - target)
                                                 : static_cast<std::uint64_t>(target - value);
                numeric.emplace_back(diff, candidate);
            }
        }
        if (!numeric.empty()) {
            std::sort(numeric.begin(), numeric.end());
            for (std::size_t i = 0; i < std::min(count, numeric.size()); ++i) {
                result.push_back(numeric[i].second);
            }
            return result;
        }
    }
    std::vector<std::string> sorted = ids_;
    std::sort(sorted.begin(), sorted.end());
    auto pos = static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), id) - sorted.begin());
    const std::size_t begin = pos >= count / 2 ? pos - count / 2 : 0;
    for (std::size_t i = begin; i < sorted.size() && result.size() < count; ++i) {
        result.push_back(sorted[i]);
    }
    return result;
}

// --------------------------------------------------------------- RatingsMatrix

RatingsMatrix::RatingsMatrix(std::size_t n_users, std::size_t n_items, std::vector<Rating> entries,
                             RatingScale scale)
    : n_users_(n_users), n_items_(n_items), entries_(std::move(entries)), scale_(scale) {
    if (!(scale_.low < scale_.high)) {
        throw ValidationError("rating scale requires low < high");
    }
    std::vector<std::pair<std::size_t, std::size_t>> keys;
    keys.reserve(entries_.size());
    for (const auto& r : entries_) {
        if (r.user >= n_users_ || r.item >= n_items_) {
            throw IndexError("rating (" + std::to_string(r.user) + ", " + std::to_string(r.item) +
                             ") outside " + std::to_string(n_users_) + " x " +
                             std::to_string(n_items_));
        }
        if (!std::isfinite(r.value) || !scale_.contains(r.value)) {
            throw ValidationError("rating " + std::to_string(r.value) + " outside scale [" +
                                  std::to_string(scale_.low) + ", " + std::to_string(scale_.high) +
                                  "]");
        }
        keys.emplace_back(r.user, r.item);
    }
    std::sort(keys.begin(), keys.end());
    if (std::adjacent_find(keys.begin(), keys.end()) != keys.end()) {
        throw ValidationError("duplicate (user, item) pair in ratings");
    }
}

// ----------------------------------------------------------------- FactorModel

void FactorModel::validate() const {
    const auto k = static_cast<Eigen::Index>(rank);
    if (rank == 0) {
        throw ValidationError("factor model rank must be >= 1");
    }
    if (user_factors.cols() != k || item_factors.cols() != k) {
        throw ValidationError("factor matrices must have exactly rank columns");
    }
    if (!user_factors.allFinite() || !item_factors.allFinite()) {
        throw ValidationError("factor matrices contain non-finite entries");
    }
    if (user_ids.size() != 0 && user_ids.size() != n_users()) {
        throw ValidationError("user id dictionary does not match user factor rows");
    }
    if (item_ids.size() != 0 && item_ids.size() != n_items()) {
        throw ValidationError("item id dictionary does not match item factor rows");
    }
}

double predict_rating(const FactorModel& model, std::size_t user, std::size_t item) {
    if (user >= model.n_users()) {
        throw IndexError("user index " + std::to_string(user) + " out of range " +
                         std::to_string(model.n_users()));
    }
    if (item >= model.n_items()) {
        throw IndexError("item index " + std::to_string(item) + " out of range " +
                         std::to_string(model.n_items()));
    }
    return model.user_factors.row(static_cast<Eigen::Index>(user))
        .dot(model.item_factors.row(static_cast<Eigen::Index>(item)));
}

// -------------------------------------------------------------- MetadataMatrix

MetadataMatrix::MetadataMatrix(std::size_t n_items, std::vector<std::string> feature_names,
                               std::vector<std::vector<std::size_t>> columns)
    : n_items_(n_items), feature_names_(std::move(feature_names)), columns_(std::move(columns)) {
    if (feature_names_.size() != columns_.size()) {
        throw ValidationError("feature name count does not match column count");
    }
    rows_.assign(n_items_, {});
    marginals_.reserve(columns_.size());
    for (std::size_t f = 0; f < columns_.size(); ++f) {
        if (!name_index_.emplace(feature_names_[f], f).second) {
            throw ValidationError("duplicate feature name: " + feature_names_[f]);
        }
        auto& column = columns_[f];
        std::sort(column.begin(), column.end());
        column.erase(std::unique(column.begin(), column.end()), column.end());
        for (std::size_t item : column) {
            if (item >= n_items_) {
                throw IndexError("feature '" + feature_names_[f] + "' references item " +
                                 std::to_string(item) + " of " + std::to_string(n_items_));
            }
            rows_[item].push_back(f);
        }
        marginals_.push_back(n_items_ == 0 ? 0.0
                                           : static_cast<double>(column.size()) /
                                                 static_cast<double>(n_items_));
    }
}

const std::vector<std::size_t>& MetadataMatrix::item_features(std::size_t item) const {
    if (item >= n_items_) {
        throw IndexError("item index " + std::to_string(item) + " out of range " +
                         std::to_string(n_items_));
    }
    return rows_[item];
}

bool MetadataMatrix::holds(std::size_t item, std::size_t feature) const {
    const auto& row = item_features(item);
    return std::binary_search(row.begin(), row.end(), feature);
}

std::size_t MetadataMatrix::feature_index(const std::string& name) const {
    auto it = name_index_.find(name);
    return it == name_index_.end() ? npos : it->second;
}

std::vector<double> dense_attribute_row(const MetadataMatrix& meta, std::size_t item) {
    std::vector<double> row(meta.n_features(), 0.0);
    for (std::size_t f : meta.item_features(item)) {
        row[f] = 1.0;
    }
    return row;
}

std::vector<std::size_t> sparse_support(std::span<const double> row) {
    std::vector<std::size_t> support;
    for (std::size_t f = 0; f < row.size(); ++f) {
        if (row[f] != 0.0) {
            support.push_back(f);
        }
    }
    return support;
}

}  // namespace shadowrec
