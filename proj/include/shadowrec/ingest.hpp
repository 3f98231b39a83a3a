#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "shadowrec/datamodel.hpp"

namespace shadowrec {

struct RatingsFormat {
    char delimiter = ',';
    bool has_header = true;
    RatingScale scale;
};

struct LoadedRatings {
    RatingsMatrix ratings;
    IdDictionary user_ids;
    IdDictionary item_ids;
};

/// Reads `userId,movieId,rating[,timestamp]` rows. Users and items are
/// re-indexed densely in first-seen order; a repeated (user, item) row
/// replaces the earlier one.
LoadedRatings load_ratings(const std::filesystem::path& path, const RatingsFormat& format = {});

struct RawItemRecord {
    std::string item_id;
    std::map<std::string, std::set<std::string>> attributes;
};

/// One JSON object per line: {"item_id": ..., "attributes": {name: [values...]}}.
/// Scalar attribute values are accepted as single-element lists.
std::vector<RawItemRecord> load_metadata(const std::filesystem::path& path);

/// Concatenates per-source records for the same items. Attribute names that
/// occur in more than one source are prefixed `source:` in every source.
std::vector<RawItemRecord> merge_metadata_sources(
    const std::vector<std::pair<std::string, std::vector<RawItemRecord>>>& sources);

/// Reorders records to the given item indexing. Items without a record get
/// an empty attribute set; records for unknown items are dropped.
std::vector<RawItemRecord> align_records(const std::vector<RawItemRecord>& records,
                                         const IdDictionary& item_ids);

/// One binary column per observed (attribute, value) pair, named
/// `attribute=value`, in sorted name order. Row r is records[r].
MetadataMatrix encode_one_hot(const std::vector<RawItemRecord>& records);

/// Binary Shannon entropy in bits with 0 log 0 := 0.
double feature_entropy(double p);

struct FeatureFilterSpec {
    enum class Mode { EntropyThreshold, TopKEntropy, MinSupport };

    Mode mode = Mode::EntropyThreshold;
    double threshold = 0.01;
    std::size_t count = 1;

    static FeatureFilterSpec entropy_threshold(double bits) { return {Mode::EntropyThreshold, bits, 1}; }
    static FeatureFilterSpec top_k_entropy(std::size_t k) { return {Mode::TopKEntropy, 0.0, k}; }
    static FeatureFilterSpec min_support(std::size_t n) { return {Mode::MinSupport, 0.0, n}; }

    void validate() const;
    std::string describe() const;
};

/// Indices of the features of `meta` that pass `spec`, ascending.
std::vector<std::size_t> select_features(const MetadataMatrix& meta, const FeatureFilterSpec& spec,
                                         std::vector<std::string>* warnings = nullptr);

/// Restricts `meta` to the given feature indices, preserving their order.
MetadataMatrix restrict_features(const MetadataMatrix& meta, const std::vector<std::size_t>& features);

MetadataMatrix filter_features(const MetadataMatrix& meta, const FeatureFilterSpec& spec,
                               std::vector<std::string>* warnings = nullptr);

struct PrunedMetadata {
    MetadataMatrix meta;                 // surviving items only
    std::vector<bool> kept_mask;         // aligned with the input item indexing
    std::vector<std::size_t> kept_items; // input index of each surviving row
};

/// Drops items holding fewer than `min_features` features. Throws
/// EmptyResultError when nothing survives.
PrunedMetadata prune_items(const MetadataMatrix& meta, std::size_t min_features);

/// Ingest settings shared by the CLI commands.
struct MetadataPipeline {
    FeatureFilterSpec filter = FeatureFilterSpec::entropy_threshold(0.01);
    std::size_t min_features = 1;
};

/// align -> encode -> filter -> prune.
PrunedMetadata prepare_metadata(const std::vector<RawItemRecord>& records, const IdDictionary& item_ids,
                                const MetadataPipeline& pipeline,
                                std::vector<std::string>* warnings = nullptr);

/// align -> encode -> project onto an existing feature list -> prune. Used to
/// rebuild the exact attribute space a shadow model was trained on.
PrunedMetadata project_metadata(const std::vector<RawItemRecord>& records, const IdDictionary& item_ids,
                                const std::vector<std::string>& feature_names, std::size_t min_features);

}  // namespace shadowrec
