#include "shadowrec/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <string_view>

#include "json.hpp"

#include "shadowrec/error.hpp"

namespace shadowrec {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

std::vector<std::string_view> split(std::string_view line, char delimiter) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(delimiter, start);
        if (pos == std::string_view::npos) {
            fields.push_back(trim(line.substr(start)));
            return fields;
        }
        fields.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
}

std::string line_prefix(const std::filesystem::path& path, std::size_t line_no) {
    return path.string() + ":" + std::to_string(line_no) + ": ";
}

}  // namespace

LoadedRatings load_ratings(const std::filesystem::path& path, const RatingsFormat& format) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open ratings file " + path.string());
    }

    LoadedRatings out;
    std::vector<Rating> entries;
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> position;

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && format.has_header) {
            continue;
        }
        if (trim(line).empty()) {
            continue;
        }
        const auto fields = split(line, format.delimiter);
        if (fields.size() < 3 || fields.size() > 4) {
            throw ParseError(line_prefix(path, line_no) + "expected 3 or 4 fields, found " +
                             std::to_string(fields.size()));
        }
        if (fields[0].empty() || fields[1].empty()) {
            throw ParseError(line_prefix(path, line_no) + "empty user or item id");
        }
        double value = 0.0;
        const auto* end = fields[2].data() + fields[2].size();
        auto [ptr, ec] = std::from_chars(fields[2].data(), end, value);
        if (ec != std::errc{} || ptr != end || !std::isfinite(value)) {
            throw ParseError(line_prefix(path, line_no) + "malformed rating '" + std::string(fields[2]) +
                             "'");
        }
        if (!format.scale.contains(value)) {
            throw ValidationError(line_prefix(path, line_no) + "rating " + std::string(fields[2]) +
                                  " outside scale [" + std::to_string(format.scale.low) + ", " +
                                  std::to_string(format.scale.high) + "]");
        }
        const std::size_t user = out.user_ids.intern(std::string(fields[0]));
        const std::size_t item = out.item_ids.intern(std::string(fields[1]));
        auto [it, inserted] = position.try_emplace({user, item}, entries.size());
        if (inserted) {
            entries.push_back({user, item, value});
        } else {
            entries[it->second].value = value;
        }
    }
    out.ratings = RatingsMatrix(out.user_ids.size(), out.item_ids.size(), std::move(entries), format.scale);
    return out;
}

std::vector<RawItemRecord> load_metadata(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open metadata file " + path.string());
    }
    std::vector<RawItemRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(line_prefix(path, line_no) + e.what());
        }
        RawItemRecord record;
        const auto id = doc.find("item_id");
        if (!doc.is_object() || id == doc.end()) {
            throw ParseError(line_prefix(path, line_no) + "record lacks item_id");
        }
        if (id->is_string()) {
            record.item_id = id->get<std::string>();
        } else if (id->is_number_integer()) {
            record.item_id = std::to_string(id->get<long long>());
        } else {
            throw ParseError(line_prefix(path, line_no) + "item_id must be a string or integer");
        }
        if (record.item_id.empty()) {
            throw ParseError(line_prefix(path, line_no) + "empty item_id");
        }
        if (auto attrs = doc.find("attributes"); attrs != doc.end()) {
            if (!attrs->is_object()) {
                throw ParseError(line_prefix(path, line_no) + "attributes must be an object");
            }
            for (const auto& [name, values] : attrs->items()) {
                if (name.empty()) {
                    throw ParseError(line_prefix(path, line_no) + "empty attribute name");
                }
                auto& slot = record.attributes[name];
                auto add = [&](const nlohmann::json& v) {
                    if (v.is_string()) {
                        slot.insert(v.get<std::string>());
                    } else if (v.is_number() || v.is_boolean()) {
                        slot.insert(v.dump());
                    } else if (!v.is_null()) {
                        throw ParseError(line_prefix(path, line_no) + "unsupported value for '" + name + "'");
                    }
                };
                if (values.is_array()) {
                    for (const auto& v : values) {
                        add(v);
                    }
                } else {
                    add(values);
                }
            }
        }
        records.push_back(std::move(record));
    }
    return records;
}

std::vector<RawItemRecord> merge_metadata_sources(
    const std::vector<std::pair<std::string, std::vector<RawItemRecord>>>& sources) {
    std::map<std::string, std::set<std::string>> owners;
    for (const auto& [source, records] : sources) {
        for (const auto& record : records) {
            for (const auto& [name, values] : record.attributes) {
                owners[name].insert(source);
            }
        }
    }

    std::vector<RawItemRecord> merged;
    std::map<std::string, std::size_t> slot;
    for (const auto& [source, records] : sources) {
        for (const auto& record : records) {
            auto [it, inserted] = slot.try_emplace(record.item_id, merged.size());
            if (inserted) {
                merged.push_back({record.item_id, {}});
            }
            auto& target = merged[it->second].attributes;
            for (const auto& [name, values] : record.attributes) {
                const std::string key = owners[name].size() > 1 ? source + ":" + name : name;
                target[key].insert(values.begin(), values.end());
            }
        }
    }
    return merged;
}

std::vector<RawItemRecord> align_records(const std::vector<RawItemRecord>& records,
                                         const IdDictionary& item_ids) {
    std::vector<RawItemRecord> aligned(item_ids.size());
    for (std::size_t i = 0; i < item_ids.size(); ++i) {
        aligned[i].item_id = item_ids.id(i);
    }
    for (const auto& record : records) {
        std::size_t index = 0;
        if (item_ids.find(record.item_id, &index) != nullptr) {
            for (const auto& [name, values] : record.attributes) {
                aligned[index].attributes[name].insert(values.begin(), values.end());
            }
        }
    }
    return aligned;
}

MetadataMatrix encode_one_hot(const std::vector<RawItemRecord>& records) {
    std::map<std::string, std::vector<std::size_t>> columns;
    for (std::size_t item = 0; item < records.size(); ++item) {
        for (const auto& [name, values] : records[item].attributes) {
            for (const auto& value : values) {
                columns[name + "=" + value].push_back(item);
            }
        }
    }
    std::vector<std::string> names;
    std::vector<std::vector<std::size_t>> support;
    names.reserve(columns.size());
    support.reserve(columns.size());
    for (auto& [name, items] : columns) {
        names.push_back(name);
        support.push_back(std::move(items));
    }
    return MetadataMatrix(records.size(), std::move(names), std::move(support));
}

double feature_entropy(double p) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw DomainError("entropy requires a probability in [0, 1], got " + std::to_string(p));
    }
    auto term = [](double q) { return q > 0.0 ? -q * std::log2(q) : 0.0; };
    return term(p) + term(1.0 - p);
}

void FeatureFilterSpec::validate() const {
    switch (mode) {
        case Mode::EntropyThreshold:
            if (!(threshold >= 0.0)) {
                throw ConfigError("entropy threshold must be >= 0");
            }
            break;
        case Mode::TopKEntropy:
        case Mode::MinSupport:
            if (count < 1) {
                throw ConfigError("feature filter count must be >= 1");
            }
            break;
    }
}

std::string FeatureFilterSpec::describe() const {
    switch (mode) {
        case Mode::EntropyThreshold: return "entropy>=" + std::to_string(threshold);
        case Mode::TopKEntropy: return std::to_string(count) + " highest-entropy";
        case Mode::MinSupport: return "support>=" + std::to_string(count);
    }
    return {};
}

std::vector<std::size_t> select_features(const MetadataMatrix& meta, const FeatureFilterSpec& spec,
                                         std::vector<std::string>* warnings) {
    spec.validate();
    const std::size_t n = meta.n_features();
    std::vector<std::size_t> keep;
    switch (spec.mode) {
        case FeatureFilterSpec::Mode::EntropyThreshold:
            for (std::size_t f = 0; f < n; ++f) {
                if (feature_entropy(meta.marginals()[f]) >= spec.threshold) {
                    keep.push_back(f);
                }
            }
            break;
        case FeatureFilterSpec::Mode::MinSupport:
            for (std::size_t f = 0; f < n; ++f) {
                if (meta.support(f) >= spec.count) {
                    keep.push_back(f);
                }
            }
            break;
        case FeatureFilterSpec::Mode::TopKEntropy: {
            if (spec.count > n && warnings != nullptr) {
                warnings->push_back("top-k of " + std::to_string(spec.count) + " exceeds the " +
                                    std::to_string(n) + " available features; keeping all");
            }
            std::vector<std::size_t> order(n);
            std::iota(order.begin(), order.end(), 0);
            std::vector<double> entropy(n);
            for (std::size_t f = 0; f < n; ++f) {
                entropy[f] = feature_entropy(meta.marginals()[f]);
            }
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                if (entropy[a] != entropy[b]) {
                    return entropy[a] > entropy[b];
                }
                return meta.feature_names()[a] < meta.feature_names()[b];
            });
            order.resize(std::min(spec.count, n));
            std::sort(order.begin(), order.end());
            keep = std::move(order);
            break;
        }
    }
    return keep;
}

MetadataMatrix restrict_features(const MetadataMatrix& meta, const std::vector<std::size_t>& features) {
    std::vector<std::string> names;
    std::vector<std::vector<std::size_t>> columns;
    names.reserve(features.size());
    columns.reserve(features.size());
    for (std::size_t f : features) {
        names.push_back(meta.feature_names().at(f));
        columns.push_back(meta.column(f));
    }
    return MetadataMatrix(meta.n_items(), std::move(names), std::move(columns));
}

MetadataMatrix filter_features(const MetadataMatrix& meta, const FeatureFilterSpec& spec,
                               std::vector<std::string>* warnings) {
    return restrict_features(meta, select_features(meta, spec, warnings));
}

PrunedMetadata prune_items(const MetadataMatrix& meta, std::size_t min_features) {
    if (min_features < 1) {
        throw ConfigError("min_features must be >= 1");
    }
    PrunedMetadata out;
    out.kept_mask.assign(meta.n_items(), false);
    std::vector<std::size_t> new_index(meta.n_items(), MetadataMatrix::npos);
    for (std::size_t item = 0; item < meta.n_items(); ++item) {
        if (meta.item_features(item).size() >= min_features) {
            out.kept_mask[item] = true;
            new_index[item] = out.kept_items.size();
            out.kept_items.push_back(item);
        }
    }
    if (out.kept_items.empty()) {
        throw EmptyResultError("every item holds fewer than " + std::to_string(min_features) +
                               " features; nothing left to explain");
    }
    std::vector<std::vector<std::size_t>> columns;
    columns.reserve(meta.n_features());
    for (std::size_t f = 0; f < meta.n_features(); ++f) {
        std::vector<std::size_t> column;
        for (std::size_t item : meta.column(f)) {
            if (out.kept_mask[item]) {
                column.push_back(new_index[item]);
            }
        }
        columns.push_back(std::move(column));
    }
    out.meta = MetadataMatrix(out.kept_items.size(), meta.feature_names(), std::move(columns));
    return out;
}

PrunedMetadata prepare_metadata(const std::vector<RawItemRecord>& records, const IdDictionary& item_ids,
                                const MetadataPipeline& pipeline, std::vector<std::string>* warnings) {
    const MetadataMatrix encoded = encode_one_hot(align_records(records, item_ids));
    return prune_items(filter_features(encoded, pipeline.filter, warnings), pipeline.min_features);
}

PrunedMetadata project_metadata(const std::vector<RawItemRecord>& records, const IdDictionary& item_ids,
                                const std::vector<std::string>& feature_names, std::size_t min_features) {
    const MetadataMatrix encoded = encode_one_hot(align_records(records, item_ids));
    std::vector<std::vector<std::size_t>> columns;
    columns.reserve(feature_names.size());
    for (const auto& name : feature_names) {
        const std::size_t f = encoded.feature_index(name);
        columns.push_back(f == MetadataMatrix::npos ? std::vector<std::size_t>{} : encoded.column(f));
    }
    return prune_items(MetadataMatrix(encoded.n_items(), feature_names, std::move(columns)), min_features);
}

}  // namespace shadowrec
