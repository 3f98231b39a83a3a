#include <cmath>

#include "doctest.h"

#include "fixtures.hpp"
#include "shadowrec/error.hpp"
#include "shadowrec/ingest.hpp"

using namespace shadowrec;

TEST_CASE("load_ratings re-indexes densely and keeps the last duplicate") {
    fixtures::TempDir dir("ingest");
    fixtures::write_file(dir / "r.csv",
                         "userId,movieId,rating,timestamp\n"
                         "7,100,4.0,1\n"
                         "3,200,2.5,2\n"
                         "7,200,1.0,3\n"
                         "7,100,5.0,4\n");
    const auto loaded = load_ratings(dir / "r.csv");
    CHECK(loaded.user_ids.ids() == std::vector<std::string>{"7", "3"});
    CHECK(loaded.item_ids.ids() == std::vector<std::string>{"100", "200"});
    REQUIRE(loaded.ratings.size() == 3);
    bool found = false;
    for (const auto& r : loaded.ratings.entries()) {
        if (r.user == 0 && r.item == 0) {
            CHECK(r.value == 5.0);
            found = true;
        }
    }
    CHECK(found);
}

TEST_CASE("load_ratings reports the offending line") {
    fixtures::TempDir dir("ingest");
    fixtures::write_file(dir / "bad.csv", "userId,movieId,rating\n1,2,3\n1,3,abc\n");
    try {
        load_ratings(dir / "bad.csv");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find(":3") != std::string::npos);
    }
    fixtures::write_file(dir / "range.csv", "userId,movieId,rating\n1,2,7\n");
    CHECK_THROWS_AS(load_ratings(dir / "range.csv"), ValidationError);
    fixtures::write_file(dir / "fields.csv", "userId,movieId,rating\n1,2\n");
    CHECK_THROWS_AS(load_ratings(dir / "fields.csv"), ParseError);
    CHECK_THROWS_AS(load_ratings(dir / "missing.csv"), IoError);

    RatingsFormat wide;
    wide.scale = {0, 10};
    fixtures::write_file(dir / "wide.csv", "userId,movieId,rating\n1,2,7\n");
    CHECK(load_ratings(dir / "wide.csv", wide).ratings.size() == 1);
}

TEST_CASE("metadata jsonl accepts scalar and list values") {
    fixtures::TempDir dir("ingest");
    fixtures::write_file(dir / "m.jsonl",
                         "{\"item_id\": \"100\", \"attributes\": {\"genre\": [\"Drama\", \"War\"], \"year\": 1999}}\n"
                         "\n"
                         "{\"item_id\": 200, \"attributes\": {\"genre\": \"Comedy\"}}\n");
    const auto records = load_metadata(dir / "m.jsonl");
    REQUIRE(records.size() == 2);
    CHECK(records[0].attributes.at("genre") == std::set<std::string>{"Drama", "War"});
    CHECK(records[0].attributes.at("year") == std::set<std::string>{"1999"});
    CHECK(records[1].item_id == "200");

    fixtures::write_file(dir / "broken.jsonl", "{\"item_id\": \"1\"}\n{not json\n");
    try {
        load_metadata(dir / "broken.jsonl");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find(":2") != std::string::npos);
    }
}

TEST_CASE("one-hot encoding names columns attribute=value in sorted order") {
    IdDictionary items({"a", "b", "c"});
    std::vector<RawItemRecord> records = {
        {"b", {{"genre", {"War"}}}},
        {"a", {{"genre", {"Drama", "War"}}, {"actor", {"X"}}}},
        {"zzz", {{"genre", {"Noir"}}}},
    };
    const auto meta = encode_one_hot(align_records(records, items));
    CHECK(meta.feature_names() == std::vector<std::string>{"actor=X", "genre=Drama", "genre=War"});
    CHECK(meta.column(2) == std::vector<std::size_t>{0, 1});
    CHECK(meta.item_features(2).empty());
}

TEST_CASE("merging sources prefixes colliding attribute names") {
    std::vector<std::pair<std::string, std::vector<RawItemRecord>>> sources = {
        {"imdb", {{"1", {{"genre", {"Drama"}}, {"actor", {"X"}}}}}},
        {"tropes", {{"1", {{"genre", {"Tragedy"}}, {"trope", {"Twist"}}}}, {"2", {{"trope", {"Twist"}}}}}},
    };
    const auto merged = merge_metadata_sources(sources);
    REQUIRE(merged.size() == 2);
    const auto& first = merged[0].attributes;
    CHECK(first.count("imdb:genre") == 1);
    CHECK(first.count("tropes:genre") == 1);
    CHECK(first.count("actor") == 1);
    CHECK(first.count("trope") == 1);
    CHECK(first.count("genre") == 0);
}

TEST_CASE("binary entropy oracle values") {
    CHECK(feature_entropy(0.0) == 0.0);
    CHECK(feature_entropy(1.0) == 0.0);
    CHECK(feature_entropy(0.5) == doctest::Approx(1.0).epsilon(1e-15));
    // -0.25 log2 0.25 - 0.75 log2 0.75
    CHECK(feature_entropy(0.25) == doctest::Approx(0.8112781244591328).epsilon(1e-14));
    CHECK(feature_entropy(0.1) == doctest::Approx(0.4689955935892812).epsilon(1e-14));
    CHECK(feature_entropy(0.3) == doctest::Approx(feature_entropy(0.7)).epsilon(1e-15));
    CHECK_THROWS_AS(feature_entropy(1.5), DomainError);
}

TEST_CASE("feature filters") {
    // marginals: f0 0.5, f1 0.125, f2 1.0, f3 0.25, f4 0.5
    const auto meta = fixtures::dense_meta({
        {1, 1, 1, 1, 0}, {1, 0, 1, 1, 0}, {1, 0, 1, 0, 0}, {1, 0, 1, 0, 0},
        {0, 0, 1, 0, 1}, {0, 0, 1, 0, 1}, {0, 0, 1, 0, 1}, {0, 0, 1, 0, 1},
    });
    CHECK(select_features(meta, FeatureFilterSpec::entropy_threshold(0.6)) == std::vector<std::size_t>{0, 3, 4});
    CHECK(select_features(meta, FeatureFilterSpec::entropy_threshold(0.0)).size() == 5);
    CHECK(select_features(meta, FeatureFilterSpec::min_support(2)) == std::vector<std::size_t>{0, 2, 3, 4});

    // Top-2: f0 and f4 tie at one bit; names break ties, output keeps column order.
    CHECK(select_features(meta, FeatureFilterSpec::top_k_entropy(2)) == std::vector<std::size_t>{0, 4});
    CHECK(select_features(meta, FeatureFilterSpec::top_k_entropy(3)) == std::vector<std::size_t>{0, 3, 4});
    std::vector<std::string> warnings;
    CHECK(select_features(meta, FeatureFilterSpec::top_k_entropy(9), &warnings).size() == 5);
    CHECK(warnings.size() == 1);

    const auto restricted = filter_features(meta, FeatureFilterSpec::top_k_entropy(2));
    CHECK(restricted.feature_names() == std::vector<std::string>{"f0", "f4"});
    CHECK(restricted.marginals()[1] == doctest::Approx(0.5));
    CHECK_THROWS_AS(FeatureFilterSpec::top_k_entropy(0).validate(), ConfigError);
}

TEST_CASE("pruning removes items without enough features") {
    const auto meta = fixtures::dense_meta({{1, 0}, {0, 0}, {1, 1}, {0, 0}});
    const auto pruned = prune_items(meta, 1);
    CHECK(pruned.kept_items == std::vector<std::size_t>{0, 2});
    CHECK(pruned.kept_mask == std::vector<bool>{true, false, true, false});
    CHECK(pruned.meta.n_items() == 2);
    // Marginals are recomputed over the surviving population.
    CHECK(pruned.meta.marginals()[0] == doctest::Approx(1.0));
    CHECK(pruned.meta.marginals()[1] == doctest::Approx(0.5));
    CHECK(prune_items(meta, 2).kept_items == std::vector<std::size_t>{2});
    CHECK_THROWS_AS(prune_items(meta, 3), EmptyResultError);
    CHECK_THROWS_AS(prune_items(meta, 0), ConfigError);
}

TEST_CASE("projection rebuilds a stored feature space") {
    IdDictionary items({"a", "b", "c"});
    std::vector<RawItemRecord> records = {
        {"a", {{"g", {"x", "y"}}}},
        {"b", {{"g", {"y"}}}},
        {"c", {{"g", {"z"}}}},
    };
    const auto projected = project_metadata(records, items, {"g=y", "g=missing"}, 1);
    CHECK(projected.kept_items == std::vector<std::size_t>{0, 1});
    CHECK(projected.meta.feature_names() == std::vector<std::string>{"g=y", "g=missing"});
    CHECK(projected.meta.support(1) == 0);
}
