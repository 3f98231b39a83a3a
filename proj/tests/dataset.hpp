#pragma once

#include <string>

#include "json.hpp"

#include "fixtures.hpp"
#include "shadowrec/ingest.hpp"
#include "shadowrec/synth.hpp"

namespace fixtures {

// Writes ratings.csv and items.jsonl for a small simulated catalogue. Item
// ids are the universe's "m0000" style ids; users are numbered from 1.
inline void write_dataset(const fs::path& dir, std::size_t n_items, std::size_t n_users, std::uint64_t seed) {
    using namespace shadowrec;
    ItemUniverseConfig universe;
    universe.n_items = n_items;
    universe.n_features = 12;
    const auto records = generate_item_universe(universe, seed);

    IdDictionary ids;
    for (const auto& r : records) {
        ids.intern(r.item_id);
    }
    const auto meta = encode_one_hot(align_records(records, ids));
    std::vector<std::size_t> pool(meta.n_features());
    for (std::size_t f = 0; f < pool.size(); ++f) {
        pool[f] = f;
    }
    SimConfig sim;
    sim.n_users = n_users;
    sim.ratings_per_user = std::min<std::size_t>(20, n_items);
    const auto profiles = generate_profiles(pool, sim, seed + 1);
    const auto simulated = simulate_ratings(profiles, meta, sim, seed + 2);

    std::string csv = "userId,movieId,rating,timestamp\n";
    for (const auto& r : simulated.ratings.entries()) {
        csv += std::to_string(r.user + 1) + "," + ids.id(r.item) + "," + std::to_string(r.value) + ",0\n";
    }
    write_file(dir / "ratings.csv", csv);

    std::string jsonl;
    for (const auto& r : records) {
        nlohmann::json attrs = nlohmann::json::object();
        for (const auto& [name, values] : r.attributes) {
            attrs[name] = std::vector<std::string>(values.begin(), values.end());
        }
        jsonl += nlohmann::json{{"item_id", r.item_id}, {"attributes", attrs}}.dump() + "\n";
    }
    write_file(dir / "items.jsonl", jsonl);
}

}  // namespace fixtures
