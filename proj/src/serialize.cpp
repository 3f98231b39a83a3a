#include "shadowrec/serialize.hpp"

#include <fstream>
#include <memory>

#include "shadowrec/error.hpp"
#include "shadowrec/shadow.hpp"

namespace shadowrec {

using nlohmann::json;

namespace {

json matrix_to_json(const Matrix& m) {
    return json::array_t(m.data(), m.data() + m.size());
}

Matrix matrix_from_json(const json& values, std::size_t rows, std::size_t cols, const char* what) {
    if (!values.is_array() || values.size() != rows * cols) {
        throw ParseError(std::string(what) + " must hold " + std::to_string(rows * cols) + " values");
    }
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows * cols; ++i) {
        m.data()[i] = values[i].get<double>();
    }
    return m;
}

void check_header(const json& doc, const char* format) {
    if (!doc.is_object() || doc.value("format", "") != format) {
        throw ParseError(std::string("not a ") + format + " document");
    }
    if (doc.value("version", 0) != kFormatVersion) {
        throw ParseError(std::string(format) + " version " + doc.value("version", json(0)).dump() +
                         " is not supported (expected " + std::to_string(kFormatVersion) + ")");
    }
}

}  // namespace

json factor_model_to_json(const FactorModel& model) {
    return {
        {"format", kFactorModelFormat},
        {"version", kFormatVersion},
        {"rank", model.rank},
        {"lambda", model.lambda},
        {"n_users", model.n_users()},
        {"n_items", model.n_items()},
        {"user_ids", model.user_ids.ids()},
        {"item_ids", model.item_ids.ids()},
        {"user_factors", matrix_to_json(model.user_factors)},
        {"item_factors", matrix_to_json(model.item_factors)},
    };
}

FactorModel factor_model_from_json(const json& doc) {
    check_header(doc, kFactorModelFormat);
    try {
        FactorModel model;
        model.rank = doc.at("rank").get<std::size_t>();
        model.lambda = doc.at("lambda").get<double>();
        const auto n_users = doc.at("n_users").get<std::size_t>();
        const auto n_items = doc.at("n_items").get<std::size_t>();
        model.user_factors = matrix_from_json(doc.at("user_factors"), n_users, model.rank, "user_factors");
        model.item_factors = matrix_from_json(doc.at("item_factors"), n_items, model.rank, "item_factors");
        model.user_ids = IdDictionary(doc.at("user_ids").get<std::vector<std::string>>());
        model.item_ids = IdDictionary(doc.at("item_ids").get<std::vector<std::string>>());
        model.validate();
        return model;
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed factor model: ") + e.what());
    }
}

json regressor_to_json(const Regressor& regressor) {
    if (const auto* linear = std::get_if<LinearRegressor>(&regressor)) {
        return {{"type", "linear"},
                {"weights", linear->weights},
                {"intercept", linear->intercept},
                {"ridge", linear->ridge}};
    }
    const auto& tree = std::get<RegressionTree>(regressor);
    json nodes = json::array();
    for (const auto& node : tree.nodes()) {
        if (node.is_leaf()) {
            nodes.push_back({{"value", node.value}});
        } else {
            nodes.push_back({{"feature", node.feature},
                             {"threshold", node.threshold},
                             {"value", node.value},
                             {"left", node.left},
                             {"right", node.right}});
        }
    }
    return {{"type", "tree"},
            {"n_features", tree.n_features()},
            {"max_depth", tree.params().max_depth},
            {"bins", tree.params().bins},
            {"min_leaf", tree.params().min_leaf},
            {"nodes", nodes}};
}

Regressor regressor_from_json(const json& doc) {
    try {
        const auto type = doc.at("type").get<std::string>();
        if (type == "linear") {
            LinearRegressor linear;
            linear.weights = doc.at("weights").get<std::vector<double>>();
            linear.intercept = doc.at("intercept").get<double>();
            linear.ridge = doc.at("ridge").get<double>();
            return linear;
        }
        if (type == "tree") {
            TreeParams params{doc.at("max_depth").get<std::size_t>(), doc.at("bins").get<std::size_t>(),
                              doc.at("min_leaf").get<std::size_t>()};
            std::vector<RegressionTree::Node> nodes;
            for (const auto& n : doc.at("nodes")) {
                RegressionTree::Node node;
                node.value = n.at("value").get<double>();
                if (n.contains("feature")) {
                    node.feature = n.at("feature").get<std::size_t>();
                    node.threshold = n.at("threshold").get<double>();
                    node.left = n.at("left").get<std::size_t>();
                    node.right = n.at("right").get<std::size_t>();
                }
                nodes.push_back(node);
            }
            return RegressionTree(std::move(nodes), params, doc.at("n_features").get<std::size_t>());
        }
        throw ParseError("unknown regressor type '" + type + "'");
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed regressor: ") + e.what());
    }
}

json shadow_model_to_json(const ShadowModel& shadow) {
    json predictors = json::array();
    for (const auto& p : shadow.predictors) {
        predictors.push_back(regressor_to_json(p));
    }
    json spec = {{"kind", to_string(shadow.spec.kind)}};
    if (shadow.spec.kind == ShadowSpec::Kind::Linear) {
        spec["ridge"] = shadow.spec.ridge;
    } else {
        spec["max_depth"] = shadow.spec.tree.max_depth;
        spec["bins"] = shadow.spec.tree.bins;
        spec["min_leaf"] = shadow.spec.tree.min_leaf;
    }
    return {
        {"format", kShadowModelFormat},
        {"version", kFormatVersion},
        {"spec", spec},
        {"split", {{"train_fraction", shadow.split.train_fraction}, {"seed", shadow.split.seed}}},
        {"feature_names", shadow.feature_names},
        {"meta_items", shadow.meta_items},
        {"train_items", shadow.train_items},
        {"eval_items", shadow.eval_items},
        {"eval_is_train", shadow.eval_is_train},
        {"predictors", predictors},
        {"baseline", factor_model_to_json(*shadow.baseline)},
    };
}

ShadowModel shadow_model_from_json(const json& doc) {
    check_header(doc, kShadowModelFormat);
    try {
        ShadowModel shadow;
        const auto& spec = doc.at("spec");
        shadow.spec.kind = parse_shadow_kind(spec.at("kind").get<std::string>());
        if (shadow.spec.kind == ShadowSpec::Kind::Linear) {
            shadow.spec.ridge = spec.at("ridge").get<double>();
        } else {
            shadow.spec.tree = {spec.at("max_depth").get<std::size_t>(), spec.at("bins").get<std::size_t>(),
                                spec.at("min_leaf").get<std::size_t>()};
        }
        shadow.split.train_fraction = doc.at("split").at("train_fraction").get<double>();
        shadow.split.seed = doc.at("split").at("seed").get<std::uint64_t>();
        shadow.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
        shadow.meta_items = doc.at("meta_items").get<std::vector<std::size_t>>();
        shadow.train_items = doc.at("train_items").get<std::vector<std::size_t>>();
        shadow.eval_items = doc.at("eval_items").get<std::vector<std::size_t>>();
        shadow.eval_is_train = doc.at("eval_is_train").get<bool>();
        for (const auto& p : doc.at("predictors")) {
            shadow.predictors.push_back(regressor_from_json(p));
        }
        shadow.baseline = std::make_shared<const FactorModel>(factor_model_from_json(doc.at("baseline")));
        if (shadow.predictors.size() != shadow.baseline->rank) {
            throw ParseError("shadow model has " + std::to_string(shadow.predictors.size()) +
                             " predictors for a rank-" + std::to_string(shadow.baseline->rank) + " baseline");
        }
        for (const auto& p : shadow.predictors) {
            if (feature_count(p) != shadow.feature_names.size()) {
                throw ParseError("shadow predictor feature count does not match feature_names");
            }
        }
        shadow.index_items();
        return shadow;
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed shadow model: ") + e.what());
    }
}

void write_json_file(const std::filesystem::path& path, const json& doc) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << doc.dump() << '\n';
    if (!out) {
        throw IoError("failed writing " + path.string());
    }
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

}  // namespace shadowrec
