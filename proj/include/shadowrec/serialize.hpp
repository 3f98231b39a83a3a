#pragma once

#include <filesystem>

#include "json.hpp"

#include "shadowrec/datamodel.hpp"
#include "shadowrec/regressors.hpp"

namespace shadowrec {

struct ShadowModel;

// File layouts are documented in docs/file-formats.md. Every file carries a
// "format" tag and an integer "version"; readers reject anything else.
inline constexpr const char* kFactorModelFormat = "shadowrec.factor_model";
inline constexpr const char* kShadowModelFormat = "shadowrec.shadow_model";
inline constexpr int kFormatVersion = 1;

nlohmann::json factor_model_to_json(const FactorModel& model);
FactorModel factor_model_from_json(const nlohmann::json& doc);

nlohmann::json regressor_to_json(const Regressor& regressor);
Regressor regressor_from_json(const nlohmann::json& doc);

nlohmann::json shadow_model_to_json(const ShadowModel& shadow);
ShadowModel shadow_model_from_json(const nlohmann::json& doc);

void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc);
nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace shadowrec
