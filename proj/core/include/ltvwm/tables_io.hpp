#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "ltvwm/normalization.hpp"

namespace ltvwm {

/// Writes `<base>.bin` ("LTVWMTB1") and the manifest `<base>.json`. Returns the manifest.
nlohmann::json save_tables(const NormalizationTables& tables, const std::filesystem::path& base);

/// Reads both files, checks the payload digest recorded in the manifest, and refactors G.
NormalizationTables load_tables(const std::filesystem::path& base);

nlohmann::json tables_manifest(const NormalizationTables& tables);

}  // namespace ltvwm
