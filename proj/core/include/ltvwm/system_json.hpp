#pragma once

#include <filesystem>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "ltvwm/ltv_model.hpp"

namespace ltvwm {

/// Schema tag written into every system file.
inline constexpr const char* kSystemSchema = "ltvwm.system/1";

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, const char* what = "matrix");

/// Sequences whose entries are all equal are written as {"constant": matrix}; others as per-step arrays.
nlohmann::json system_to_json(const SystemTrajectory& sys);

/// Parses and validates shapes and covariance positive definiteness; throws FormatError,
/// DimensionError or NotPositiveDefinite.
SystemTrajectory system_from_json(const nlohmann::json& j);

void save_system(const SystemTrajectory& sys, const std::filesystem::path& path);
SystemTrajectory load_system(const std::filesystem::path& path);

}  // namespace ltvwm
