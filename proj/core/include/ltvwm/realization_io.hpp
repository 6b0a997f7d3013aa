#pragma once

#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

#include "ltvwm/realization.hpp"
#include "ltvwm/simulate.hpp"

namespace ltvwm {

/// One row per step: step, x_*, xhat_*, y_*, e_*, v_*, attack_active.
void save_realization_csv(const Realization& rz, const std::filesystem::path& path);

/// Lossless binary form ("LTVWMRZ1").
void save_realization(const Realization& rz, const std::filesystem::path& path);
Realization load_realization(const std::filesystem::path& path);

/// Seeds, fingerprint and shape of an ensemble, enough to regenerate it.
nlohmann::json ensemble_manifest(const EnsembleRun& ensemble, Step steps);

}  // namespace ltvwm
