#include "ltvwm/system_json.hpp"

#include <string>

#include "ltvwm/errors.hpp"
#include "ltvwm/file_util.hpp"
#include "ltvwm/linalg.hpp"

namespace ltvwm {
namespace {

nlohmann::json sequence_to_json(const MatrixSequence& seq, Step horizon) {
  bool constant = true;
  for (Step n = 1; n < horizon && constant; ++n) constant = seq[n] == seq[0];
  if (constant) return {{"constant", matrix_to_json(seq.front())}};
  nlohmann::json arr = nlohmann::json::array();
  for (Step n = 0; n < horizon; ++n) arr.push_back(matrix_to_json(seq[n]));
  return arr;
}

MatrixSequence sequence_from_json(const nlohmann::json& j, Step horizon, const std::string& name) {
  if (j.is_object()) {
    if (!j.contains("constant")) throw FormatError(name + ": object form needs a \"constant\" key");
    return MatrixSequence(static_cast<std::size_t>(horizon), matrix_from_json(j.at("constant"), name.c_str()));
  }
  if (!j.is_array()) throw FormatError(name + ": expected an array of matrices or {\"constant\": ...}");
  if (static_cast<Step>(j.size()) < horizon) {
    throw FormatError(name + " has " + std::to_string(j.size()) + " entries for horizon " + std::to_string(horizon));
  }
  MatrixSequence out;
  out.reserve(static_cast<std::size_t>(horizon));
  for (Step n = 0; n < horizon; ++n) out.push_back(matrix_from_json(j[static_cast<std::size_t>(n)], name.c_str()));
  return out;
}

void check_covariance(const Eigen::MatrixXd& m, const std::string& what) {
  if (!linalg::is_symmetric(m)) throw NotPositiveDefinite(what + " is not symmetric");
  linalg::cholesky_lower(m, what.c_str());
}

}  // namespace

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, const char* what) {
  if (j.is_number()) return Eigen::MatrixXd::Constant(1, 1, j.get<double>());
  if (!j.is_array() || j.empty()) throw FormatError(std::string(what) + ": expected a non-empty array of rows");
  // a flat array is a column vector
  if (j.front().is_number()) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), 1);
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (!j[i].is_number()) throw FormatError(std::string(what) + ": non-numeric entry");
      m(static_cast<Eigen::Index>(i), 0) = j[i].get<double>();
    }
    return m;
  }
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j.front().size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw FormatError(std::string(what) + ": ragged matrix rows");
    }
    for (Eigen::Index k = 0; k < cols; ++k) {
      const auto& v = row[static_cast<std::size_t>(k)];
      if (!v.is_number()) throw FormatError(std::string(what) + ": non-numeric entry");
      m(i, k) = v.get<double>();
    }
  }
  return m;
}

nlohmann::json system_to_json(const SystemTrajectory& sys) {
  check_dimensions(sys);
  nlohmann::json j;
  j["schema"] = kSystemSchema;
  j["horizon"] = sys.horizon;
  j["dt"] = sys.dt;
  j["A"] = sequence_to_json(sys.A, sys.horizon);
  j["B"] = sequence_to_json(sys.B, sys.horizon);
  j["C"] = sequence_to_json(sys.C, sys.horizon);
  j["K"] = sequence_to_json(sys.K, sys.horizon);
  j["L"] = sequence_to_json(sys.L, sys.horizon);
  j["sigma_w"] = sequence_to_json(sys.sigma_w, sys.horizon);
  j["sigma_z"] = sequence_to_json(sys.sigma_z, sys.horizon);
  j["sigma_e"] = matrix_to_json(sys.sigma_e);
  return j;
}

SystemTrajectory system_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw FormatError("system: expected a JSON object");
  if (j.value("schema", std::string{}) != kSystemSchema) {
    throw FormatError(std::string("system: schema must be \"") + kSystemSchema + "\"");
  }
  SystemTrajectory sys;
  try {
    sys.horizon = j.at("horizon").get<Step>();
    sys.dt = j.value("dt", 1.0);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("system: ") + e.what());
  }
  if (sys.horizon < 1) throw FormatError("system: horizon must be >= 1");
  if (!(sys.dt > 0.0)) throw FormatError("system: dt must be positive");
  for (const char* key : {"A", "B", "C", "K", "L", "sigma_w", "sigma_z", "sigma_e"}) {
    if (!j.contains(key)) throw FormatError(std::string("system: missing \"") + key + "\"");
  }
  sys.A = sequence_from_json(j["A"], sys.horizon, "A");
  sys.B = sequence_from_json(j["B"], sys.horizon, "B");
  sys.C = sequence_from_json(j["C"], sys.horizon, "C");
  sys.K = sequence_from_json(j["K"], sys.horizon, "K");
  sys.L = sequence_from_json(j["L"], sys.horizon, "L");
  sys.sigma_w = sequence_from_json(j["sigma_w"], sys.horizon, "sigma_w");
  sys.sigma_z = sequence_from_json(j["sigma_z"], sys.horizon, "sigma_z");
  sys.sigma_e = matrix_from_json(j["sigma_e"], "sigma_e");
  check_dimensions(sys);
  check_covariance(sys.sigma_e, "sigma_e");
  for (Step n = 0; n < sys.horizon; ++n) {
    if (n == 0 || sys.sigma_w[n] != sys.sigma_w[n - 1]) check_covariance(sys.sigma_w[n], "sigma_w[" + std::to_string(n) + "]");
    if (n == 0 || sys.sigma_z[n] != sys.sigma_z[n - 1]) check_covariance(sys.sigma_z[n], "sigma_z[" + std::to_string(n) + "]");
  }
  return sys;
}

void save_system(const SystemTrajectory& sys, const std::filesystem::path& path) {
  atomic_write(path, system_to_json(sys).dump(1) + "\n");
}

SystemTrajectory load_system(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return system_from_json(j);
}

}  // namespace ltvwm
