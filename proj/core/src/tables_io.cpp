#include "ltvwm/tables_io.hpp"

#include "binary_io.hpp"
#include "ltvwm/file_util.hpp"

namespace ltvwm {
namespace {

constexpr std::string_view kMagic = "LTVWMTB1";

std::filesystem::path with_suffix(std::filesystem::path base, const char* ext) {
  base += ext;
  return base;
}

}  // namespace

nlohmann::json tables_manifest(const NormalizationTables& t) {
  nlohmann::json j;
  j["schema"] = "ltvwm.tables/1";
  j["system_fingerprint"] = fingerprint_hex(t.sys_fingerprint);
  j["window"] = t.window;
  j["kappa"] = t.kappa;
  j["steps"] = t.steps();
  j["provenance"] = t.provenance == Provenance::analytic ? "analytic" : "ensemble";
  j["ensemble_count"] = t.ensemble_count;
  j["has_G"] = t.has_G();
  j["warnings"] = t.warnings;
  return j;
}

nlohmann::json save_tables(const NormalizationTables& t, const std::filesystem::path& base) {
  detail::BinaryWriter w;
  w.magic(kMagic);
  w.u64(t.sys_fingerprint);
  w.i64(t.window);
  w.i64(t.kappa);
  w.i64(t.provenance == Provenance::analytic ? 0 : 1);
  w.u64(t.ensemble_count);
  w.i64(static_cast<std::int64_t>(t.V.size()));
  w.i64(static_cast<std::int64_t>(t.sigma_delta.size()));
  w.i64(static_cast<std::int64_t>(t.G.size()));
  for (const auto& m : t.V) w.matrix(m);
  for (const auto& m : t.sigma_delta) w.matrix(m);
  for (const auto& m : t.G) w.matrix(m);
  nlohmann::json manifest = tables_manifest(t);
  const auto bin = with_suffix(base, ".bin");
  manifest["payload"] = bin.filename().string();
  manifest["payload_digest"] = fingerprint_hex(fnv1a64(w.data()));
  atomic_write(bin, w.data());
  atomic_write(with_suffix(base, ".json"), manifest.dump(2) + "\n");
  return manifest;
}

NormalizationTables load_tables(const std::filesystem::path& base) {
  const auto json_path = with_suffix(base, ".json");
  const auto bin_path = with_suffix(base, ".bin");
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_file(json_path));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(json_path.string() + ": " + e.what());
  }
  const std::string data = read_file(bin_path);
  if (manifest.value("payload_digest", std::string{}) != fingerprint_hex(fnv1a64(data))) {
    throw FormatError(bin_path.string() + ": payload digest does not match its manifest");
  }
  detail::BinaryReader r(data, bin_path.string());
  r.expect_magic(kMagic);
  NormalizationTables t;
  t.sys_fingerprint = r.u64();
  t.window = r.i64();
  t.kappa = static_cast<int>(r.i64());
  t.provenance = r.i64() == 0 ? Provenance::analytic : Provenance::ensemble;
  t.ensemble_count = r.u64();
  const auto nv = r.i64();
  const auto ns = r.i64();
  const auto ng = r.i64();
  if (nv < 0 || ns < 0 || ng < 0) throw FormatError(bin_path.string() + ": corrupt table counts");
  for (std::int64_t i = 0; i < nv; ++i) t.V.push_back(r.matrix());
  for (std::int64_t i = 0; i < ns; ++i) t.sigma_delta.push_back(r.matrix());
  for (std::int64_t i = 0; i < ng; ++i) t.G.push_back(r.matrix());
  r.expect_end();
  if (manifest.contains("warnings")) t.warnings = manifest["warnings"].get<std::vector<std::string>>();
  factor_G(t);
  return t;
}

}  // namespace ltvwm
