#include "ltvwm/realization_io.hpp"

#include <sstream>

#include "binary_io.hpp"
#include "ltvwm/file_util.hpp"

namespace ltvwm {
namespace {

constexpr std::string_view kMagic = "LTVWMRZ1";

void header(std::ostream& out, const char* prefix, Eigen::Index count) {
  for (Eigen::Index i = 0; i < count; ++i) out << ',' << prefix << i;
}

void row(std::ostream& out, const Eigen::MatrixXd& m, Step n) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) out << ',' << m(i, n);
}

}  // namespace

void save_realization_csv(const Realization& rz, const std::filesystem::path& path) {
  std::ostringstream out;
  out.precision(17);
  out << "step";
  header(out, "x", rz.p());
  header(out, "xhat", rz.p());
  header(out, "y", rz.r());
  header(out, "e", rz.q());
  header(out, "v", rz.r());
  out << ",attack_active\n";
  for (Step n = 0; n < rz.steps(); ++n) {
    out << n;
    row(out, rz.x, n);
    row(out, rz.xhat, n);
    row(out, rz.y, n);
    row(out, rz.e, n);
    row(out, rz.v, n);
    out << ',' << static_cast<int>(rz.attack_active[static_cast<std::size_t>(n)]) << '\n';
  }
  atomic_write(path, out.str());
}

void save_realization(const Realization& rz, const std::filesystem::path& path) {
  detail::BinaryWriter w;
  w.magic(kMagic);
  w.u64(rz.seed);
  for (const auto* m : {&rz.x, &rz.xhat, &rz.y, &rz.e, &rz.u, &rz.v, &rz.w, &rz.z}) w.matrix(*m);
  w.i64(static_cast<std::int64_t>(rz.attack_active.size()));
  w.bytes(rz.attack_active.data(), rz.attack_active.size());
  atomic_write(path, w.data());
}

Realization load_realization(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  detail::BinaryReader r(data, path.string());
  r.expect_magic(kMagic);
  Realization rz;
  rz.seed = r.u64();
  for (auto* m : {&rz.x, &rz.xhat, &rz.y, &rz.e, &rz.u, &rz.v, &rz.w, &rz.z}) *m = r.matrix();
  const auto count = r.i64();
  if (count != rz.y.cols() || rz.x.cols() != count + 1 || rz.xhat.cols() != count + 1 || rz.e.cols() != count ||
      rz.v.cols() != count) {
    throw FormatError(path.string() + ": inconsistent realization lengths");
  }
  rz.attack_active.resize(static_cast<std::size_t>(count));
  r.bytes(rz.attack_active.data(), rz.attack_active.size());
  r.expect_end();
  return rz;
}

nlohmann::json ensemble_manifest(const EnsembleRun& ensemble, Step steps) {
  nlohmann::json j;
  j["schema"] = "ltvwm.ensemble/1";
  j["system_fingerprint"] = fingerprint_hex(ensemble.sys_fingerprint);
  j["base_seed"] = ensemble.base_seed;
  j["count"] = ensemble.realizations.size();
  j["steps"] = steps;
  j["attacked"] = ensemble.attacked;
  j["seeds"] = ensemble.seeds;
  return j;
}

}  // namespace ltvwm
