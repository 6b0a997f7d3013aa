#include "ltvwm/file_util.hpp"

#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include "ltvwm/errors.hpp"
#include "ltvwm/ltv_model.hpp"

namespace ltvwm {

void atomic_write(const std::filesystem::path& path, std::string_view content) {
  static std::atomic<std::uint64_t> counter{0};
  const auto parent = path.parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  const std::uint64_t tag = fnv1a64(std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())) + ":" +
                                    std::to_string(counter.fetch_add(1)));
  std::filesystem::path tmp = path;
  tmp += ".tmp." + fingerprint_hex(tag);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::filesystem::remove(tmp);
      throw std::runtime_error("write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot rename onto " + path.string() + ": " + ec.message());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const nlohmann::json& config) { return fingerprint_hex(fnv1a64(config.dump())); }

}  // namespace ltvwm
