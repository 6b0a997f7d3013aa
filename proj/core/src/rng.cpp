#include "ltvwm/rng.hpp"

#include <string>

#include "ltvwm/errors.hpp"
#include "ltvwm/linalg.hpp"

namespace ltvwm {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return splitmix64(splitmix64(base) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

GaussianSequenceSampler::GaussianSequenceSampler(const MatrixSequence& covariances, Step steps,
                                                 const char* what) {
  if (steps > static_cast<Step>(covariances.size())) {
    throw DimensionError(std::string(what) + ": covariance sequence shorter than requested steps");
  }
  index_.reserve(static_cast<std::size_t>(steps));
  const Eigen::MatrixXd* previous = nullptr;
  for (Step n = 0; n < steps; ++n) {
    const Eigen::MatrixXd& cov = covariances[n];
    if (previous == nullptr || previous->rows() != cov.rows() || *previous != cov) {
      const std::string label = std::string(what) + "[" + std::to_string(n) + "]";
      factors_.push_back(linalg::cholesky_lower(cov, label.c_str()));
      previous = &cov;
    }
    index_.push_back(factors_.size() - 1);
  }
}

}  // namespace ltvwm
