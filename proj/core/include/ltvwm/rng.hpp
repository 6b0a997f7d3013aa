#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "ltvwm/ltv_model.hpp"

namespace ltvwm {

/// SplitMix64 finalizer; a bijective 64-bit mix.
std::uint64_t splitmix64(std::uint64_t x);

/// Seed for stream `stream` under `base`. Depends only on the pair, never on call order.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// Independent sub-streams used inside one realization.
enum class Stream : std::uint64_t {
  process_noise = 1,
  measurement_noise = 2,
  watermark = 3,
  attack = 4,
};

/// Seeded generator of standard normal variates.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}
  Rng(std::uint64_t base, Stream stream) : Rng(derive_seed(base, static_cast<std::uint64_t>(stream))) {}

  double normal() { return normal_(engine_); }

  Eigen::VectorXd standard_normal(Eigen::Index n) {
    Eigen::VectorXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) out[i] = normal();
    return out;
  }

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

/// Zero-mean Gaussian draws with a per-step covariance. Cholesky factors are computed
/// once; runs of identical consecutive covariances share one factor.
class GaussianSequenceSampler {
 public:
  GaussianSequenceSampler() = default;
  /// Throws NotPositiveDefinite naming `what` and the offending step.
  GaussianSequenceSampler(const MatrixSequence& covariances, Step steps, const char* what);

  Eigen::VectorXd draw(Step n, Rng& rng) const {
    const Eigen::MatrixXd& l = factors_[index_[n]];
    return l * rng.standard_normal(l.cols());
  }

  const Eigen::MatrixXd& factor(Step n) const { return factors_[index_[n]]; }
  Step steps() const { return static_cast<Step>(index_.size()); }
  std::size_t distinct_factors() const { return factors_.size(); }

 private:
  std::vector<Eigen::MatrixXd> factors_;
  std::vector<std::size_t> index_;
};

}  // namespace ltvwm
