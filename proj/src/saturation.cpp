#include "cs/saturation.hpp"

#include <stdexcept>

#include "cs/lifting.hpp"
#include "cs/rng.hpp"

namespace cs {

void SaturationSpec::validate(int n, int m) const {
  if (y_max.size() != n)
    throw std::invalid_argument("saturation: y_max must have one entry per state");
  if ((y_max.array() <= 0.0).any())
    throw std::invalid_argument("saturation: y_max entries must be positive");
  if (Hu.rows() == 0 || Hu.cols() != m)
    throw std::invalid_argument("saturation: Hu must have one column per input");
  if (hu.size() != Hu.rows())
    throw std::invalid_argument("saturation: hu length must match Hu rows");
  if (moment_samples < 1000)
    throw std::invalid_argument("saturation: moment_samples too small");
}

Eigen::VectorXd saturate(const Eigen::VectorXd& y, const Eigen::VectorXd& y_max) {
  return y.cwiseMax(-y_max).cwiseMin(y_max);
}

SaturatedMoments saturated_moments(const Eigen::MatrixXd& Sigma,
                                   const Eigen::VectorXd& y_max, long samples,
                                   uint64_t seed) {
  const int n = static_cast<int>(Sigma.rows());
  if (Sigma.cols() != n || y_max.size() != n)
    throw std::invalid_argument("saturated_moments: dimension mismatch");
  if (samples <= 0) throw std::invalid_argument("saturated_moments: samples <= 0");
  const Eigen::MatrixXd L = psd_sqrt(Sigma);
  Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd outer = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd z(n), y(n), phi(n);
  for (long s = 0; s < samples; ++s) {
    CounterRng rng(CounterRng::derive_key(seed, static_cast<uint64_t>(s), 0));
    for (int i = 0; i < n; ++i) z[i] = rng.normal();
    y.noalias() = L * z;
    phi = saturate(y, y_max);
    cross.noalias() += y * phi.transpose();
    outer.noalias() += phi * phi.transpose();
  }
  cross /= static_cast<double>(samples);
  outer /= static_cast<double>(samples);
  outer = 0.5 * (outer + outer.transpose()).eval();
  return {cross, outer};
}

Eigen::MatrixXd stein_cross_moment(const Eigen::MatrixXd& Sigma,
                                   const Eigen::VectorXd& y_max) {
  const int n = static_cast<int>(Sigma.rows());
  Eigen::VectorXd gain(n);
  for (int j = 0; j < n; ++j) {
    const double sd = std::sqrt(std::max(Sigma(j, j), 0.0));
    // P(|y_j| <= c) = 2 Phi(c / sd) - 1; a deterministic component is never
    // clipped, so its gain is one.
    gain[j] = sd > 0.0 ? 2.0 * norm_cdf(y_max[j] / sd) - 1.0 : 1.0;
  }
  return Sigma * gain.asDiagonal();
}

}  // namespace cs
