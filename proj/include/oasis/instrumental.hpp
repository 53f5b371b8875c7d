#pragma once

#include <cmath>
#include <span>

#include <Eigen/Core>

#include "oasis/error.hpp"
#include "oasis/pool.hpp"

namespace oasis {

inline constexpr double kDefaultEpsilon = 1e-3;

// Unnormalised asymptotically optimal sampling mass for a region whose mean
// prediction is `prediction`, match probability `pi`, at F-measure `f`.
template <typename Scalar>
Scalar optimal_mass(Scalar prediction, Scalar pi, Scalar f, Scalar alpha) {
  using std::sqrt;
  const Scalar negatives = (Scalar(1) - alpha) * (Scalar(1) - prediction) * f * sqrt(pi);
  const Scalar af = alpha * f;
  const Scalar positives =
      prediction * sqrt(af * af * (Scalar(1) - pi) + (Scalar(1) - f) * (Scalar(1) - f) * pi);
  return negatives + positives;
}

namespace detail {

template <typename Scalar>
void require_unit(Scalar x, const char* field) {
  if (!(x >= Scalar(0) && x <= Scalar(1)))
    throw Error(ErrorCategory::domain, std::string(field) + " must lie in [0,1]", field);
}

template <typename Derived>
void require_unit(const Eigen::MatrixBase<Derived>& v, const char* field) {
  for (Eigen::Index k = 0; k < v.size(); ++k) require_unit(v(k), field);
}

}  // namespace detail

// Raw (unnormalised) stratified optimal weights
//   omega_k * optimal_mass(lambda_k, pi_k, F, alpha).
template <typename DW, typename DL, typename DP>
Eigen::Matrix<typename DW::Scalar, Eigen::Dynamic, 1> raw_optimal_stratum_weights(
    const Eigen::MatrixBase<DW>& omega, const Eigen::MatrixBase<DL>& lambda,
    const Eigen::MatrixBase<DP>& pi_hat, typename DW::Scalar f_hat, typename DW::Scalar alpha) {
  using Scalar = typename DW::Scalar;
  if (omega.size() != lambda.size() || omega.size() != pi_hat.size())
    throw Error(ErrorCategory::parameter, "stratum vectors must have equal length");
  detail::require_unit(omega, "omega");
  detail::require_unit(lambda, "mean_predictions");
  detail::require_unit(pi_hat, "pi_hat");
  detail::require_unit(f_hat, "f_hat");
  detail::require_unit(alpha, "alpha");
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> raw(omega.size());
  for (Eigen::Index k = 0; k < omega.size(); ++k)
    raw(k) = omega(k) * optimal_mass<Scalar>(lambda(k), pi_hat(k), f_hat, alpha);
  return raw;
}

// Normalised optimal stratum weights v*. If every raw term vanishes the
// distribution falls back to omega.
template <typename DW, typename DL, typename DP>
Eigen::Matrix<typename DW::Scalar, Eigen::Dynamic, 1> optimal_stratum_weights(
    const Eigen::MatrixBase<DW>& omega, const Eigen::MatrixBase<DL>& lambda,
    const Eigen::MatrixBase<DP>& pi_hat, typename DW::Scalar f_hat, typename DW::Scalar alpha) {
  auto raw = raw_optimal_stratum_weights(omega, lambda, pi_hat, f_hat, alpha);
  const auto total = raw.sum();
  if (!(total > 0)) return omega / omega.sum();
  return raw / total;
}

template <typename Scalar>
struct InstrumentalDist {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> stratum_probs;  // v
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> optimal_part;   // v*
  Scalar epsilon;
};

// v = epsilon * omega + (1 - epsilon) * v*, with 0 < epsilon <= 1.
template <typename DS, typename DW>
InstrumentalDist<typename DS::Scalar> epsilon_greedy(const Eigen::MatrixBase<DS>& v_star,
                                                     const Eigen::MatrixBase<DW>& omega,
                                                     typename DS::Scalar epsilon) {
  using Scalar = typename DS::Scalar;
  if (!(epsilon > Scalar(0) && epsilon <= Scalar(1)))
    throw Error(ErrorCategory::domain, "epsilon must lie in (0,1]", "epsilon");
  if (v_star.size() != omega.size())
    throw Error(ErrorCategory::parameter, "stratum vectors must have equal length");
  return {epsilon * omega + (Scalar(1) - epsilon) * v_star, v_star, epsilon};
}

// Per-pair optimal distribution q*(z) proportional to
// p(z) * optimal_mass(prediction(z), proxy(z), F, alpha), normalised.
Eigen::VectorXd pairwise_optimal_dist(const Pool& pool, std::span<const double> proxy_probs,
                                      double f_guess, double alpha);

}  // namespace oasis
