#include "oasis/instrumental.hpp"

namespace oasis {

Eigen::VectorXd pairwise_optimal_dist(const Pool& pool, std::span<const double> proxy_probs,
                                      double f_guess, double alpha) {
  if (proxy_probs.size() != pool.size())
    throw Error(ErrorCategory::parameter, "proxy probabilities must align with the pool",
                "proxy_probs");
  detail::require_unit(f_guess, "f_guess");
  detail::require_unit(alpha, "alpha");
  const auto N = static_cast<Eigen::Index>(pool.size());
  Eigen::VectorXd q(N);
  for (Eigen::Index i = 0; i < N; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    detail::require_unit(proxy_probs[idx], "proxy_probs");
    q(i) = pool.marginal()[idx] *
           optimal_mass<double>(pool[idx].predicted_label, proxy_probs[idx], f_guess, alpha);
  }
  const double total = q.sum();
  if (!(total > 0.0))
    throw Error(ErrorCategory::degenerate_distribution,
                "optimal instrumental distribution has zero total mass");
  return q / total;
}

}  // namespace oasis
