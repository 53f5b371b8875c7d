#include "oasis/bayes_model.hpp"

namespace oasis {

double plug_in_f_measure(const Eigen::VectorXd& pi, const Strata& strata, double alpha) {
  const auto& w = strata.weights;
  const auto& lambda = strata.mean_predictions;
  const double tp = (w.array() * pi.array() * lambda.array()).sum();
  const double predicted = (w.array() * lambda.array()).sum();
  const double actual = (w.array() * pi.array()).sum();
  const double denom = alpha * predicted + (1.0 - alpha) * actual;
  if (!(denom > 0.0))
    throw Error(ErrorCategory::undefined_measure,
                "plug-in F-measure undefined: zero denominator");
  return tp / denom;
}

InitialModel initialize_model(const Pool& pool, const Strata& strata, double alpha,
                              std::optional<double> tau, double eta) {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw Error(ErrorCategory::domain, "alpha must lie in [0,1]", "alpha");
  if (pool.scores_are_probabilities()) {
    for (const auto& p : pool.pairs())
      if (p.score < 0.0 || p.score > 1.0)
        throw Error(ErrorCategory::inconsistent_flag,
                    "scores flagged as probabilities but pair '" + p.pair_id +
                        "' has a score outside [0,1]",
                    "score");
  }
  const auto K = static_cast<Eigen::Index>(strata.count());
  Eigen::VectorXd pi0(K);
  for (Eigen::Index k = 0; k < K; ++k) {
    const auto& members = strata.members[static_cast<std::size_t>(k)];
    double mean = 0.0;
    if (pool.uniform_marginal()) {
      for (auto i : members) mean += pool[i].score;
      mean /= static_cast<double>(members.size());
    } else {
      double mass = 0.0;
      for (auto i : members) {
        mean += pool.marginal()[i] * pool[i].score;
        mass += pool.marginal()[i];
      }
      mean = mass > 0.0 ? mean / mass : 0.0;
    }
    pi0(k) = pool.scores_are_probabilities() ? mean : logistic(mean - tau.value_or(0.0));
  }
  const double f0 = plug_in_f_measure(pi0, strata, alpha);
  return InitialModel{pi0, f0, PosteriorMatrix<double>(pi0, eta)};
}

}  // namespace oasis
