#pragma once

#include <cmath>
#include <cstdint>
#include <optional>

#include <Eigen/Core>

#include "oasis/error.hpp"
#include "oasis/pool.hpp"
#include "oasis/stratification.hpp"

namespace oasis {

// Independent beta-Bernoulli model per stratum.
//
// gamma() row 0 holds match pseudo-counts, row 1 non-match pseudo-counts.
// Each column is (prior column) * decay_k + (observed counts), where decay_k
// is 1 unless prior decay is enabled and the stratum has been labelled n_k >= 1
// times, in which case it is 1/n_k.
template <typename Scalar>
class PosteriorMatrix {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix2X = Eigen::Matrix<Scalar, 2, Eigen::Dynamic>;

  PosteriorMatrix() = default;

  template <typename Derived>
  PosteriorMatrix(const Eigen::MatrixBase<Derived>& prior_pi0, Scalar eta)
      : prior_pi0_(prior_pi0), eta_(eta) {
    if (!(eta > Scalar(0)))
      throw Error(ErrorCategory::parameter, "prior strength eta must be positive", "eta");
    for (Eigen::Index k = 0; k < prior_pi0_.size(); ++k)
      if (!(prior_pi0_(k) >= Scalar(0) && prior_pi0_(k) <= Scalar(1)))
        throw Error(ErrorCategory::domain, "prior means must lie in [0,1]", "prior_pi0");
    prior_.resize(2, prior_pi0_.size());
    prior_.row(0) = eta_ * prior_pi0_.transpose();
    prior_.row(1) = eta_ * (Scalar(1) - prior_pi0_.array()).matrix().transpose();
    counts_ = Matrix2X::Zero(2, prior_pi0_.size());
    gamma_ = prior_;
  }

  Eigen::Index strata() const noexcept { return gamma_.cols(); }
  const Matrix2X& gamma() const noexcept { return gamma_; }
  const Matrix2X& prior() const noexcept { return prior_; }
  const Vector& prior_pi0() const noexcept { return prior_pi0_; }
  Scalar eta() const noexcept { return eta_; }

  // n_k: number of labels observed in stratum k.
  std::int64_t labels_in(Eigen::Index k) const {
    return static_cast<std::int64_t>(counts_(0, k) + counts_(1, k));
  }
  const Matrix2X& observed_counts() const noexcept { return counts_; }

  void update(Eigen::Index k, int label, bool prior_decay) {
    if (k < 0 || k >= strata())
      throw Error(ErrorCategory::parameter, "stratum index out of range", "stratum");
    if (label != 0 && label != 1)
      throw Error(ErrorCategory::validation, "label must be 0 or 1", "label");
    counts_(label == 1 ? 0 : 1, k) += Scalar(1);
    const Scalar n = counts_(0, k) + counts_(1, k);
    if (prior_decay && n >= Scalar(1))
      gamma_.col(k) = prior_.col(k) / n + counts_.col(k);
    else
      gamma_.col(k) = prior_.col(k) + counts_.col(k);
  }

  Vector means() const {
    return (gamma_.row(0).array() / gamma_.colwise().sum().array()).matrix().transpose();
  }

 private:
  Vector prior_pi0_;
  Scalar eta_ = Scalar(1);
  Matrix2X prior_;
  Matrix2X counts_;
  Matrix2X gamma_;
};

template <typename Scalar>
typename PosteriorMatrix<Scalar>::Vector posterior_means(const PosteriorMatrix<Scalar>& model) {
  return model.means();
}

template <typename Scalar>
PosteriorMatrix<Scalar> update_posterior(PosteriorMatrix<Scalar> model, Eigen::Index k, int label,
                                         bool prior_decay) {
  model.update(k, label, prior_decay);
  return model;
}

template <typename Scalar>
Scalar logistic(Scalar x) {
  return Scalar(1) / (Scalar(1) + std::exp(-x));
}

// Score-derived starting point for the sampler.
struct InitialModel {
  Eigen::VectorXd prior_pi0;  // per-stratum guess of the match rate
  double initial_f = 0.0;
  PosteriorMatrix<double> posterior;
};

// Per-stratum mean score (mapped through the logistic of score - tau when the
// scores are not probabilities), the plug-in F guess, and the prior
// eta * [pi0; 1 - pi0].
InitialModel initialize_model(const Pool& pool, const Strata& strata, double alpha,
                              std::optional<double> tau, double eta);

// Plug-in F from per-stratum match rates, weights and mean predictions.
// Throws undefined_measure on a zero denominator.
double plug_in_f_measure(const Eigen::VectorXd& pi, const Strata& strata, double alpha);

}  // namespace oasis
