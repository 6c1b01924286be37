#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gmix/linalg.hpp"
#include "gmix/models.hpp"
#include "gmix/optim.hpp"

namespace gmix {

struct EmConfig {
  int max_iter = 1000;
  double tol = 1e-6;
  double ridge = 1e-6;
  std::uint64_t seed = 0;
};

// Natural-parameter state of a full-covariance Gaussian mixture.
struct GmmState {
  std::vector<double> weights;
  Mat<double> means;  // K×p
  std::vector<Mat<double>> covariances;
};

struct EStepResult {
  Mat<double> gamma;                // n×K responsibilities
  std::vector<double> point_loglik; // per-point mixture log-density
  double mean_loglik = 0.0;
};

// Log-space E-step. Throws NumericError if a covariance is not positive
// definite.
EStepResult em_e_step(const GmmState& state, const Mat<double>& x);

// M-step: responsibility-weighted weights, means, and scatters with
// `ridge` added to each covariance diagonal. Components whose total
// responsibility falls below 1e-10 are left untouched and returned so the
// caller can reseed them.
std::vector<int> em_m_step(const Mat<double>& x, const Mat<double>& gamma,
                           double ridge, GmmState& state);

// Final state flattened to the unconstrained GMM coordinates: log weights,
// means, packed Cholesky factors.
std::vector<double> gmm_theta_from_state(const GmmState& state);

// EM from the given means (weights uniform when empty, identity
// covariances), stopping on |ΔL| < tol. Empty components are reseeded at
// the point the current mixture explains worst. The returned theta is the
// flattened final state; trajectory entries are mean log-likelihoods.
FitResult em_fit_gmm(const Dataset& data, int K, const Mat<double>& init_means,
                     std::span<const double> init_weights,
                     const EmConfig& cfg);

}  // namespace gmix
