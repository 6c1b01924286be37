#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gmix/em.hpp"
#include "gmix/models.hpp"
#include "gmix/optim.hpp"

namespace gmix {

enum class CovMode { FULL, EEI, VVI };

CovMode parse_cov_mode(std::string_view s);
const char* to_string(CovMode m);

struct SimSpec {
  std::size_t n = 100;
  int p = 2;
  int K = 1;
  double scale = 5.0;
  std::uint64_t seed = 0;
  CovMode covariance_mode = CovMode::FULL;
  bool imbalance = false;
  int noise_features = 0;
};

void validate_sim_spec(const SimSpec& spec);

struct SimResult {
  Dataset data;       // n rows, p + noise_features columns, labels filled
  ParamSet truth;     // full-covariance coordinates over all columns
  std::vector<double> weights;
  Mat<double> means;                     // K × total dim; noise dims zero
  std::vector<Mat<double>> covariances;  // noise dims unit diagonal
};

// Draws weights, means, covariances, labels, then points, all from one
// seeded stream; a fixed SimSpec reproduces the dataset exactly. FULL mode
// uses Sigma = G Gᵀ with G entries N(0,1)/sqrt(p); EEI shares one diagonal
// across components; VVI draws a diagonal per component. Imbalanced weights
// come from Dirichlet(0.3) resampled until every mass reaches 0.05.
SimResult sample_mixture(const SimSpec& spec);

struct BenchCell {
  std::size_t n = 0;
  int p = 0;
  int K = 0;
};

struct BenchConfig {
  std::vector<BenchCell> grid;
  int seeds = 10;
  std::vector<Method> methods;  // optimizer entries
  bool with_em = false;
  double scale = 5.0;
  OptConfig opt;  // method field is overridden per entry
  EmConfig em;
  int jobs = 1;
};

struct BenchRecord {
  std::size_t n = 0;
  int p = 0;
  int K = 0;
  std::uint64_t seed = 0;
  std::string method;
  double loglik = 0.0;  // final total log-likelihood
  double ari = 0.0;
  int iters = 0;
  double wall_ms = 0.0;
  bool converged = false;
  bool diverged = false;
};

// Full-covariance GMM fits over the grid: per cell and seed, simulate at
// the configured scale, share one k-means initialization, then run every
// requested method. A diverged fit still yields its record. Rows come back
// sorted by (n, p, K, seed, method) regardless of `jobs`.
std::vector<BenchRecord> benchmark_sweep(const BenchConfig& cfg);

}  // namespace gmix
