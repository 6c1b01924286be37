#include "gmix/em.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "gmix/reparam.hpp"

namespace gmix {

namespace {

void validate_state(const GmmState& state, const Mat<double>& x) {
  const std::size_t K = state.weights.size();
  if (K == 0 || state.means.rows() != K || state.covariances.size() != K) {
    throw InvalidInput("em: inconsistent state shapes");
  }
  if (state.means.cols() != x.cols() || x.rows() == 0) {
    throw InvalidInput("em: state dimension does not match the data");
  }
}

}  // namespace

EStepResult em_e_step(const GmmState& state, const Mat<double>& x) {
  validate_state(state, x);
  const std::size_t n = x.rows();
  const std::size_t p = x.cols();
  const std::size_t K = state.weights.size();
  const double half_log_2pi = 0.9189385332046727417803297364056;

  std::vector<Mat<double>> chol;
  std::vector<double> log_norm(K);
  chol.reserve(K);
  for (std::size_t k = 0; k < K; ++k) {
    try {
      chol.push_back(chol_lower(state.covariances[k]));
    } catch (NumericError& e) {
      e.component = static_cast<int>(k);
      throw;
    }
    double half_logdet = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      half_logdet += std::log(chol[k](j, j));
    }
    if (!(state.weights[k] > 0.0)) {
      throw NumericError("em: component weight is not positive");
    }
    log_norm[k] = std::log(state.weights[k]) -
                  static_cast<double>(p) * half_log_2pi - half_logdet;
  }

  EStepResult res;
  res.gamma = Mat<double>(n, K);
  res.point_loglik.resize(n);
  std::vector<double> y(p);
  std::vector<double> terms(K);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t j = 0; j < p; ++j) {
        y[j] = x(i, j) - state.means(k, j);
      }
      const std::vector<double> z = forward_solve(chol[k], y);
      double quad = 0.0;
      for (double zj : z) quad += zj * zj;
      terms[k] = log_norm[k] - quad / 2.0;
    }
    double lse = terms[0];
    for (std::size_t k = 1; k < K; ++k) {
      lse = logsumexp_pair(lse, terms[k]);
    }
    for (std::size_t k = 0; k < K; ++k) {
      res.gamma(i, k) = std::exp(terms[k] - lse);
    }
    res.point_loglik[i] = lse;
    total += lse;
  }
  res.mean_loglik = total / static_cast<double>(n);
  return res;
}

std::vector<int> em_m_step(const Mat<double>& x, const Mat<double>& gamma,
                           double ridge, GmmState& state) {
  const std::size_t n = x.rows();
  const std::size_t p = x.cols();
  const std::size_t K = gamma.cols();
  if (gamma.rows() != n || n == 0) {
    throw InvalidInput("em_m_step: responsibility shape mismatch");
  }
  if (ridge < 0.0) throw ConfigError("ridge must be non-negative");
  validate_state(state, x);
  if (state.weights.size() != K) {
    throw InvalidInput("em_m_step: component count mismatch");
  }

  std::vector<int> empty;
  for (std::size_t k = 0; k < K; ++k) {
    double nk = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nk += gamma(i, k);
    }
    if (nk < 1e-10) {
      empty.push_back(static_cast<int>(k));
      continue;
    }
    state.weights[k] = nk / static_cast<double>(n);
    for (std::size_t j = 0; j < p; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += gamma(i, k) * x(i, j);
      }
      state.means(k, j) = acc / nk;
    }
    Mat<double> cov(p, p);
    for (std::size_t i = 0; i < n; ++i) {
      const double g = gamma(i, k);
      for (std::size_t a = 0; a < p; ++a) {
        const double da = x(i, a) - state.means(k, a);
        for (std::size_t b = 0; b <= a; ++b) {
          cov(a, b) += g * da * (x(i, b) - state.means(k, b));
        }
      }
    }
    for (std::size_t a = 0; a < p; ++a) {
      for (std::size_t b = 0; b <= a; ++b) {
        cov(a, b) /= nk;
        cov(b, a) = cov(a, b);
      }
      cov(a, a) += ridge;
    }
    state.covariances[k] = std::move(cov);
  }
  return empty;
}

std::vector<double> gmm_theta_from_state(const GmmState& state) {
  const std::size_t K = state.weights.size();
  const std::size_t p = state.means.cols();
  std::vector<double> theta;
  theta.reserve(K + K * p + K * tri_size(p));
  for (double w : state.weights) {
    theta.push_back(std::log(std::max(w, 1e-300)));
  }
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t j = 0; j < p; ++j) {
      theta.push_back(state.means(k, j));
    }
  }
  for (std::size_t k = 0; k < K; ++k) {
    const Mat<double> l = chol_lower(state.covariances[k]);
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = 0; j <= i; ++j) {
        theta.push_back(l(i, j));
      }
    }
  }
  return theta;
}

FitResult em_fit_gmm(const Dataset& data, int K, const Mat<double>& init_means,
                     std::span<const double> init_weights,
                     const EmConfig& cfg) {
  validate_dataset(data);
  if (K < 1) throw ConfigError("K must be at least 1");
  const std::size_t kk = static_cast<std::size_t>(K);
  if (data.n() < kk) throw InvalidInput("need at least K points");
  if (init_means.rows() != kk || init_means.cols() != data.dim()) {
    throw InvalidInput("init means shape does not match");
  }
  if (!init_weights.empty() && init_weights.size() != kk) {
    throw InvalidInput("init weights length does not match K");
  }
  if (cfg.max_iter < 0) throw ConfigError("max_iter must be non-negative");
  if (!(cfg.tol > 0.0)) throw ConfigError("tol must be positive");
  if (cfg.ridge < 0.0) throw ConfigError("ridge must be non-negative");

  const auto start = std::chrono::steady_clock::now();
  auto elapsed_ms = [&start]() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - start)
        .count();
  };

  GmmState state;
  state.weights.assign(kk, 1.0 / static_cast<double>(K));
  if (!init_weights.empty()) {
    state.weights.assign(init_weights.begin(), init_weights.end());
  }
  state.means = init_means;
  const std::size_t p = data.dim();
  for (std::size_t k = 0; k < kk; ++k) {
    Mat<double> eye(p, p);
    for (std::size_t j = 0; j < p; ++j) {
      eye(j, j) = 1.0;
    }
    state.covariances.push_back(std::move(eye));
  }

  FitResult res;
  EStepResult e;
  try {
    e = em_e_step(state, data.x);
  } catch (const NumericError&) {
    res.diverged = true;
    res.wall_ms = elapsed_ms();
    return res;
  }
  res.trajectory.push_back(e.mean_loglik);

  for (int it = 1; it <= cfg.max_iter; ++it) {
    try {
      const std::vector<int> empty = em_m_step(data.x, e.gamma, cfg.ridge,
                                               state);
      for (int k : empty) {
        // drop the dead component onto the point the mixture explains worst
        std::size_t worst = 0;
        for (std::size_t i = 1; i < data.n(); ++i) {
          if (e.point_loglik[i] < e.point_loglik[worst]) worst = i;
        }
        for (std::size_t j = 0; j < p; ++j) {
          state.means(static_cast<std::size_t>(k), j) = data.x(worst, j);
        }
        Mat<double> eye(p, p);
        for (std::size_t j = 0; j < p; ++j) {
          eye(j, j) = 1.0 + cfg.ridge;
        }
        state.covariances[static_cast<std::size_t>(k)] = std::move(eye);
        state.weights[static_cast<std::size_t>(k)] =
            1.0 / static_cast<double>(data.n());
      }
      if (!empty.empty()) {
        double total = 0.0;
        for (double w : state.weights) total += w;
        for (double& w : state.weights) w /= total;
      }
      e = em_e_step(state, data.x);
    } catch (const NumericError&) {
      res.diverged = true;
      break;
    }
    if (!std::isfinite(e.mean_loglik)) {
      res.diverged = true;
      break;
    }
    res.trajectory.push_back(e.mean_loglik);
    res.iters = it;
    if (std::abs(res.trajectory[static_cast<std::size_t>(it)] -
                 res.trajectory[static_cast<std::size_t>(it) - 1]) < cfg.tol) {
      res.converged = true;
      break;
    }
  }
  if (!res.diverged) {
    res.theta = gmm_theta_from_state(state);
  }
  res.wall_ms = elapsed_ms();
  return res;
}

}  // namespace gmix
