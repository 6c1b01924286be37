#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gmix/autodiff.hpp"
#include "gmix/errors.hpp"
#include "gmix/linalg.hpp"
#include "gmix/objective.hpp"
#include "gmix/reparam.hpp"

namespace gmix {

enum class Family { GMM, MCLUST, PGMM, MFA, TMM };

Family parse_family(std::string_view s);
const char* to_string(Family f);

// Which mixture to fit. `constraint` selects the MClust constraint or PGMM
// family; `q` is the latent dimension and is meaningful only for PGMM/MFA.
struct ModelSpec {
  Family family = Family::GMM;
  std::string constraint;
  int K = 1;
  int p = 1;
  int q = 0;
};

void validate_spec(const ModelSpec& spec);

struct Slice {
  std::size_t offset = 0;
  std::size_t length = 0;
};

// Maps a flat unconstrained vector to named parameter slices. Slices not
// used by the family have zero length.
struct ParamLayout {
  ModelSpec spec;
  MclustConstraint mclust = MclustConstraint::EII;
  PgmmFamily pgmm = PgmmFamily::CCC;
  Slice alpha;     // K weight logits
  Slice mu;        // K*p means, component major
  Slice factor;    // GMM/TMM: K packed lower-triangular factors
  Slice volume;    // MCLUST log-volumes
  Slice shape;     // MCLUST raw shapes
  Slice orient;    // MCLUST skew generators
  Slice loadings;  // PGMM/MFA loadings
  Slice noise;     // PGMM/MFA log noise
  Slice logdof;    // TMM log degrees of freedom
  std::size_t total = 0;
};

ParamLayout make_layout(const ModelSpec& spec);

// Free parameters: (K-1) weights + K*p means + the family's covariance
// count, + K dofs for TMM.
std::size_t param_count(const ModelSpec& spec);
// Redundant flat coordinates: the weight-logit shift plus per-family
// normalization/rotation gauges; total == param_count + gauge_dim.
std::size_t gauge_dim(const ModelSpec& spec);

struct Dataset {
  Mat<double> x;
  std::vector<int> labels;  // ground truth for evaluation; may be empty

  std::size_t n() const { return x.rows(); }
  std::size_t dim() const { return x.cols(); }
  bool has_labels() const { return !labels.empty(); }
};

void validate_dataset(const Dataset& data);

// Flat unconstrained parameters tied to their spec.
struct ParamSet {
  ModelSpec spec;
  std::vector<double> theta;
};

struct Assignment {
  Mat<double> gamma;        // n×K responsibilities
  std::vector<int> labels;  // argmax per row
};

// ---------------------------------------------------------------------------
// Differentiable mean log-likelihood, single source over the scalar flavor.

namespace detail {

// Per-theta prepared state: log-weights, means, and the per-component
// covariance representation each family's Mahalanobis solve consumes.
template <class T>
class DensityEval {
 public:
  DensityEval(const ParamLayout& lay, std::span<const T> th,
              const Mat<double>& x)
      : lay_(lay), th_(th), x_(x), p_(static_cast<std::size_t>(lay.spec.p)) {
    if (th.size() != lay.total) {
      throw InvalidInput("theta length does not match the layout");
    }
    if (x.cols() != p_) {
      throw InvalidInput("data dimension does not match the model spec");
    }
    const std::size_t K = static_cast<std::size_t>(lay.spec.K);
    logw_ = log_weights_from_logits(th.subspan(lay.alpha.offset,
                                               lay.alpha.length));
    mu_.reserve(K);
    for (std::size_t k = 0; k < K; ++k) {
      std::span<const T> m = th.subspan(lay.mu.offset + k * p_, p_);
      mu_.emplace_back(m.begin(), m.end());
    }
    const double half_log_2pi = 0.9189385332046727417803297364056;
    base_ = -static_cast<double>(p_) * half_log_2pi;

    switch (lay.spec.family) {
      case Family::GMM:
      case Family::TMM: {
        const std::size_t tri = tri_size(p_);
        for (std::size_t k = 0; k < K; ++k) {
          try {
            std::span<const T> v = th.subspan(lay.factor.offset + k * tri, tri);
            std::vector<T> diag;
            diag.reserve(p_);
            T half_logdet = make_like(th[0], 0.0);
            for (std::size_t j = 0; j < p_; ++j) {
              T d = absval(v[tri_index(j, j)]) + 1e-6;
              half_logdet += log(d);
              diag.push_back(std::move(d));
            }
            factor_.push_back(v);
            guard_diag_.push_back(std::move(diag));
            if (lay.spec.family == Family::GMM) {
              const_k_.push_back(base_ - half_logdet);
            } else {
              const T& nu_raw = th[lay.logdof.offset + k];
              T nu = exp(nu_raw);
              T half_sum = (nu + static_cast<double>(p_)) / 2.0;
              const_k_.push_back(lgamma(half_sum) - lgamma(nu / 2.0) -
                                 (static_cast<double>(p_) / 2.0) *
                                     (nu_raw + 1.1447298858494001741) -
                                 half_logdet);
              nu_.push_back(std::move(nu));
              half_sum_.push_back(std::move(half_sum));
            }
          } catch (NumericError& e) {
            e.component = static_cast<int>(k);
            throw;
          }
        }
        break;
      }
      case Family::MCLUST: {
        try {
          mparts_ = mclust_build(th.subspan(lay.volume.offset,
                                            lay.volume.length),
                                 th.subspan(lay.shape.offset,
                                            lay.shape.length),
                                 th.subspan(lay.orient.offset,
                                            lay.orient.length),
                                 lay.mclust, lay.spec.K, lay.spec.p);
        } catch (NumericError& e) {
          e.component = -1;  // tied slices; not attributable
          throw;
        }
        for (std::size_t k = 0; k < K; ++k) {
          // logdet = p log lambda: normalized shapes multiply to one and
          // rotations are volume free
          const_k_.push_back(base_ - (static_cast<double>(p_) / 2.0) *
                                         mparts_.log_volume[k]);
        }
        break;
      }
      case Family::PGMM:
      case Family::MFA: {
        std::vector<Mat<T>> sigmas =
            pgmm_cov<T>(th.subspan(lay.loadings.offset, lay.loadings.length),
                        th.subspan(lay.noise.offset, lay.noise.length),
                        lay.pgmm, lay.spec.K, lay.spec.p, lay.spec.q);
        for (std::size_t k = 0; k < K; ++k) {
          try {
            Mat<T> l = chol_lower(sigmas[k]);
            T half_logdet = log(l(0, 0));
            for (std::size_t j = 1; j < p_; ++j) {
              half_logdet += log(l(j, j));
            }
            const_k_.push_back(base_ - half_logdet);
            chol_.push_back(std::move(l));
          } catch (NumericError& e) {
            e.component = static_cast<int>(k);
            throw;
          }
        }
        break;
      }
    }
  }

  std::size_t points() const { return x_.rows(); }
  int components() const { return lay_.spec.K; }

  // Loads x_i so its coordinates are shared by all component terms.
  void set_point(std::size_t i) {
    xc_.clear();
    for (std::size_t j = 0; j < p_; ++j) {
      xc_.push_back(make_like(th_[0], x_(i, j)));
    }
  }

  // log pi_k + log f_k(x_i) for the point loaded by set_point.
  T log_term(std::size_t k) {
    std::vector<T> y;
    y.reserve(p_);
    for (std::size_t j = 0; j < p_; ++j) {
      y.push_back(xc_[j] - mu_[k][j]);
    }
    switch (lay_.spec.family) {
      case Family::GMM: {
        T delta = factor_mahalanobis(k, y);
        return logw_[k] + const_k_[k] - delta / 2.0;
      }
      case Family::TMM: {
        T delta = factor_mahalanobis(k, y);
        return logw_[k] + const_k_[k] -
               half_sum_[k] * log(1.0 + delta / nu_[k]);
      }
      case Family::MCLUST: {
        std::vector<T> t;
        if (mparts_.orient.empty()) {
          t = std::move(y);
        } else {
          const Mat<T>& d = mparts_.orient[k];
          t.reserve(p_);
          for (std::size_t j = 0; j < p_; ++j) {
            T acc = d(0, j) * y[0];
            for (std::size_t l = 1; l < p_; ++l) {
              acc += d(l, j) * y[l];
            }
            t.push_back(std::move(acc));
          }
        }
        T quad = t[0] * t[0];
        if (!mparts_.inv_shape.empty()) {
          quad *= mparts_.inv_shape[k][0];
        }
        for (std::size_t j = 1; j < p_; ++j) {
          T term = t[j] * t[j];
          if (!mparts_.inv_shape.empty()) {
            term *= mparts_.inv_shape[k][j];
          }
          quad += term;
        }
        T delta = mparts_.inv_volume[k] * quad;
        return logw_[k] + const_k_[k] - delta / 2.0;
      }
      case Family::PGMM:
      case Family::MFA: {
        std::vector<T> z = forward_solve(chol_[k], std::move(y));
        T delta = z[0] * z[0];
        for (std::size_t j = 1; j < p_; ++j) {
          delta += z[j] * z[j];
        }
        return logw_[k] + const_k_[k] - delta / 2.0;
      }
    }
    throw ConfigError("unknown model family");
  }

 private:
  // Solve of the guarded triangular factor: z = V⁻¹y with the diagonal
  // replaced by |V_jj| + 1e-6; returns zᵀz.
  T factor_mahalanobis(std::size_t k, const std::vector<T>& y) {
    const std::span<const T>& v = factor_[k];
    const std::vector<T>& d = guard_diag_[k];
    std::vector<T> z;
    z.reserve(p_);
    for (std::size_t j = 0; j < p_; ++j) {
      T acc = y[j];
      for (std::size_t l = 0; l < j; ++l) {
        acc -= v[tri_index(j, l)] * z[l];
      }
      z.push_back(acc / d[j]);
    }
    T delta = z[0] * z[0];
    for (std::size_t j = 1; j < p_; ++j) {
      delta += z[j] * z[j];
    }
    return delta;
  }

  const ParamLayout& lay_;
  std::span<const T> th_;
  const Mat<double>& x_;
  std::size_t p_;
  double base_ = 0.0;

  std::vector<T> logw_;
  std::vector<std::vector<T>> mu_;
  std::vector<T> const_k_;

  std::vector<std::span<const T>> factor_;
  std::vector<std::vector<T>> guard_diag_;
  std::vector<T> nu_;
  std::vector<T> half_sum_;
  MclustParts<T> mparts_;
  std::vector<Mat<T>> chol_;

  std::vector<T> xc_;
};

}  // namespace detail

namespace detail {
// tags NumericError with the component it surfaced in
template <class T>
T checked_term(DensityEval<T>& ev, std::size_t k) {
  try {
    return ev.log_term(k);
  } catch (NumericError& e) {
    if (e.component < 0) e.component = static_cast<int>(k);
    throw;
  }
}
}  // namespace detail

// Mean log-likelihood L(theta) = (1/n) sum_i log sum_k pi_k f_k(x_i),
// computed in log space with a fused logsumexp fold over components.
template <class T>
T mean_loglik(const ParamLayout& lay, std::span<const T> th,
              const Mat<double>& x) {
  if (x.rows() == 0) {
    throw InvalidInput("mean_loglik: dataset is empty");
  }
  detail::DensityEval<T> ev(lay, th, x);
  const std::size_t K = static_cast<std::size_t>(ev.components());
  T total = make_like(th[0], 0.0);
  for (std::size_t i = 0; i < ev.points(); ++i) {
    ev.set_point(i);
    T lse = detail::checked_term(ev, 0);
    for (std::size_t k = 1; k < K; ++k) {
      lse = logsumexp_pair(lse, detail::checked_term(ev, k));
    }
    total += lse;
  }
  return total / static_cast<double>(x.rows());
}

// ---------------------------------------------------------------------------
// Tape plumbing and plain evaluation.

struct LoglikGraph {
  Ad output;
  std::vector<VarRef> inputs;
};

// Registers every flat coordinate as a tape input and records the mean
// log-likelihood graph over them.
LoglikGraph loglik_build(Tape& tape, const ModelSpec& spec,
                         std::span<const double> theta, const Dataset& data);

double loglik_value(const ModelSpec& spec, std::span<const double> theta,
                    const Dataset& data);
GradResult loglik_grad(const ModelSpec& spec, std::span<const double> theta,
                       const Dataset& data);

// Bundles value/gradient closures over a private tape and a private copy of
// the data; safe to move across threads, not to share between them.
Objective make_objective(const ModelSpec& spec, const Dataset& data);

// ---------------------------------------------------------------------------
// Initialization, posteriors, constrained export.

enum class InitStrategy { kKmeans, kRandom };

InitStrategy parse_init_strategy(std::string_view s);

struct KmeansResult {
  Mat<double> means;        // K×p
  std::vector<int> labels;  // n
  int iters = 0;
};

// Lloyd's algorithm with k-means++ seeding; deterministic for a given seed.
KmeansResult kmeans(const Mat<double>& x, int K, std::uint64_t seed,
                    int max_iter = 100);

// Means from k-means or random rows; identity covariance factors; uniform
// weights; log 30 dofs; small seeded loadings (zero loadings sit on a
// stationary ridge of the factor-analytic likelihood).
ParamSet init_params(const ModelSpec& spec, const Dataset& data,
                     InitStrategy strategy, std::uint64_t seed);

Assignment responsibilities(const ModelSpec& spec, const ParamSet& params,
                            const Dataset& data);

struct ConstrainedParams {
  std::vector<double> weights;
  Mat<double> means;  // K×p
  std::vector<Mat<double>> covariances;
  std::vector<double> dof;  // TMM only
  bool near_singular = false;
};

// Unconstrained coordinates mapped to the model's natural parameters.
ConstrainedParams constrain(const ModelSpec& spec, const ParamSet& params);

}  // namespace gmix
