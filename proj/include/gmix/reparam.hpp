#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "gmix/autodiff.hpp"
#include "gmix/errors.hpp"
#include "gmix/linalg.hpp"

namespace gmix {

// ---------------------------------------------------------------------------
// Mixture weights from free logits.

// log softmax via a sequential fused-logsumexp fold; stable for any |alpha|.
template <class T>
std::vector<T> log_weights_from_logits(std::span<const T> alpha) {
  if (alpha.empty()) {
    throw InvalidInput("log_weights_from_logits: K must be >= 1");
  }
  T lse = alpha[0];
  for (std::size_t i = 1; i < alpha.size(); ++i) {
    lse = logsumexp_pair(lse, alpha[i]);
  }
  std::vector<T> out;
  out.reserve(alpha.size());
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    out.push_back(alpha[i] - lse);
  }
  return out;
}

template <class T>
std::vector<T> weights_from_logits(std::span<const T> alpha) {
  std::vector<T> out = log_weights_from_logits(alpha);
  for (T& w : out) {
    w = exp(w);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Positive-definite covariance from a lower-triangular factor.

template <class T>
struct FactorCov {
  Mat<T> sigma;
  T logdet;
};

// Sigma = V Vᵀ with logdet = 2 sum log|V_ii|. Exact (no diagonal floor);
// pair with factor_near_singular for the degeneracy warning.
template <class T>
FactorCov<T> cov_from_factor(const Mat<T>& v) {
  const std::size_t p = v.rows();
  if (v.cols() != p || p == 0) {
    throw InvalidInput("cov_from_factor: V must be square and nonempty");
  }
  FactorCov<T> out{Mat<T>(p, p), log(absval(v(0, 0)))};
  for (std::size_t i = 1; i < p; ++i) {
    out.logdet += log(absval(v(i, i)));
  }
  out.logdet = out.logdet + out.logdet;
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      T acc = v(i, 0) * v(j, 0);
      for (std::size_t k = 1; k <= j; ++k) {
        acc += v(i, k) * v(j, k);
      }
      out.sigma(i, j) = acc;
      out.sigma(j, i) = acc;
    }
  }
  return out;
}

inline constexpr double kNearSingularTol = 1e-10;

inline bool factor_near_singular(const Mat<double>& v) {
  for (std::size_t i = 0; i < v.rows(); ++i) {
    if (std::abs(v(i, i)) < kNearSingularTol) return true;
  }
  return false;
}

// Expands packed row-major lower-triangular storage into a dense matrix with
// a zero strict upper triangle.
template <class T>
Mat<T> unpack_lower(std::span<const T> packed, std::size_t p) {
  if (packed.size() != tri_size(p) || p == 0) {
    throw InvalidInput("unpack_lower: packed length must be p(p+1)/2");
  }
  const T zero = make_like(packed[0], 0.0);
  Mat<T> v(p, p, zero);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      v(i, j) = packed[tri_index(i, j)];
    }
  }
  return v;
}

inline std::vector<double> pack_lower(const Mat<double>& v) {
  std::vector<double> packed(tri_size(v.rows()));
  for (std::size_t i = 0; i < v.rows(); ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      packed[tri_index(i, j)] = v(i, j);
    }
  }
  return packed;
}

// ---------------------------------------------------------------------------
// Orthogonal matrices via the Cayley transform.

// O = (I+Z)⁻¹(I−Z) for skew-symmetric Z; I+Z is always nonsingular. The
// solve is Gaussian elimination recorded through the scalar type, so the
// result is differentiable on a tape.
template <class T>
Mat<T> cayley_solve(const Mat<T>& z) {
  const std::size_t p = z.rows();
  const T one = make_like(z(0, 0), 1.0);
  Mat<T> plus = z;
  Mat<T> minus(p, p);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      minus(i, j) = -z(i, j);
    }
    plus(i, i) += one;
    minus(i, i) += one;
  }
  return gauss_solve(std::move(plus), std::move(minus));
}

// Skew part Z = (A − Aᵀ)/2 of a free square matrix.
template <class T>
Mat<T> cayley_orthogonal(const Mat<T>& a) {
  const std::size_t p = a.rows();
  if (a.cols() != p || p == 0) {
    throw InvalidInput("cayley_orthogonal: A must be square and nonempty");
  }
  Mat<T> z(p, p);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      z(i, j) = (a(i, j) - a(j, i)) / 2.0;
    }
  }
  return cayley_solve(z);
}

// Z assembled from p(p−1)/2 free strictly-lower generators; the minimal
// chart used by parameter layouts.
template <class T>
Mat<T> cayley_from_skew(std::span<const T> g, std::size_t p, const T& proto) {
  if (g.size() != strict_tri_size(p)) {
    throw InvalidInput("cayley_from_skew: generator length must be p(p-1)/2");
  }
  const T zero = make_like(proto, 0.0);
  Mat<T> z(p, p, zero);
  for (std::size_t i = 1; i < p; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      const T& v = g[strict_tri_index(i, j)];
      z(i, j) = v;
      z(j, i) = -v;
    }
  }
  return cayley_solve(z);
}

// ---------------------------------------------------------------------------
// Positive degrees of freedom.

template <class T>
T dof_from_log(const T& nu_raw) {
  return exp(nu_raw);
}

// ---------------------------------------------------------------------------
// MClust constrained covariances: Sigma_k = lambda_k D_k diag(a_k) D_kᵀ.

enum class MclustConstraint { EII, VII, EEI, VVI, EEE, VVV };

MclustConstraint parse_mclust_constraint(std::string_view s);
const char* to_string(MclustConstraint c);

// Raw unconstrained coordinate counts per slice.
struct MclustLayout {
  std::size_t volume_len = 0;  // 1 or K log-volumes
  std::size_t shape_len = 0;   // 0, p, or K*p raw shape entries
  std::size_t orient_len = 0;  // 0, m, or K*m skew generators, m = p(p-1)/2
};

MclustLayout mclust_layout(MclustConstraint c, int K, int p);
std::size_t mclust_cov_param_count(MclustConstraint c, int K, int p);
// One redundancy per shape vector (the unit-geometric-mean normalization).
std::size_t mclust_gauge_dim(MclustConstraint c, int K);

// Per-component pieces in the form the density consumes. Tied components
// share scalar handles. Empty log_shape/inv_shape means unit shape; empty
// orient means axis-aligned (D = I).
template <class T>
struct MclustParts {
  std::vector<T> log_volume;               // log lambda_k
  std::vector<T> inv_volume;               // 1/lambda_k
  std::vector<std::vector<T>> log_shape;   // log a_k, zero geometric mean
  std::vector<std::vector<T>> inv_shape;   // 1/a_k
  std::vector<Mat<T>> orient;              // D_k
};

template <class T>
MclustParts<T> mclust_build(std::span<const T> volume_raw,
                            std::span<const T> shape_raw,
                            std::span<const T> orient_raw, MclustConstraint c,
                            int K, int p) {
  const MclustLayout lay = mclust_layout(c, K, p);
  if (volume_raw.size() != lay.volume_len ||
      shape_raw.size() != lay.shape_len ||
      orient_raw.size() != lay.orient_len) {
    throw InvalidInput("mclust_build: slice lengths do not match constraint");
  }
  const std::size_t kk = static_cast<std::size_t>(K);
  const std::size_t pp = static_cast<std::size_t>(p);
  MclustParts<T> parts;
  parts.log_volume.reserve(kk);
  parts.inv_volume.reserve(kk);
  for (std::size_t k = 0; k < kk; ++k) {
    const T& raw = volume_raw[lay.volume_len == 1 ? 0 : k];
    parts.log_volume.push_back(raw);
    parts.inv_volume.push_back(exp(-raw));
  }
  if (lay.shape_len > 0) {
    const std::size_t vectors = lay.shape_len / pp;
    std::vector<std::vector<T>> log_shapes(vectors);
    std::vector<std::vector<T>> inv_shapes(vectors);
    for (std::size_t v = 0; v < vectors; ++v) {
      std::span<const T> s = shape_raw.subspan(v * pp, pp);
      T mean = s[0];
      for (std::size_t i = 1; i < pp; ++i) {
        mean += s[i];
      }
      mean = mean / static_cast<double>(p);
      for (std::size_t i = 0; i < pp; ++i) {
        T centered = s[i] - mean;
        log_shapes[v].push_back(centered);
        inv_shapes[v].push_back(exp(-centered));
      }
    }
    for (std::size_t k = 0; k < kk; ++k) {
      const std::size_t v = vectors == 1 ? 0 : k;
      parts.log_shape.push_back(log_shapes[v]);
      parts.inv_shape.push_back(inv_shapes[v]);
    }
  }
  if (lay.orient_len > 0) {
    const std::size_t m = strict_tri_size(pp);
    const std::size_t mats = lay.orient_len / m;
    std::vector<Mat<T>> ds(mats);
    for (std::size_t v = 0; v < mats; ++v) {
      ds[v] = cayley_from_skew(orient_raw.subspan(v * m, m), pp,
                               volume_raw[0]);
    }
    for (std::size_t k = 0; k < kk; ++k) {
      parts.orient.push_back(ds[mats == 1 ? 0 : k]);
    }
  }
  return parts;
}

template <class T>
std::vector<Mat<T>> mclust_cov(std::span<const T> volume_raw,
                               std::span<const T> shape_raw,
                               std::span<const T> orient_raw,
                               MclustConstraint c, int K, int p) {
  MclustParts<T> parts =
      mclust_build(volume_raw, shape_raw, orient_raw, c, K, p);
  const std::size_t pp = static_cast<std::size_t>(p);
  std::vector<Mat<T>> sigmas;
  sigmas.reserve(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    const std::size_t ku = static_cast<std::size_t>(k);
    T lambda = exp(parts.log_volume[ku]);
    std::vector<T> a;
    a.reserve(pp);
    for (std::size_t i = 0; i < pp; ++i) {
      if (parts.log_shape.empty()) {
        a.push_back(make_like(lambda, 1.0));
      } else {
        a.push_back(exp(parts.log_shape[ku][i]));
      }
    }
    Mat<T> sigma(pp, pp);
    if (parts.orient.empty()) {
      const T zero = make_like(lambda, 0.0);
      for (std::size_t i = 0; i < pp; ++i) {
        for (std::size_t j = 0; j < pp; ++j) {
          sigma(i, j) = i == j ? lambda * a[i] : zero;
        }
      }
    } else {
      const Mat<T>& d = parts.orient[ku];
      for (std::size_t i = 0; i < pp; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
          T acc = d(i, 0) * a[0] * d(j, 0);
          for (std::size_t l = 1; l < pp; ++l) {
            acc += d(i, l) * a[l] * d(j, l);
          }
          acc *= lambda;
          sigma(i, j) = acc;
          sigma(j, i) = acc;
        }
      }
    }
    sigmas.push_back(std::move(sigma));
  }
  return sigmas;
}

// ---------------------------------------------------------------------------
// PGMM factor-analytic covariances: Sigma_k = Lambda_k Lambda_kᵀ + Omega_k.
// First letter ties Lambda across components, second ties Omega, third makes
// Omega isotropic (C) or free diagonal (U).

enum class PgmmFamily { CCC, CCU, CUC, CUU, UCC, UCU, UUC, UUU };

PgmmFamily parse_pgmm_family(std::string_view s);
const char* to_string(PgmmFamily f);
bool pgmm_tied_loadings(PgmmFamily f);
bool pgmm_tied_noise(PgmmFamily f);
bool pgmm_isotropic_noise(PgmmFamily f);

struct PgmmLayout {
  std::size_t loadings_len = 0;  // (1 or K) * p * q
  std::size_t noise_len = 0;     // 1, p, K, or K*p log-noise entries
};

PgmmLayout pgmm_layout(PgmmFamily f, int K, int p, int q);
std::size_t pgmm_cov_param_count(PgmmFamily f, int K, int p, int q);
// Loading-rotation gauge: q(q−1)/2 per distinct Lambda.
std::size_t pgmm_gauge_dim(PgmmFamily f, int K, int q);

template <class T>
struct PgmmParts {
  std::vector<Mat<T>> lambda;         // p×q loadings per component
  std::vector<std::vector<T>> omega;  // diagonal noise per component
};

template <class T>
PgmmParts<T> pgmm_build(std::span<const T> loadings_raw,
                        std::span<const T> noise_raw, PgmmFamily f, int K,
                        int p, int q) {
  if (q < 1 || q >= p) {
    throw ConfigError("pgmm: latent dimension must satisfy 1 <= q < p");
  }
  const PgmmLayout lay = pgmm_layout(f, K, p, q);
  if (loadings_raw.size() != lay.loadings_len ||
      noise_raw.size() != lay.noise_len) {
    throw InvalidInput("pgmm_build: slice lengths do not match family");
  }
  const std::size_t kk = static_cast<std::size_t>(K);
  const std::size_t pp = static_cast<std::size_t>(p);
  const std::size_t qq = static_cast<std::size_t>(q);
  PgmmParts<T> parts;

  const std::size_t mats = pgmm_tied_loadings(f) ? 1 : kk;
  std::vector<Mat<T>> lambdas(mats);
  for (std::size_t v = 0; v < mats; ++v) {
    Mat<T> l(pp, qq);
    for (std::size_t i = 0; i < pp; ++i) {
      for (std::size_t j = 0; j < qq; ++j) {
        l(i, j) = loadings_raw[v * pp * qq + i * qq + j];
      }
    }
    lambdas[v] = std::move(l);
  }
  for (std::size_t k = 0; k < kk; ++k) {
    parts.lambda.push_back(lambdas[mats == 1 ? 0 : k]);
  }

  const std::size_t vecs = pgmm_tied_noise(f) ? 1 : kk;
  const std::size_t per = pgmm_isotropic_noise(f) ? 1 : pp;
  std::vector<std::vector<T>> omegas(vecs);
  for (std::size_t v = 0; v < vecs; ++v) {
    for (std::size_t i = 0; i < pp; ++i) {
      omegas[v].push_back(exp(noise_raw[v * per + (per == 1 ? 0 : i)]));
    }
  }
  for (std::size_t k = 0; k < kk; ++k) {
    parts.omega.push_back(omegas[vecs == 1 ? 0 : k]);
  }
  return parts;
}

template <class T>
std::vector<Mat<T>> pgmm_cov(std::span<const T> loadings_raw,
                             std::span<const T> noise_raw, PgmmFamily f,
                             int K, int p, int q) {
  PgmmParts<T> parts = pgmm_build(loadings_raw, noise_raw, f, K, p, q);
  const std::size_t pp = static_cast<std::size_t>(p);
  const std::size_t qq = static_cast<std::size_t>(q);
  std::vector<Mat<T>> sigmas;
  sigmas.reserve(parts.lambda.size());
  for (std::size_t k = 0; k < parts.lambda.size(); ++k) {
    const Mat<T>& l = parts.lambda[k];
    Mat<T> sigma(pp, pp);
    for (std::size_t i = 0; i < pp; ++i) {
      for (std::size_t j = 0; j <= i; ++j) {
        T acc = l(i, 0) * l(j, 0);
        for (std::size_t r = 1; r < qq; ++r) {
          acc += l(i, r) * l(j, r);
        }
        if (i == j) {
          acc += parts.omega[k][i];
        }
        sigma(i, j) = acc;
        sigma(j, i) = acc;
      }
    }
    sigmas.push_back(std::move(sigma));
  }
  return sigmas;
}

}  // namespace gmix
