#include "gmix/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <utility>

#include "gmix/rng.hpp"

namespace gmix {

Family parse_family(std::string_view s) {
  if (s == "gmm") return Family::GMM;
  if (s == "mclust") return Family::MCLUST;
  if (s == "pgmm") return Family::PGMM;
  if (s == "mfa") return Family::MFA;
  if (s == "tmm") return Family::TMM;
  throw ConfigError("unknown family: " + std::string(s));
}

const char* to_string(Family f) {
  switch (f) {
    case Family::GMM: return "gmm";
    case Family::MCLUST: return "mclust";
    case Family::PGMM: return "pgmm";
    case Family::MFA: return "mfa";
    case Family::TMM: return "tmm";
  }
  return "?";
}

void validate_spec(const ModelSpec& spec) {
  if (spec.K < 1) throw ConfigError("K must be at least 1");
  if (spec.p < 1) throw ConfigError("p must be at least 1");
  const bool wants_constraint =
      spec.family == Family::MCLUST || spec.family == Family::PGMM;
  if (wants_constraint && spec.constraint.empty()) {
    throw ConfigError("this family requires a constraint name");
  }
  if (!wants_constraint && !spec.constraint.empty()) {
    throw ConfigError("constraint given for a family that takes none");
  }
  if (spec.family == Family::PGMM || spec.family == Family::MFA) {
    if (spec.q < 1 || spec.q >= spec.p) {
      throw ConfigError("q must satisfy 1 <= q < p");
    }
  } else if (spec.q != 0) {
    throw ConfigError("q given for a family without latent factors");
  }
  if (spec.family == Family::MCLUST) {
    parse_mclust_constraint(spec.constraint);
  }
  if (spec.family == Family::PGMM) {
    parse_pgmm_family(spec.constraint);
  }
}

ParamLayout make_layout(const ModelSpec& spec) {
  validate_spec(spec);
  const std::size_t K = static_cast<std::size_t>(spec.K);
  const std::size_t p = static_cast<std::size_t>(spec.p);
  ParamLayout lay;
  lay.spec = spec;
  std::size_t off = 0;
  auto take = [&off](std::size_t len) {
    Slice s{off, len};
    off += len;
    return s;
  };
  lay.alpha = take(K);
  lay.mu = take(K * p);
  switch (spec.family) {
    case Family::GMM:
      lay.factor = take(K * tri_size(p));
      break;
    case Family::TMM:
      lay.factor = take(K * tri_size(p));
      lay.logdof = take(K);
      break;
    case Family::MCLUST: {
      lay.mclust = parse_mclust_constraint(spec.constraint);
      const MclustLayout ml = mclust_layout(lay.mclust, spec.K, spec.p);
      lay.volume = take(ml.volume_len);
      lay.shape = take(ml.shape_len);
      lay.orient = take(ml.orient_len);
      break;
    }
    case Family::PGMM:
    case Family::MFA: {
      lay.pgmm = spec.family == Family::MFA
                     ? PgmmFamily::UUU
                     : parse_pgmm_family(spec.constraint);
      const PgmmLayout pl = pgmm_layout(lay.pgmm, spec.K, spec.p, spec.q);
      lay.loadings = take(pl.loadings_len);
      lay.noise = take(pl.noise_len);
      break;
    }
  }
  lay.total = off;
  return lay;
}

std::size_t param_count(const ModelSpec& spec) {
  validate_spec(spec);
  const std::size_t K = static_cast<std::size_t>(spec.K);
  const std::size_t p = static_cast<std::size_t>(spec.p);
  std::size_t count = (K - 1) + K * p;
  switch (spec.family) {
    case Family::GMM:
      count += K * tri_size(p);
      break;
    case Family::TMM:
      count += K * tri_size(p) + K;
      break;
    case Family::MCLUST:
      count += mclust_cov_param_count(parse_mclust_constraint(spec.constraint),
                                      spec.K, spec.p);
      break;
    case Family::PGMM:
    case Family::MFA: {
      const PgmmFamily f = spec.family == Family::MFA
                               ? PgmmFamily::UUU
                               : parse_pgmm_family(spec.constraint);
      count += pgmm_cov_param_count(f, spec.K, spec.p, spec.q);
      break;
    }
  }
  return count;
}

std::size_t gauge_dim(const ModelSpec& spec) {
  validate_spec(spec);
  std::size_t g = 1;  // common shift of the weight logits
  switch (spec.family) {
    case Family::GMM:
    case Family::TMM:
      break;
    case Family::MCLUST:
      g += mclust_gauge_dim(parse_mclust_constraint(spec.constraint), spec.K);
      break;
    case Family::PGMM:
    case Family::MFA: {
      const PgmmFamily f = spec.family == Family::MFA
                               ? PgmmFamily::UUU
                               : parse_pgmm_family(spec.constraint);
      g += pgmm_gauge_dim(f, spec.K, spec.q);
      break;
    }
  }
  return g;
}

void validate_dataset(const Dataset& data) {
  if (data.x.rows() == 0 || data.x.cols() == 0) {
    throw InvalidInput("dataset is empty");
  }
  for (std::size_t i = 0; i < data.x.rows(); ++i) {
    for (std::size_t j = 0; j < data.x.cols(); ++j) {
      if (!std::isfinite(data.x(i, j))) {
        throw InvalidInput("dataset contains a non-finite value");
      }
    }
  }
  if (!data.labels.empty() && data.labels.size() != data.x.rows()) {
    throw InvalidInput("label count does not match the number of rows");
  }
}

LoglikGraph loglik_build(Tape& tape, const ModelSpec& spec,
                         std::span<const double> theta, const Dataset& data) {
  validate_dataset(data);
  const ParamLayout lay = make_layout(spec);
  if (theta.size() != lay.total) {
    throw InvalidInput("theta length does not match the model spec");
  }
  LoglikGraph g;
  g.inputs.reserve(theta.size());
  std::vector<Ad> th;
  th.reserve(theta.size());
  for (double t : theta) {
    Ad v = make_var(tape, t);
    g.inputs.push_back(v.ref);
    th.push_back(v);
  }
  g.output = mean_loglik<Ad>(lay, std::span<const Ad>(th), data.x);
  return g;
}

double loglik_value(const ModelSpec& spec, std::span<const double> theta,
                    const Dataset& data) {
  validate_dataset(data);
  const ParamLayout lay = make_layout(spec);
  if (theta.size() != lay.total) {
    throw InvalidInput("theta length does not match the model spec");
  }
  return mean_loglik<double>(lay, theta, data.x);
}

GradResult loglik_grad(const ModelSpec& spec, std::span<const double> theta,
                       const Dataset& data) {
  Tape tape;
  const LoglikGraph g = loglik_build(tape, spec, theta, data);
  return backward(tape, g.output.ref, g.inputs);
}

Objective make_objective(const ModelSpec& spec, const Dataset& data) {
  validate_dataset(data);
  auto lay = std::make_shared<const ParamLayout>(make_layout(spec));
  auto x = std::make_shared<const Mat<double>>(data.x);
  auto tape = std::make_shared<Tape>();
  Objective obj;
  obj.dim = lay->total;
  obj.value = [lay, x](std::span<const double> th) {
    if (th.size() != lay->total) {
      throw InvalidInput("theta length does not match the objective");
    }
    return mean_loglik<double>(*lay, th, *x);
  };
  obj.value_grad = [lay, x, tape](std::span<const double> th) {
    if (th.size() != lay->total) {
      throw InvalidInput("theta length does not match the objective");
    }
    tape->clear();
    std::vector<Ad> vars;
    std::vector<VarRef> refs;
    vars.reserve(th.size());
    refs.reserve(th.size());
    for (double t : th) {
      Ad v = make_var(*tape, t);
      refs.push_back(v.ref);
      vars.push_back(v);
    }
    const Ad out = mean_loglik<Ad>(*lay, std::span<const Ad>(vars), *x);
    return backward(*tape, out.ref, refs);
  };
  return obj;
}

InitStrategy parse_init_strategy(std::string_view s) {
  if (s == "kmeans") return InitStrategy::kKmeans;
  if (s == "random") return InitStrategy::kRandom;
  throw ConfigError("unknown init strategy: " + std::string(s));
}

namespace {

double dist2(const Mat<double>& x, std::size_t i, const Mat<double>& c,
             std::size_t k) {
  double acc = 0.0;
  for (std::size_t j = 0; j < x.cols(); ++j) {
    const double d = x(i, j) - c(k, j);
    acc += d * d;
  }
  return acc;
}

}  // namespace

KmeansResult kmeans(const Mat<double>& x, int K, std::uint64_t seed,
                    int max_iter) {
  const std::size_t n = x.rows();
  const std::size_t p = x.cols();
  if (K < 1) throw InvalidInput("kmeans: K must be positive");
  const std::size_t kk = static_cast<std::size_t>(K);
  if (n < kk) throw InvalidInput("kmeans: fewer points than clusters");

  Rng rng(stream_hash("kmeans", {seed, n, kk}));
  Mat<double> means(kk, p);
  auto set_center = [&](std::size_t k, std::size_t i) {
    for (std::size_t j = 0; j < p; ++j) {
      means(k, j) = x(i, j);
    }
  };

  // k-means++ seeding: next center drawn with probability proportional to
  // the squared distance from the nearest chosen one
  set_center(0, rng.below(n));
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) {
    d2[i] = dist2(x, i, means, 0);
  }
  for (std::size_t k = 1; k < kk; ++k) {
    double total = 0.0;
    for (double d : d2) total += d;
    std::size_t pick = 0;
    if (total > 0.0) {
      const double r = rng.uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc > r) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.below(n);
    }
    set_center(k, pick);
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], dist2(x, i, means, k));
    }
  }

  KmeansResult res;
  res.means = std::move(means);
  res.labels.assign(n, 0);
  for (int iter = 0; iter < max_iter; ++iter) {
    bool changed = iter == 0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = dist2(x, i, res.means, 0);
      for (std::size_t k = 1; k < kk; ++k) {
        const double d = dist2(x, i, res.means, k);
        if (d < best_d) {
          best_d = d;
          best = k;
        }
      }
      if (res.labels[i] != static_cast<int>(best)) {
        res.labels[i] = static_cast<int>(best);
        changed = true;
      }
    }
    if (!changed) break;
    res.iters = iter + 1;

    std::vector<std::size_t> count(kk, 0);
    Mat<double> sums(kk, p);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t k = static_cast<std::size_t>(res.labels[i]);
      ++count[k];
      for (std::size_t j = 0; j < p; ++j) {
        sums(k, j) += x(i, j);
      }
    }
    for (std::size_t k = 0; k < kk; ++k) {
      if (count[k] == 0) {
        // revive with the point farthest from its assigned center
        std::size_t far = 0;
        double far_d = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double d =
              dist2(x, i, res.means, static_cast<std::size_t>(res.labels[i]));
          if (d > far_d) {
            far_d = d;
            far = i;
          }
        }
        for (std::size_t j = 0; j < p; ++j) {
          res.means(k, j) = x(far, j);
        }
      } else {
        for (std::size_t j = 0; j < p; ++j) {
          res.means(k, j) = sums(k, j) / static_cast<double>(count[k]);
        }
      }
    }
  }
  return res;
}

ParamSet init_params(const ModelSpec& spec, const Dataset& data,
                     InitStrategy strategy, std::uint64_t seed) {
  validate_dataset(data);
  const ParamLayout lay = make_layout(spec);
  const std::size_t K = static_cast<std::size_t>(spec.K);
  const std::size_t p = static_cast<std::size_t>(spec.p);
  if (data.dim() != p) {
    throw InvalidInput("data dimension does not match the model spec");
  }
  if (data.n() < K) {
    throw InvalidInput("need at least K points to initialize");
  }

  ParamSet params;
  params.spec = spec;
  params.theta.assign(lay.total, 0.0);

  Mat<double> means;
  if (strategy == InitStrategy::kKmeans) {
    means = kmeans(data.x, spec.K, seed).means;
  } else {
    Rng rng(stream_hash("init-random", {seed, data.n(), K}));
    std::vector<std::size_t> chosen;
    while (chosen.size() < K) {
      const std::size_t i = rng.below(data.n());
      if (std::find(chosen.begin(), chosen.end(), i) == chosen.end()) {
        chosen.push_back(i);
      }
    }
    means = Mat<double>(K, p);
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t j = 0; j < p; ++j) {
        means(k, j) = data.x(chosen[k], j);
      }
    }
  }
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t j = 0; j < p; ++j) {
      params.theta[lay.mu.offset + k * p + j] = means(k, j);
    }
  }

  switch (spec.family) {
    case Family::GMM:
    case Family::TMM: {
      const std::size_t tri = tri_size(p);
      for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t j = 0; j < p; ++j) {
          params.theta[lay.factor.offset + k * tri + tri_index(j, j)] = 1.0;
        }
      }
      if (spec.family == Family::TMM) {
        for (std::size_t k = 0; k < K; ++k) {
          params.theta[lay.logdof.offset + k] = std::log(30.0);
        }
      }
      break;
    }
    case Family::MCLUST:
      break;  // zero raws give unit covariances
    case Family::PGMM:
    case Family::MFA: {
      // zero loadings are a stationary ridge; break it with small noise
      Rng rng(stream_hash("init-loadings", {seed, K, p}));
      for (std::size_t i = 0; i < lay.loadings.length; ++i) {
        params.theta[lay.loadings.offset + i] = 0.1 * rng.normal();
      }
      break;
    }
  }
  return params;
}

Assignment responsibilities(const ModelSpec& spec, const ParamSet& params,
                            const Dataset& data) {
  validate_dataset(data);
  const ParamLayout lay = make_layout(spec);
  if (params.theta.size() != lay.total) {
    throw InvalidInput("theta length does not match the model spec");
  }
  detail::DensityEval<double> ev(lay, std::span<const double>(params.theta),
                                 data.x);
  const std::size_t n = data.n();
  const std::size_t K = static_cast<std::size_t>(spec.K);
  Assignment out;
  out.gamma = Mat<double>(n, K);
  out.labels.assign(n, 0);
  std::vector<double> terms(K);
  for (std::size_t i = 0; i < n; ++i) {
    ev.set_point(i);
    for (std::size_t k = 0; k < K; ++k) {
      terms[k] = detail::checked_term(ev, k);
    }
    double lse = terms[0];
    for (std::size_t k = 1; k < K; ++k) {
      lse = logsumexp_pair(lse, terms[k]);
    }
    std::size_t best = 0;
    for (std::size_t k = 0; k < K; ++k) {
      out.gamma(i, k) = std::exp(terms[k] - lse);
      if (terms[k] > terms[best]) best = k;
    }
    out.labels[i] = static_cast<int>(best);
  }
  return out;
}

ConstrainedParams constrain(const ModelSpec& spec, const ParamSet& params) {
  const ParamLayout lay = make_layout(spec);
  if (params.theta.size() != lay.total) {
    throw InvalidInput("theta length does not match the model spec");
  }
  const std::span<const double> th(params.theta);
  const std::size_t K = static_cast<std::size_t>(spec.K);
  const std::size_t p = static_cast<std::size_t>(spec.p);

  ConstrainedParams out;
  out.weights = weights_from_logits(th.subspan(lay.alpha.offset, K));
  out.means = Mat<double>(K, p);
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t j = 0; j < p; ++j) {
      out.means(k, j) = th[lay.mu.offset + k * p + j];
    }
  }
  switch (spec.family) {
    case Family::GMM:
    case Family::TMM: {
      const std::size_t tri = tri_size(p);
      for (std::size_t k = 0; k < K; ++k) {
        const Mat<double> v =
            unpack_lower(th.subspan(lay.factor.offset + k * tri, tri), p);
        out.near_singular = out.near_singular || factor_near_singular(v);
        out.covariances.push_back(cov_from_factor(v).sigma);
      }
      if (spec.family == Family::TMM) {
        for (std::size_t k = 0; k < K; ++k) {
          out.dof.push_back(std::exp(th[lay.logdof.offset + k]));
        }
      }
      break;
    }
    case Family::MCLUST:
      out.covariances = mclust_cov<double>(
          th.subspan(lay.volume.offset, lay.volume.length),
          th.subspan(lay.shape.offset, lay.shape.length),
          th.subspan(lay.orient.offset, lay.orient.length), lay.mclust,
          spec.K, spec.p);
      break;
    case Family::PGMM:
    case Family::MFA:
      out.covariances = pgmm_cov<double>(
          th.subspan(lay.loadings.offset, lay.loadings.length),
          th.subspan(lay.noise.offset, lay.noise.length), lay.pgmm, spec.K,
          spec.p, spec.q);
      break;
  }
  return out;
}

}  // namespace gmix
