#include "gmix/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>
#include <tuple>

#include "gmix/linalg.hpp"
#include "gmix/metrics.hpp"
#include "gmix/reparam.hpp"
#include "gmix/rng.hpp"

namespace gmix {

CovMode parse_cov_mode(std::string_view s) {
  if (s == "full") return CovMode::FULL;
  if (s == "eei") return CovMode::EEI;
  if (s == "vvi") return CovMode::VVI;
  throw ConfigError("unknown covariance mode \"" + std::string(s) + "\"");
}

const char* to_string(CovMode m) {
  switch (m) {
    case CovMode::FULL: return "full";
    case CovMode::EEI: return "eei";
    case CovMode::VVI: return "vvi";
  }
  return "?";
}

void validate_sim_spec(const SimSpec& spec) {
  if (spec.K < 1) throw ConfigError("simulate: K must be at least 1");
  if (spec.p < 1) throw ConfigError("simulate: p must be at least 1");
  if (spec.n < static_cast<std::size_t>(spec.K)) {
    throw ConfigError("simulate: need at least one point per component");
  }
  if (!(spec.scale > 0.0)) throw ConfigError("simulate: scale must be positive");
  if (spec.noise_features < 0) {
    throw ConfigError("simulate: noise_features must be nonnegative");
  }
  if (spec.imbalance && spec.K > 20) {
    // K masses of at least 0.05 cannot sum to one past K = 20
    throw ConfigError("simulate: imbalanced weights support at most 20 components");
  }
}

namespace {

std::vector<double> draw_weights(Rng& rng, int K, bool imbalance) {
  const std::size_t k = static_cast<std::size_t>(K);
  if (!imbalance || K == 1) {
    return std::vector<double>(k, 1.0 / static_cast<double>(K));
  }
  for (int attempt = 0; attempt < 1000; ++attempt) {
    std::vector<double> w(k);
    double total = 0.0;
    for (auto& v : w) {
      v = rng.gamma(0.3);
      total += v;
    }
    if (!(total > 0.0)) continue;
    double lo = 1.0;
    for (auto& v : w) {
      v /= total;
      lo = std::min(lo, v);
    }
    if (lo >= 0.05) return w;
  }
  return std::vector<double>(k, 1.0 / static_cast<double>(K));
}

// Cholesky with an escalating jitter so an unlucky near-singular G Gᵀ draw
// still yields a usable factor.
Mat<double> chol_jittered(Mat<double> sigma) {
  double jitter = 0.0;
  for (int round = 0; round < 8; ++round) {
    try {
      return chol_lower(sigma);
    } catch (const NumericError&) {
      const double bump = (jitter == 0.0) ? 1e-12 : jitter * 99.0;
      for (std::size_t j = 0; j < sigma.rows(); ++j) sigma(j, j) += bump;
      jitter += bump;
    }
  }
  throw NumericError("simulate: covariance draw is numerically singular");
}

}  // namespace

SimResult sample_mixture(const SimSpec& spec) {
  validate_sim_spec(spec);
  const std::size_t n = spec.n;
  const std::size_t p = static_cast<std::size_t>(spec.p);
  const std::size_t K = static_cast<std::size_t>(spec.K);
  const std::size_t m = static_cast<std::size_t>(spec.noise_features);
  const std::size_t d = p + m;

  Rng rng(stream_hash("data", {spec.seed, n, p, K}));

  SimResult out;
  out.weights = draw_weights(rng, spec.K, spec.imbalance);

  out.means = Mat<double>(K, d);
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t j = 0; j < p; ++j) {
      out.means(k, j) = rng.uniform(0.0, spec.scale);
    }
  }

  out.covariances.assign(K, Mat<double>(d, d));
  std::vector<Mat<double>> factors;
  switch (spec.covariance_mode) {
    case CovMode::FULL: {
      const double root_p = std::sqrt(static_cast<double>(p));
      for (std::size_t k = 0; k < K; ++k) {
        Mat<double> g(p, p);
        for (std::size_t i = 0; i < p; ++i) {
          for (std::size_t j = 0; j < p; ++j) g(i, j) = rng.normal() / root_p;
        }
        Mat<double> sigma(p, p);
        for (std::size_t i = 0; i < p; ++i) {
          for (std::size_t j = 0; j < p; ++j) {
            double acc = 0.0;
            for (std::size_t t = 0; t < p; ++t) acc += g(i, t) * g(j, t);
            sigma(i, j) = acc;
          }
        }
        for (std::size_t i = 0; i < p; ++i) {
          for (std::size_t j = 0; j < p; ++j) out.covariances[k](i, j) = sigma(i, j);
        }
        factors.push_back(chol_jittered(sigma));
      }
      break;
    }
    case CovMode::EEI: {
      std::vector<double> var(p);
      for (auto& v : var) v = rng.uniform(0.5, 2.0);
      for (std::size_t k = 0; k < K; ++k) {
        Mat<double> l(p, p);
        for (std::size_t j = 0; j < p; ++j) {
          out.covariances[k](j, j) = var[j];
          l(j, j) = std::sqrt(var[j]);
        }
        factors.push_back(std::move(l));
      }
      break;
    }
    case CovMode::VVI: {
      for (std::size_t k = 0; k < K; ++k) {
        Mat<double> l(p, p);
        for (std::size_t j = 0; j < p; ++j) {
          const double v = rng.uniform(0.5, 2.0);
          out.covariances[k](j, j) = v;
          l(j, j) = std::sqrt(v);
        }
        factors.push_back(std::move(l));
      }
      break;
    }
  }
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t j = p; j < d; ++j) out.covariances[k](j, j) = 1.0;
  }

  out.data.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform();
    double acc = 0.0;
    std::size_t pick = K - 1;
    for (std::size_t k = 0; k < K; ++k) {
      acc += out.weights[k];
      if (u < acc) {
        pick = k;
        break;
      }
    }
    out.data.labels[i] = static_cast<int>(pick);
  }

  out.data.x = Mat<double>(n, d);
  std::vector<double> eta(p);
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(out.data.labels[i]);
    for (auto& e : eta) e = rng.normal();
    const Mat<double>& l = factors[k];
    for (std::size_t r = 0; r < p; ++r) {
      double acc = out.means(k, r);
      for (std::size_t c = 0; c <= r; ++c) acc += l(r, c) * eta[c];
      out.data.x(i, r) = acc;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = p; j < d; ++j) out.data.x(i, j) = rng.normal();
  }

  // truth in the unconstrained full-covariance coordinates over all columns
  const ModelSpec truth_spec{Family::GMM, "", spec.K,
                             static_cast<int>(d), 0};
  const ParamLayout lay = make_layout(truth_spec);
  std::vector<double> theta(lay.total, 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    theta[lay.alpha.offset + k] = std::log(out.weights[k]);
    for (std::size_t j = 0; j < d; ++j) {
      theta[lay.mu.offset + k * d + j] = out.means(k, j);
    }
    Mat<double> full(d, d);
    const Mat<double>& l = factors[k];
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = 0; j <= i; ++j) full(i, j) = l(i, j);
    }
    for (std::size_t j = p; j < d; ++j) full(j, j) = 1.0;
    const std::vector<double> packed = pack_lower(full);
    std::copy(packed.begin(), packed.end(),
              theta.begin() + static_cast<std::ptrdiff_t>(
                                  lay.factor.offset + k * tri_size(d)));
  }
  out.truth = ParamSet{truth_spec, std::move(theta)};
  return out;
}

namespace {

struct BenchTask {
  BenchCell cell;
  std::uint64_t seed = 0;
};

void run_task(const BenchConfig& cfg, const BenchTask& task,
              std::vector<BenchRecord>& slot) {
  const BenchCell& cell = task.cell;
  SimSpec sim;
  sim.n = cell.n;
  sim.p = cell.p;
  sim.K = cell.K;
  sim.scale = cfg.scale;
  sim.seed = task.seed;
  const SimResult world = sample_mixture(sim);
  const ModelSpec spec{Family::GMM, "", cell.K, cell.p, 0};
  const double nd = static_cast<double>(cell.n);

  auto finish = [&](BenchRecord& rec, const FitResult& res) {
    rec.loglik = res.trajectory.empty()
                     ? std::numeric_limits<double>::quiet_NaN()
                     : res.trajectory.back() * nd;
    rec.iters = res.iters;
    rec.converged = res.converged;
    rec.diverged = res.diverged;
    rec.ari = std::numeric_limits<double>::quiet_NaN();
    if (!res.theta.empty()) {
      try {
        const Assignment a =
            responsibilities(spec, ParamSet{spec, res.theta}, world.data);
        rec.ari = ari(a.labels, world.data.labels);
      } catch (const NumericError&) {
      }
    }
  };

  slot.clear();
  for (const Method method : cfg.methods) {
    BenchRecord rec{cell.n, cell.p, cell.K, task.seed, to_string(method),
                    0.0,    0.0,    0,      0.0,       false,
                    false};
    OptConfig oc = cfg.opt;
    oc.method = method;
    oc.seed = task.seed;
    const ParamSet start =
        init_params(spec, world.data, InitStrategy::kKmeans, task.seed);
    Objective obj = make_objective(spec, world.data);
    const auto t0 = std::chrono::steady_clock::now();
    const FitResult res = fit(obj, start.theta, oc);
    const auto t1 = std::chrono::steady_clock::now();
    rec.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    finish(rec, res);
    slot.push_back(std::move(rec));
  }
  if (cfg.with_em) {
    BenchRecord rec{cell.n, cell.p, cell.K, task.seed, "em", 0.0, 0.0, 0,
                    0.0,    false,  false};
    EmConfig ec = cfg.em;
    ec.seed = task.seed;
    const KmeansResult km = kmeans(world.data.x, cell.K, task.seed);
    const auto t0 = std::chrono::steady_clock::now();
    const FitResult res = em_fit_gmm(world.data, cell.K, km.means, {}, ec);
    const auto t1 = std::chrono::steady_clock::now();
    rec.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    finish(rec, res);
    slot.push_back(std::move(rec));
  }
}

}  // namespace

std::vector<BenchRecord> benchmark_sweep(const BenchConfig& cfg) {
  if (cfg.grid.empty()) throw ConfigError("benchmark: empty grid");
  if (cfg.seeds < 1) throw ConfigError("benchmark: seeds must be positive");
  if (cfg.methods.empty() && !cfg.with_em) {
    throw ConfigError("benchmark: no methods requested");
  }
  if (cfg.jobs < 1) throw ConfigError("benchmark: jobs must be positive");
  for (const BenchCell& cell : cfg.grid) {
    SimSpec probe;
    probe.n = cell.n;
    probe.p = cell.p;
    probe.K = cell.K;
    probe.scale = cfg.scale;
    validate_sim_spec(probe);
  }

  std::vector<BenchTask> tasks;
  for (const BenchCell& cell : cfg.grid) {
    for (int s = 0; s < cfg.seeds; ++s) {
      tasks.push_back({cell, static_cast<std::uint64_t>(s)});
    }
  }
  std::vector<std::vector<BenchRecord>> slots(tasks.size());

  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(cfg.jobs), tasks.size());
  if (workers <= 1) {
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      run_task(cfg, tasks[t], slots[t]);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_lock;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t t = next.fetch_add(1);
          if (t >= tasks.size()) return;
          try {
            run_task(cfg, tasks[t], slots[t]);
          } catch (...) {
            const std::lock_guard<std::mutex> guard(failure_lock);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }

  std::vector<BenchRecord> records;
  for (auto& slot : slots) {
    for (auto& rec : slot) records.push_back(std::move(rec));
  }
  std::sort(records.begin(), records.end(),
            [](const BenchRecord& a, const BenchRecord& b) {
              return std::tie(a.n, a.p, a.K, a.seed, a.method) <
                     std::tie(b.n, b.p, b.K, b.seed, b.method);
            });
  return records;
}

}  // namespace gmix
