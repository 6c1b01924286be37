#include "gmix/optim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "gmix/errors.hpp"

namespace gmix {

Method parse_method(std::string_view s) {
  if (s == "gd") return Method::GD;
  if (s == "adam") return Method::ADAM;
  if (s == "newton_cg" || s == "newton-cg") return Method::NEWTON_CG;
  throw ConfigError("unknown method: " + std::string(s));
}

const char* to_string(Method m) {
  switch (m) {
    case Method::GD: return "gd";
    case Method::ADAM: return "adam";
    case Method::NEWTON_CG: return "newton_cg";
  }
  return "?";
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    acc += a[i] * b[i];
  }
  return acc;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void validate(const OptConfig& cfg) {
  if (!(cfg.lr > 0.0)) throw ConfigError("lr must be positive");
  if (cfg.beta1 < 0.0 || cfg.beta1 >= 1.0) {
    throw ConfigError("beta1 must lie in [0, 1)");
  }
  if (cfg.beta2 < 0.0 || cfg.beta2 >= 1.0) {
    throw ConfigError("beta2 must lie in [0, 1)");
  }
  if (!(cfg.eps > 0.0)) throw ConfigError("eps must be positive");
  if (!(cfg.tol > 0.0)) throw ConfigError("tol must be positive");
  if (cfg.max_iter < 0) throw ConfigError("max_iter must be non-negative");
}

// Truncated conjugate gradients on (-H) d = g. Stops at the standard forcing
// residual, on negative curvature, or after dim steps; a first-step negative
// curvature yields the raw gradient direction.
std::vector<double> newton_direction(const Objective& obj,
                                     std::span<const double> theta,
                                     std::span<const double> g) {
  const std::size_t d = g.size();
  std::vector<double> s(d, 0.0);
  std::vector<double> r(g.begin(), g.end());
  std::vector<double> p = r;
  double rr = dot(r, r);
  const double gn = std::sqrt(rr);
  if (gn == 0.0) return s;
  const double target = 0.5 * std::min(1.0, std::sqrt(gn)) * gn;
  for (std::size_t step = 0; step < d; ++step) {
    std::vector<double> bp = hessian_vector_product(obj, theta, p);
    for (double& x : bp) x = -x;
    const double curvature = dot(p, bp);
    if (curvature <= 0.0) {
      if (step == 0) return {g.begin(), g.end()};
      break;
    }
    const double alpha = rr / curvature;
    for (std::size_t i = 0; i < d; ++i) {
      s[i] += alpha * p[i];
      r[i] -= alpha * bp[i];
    }
    const double rr_next = dot(r, r);
    if (std::sqrt(rr_next) < target) break;
    const double beta = rr_next / rr;
    rr = rr_next;
    for (std::size_t i = 0; i < d; ++i) {
      p[i] = r[i] + beta * p[i];
    }
  }
  return s;
}

}  // namespace

FitResult fit(const Objective& obj, std::span<const double> theta0,
              const OptConfig& cfg) {
  validate(cfg);
  if (theta0.size() != obj.dim) {
    throw InvalidInput("theta0 length does not match the objective");
  }
  const auto start = std::chrono::steady_clock::now();
  auto elapsed_ms = [&start]() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - start)
        .count();
  };

  FitResult res;
  res.theta.assign(theta0.begin(), theta0.end());
  const std::size_t d = res.theta.size();

  GradResult cur;
  try {
    cur = obj.value_grad(res.theta);
  } catch (const NumericError&) {
    res.diverged = true;
    res.wall_ms = elapsed_ms();
    return res;
  }
  if (!std::isfinite(cur.value)) {
    res.diverged = true;
    res.wall_ms = elapsed_ms();
    return res;
  }
  res.trajectory.push_back(cur.value);

  std::vector<double> m(d, 0.0);
  std::vector<double> v(d, 0.0);
  std::vector<double> prop(d);

  for (int it = 1; it <= cfg.max_iter; ++it) {
    bool moved = true;
    try {
      switch (cfg.method) {
        case Method::GD: {
          for (std::size_t i = 0; i < d; ++i) {
            prop[i] = res.theta[i] + cfg.lr * cur.grads[i];
          }
          cur = obj.value_grad(prop);
          break;
        }
        case Method::ADAM: {
          const double c1 = 1.0 - std::pow(cfg.beta1, it);
          const double c2 = 1.0 - std::pow(cfg.beta2, it);
          for (std::size_t i = 0; i < d; ++i) {
            const double g = cur.grads[i];
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
            prop[i] = res.theta[i] +
                      cfg.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg.eps);
          }
          cur = obj.value_grad(prop);
          break;
        }
        case Method::NEWTON_CG: {
          std::vector<double> dir =
              newton_direction(obj, res.theta, cur.grads);
          const double slope = dot(dir, cur.grads);
          if (slope <= 0.0) {
            dir = cur.grads;
          }
          const double ascent = dot(dir, cur.grads);
          double t = 1.0;
          moved = false;
          for (int halving = 0; halving <= 20; ++halving) {
            for (std::size_t i = 0; i < d; ++i) {
              prop[i] = res.theta[i] + t * dir[i];
            }
            double cand = -std::numeric_limits<double>::infinity();
            try {
              cand = obj.value(prop);
            } catch (const NumericError&) {
              // off the feasible set; shorten the step
            }
            if (std::isfinite(cand) &&
                cand >= res.trajectory.back() + 1e-4 * t * ascent) {
              moved = true;
              break;
            }
            t /= 2.0;
          }
          if (moved) {
            cur = obj.value_grad(prop);
          }
          break;
        }
      }
    } catch (const NumericError&) {
      res.diverged = true;
      break;
    }
    if (!std::isfinite(cur.value)) {
      res.diverged = true;
      break;
    }
    if (moved) {
      res.theta = prop;
    }
    res.trajectory.push_back(cur.value);
    res.iters = it;
    if (std::abs(res.trajectory[static_cast<std::size_t>(it)] -
                 res.trajectory[static_cast<std::size_t>(it) - 1]) < cfg.tol) {
      res.converged = true;
      break;
    }
  }
  res.wall_ms = elapsed_ms();
  return res;
}

std::vector<double> hessian_vector_product(const Objective& obj,
                                           std::span<const double> theta,
                                           std::span<const double> v) {
  if (theta.size() != obj.dim || v.size() != obj.dim) {
    throw InvalidInput("hessian_vector_product: dimension mismatch");
  }
  const double eps = std::sqrt(std::numeric_limits<double>::epsilon()) *
                     (1.0 + norm(theta)) / std::max(norm(v), 1e-12);
  std::vector<double> plus(theta.begin(), theta.end());
  std::vector<double> minus(theta.begin(), theta.end());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    plus[i] += eps * v[i];
    minus[i] -= eps * v[i];
  }
  const GradResult gp = obj.value_grad(plus);
  const GradResult gm = obj.value_grad(minus);
  std::vector<double> out(theta.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = (gp.grads[i] - gm.grads[i]) / (2.0 * eps);
    if (!std::isfinite(out[i])) {
      throw NumericError("hessian_vector_product: non-finite gradient");
    }
  }
  return out;
}

}  // namespace gmix
