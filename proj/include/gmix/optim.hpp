#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "gmix/objective.hpp"

namespace gmix {

enum class Method { GD, ADAM, NEWTON_CG };

Method parse_method(std::string_view s);
const char* to_string(Method m);

struct OptConfig {
  Method method = Method::ADAM;
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int max_iter = 1000;
  double tol = 1e-6;
  std::uint64_t seed = 0;
};

struct FitResult {
  std::vector<double> theta;
  std::vector<double> trajectory;  // objective per iteration; index 0 is theta0
  int iters = 0;
  bool converged = false;
  bool diverged = false;
  double wall_ms = 0.0;
};

// Maximizes the objective by ascent from theta0. GD and Adam take fixed-rate
// steps; Newton-CG solves the (negated) Hessian system with conjugate
// gradients on Hessian-vector products, falling back to the gradient
// direction when curvature is unusable, and backtracks to avoid decrease.
// Stops when |L_t - L_{t-1}| < tol or after max_iter iterations. A non-finite
// objective mid-run sets `diverged` and returns the last finite iterate.
FitResult fit(const Objective& obj, std::span<const double> theta0,
              const OptConfig& cfg);

// (grad(theta + eps v) - grad(theta - eps v)) / (2 eps) with
// eps = sqrt(machine eps) (1 + |theta|) / max(|v|, 1e-12).
std::vector<double> hessian_vector_product(const Objective& obj,
                                           std::span<const double> theta,
                                           std::span<const double> v);

}  // namespace gmix
