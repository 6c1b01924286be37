#pragma once

#include <cstddef>
#include <functional>
#include <span>

#include "gmix/autodiff.hpp"

namespace gmix {

// A differentiable scalar function over a flat coordinate vector. `value`
// must agree with the value returned by `value_grad`; both may throw
// NumericError, which optimizers fold into a diverged result.
struct Objective {
  std::size_t dim = 0;
  std::function<double(std::span<const double>)> value;
  std::function<GradResult(std::span<const double>)> value_grad;
};

}  // namespace gmix
