#pragma once

#include <cstddef>
#include <optional>
#include <span>

namespace gmix {

// Penalty-positive, lower-is-better conventions over the total
// log-likelihood.
double aic(double total_loglik, std::size_t d);
double bic(double total_loglik, std::size_t d, std::size_t n);

// Adjusted Rand index between two labelings of the same points, in [-1, 1].
// Pair counts are accumulated in exact integer arithmetic. Both partitions
// being trivial (a single block, or all singletons) yields 1.
double ari(std::span<const int> labels_a, std::span<const int> labels_b);

struct EvalReport {
  double total_loglik = 0.0;
  double aic = 0.0;
  double bic = 0.0;
  std::optional<double> ari;
  std::size_t n = 0;
  std::size_t d = 0;
};

EvalReport evaluate(double total_loglik, std::size_t d, std::size_t n,
                    std::span<const int> labels,
                    std::span<const int> truth);

}  // namespace gmix
