#include "gmix/metrics.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "gmix/errors.hpp"

namespace gmix {

double aic(double total_loglik, std::size_t d) {
  return 2.0 * static_cast<double>(d) - 2.0 * total_loglik;
}

double bic(double total_loglik, std::size_t d, std::size_t n) {
  if (n < 1) throw InvalidInput("bic: n must be at least 1");
  return static_cast<double>(d) * std::log(static_cast<double>(n)) -
         2.0 * total_loglik;
}

namespace {

std::int64_t pairs(std::int64_t c) { return c * (c - 1) / 2; }

}  // namespace

double ari(std::span<const int> labels_a, std::span<const int> labels_b) {
  if (labels_a.size() != labels_b.size()) {
    throw InvalidInput("ari: labelings differ in length");
  }
  if (labels_a.empty()) {
    throw InvalidInput("ari: labelings are empty");
  }
  std::map<std::pair<int, int>, std::int64_t> cells;
  std::map<int, std::int64_t> row;
  std::map<int, std::int64_t> col;
  for (std::size_t i = 0; i < labels_a.size(); ++i) {
    ++cells[{labels_a[i], labels_b[i]}];
    ++row[labels_a[i]];
    ++col[labels_b[i]];
  }
  std::int64_t index = 0;
  for (const auto& [key, c] : cells) {
    index += pairs(c);
  }
  std::int64_t row_pairs = 0;
  for (const auto& [key, c] : row) {
    row_pairs += pairs(c);
  }
  std::int64_t col_pairs = 0;
  for (const auto& [key, c] : col) {
    col_pairs += pairs(c);
  }
  const std::int64_t total = pairs(static_cast<std::int64_t>(labels_a.size()));
  if (total == 0) return 1.0;  // a single point

  // ARI = (index - expected) / (max_index - expected), all over C(n,2)
  const double expected = static_cast<double>(row_pairs) *
                          static_cast<double>(col_pairs) /
                          static_cast<double>(total);
  const double max_index =
      0.5 * static_cast<double>(row_pairs + col_pairs);
  const double denom = max_index - expected;
  if (denom == 0.0) return 1.0;  // both partitions trivial
  return (static_cast<double>(index) - expected) / denom;
}

EvalReport evaluate(double total_loglik, std::size_t d, std::size_t n,
                    std::span<const int> labels,
                    std::span<const int> truth) {
  EvalReport rep;
  rep.total_loglik = total_loglik;
  rep.d = d;
  rep.n = n;
  rep.aic = aic(total_loglik, d);
  rep.bic = bic(total_loglik, d, n);
  if (!truth.empty()) {
    rep.ari = ari(labels, truth);
  }
  return rep;
}

}  // namespace gmix
