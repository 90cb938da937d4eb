// Copyright 2026 The otreg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Test-only reference computations, deliberately independent of the library's
// solver and gradient code paths.

#pragma once

#include <algorithm>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "otreg/rng.hpp"
#include "otreg/types.hpp"

namespace oracles {

/// Minimum transport cost for uniform square marginals by enumerating all
/// scaled permutation matrices (the vertices of the Birkhoff polytope).
/// Exponential; guarded to k <= 7.
inline double brute_force_uniform_cost(const otreg::Matrixd& cost) {
  const otreg::Index k = cost.rows();
  if (cost.cols() != k) throw std::invalid_argument("brute force oracle needs a square matrix");
  if (k > 7) throw std::invalid_argument("brute force oracle is gated to k <= 7");
  std::vector<int> perm(static_cast<std::size_t>(k));
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0;
    for (otreg::Index i = 0; i < k; ++i) total += cost(i, perm[static_cast<std::size_t>(i)]);
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / double(k);
}

/// Plain double loop over entries; mirrors the Frobenius product definition.
inline double frobenius_by_loops(const otreg::Matrixd& a, const otreg::Matrixd& b) {
  double total = 0;
  for (otreg::Index i = 0; i < a.rows(); ++i)
    for (otreg::Index j = 0; j < a.cols(); ++j) total += a(i, j) * b(i, j);
  return total;
}

/// Central finite differences of f with respect to every entry of x.
inline otreg::Matrixd finite_difference(const std::function<double(const otreg::Matrixd&)>& f,
                                        const otreg::Matrixd& x, double step) {
  otreg::Matrixd grad(x.rows(), x.cols());
  otreg::Matrixd probe = x;
  for (otreg::Index i = 0; i < x.rows(); ++i)
    for (otreg::Index j = 0; j < x.cols(); ++j) {
      probe(i, j) = x(i, j) + step;
      const double fp = f(probe);
      probe(i, j) = x(i, j) - step;
      const double fm = f(probe);
      probe(i, j) = x(i, j);
      grad(i, j) = (fp - fm) / (2 * step);
    }
  return grad;
}

inline double max_relative_error(const otreg::Matrixd& got, const otreg::Matrixd& want) {
  const double scale = std::max(1e-8, want.cwiseAbs().maxCoeff());
  return (got - want).cwiseAbs().maxCoeff() / scale;
}

inline otreg::Matrixd random_matrix(otreg::Rng& rng, otreg::Index rows, otreg::Index cols,
                                    double lo = 0.0, double hi = 1.0) {
  otreg::Matrixd m(rows, cols);
  for (otreg::Index i = 0; i < rows; ++i)
    for (otreg::Index j = 0; j < cols; ++j) m(i, j) = rng.uniform(lo, hi);
  return m;
}

inline otreg::Matrixd random_gaussian(otreg::Rng& rng, otreg::Index rows, otreg::Index cols,
                                      double scale = 1.0) {
  otreg::Matrixd m(rows, cols);
  for (otreg::Index i = 0; i < rows; ++i)
    for (otreg::Index j = 0; j < cols; ++j) m(i, j) = scale * rng.normal();
  return m;
}

/// Random strictly positive weights from small integer numerators, summing
/// to exactly 1 after normalization.
inline otreg::Vectord random_rational_weights(otreg::Rng& rng, otreg::Index k) {
  otreg::Vectord w(k);
  for (otreg::Index i = 0; i < k; ++i) w[i] = double(1 + rng.uniform_int(9));
  w /= w.sum();
  return w;
}

/// A feasible coupling of (mu, nu) built independently of the solvers:
/// start from the independent coupling and keep it feasible by construction.
inline otreg::Matrixd independent_coupling(const otreg::Vectord& mu, const otreg::Vectord& nu) {
  return mu * nu.transpose();
}

}  // namespace oracles
