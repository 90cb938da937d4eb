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

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace otreg {

using Index = Eigen::Index;

// Dense storage is row-major throughout: rows index neurons, columns index
// examples, and transport plans are indexed (source neuron, target neuron).
template <class Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrixd = Matrix<double>;
using Vectord = Vector<double>;

/// Numerical failure inside a solver (overflow, lost feasibility, exhausted
/// pivot budget). Input validation problems throw std::invalid_argument
/// instead.
class SolverError : public std::runtime_error {
 public:
  explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

/// Nonnegative weights over a finite set of atoms, summing to one.
template <class Scalar>
class DiscreteMeasure {
 public:
  static constexpr Scalar kSumTolerance = Scalar(1e-9);

  /// Uniform weights 1/k over k atoms.
  static DiscreteMeasure uniform(Index k) {
    if (k < 1) throw std::invalid_argument("DiscreteMeasure: need at least one atom");
    DiscreteMeasure m;
    m.weights_ = Vector<Scalar>::Constant(k, Scalar(1) / Scalar(k));
    return m;
  }

  /// Validating constructor: entries must be nonnegative, finite, and sum to
  /// one within kSumTolerance.
  static DiscreteMeasure from_weights(Vector<Scalar> w) {
    if (w.size() < 1) throw std::invalid_argument("DiscreteMeasure: empty weight vector");
    if (!w.allFinite()) throw std::invalid_argument("DiscreteMeasure: non-finite weight");
    if ((w.array() < Scalar(0)).any())
      throw std::invalid_argument("DiscreteMeasure: negative weight");
    if (std::abs(double(w.sum()) - 1.0) > double(kSumTolerance))
      throw std::invalid_argument("DiscreteMeasure: weights must sum to 1 (got " +
                                  std::to_string(double(w.sum())) + ")");
    DiscreteMeasure m;
    m.weights_ = std::move(w);
    return m;
  }

  const Vector<Scalar>& weights() const { return weights_; }
  Index size() const { return weights_.size(); }

 private:
  DiscreteMeasure() = default;
  Vector<Scalar> weights_;
};

using DiscreteMeasured = DiscreteMeasure<double>;

inline constexpr const char* kArtifactVersion = "0.1.0";

}  // namespace otreg
