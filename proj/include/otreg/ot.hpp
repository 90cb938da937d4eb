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

#include <algorithm>
#include <limits>
#include <vector>

#include "otreg/types.hpp"

namespace otreg {

enum class OtMethod { exact, sinkhorn, ipot };

/// Knobs for the iterative solvers. The exact solver ignores everything here.
/// For Sinkhorn, outer_iterations bounds the number of scaling rounds; for
/// IPOT, outer_iterations bounds proximal steps and inner_iterations the
/// Sinkhorn rounds per step. convergence_tolerance is an L1 bound, on the
/// marginal violation (Sinkhorn) or on the plan change per proximal step
/// (IPOT, where iterates stay near-feasible long before they are optimal).
template <class Scalar>
struct SolverSettings {
  OtMethod method = OtMethod::ipot;
  Scalar entropic_epsilon = Scalar(0.05);
  Scalar ipot_beta = Scalar(1);
  int inner_iterations = 1;
  int outer_iterations = 1000;
  Scalar convergence_tolerance = Scalar(1e-8);
  // Stabilized evaluation of the scaling updates. The plain scaling form is
  // kept as an opt-out; it raises SolverError on overflow/underflow instead
  // of returning garbage.
  bool log_domain = true;

  void validate() const {
    if (!(entropic_epsilon > Scalar(0)))
      throw std::invalid_argument("SolverSettings: entropic_epsilon must be > 0");
    if (!(ipot_beta > Scalar(0)))
      throw std::invalid_argument("SolverSettings: ipot_beta must be > 0");
    if (inner_iterations < 1)
      throw std::invalid_argument("SolverSettings: inner_iterations must be >= 1");
    if (outer_iterations < 1)
      throw std::invalid_argument("SolverSettings: outer_iterations must be >= 1");
    if (!(convergence_tolerance > Scalar(0)))
      throw std::invalid_argument("SolverSettings: convergence_tolerance must be > 0");
  }
};

template <class Scalar>
struct SolveReport {
  Matrix<Scalar> plan;
  Scalar cost = Scalar(0);
  int iterations_used = 0;
  Scalar final_marginal_violation = Scalar(0);
  bool converged = true;
  // <plan, cost>_F after each outer iteration (iterative methods only).
  std::vector<Scalar> cost_trace;
};

/// Frobenius inner product <plan, cost>_F.
template <class DerivedP, class DerivedM>
typename DerivedP::Scalar transport_cost(const Eigen::MatrixBase<DerivedP>& plan,
                                         const Eigen::MatrixBase<DerivedM>& cost) {
  if (plan.rows() != cost.rows() || plan.cols() != cost.cols())
    throw std::invalid_argument("transport_cost: plan and cost dimensions differ");
  return plan.cwiseProduct(cost).sum();
}

/// Trace of a square plan. Under uniform marginals this lies in [0, 1] and
/// equals 1 exactly when the plan is the scaled identity; it reads as the
/// fraction of neurons matched to their own initial activation.
template <class Derived>
typename Derived::Scalar plan_trace_ratio(const Eigen::MatrixBase<Derived>& plan) {
  if (plan.rows() != plan.cols())
    throw std::invalid_argument("plan_trace_ratio: plan must be square");
  return plan.trace();
}

namespace detail {

template <class Scalar>
void check_problem(const Matrix<Scalar>& cost, const DiscreteMeasure<Scalar>& mu,
                   const DiscreteMeasure<Scalar>& nu) {
  if (cost.rows() != mu.size() || cost.cols() != nu.size())
    throw std::invalid_argument("ot solver: cost matrix dimensions do not match marginals");
  if (!cost.allFinite())
    throw std::invalid_argument("ot solver: cost matrix has non-finite entries");
  if ((cost.array() < Scalar(0)).any())
    throw std::invalid_argument("ot solver: cost matrix has negative entries");
}

/// L1 deviation of the plan's marginals from the prescribed ones.
template <class Scalar>
Scalar marginal_violation(const Matrix<Scalar>& plan, const Vector<Scalar>& mu,
                          const Vector<Scalar>& nu) {
  return (plan.rowwise().sum() - mu).cwiseAbs().sum() +
         (plan.colwise().sum().transpose() - nu).cwiseAbs().sum();
}

/// Projects an almost-feasible nonnegative plan onto the transport polytope:
/// shrink overfull rows/columns, then spread the remaining deficit as a
/// rank-one correction. Marginals afterwards hold to machine precision.
template <class Scalar>
void round_to_feasible(Matrix<Scalar>& plan, const Vector<Scalar>& mu,
                       const Vector<Scalar>& nu) {
  const Index m = plan.rows(), n = plan.cols();
  for (Index i = 0; i < m; ++i) {
    const Scalar r = plan.row(i).sum();
    if (r > mu[i] && r > Scalar(0)) plan.row(i) *= mu[i] / r;
  }
  for (Index j = 0; j < n; ++j) {
    const Scalar c = plan.col(j).sum();
    if (c > nu[j] && c > Scalar(0)) plan.col(j) *= nu[j] / c;
  }
  Vector<Scalar> err_row = mu - plan.rowwise().sum();
  Vector<Scalar> err_col = nu - plan.colwise().sum().transpose();
  err_row = err_row.cwiseMax(Scalar(0));
  err_col = err_col.cwiseMax(Scalar(0));
  const Scalar deficit = err_row.sum();
  if (deficit > Scalar(0)) plan.noalias() += err_row * err_col.transpose() / deficit;
}

/// Row-wise log-sum-exp of x + 1*shift^T (shift added to every row).
template <class Scalar>
Vector<Scalar> logsumexp_rows(const Matrix<Scalar>& x, const Vector<Scalar>& shift) {
  Matrix<Scalar> shifted = x;
  shifted.rowwise() += shift.transpose();
  Vector<Scalar> row_max = shifted.rowwise().maxCoeff();
  Vector<Scalar> out(x.rows());
  for (Index i = 0; i < x.rows(); ++i) {
    const Scalar mx = row_max[i];
    if (!(mx > -std::numeric_limits<Scalar>::infinity())) {
      out[i] = -std::numeric_limits<Scalar>::infinity();
      continue;
    }
    out[i] = mx + std::log((shifted.row(i).array() - mx).exp().sum());
  }
  return out;
}

/// Dense transportation simplex (u-v / MODI method) over the complete
/// bipartite graph. The basis is a spanning tree over m row nodes and n
/// column nodes; entering arcs are chosen by the most negative reduced cost,
/// falling back to Bland's rule if the run stalls, which rules out cycling.
template <class Scalar>
class TransportSimplex {
 public:
  TransportSimplex(const Matrix<Scalar>& cost, const Vector<Scalar>& supply,
                   const Vector<Scalar>& demand)
      : cost_(cost), m_(cost.rows()), n_(cost.cols()), supply_(supply), demand_(demand) {}

  Matrix<Scalar> solve(int& pivots_out) {
    northwest_corner();
    const Scalar tol = Scalar(1e-12) * std::max(Scalar(1), cost_.template lpNorm<Eigen::Infinity>());
    const long bland_after = 64 * long(m_ + n_) + 1024;
    const long pivot_cap = 4000 * long(m_ + n_) + 100000;
    long pivots = 0;
    std::vector<Scalar> u(m_), v(n_);
    while (true) {
      compute_duals(u, v);
      Index ei = -1, ej = -1;
      Scalar best = -tol;
      if (pivots < bland_after) {
        for (Index i = 0; i < m_; ++i)
          for (Index j = 0; j < n_; ++j) {
            const Scalar red = cost_(i, j) - u[i] - v[j];
            if (red < best) {
              best = red;
              ei = i;
              ej = j;
            }
          }
      } else {
        for (Index i = 0; i < m_ && ei < 0; ++i)
          for (Index j = 0; j < n_; ++j)
            if (cost_(i, j) - u[i] - v[j] < -tol) {
              ei = i;
              ej = j;
              break;
            }
      }
      if (ei < 0) break;  // optimal
      pivot(ei, ej);
      if (++pivots > pivot_cap)
        throw SolverError("transportation simplex exceeded its pivot budget");
    }
    pivots_out = int(pivots);
    Matrix<Scalar> plan = Matrix<Scalar>::Zero(m_, n_);
    for (const Arc& a : arcs_) plan(a.i, a.j) = std::max(a.x, Scalar(0));
    return plan;
  }

 private:
  struct Arc {
    Index i, j;
    Scalar x;
  };

  // One arc per step, advancing exactly one index per step, yields the
  // m + n - 1 basic cells a spanning tree needs, including degenerate zeros.
  void northwest_corner() {
    Vector<Scalar> a = supply_, b = demand_;
    arcs_.clear();
    arcs_.reserve(m_ + n_ - 1);
    Index i = 0, j = 0;
    while (true) {
      const Scalar q = std::min(a[i], b[j]);
      arcs_.push_back({i, j, q});
      a[i] -= q;
      b[j] -= q;
      if (i == m_ - 1 && j == n_ - 1) break;
      if (i == m_ - 1)
        ++j;
      else if (j == n_ - 1)
        ++i;
      else if (a[i] <= Scalar(0))
        ++i;
      else
        ++j;
    }
    rebuild_adjacency();
  }

  void rebuild_adjacency() {
    adj_.assign(m_ + n_, {});
    for (int k = 0; k < int(arcs_.size()); ++k) {
      adj_[arcs_[k].i].push_back(k);
      adj_[m_ + arcs_[k].j].push_back(k);
    }
  }

  // Tree traversal from row 0 with u[0] = 0 fixes all duals.
  void compute_duals(std::vector<Scalar>& u, std::vector<Scalar>& v) {
    std::vector<char> seen(m_ + n_, 0);
    std::vector<Index> stack{0};
    u[0] = Scalar(0);
    seen[0] = 1;
    while (!stack.empty()) {
      const Index node = stack.back();
      stack.pop_back();
      for (int k : adj_[node]) {
        const Arc& a = arcs_[k];
        const Index other = (node < m_) ? m_ + a.j : a.i;
        if (seen[other]) continue;
        if (other >= m_)
          v[other - m_] = cost_(a.i, a.j) - u[a.i];
        else
          u[other] = cost_(a.i, a.j) - v[a.j];
        seen[other] = 1;
        stack.push_back(other);
      }
    }
  }

  void pivot(Index ei, Index ej) {
    // Unique tree path from the entering arc's row node to its column node.
    std::vector<int> parent_arc(m_ + n_, -1);
    std::vector<Index> parent(m_ + n_, -1);
    std::vector<char> seen(m_ + n_, 0);
    std::vector<Index> queue{ei};
    seen[ei] = 1;
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
      const Index node = queue[qi];
      if (node == m_ + ej) break;
      for (int k : adj_[node]) {
        const Arc& a = arcs_[k];
        const Index other = (node < m_) ? m_ + a.j : a.i;
        if (seen[other]) continue;
        seen[other] = 1;
        parent[other] = node;
        parent_arc[other] = k;
        queue.push_back(other);
      }
    }
    std::vector<int> path;  // arcs from ei to m_+ej
    for (Index node = m_ + ej; node != ei; node = parent[node]) path.push_back(parent_arc[node]);
    std::reverse(path.begin(), path.end());

    // Signs alternate around the cycle: +theta on the entering arc, -theta on
    // path[0], +theta on path[1], ...
    Scalar theta = std::numeric_limits<Scalar>::max();
    int leaving = -1;
    for (std::size_t t = 0; t < path.size(); t += 2) {
      const Arc& a = arcs_[path[t]];
      const bool tie_smaller =
          leaving >= 0 && a.x == theta &&
          (a.i < arcs_[leaving].i || (a.i == arcs_[leaving].i && a.j < arcs_[leaving].j));
      if (a.x < theta || tie_smaller) {
        theta = a.x;
        leaving = path[t];
      }
    }
    for (std::size_t t = 0; t < path.size(); ++t)
      arcs_[path[t]].x += (t % 2 == 0) ? -theta : theta;
    arcs_[leaving] = {ei, ej, theta};
    rebuild_adjacency();
  }

  const Matrix<Scalar>& cost_;
  const Index m_, n_;
  Vector<Scalar> supply_, demand_;
  std::vector<Arc> arcs_;
  std::vector<std::vector<int>> adj_;
};

}  // namespace detail

/// Exact solution of the discrete transport problem
///   min_{P >= 0, P 1 = mu, P^T 1 = nu} <P, cost>_F
/// as a transportation-problem linear program. The returned plan is an
/// optimal basic feasible solution (at most m + n - 1 nonzeros).
template <class Scalar>
SolveReport<Scalar> solve_exact(const Matrix<Scalar>& cost, const DiscreteMeasure<Scalar>& mu,
                                const DiscreteMeasure<Scalar>& nu) {
  detail::check_problem(cost, mu, nu);
  detail::TransportSimplex<Scalar> simplex(cost, mu.weights(), nu.weights());
  SolveReport<Scalar> report;
  report.plan = simplex.solve(report.iterations_used);
  report.cost = transport_cost(report.plan, cost);
  report.final_marginal_violation =
      detail::marginal_violation(report.plan, mu.weights(), nu.weights());
  report.converged = true;
  return report;
}

/// Sinkhorn-Knopp iterations for the entropy-regularized transport problem at
/// regularization entropic_epsilon. The reported cost is the plain transport
/// cost <P, cost>_F of the returned plan, which is rounded onto the transport
/// polytope after the final iteration.
template <class Scalar>
SolveReport<Scalar> solve_sinkhorn(const Matrix<Scalar>& cost, const DiscreteMeasure<Scalar>& mu,
                                   const DiscreteMeasure<Scalar>& nu,
                                   const SolverSettings<Scalar>& settings) {
  detail::check_problem(cost, mu, nu);
  settings.validate();
  const Index m = cost.rows(), n = cost.cols();
  const Scalar eps = settings.entropic_epsilon;
  const Vector<Scalar>& wmu = mu.weights();
  const Vector<Scalar>& wnu = nu.weights();

  SolveReport<Scalar> report;
  report.converged = false;
  Matrix<Scalar> plan(m, n);

  if (settings.log_domain) {
    const Vector<Scalar> log_mu = wmu.array().log();
    const Vector<Scalar> log_nu = wnu.array().log();
    const Matrix<Scalar> neg_cost = -cost / eps;
    Vector<Scalar> f = Vector<Scalar>::Zero(m);
    Vector<Scalar> g = Vector<Scalar>::Zero(n);
    const Matrix<Scalar> neg_cost_t = neg_cost.transpose();
    for (int it = 1; it <= settings.outer_iterations; ++it) {
      f = eps * (log_mu - detail::logsumexp_rows(neg_cost, Vector<Scalar>(g / eps)));
      g = eps * (log_nu - detail::logsumexp_rows(neg_cost_t, Vector<Scalar>(f / eps)));
      plan = (((neg_cost.colwise() + f / eps).rowwise() + g.transpose() / eps)).array().exp();
      report.iterations_used = it;
      report.cost_trace.push_back(transport_cost(plan, cost));
      report.final_marginal_violation = detail::marginal_violation(plan, wmu, wnu);
      if (report.final_marginal_violation < settings.convergence_tolerance) {
        report.converged = true;
        break;
      }
    }
  } else {
    const Matrix<Scalar> kernel = (-cost / eps).array().exp();
    Vector<Scalar> a = Vector<Scalar>::Ones(m);
    Vector<Scalar> b = Vector<Scalar>::Ones(n);
    for (int it = 1; it <= settings.outer_iterations; ++it) {
      a = wmu.cwiseQuotient(kernel * b);
      b = wnu.cwiseQuotient(kernel.transpose() * a);
      if (!a.allFinite() || !b.allFinite() || (a.array() <= Scalar(0)).any() ||
          (b.array() <= Scalar(0)).any())
        throw SolverError(
            "sinkhorn: scaling vectors overflowed/underflowed; "
            "enable log-domain mode (SolverSettings::log_domain)");
      plan = a.asDiagonal() * kernel * b.asDiagonal();
      report.iterations_used = it;
      report.cost_trace.push_back(transport_cost(plan, cost));
      report.final_marginal_violation = detail::marginal_violation(plan, wmu, wnu);
      if (report.final_marginal_violation < settings.convergence_tolerance) {
        report.converged = true;
        break;
      }
    }
  }

  detail::round_to_feasible(plan, wmu, wnu);
  report.plan = std::move(plan);
  report.cost = transport_cost(report.plan, cost);
  return report;
}

/// Proximal point iterations with Sinkhorn inner updates; unlike plain
/// Sinkhorn the iterates converge to a solution of the unregularized problem,
/// so the cost approaches the solve_exact optimum as outer iterations grow.
/// Stops early once the plan change per proximal step drops below
/// convergence_tolerance (L1), i.e. near a fixed point.
template <class Scalar>
SolveReport<Scalar> solve_ipot(const Matrix<Scalar>& cost, const DiscreteMeasure<Scalar>& mu,
                               const DiscreteMeasure<Scalar>& nu,
                               const SolverSettings<Scalar>& settings) {
  detail::check_problem(cost, mu, nu);
  settings.validate();
  const Index m = cost.rows(), n = cost.cols();
  const Scalar beta = settings.ipot_beta;
  const Vector<Scalar>& wmu = mu.weights();
  const Vector<Scalar>& wnu = nu.weights();

  SolveReport<Scalar> report;
  report.converged = false;
  Matrix<Scalar> plan = wmu * wnu.transpose();  // independent coupling

  if (settings.log_domain) {
    const Vector<Scalar> log_mu = wmu.array().log();
    const Vector<Scalar> log_nu = wnu.array().log();
    Matrix<Scalar> log_plan = plan.array().log();
    Vector<Scalar> g = Vector<Scalar>::Zero(n);
    for (int it = 1; it <= settings.outer_iterations; ++it) {
      const Matrix<Scalar> log_q = log_plan - cost / beta;
      const Matrix<Scalar> log_q_t = log_q.transpose();
      Vector<Scalar> f(m);
      for (int k = 0; k < settings.inner_iterations; ++k) {
        f = log_mu - detail::logsumexp_rows(log_q, g);
        g = log_nu - detail::logsumexp_rows(log_q_t, f);
      }
      log_plan = (log_q.colwise() + f).rowwise() + g.transpose();
      Matrix<Scalar> next = log_plan.array().exp();
      const Scalar change = (next - plan).cwiseAbs().sum();
      plan = std::move(next);
      report.iterations_used = it;
      report.cost_trace.push_back(transport_cost(plan, cost));
      if (change < settings.convergence_tolerance) {
        report.converged = true;
        break;
      }
    }
  } else {
    const Matrix<Scalar> kernel = (-cost / beta).array().exp();
    Vector<Scalar> b = Vector<Scalar>::Ones(n);
    for (int it = 1; it <= settings.outer_iterations; ++it) {
      const Matrix<Scalar> q = kernel.cwiseProduct(plan);
      Vector<Scalar> a(m);
      for (int k = 0; k < settings.inner_iterations; ++k) {
        a = wmu.cwiseQuotient(q * b);
        b = wnu.cwiseQuotient(q.transpose() * a);
      }
      if (!a.allFinite() || !b.allFinite() || (a.array() <= Scalar(0)).any() ||
          (b.array() <= Scalar(0)).any())
        throw SolverError(
            "ipot: scaling vectors overflowed/underflowed; "
            "enable log-domain mode (SolverSettings::log_domain)");
      Matrix<Scalar> next = a.asDiagonal() * q * b.asDiagonal();
      const Scalar change = (next - plan).cwiseAbs().sum();
      plan = std::move(next);
      report.iterations_used = it;
      report.cost_trace.push_back(transport_cost(plan, cost));
      if (change < settings.convergence_tolerance) {
        report.converged = true;
        break;
      }
    }
  }

  report.final_marginal_violation = detail::marginal_violation(plan, wmu, wnu);
  detail::round_to_feasible(plan, wmu, wnu);
  report.plan = std::move(plan);
  report.cost = transport_cost(report.plan, cost);
  return report;
}

/// Dispatch on settings.method.
template <class Scalar>
SolveReport<Scalar> solve(const Matrix<Scalar>& cost, const DiscreteMeasure<Scalar>& mu,
                          const DiscreteMeasure<Scalar>& nu,
                          const SolverSettings<Scalar>& settings) {
  switch (settings.method) {
    case OtMethod::exact:
      return solve_exact(cost, mu, nu);
    case OtMethod::sinkhorn:
      return solve_sinkhorn(cost, mu, nu, settings);
    case OtMethod::ipot:
      return solve_ipot(cost, mu, nu, settings);
  }
  throw std::invalid_argument("solve: unknown method");
}

}  // namespace otreg
