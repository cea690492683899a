// Copyright 2026 The softwalk Authors
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

// Brute-force reference for small QPs: every assignment of each inequality
// row to {inactive, lower, upper} is tried as an equality-constrained QP; the
// cheapest primal-feasible candidate is the optimum.

#ifndef SOFTWALK_TESTS_QP_ORACLE_HPP_
#define SOFTWALK_TESTS_QP_ORACLE_HPP_

#include <cmath>
#include <limits>
#include <optional>
#include <random>

#include "softwalk/qp.hpp"

namespace softwalk::testing {

struct OracleResult {
  VecX x;
  double objective = std::numeric_limits<double>::infinity();
};

inline std::optional<OracleResult> enumerate_active_sets(const qp::QpProblem& p) {
  const int n = p.num_variables();
  const int me = static_cast<int>(p.A_eq.rows());
  const int mi = static_cast<int>(p.A_in.rows());
  std::optional<OracleResult> best;
  std::vector<int> choice(mi, 0);
  for (;;) {
    int active = 0;
    for (int c : choice) active += c != 0;
    if (me + active <= n) {
      const int m = me + active;
      MatX K = MatX::Zero(n + m, n + m);
      VecX rhs = VecX::Zero(n + m);
      K.topLeftCorner(n, n) = p.H;
      rhs.head(n) = -p.g;
      int row = n;
      for (int k = 0; k < me; ++k, ++row) {
        K.block(row, 0, 1, n) = p.A_eq.row(k);
        K.block(0, row, n, 1) = p.A_eq.row(k).transpose();
        rhs[row] = p.b_eq[k];
      }
      bool bounded = true;
      for (int i = 0; i < mi; ++i) {
        if (choice[i] == 0) continue;
        const double b = choice[i] == 1 ? p.lower[i] : p.upper[i];
        if (!std::isfinite(b)) bounded = false;
        K.block(row, 0, 1, n) = p.A_in.row(i);
        K.block(0, row, n, 1) = p.A_in.row(i).transpose();
        rhs[row] = b;
        ++row;
      }
      if (bounded) {
        Eigen::FullPivLU<MatX> lu(K);
        if (lu.isInvertible()) {
          const VecX sol = lu.solve(rhs);
          const VecX x = sol.head(n);
          bool feasible = true;
          if (me > 0) feasible = (p.A_eq * x - p.b_eq).cwiseAbs().maxCoeff() < 1e-9;
          const VecX ax = mi > 0 ? VecX(p.A_in * x) : VecX();
          for (int i = 0; i < mi && feasible; ++i) {
            feasible = ax[i] >= p.lower[i] - 1e-9 && ax[i] <= p.upper[i] + 1e-9;
          }
          if (feasible) {
            const double obj = p.objective(x);
            if (!best || obj < best->objective) best = OracleResult{x, obj};
          }
        }
      }
    }
    int k = 0;
    while (k < mi && ++choice[k] == 3) choice[k++] = 0;
    if (k == mi) break;
  }
  return best;
}

// Random strictly convex QP with box bounds and `general` two-sided rows
// around a feasible point.
inline qp::QpProblem random_qp(std::mt19937_64& rng, int n, int general, int equalities = 0) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  qp::QpProblem p;
  MatX B(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) B(i, j) = u(rng);
  p.H = B * B.transpose() + 0.1 * MatX::Identity(n, n);
  p.g.resize(n);
  for (int i = 0; i < n; ++i) p.g[i] = 3.0 * u(rng);
  VecX x0(n);
  for (int i = 0; i < n; ++i) x0[i] = 0.3 * u(rng);
  p.A_eq.resize(equalities, n);
  p.b_eq.resize(equalities);
  for (int k = 0; k < equalities; ++k) {
    for (int j = 0; j < n; ++j) p.A_eq(k, j) = u(rng);
    p.b_eq[k] = p.A_eq.row(k).dot(x0);
  }
  p.A_in = MatX::Zero(n + general, n);
  p.lower.resize(n + general);
  p.upper.resize(n + general);
  for (int i = 0; i < n; ++i) {
    p.A_in(i, i) = 1.0;
    p.lower[i] = x0[i] - 0.5 - 0.5 * std::abs(u(rng));
    p.upper[i] = x0[i] + 0.5 + 0.5 * std::abs(u(rng));
  }
  for (int k = 0; k < general; ++k) {
    for (int j = 0; j < n; ++j) p.A_in(n + k, j) = u(rng);
    const double c = p.A_in.row(n + k).dot(x0);
    p.lower[n + k] = u(rng) > 0.0 ? c - 0.2 : -std::numeric_limits<double>::infinity();
    p.upper[n + k] = c + 0.1 + 0.2 * std::abs(u(rng));
  }
  return p;
}

}  // namespace softwalk::testing

#endif  // SOFTWALK_TESTS_QP_ORACLE_HPP_
