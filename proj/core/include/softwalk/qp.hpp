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

// Dense strictly convex QP
//
//   min  1/2 x^T H x + g^T x
//   s.t. A_eq x = b_eq
//        lower <= A_in x <= upper
//
// solved with the Goldfarb-Idnani dual active-set method. Two-sided rows are
// stored once; each side becomes a one-sided constraint internally, and only
// one side of a row can be active. Infinite bounds are ignored.

#ifndef SOFTWALK_QP_HPP_
#define SOFTWALK_QP_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "softwalk/types.hpp"

namespace softwalk::qp {

struct QpProblem {
  MatX H;
  VecX g;
  MatX A_eq;
  VecX b_eq;
  MatX A_in;
  VecX lower;
  VecX upper;

  int num_variables() const { return static_cast<int>(g.size()); }
  // Throws std::invalid_argument on inconsistent dimensions or lower > upper.
  void validate() const;
  double objective(const VecX& x) const { return 0.5 * x.dot(H * x) + g.dot(x); }
};

enum class QpStatus { kSolved, kInfeasible, kMaxIterations, kNotConvex };

std::string to_string(QpStatus status);

struct KktResiduals {
  double stationarity = 0.0;     // |H x + g - A_eq^T y_eq - A_in^T y_in|_inf
  double primal_equality = 0.0;  // |A_eq x - b_eq|_inf
  double primal_inequality = 0.0;  // largest bound violation
  double complementarity = 0.0;  // largest |multiplier * slack|
  double max() const;
};

struct QpSolution {
  QpStatus status = QpStatus::kInfeasible;
  VecX x;
  VecX y_eq;
  // Per inequality row: positive when the lower bound is active, negative when
  // the upper bound is.
  VecX y_in;
  KktResiduals residuals;
  int iterations = 0;
  double objective = 0.0;
  double solve_time = 0.0;  // seconds
  // Dual objective after every constraint addition; non-decreasing.
  std::vector<double> objective_trace;
  // Active one-sided constraints: 2 r for the lower side of row r, 2 r + 1 for
  // the upper side.
  std::vector<int> active_set;

  bool ok() const { return status == QpStatus::kSolved; }
};

struct QpSettings {
  double tol = 1e-6;
  int max_iter = 1000;
  bool warm_start = true;
  // When non-empty, failed problems are written here (see write_problem).
  std::filesystem::path dump_directory;
};

// KKT residuals of (x, y_eq, y_in) for `problem`.
KktResiduals kkt_residuals(const QpProblem& problem, const VecX& x, const VecX& y_eq,
                           const VecX& y_in);

// Writes every matrix and vector as MatrixMarket "array" blocks.
void write_problem(const QpProblem& problem, const std::filesystem::path& path);

// Holds the factorization workspace and the previous active set. Warm
// starting only changes the order in which violated constraints are taken up,
// so the returned minimizer does not depend on it.
class QpSolver {
 public:
  QpSolution solve(const QpProblem& problem, const QpSettings& settings = {});
  void reset_warm_start() { previous_active_.clear(); }
  const std::vector<int>& previous_active_set() const { return previous_active_; }
  int failures() const { return failures_; }

 private:
  std::vector<int> previous_active_;
  int failures_ = 0;
  // workspace
  MatX J_;
  MatX R_;
};

}  // namespace softwalk::qp

#endif  // SOFTWALK_QP_HPP_
