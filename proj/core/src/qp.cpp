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

#include "softwalk/qp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

namespace softwalk::qp {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = std::numeric_limits<double>::epsilon();

// Rotation parameters zeroing b against a: returns false when both vanish.
struct Givens {
  double c, s, h;
};

bool make_givens(double a, double b, Givens& g) {
  const double h = std::hypot(a, b);
  if (h == 0.0) return false;
  g.c = a / h;
  g.s = b / h;
  g.h = h;
  if (g.c < 0.0) {
    g.c = -g.c;
    g.s = -g.s;
    g.h = -h;
  }
  return true;
}

// Active-set bookkeeping of the dual method. J = L^-T Q and R is upper
// triangular with Q^T L^-1 N = [R; 0], N the active constraint normals.
class DualActiveSet {
 public:
  DualActiveSet(MatX& J, MatX& R, int n) : J_(J), R_(R), n_(n) {
    R_.setZero(n, n);
    d_.resize(n);
  }

  int size() const { return iq_; }

  // d = J^T np; z = J2 d2; r = R^-1 d1.
  void directions(const VecX& np, VecX& z, VecX& r) {
    d_.noalias() = J_.transpose() * np;
    z.noalias() = J_.rightCols(n_ - iq_) * d_.tail(n_ - iq_);
    r = d_.head(iq_);
    R_.topLeftCorner(iq_, iq_).triangularView<Eigen::Upper>().solveInPlace(r);
  }

  // Appends the constraint whose d = J^T np was last computed. Returns false
  // when it is linearly dependent on the active ones.
  bool add() {
    for (int j = n_ - 1; j >= iq_ + 1; --j) {
      Givens g;
      if (!make_givens(d_[j - 1], d_[j], g)) continue;
      d_[j] = 0.0;
      d_[j - 1] = g.h;
      const double xny = g.s / (1.0 + g.c);
      for (int k = 0; k < n_; ++k) {
        const double t1 = J_(k, j - 1);
        const double t2 = J_(k, j);
        J_(k, j - 1) = t1 * g.c + t2 * g.s;
        J_(k, j) = xny * (t1 + J_(k, j - 1)) - t2;
      }
    }
    R_.col(iq_).head(iq_ + 1) = d_.head(iq_ + 1);
    ++iq_;
    const double diag = std::abs(d_[iq_ - 1]);
    if (diag <= kEps * r_norm_) {
      // undo: the column carries no new direction
      --iq_;
      R_.col(iq_).setZero();
      return false;
    }
    r_norm_ = std::max(r_norm_, diag);
    return true;
  }

  // Removes active constraint at position `pos`.
  void remove(int pos) {
    for (int i = pos; i < iq_ - 1; ++i) R_.col(i).head(iq_) = R_.col(i + 1).head(iq_);
    R_.col(iq_ - 1).setZero();
    --iq_;
    for (int j = pos; j < iq_; ++j) {
      Givens g;
      if (!make_givens(R_(j, j), R_(j + 1, j), g)) continue;
      R_(j + 1, j) = 0.0;
      R_(j, j) = g.h;
      const double xny = g.s / (1.0 + g.c);
      for (int k = j + 1; k < iq_; ++k) {
        const double t1 = R_(j, k);
        const double t2 = R_(j + 1, k);
        R_(j, k) = t1 * g.c + t2 * g.s;
        R_(j + 1, k) = xny * (t1 + R_(j, k)) - t2;
      }
      for (int k = 0; k < n_; ++k) {
        const double t1 = J_(k, j);
        const double t2 = J_(k, j + 1);
        J_(k, j) = t1 * g.c + t2 * g.s;
        J_(k, j + 1) = xny * (J_(k, j) + t1) - t2;
      }
    }
  }

 private:
  MatX& J_;
  MatX& R_;
  int n_;
  int iq_ = 0;
  double r_norm_ = 1.0;
  VecX d_;
};

}  // namespace

void QpProblem::validate() const {
  const Eigen::Index n = g.size();
  if (H.rows() != n || H.cols() != n) throw std::invalid_argument("qp: H must be n x n");
  if (A_eq.rows() != b_eq.size() || (A_eq.rows() > 0 && A_eq.cols() != n)) {
    throw std::invalid_argument("qp: equality dimensions mismatch");
  }
  if (A_in.rows() != lower.size() || A_in.rows() != upper.size() ||
      (A_in.rows() > 0 && A_in.cols() != n)) {
    throw std::invalid_argument("qp: inequality dimensions mismatch");
  }
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    if (lower[i] > upper[i]) throw std::invalid_argument("qp: lower bound exceeds upper bound");
  }
}

std::string to_string(QpStatus status) {
  switch (status) {
    case QpStatus::kSolved: return "solved";
    case QpStatus::kInfeasible: return "infeasible";
    case QpStatus::kMaxIterations: return "max_iterations";
    case QpStatus::kNotConvex: return "not_convex";
  }
  return "unknown";
}

double KktResiduals::max() const {
  return std::max({stationarity, primal_equality, primal_inequality, complementarity});
}

KktResiduals kkt_residuals(const QpProblem& p, const VecX& x, const VecX& y_eq, const VecX& y_in) {
  KktResiduals r;
  VecX grad = p.H * x + p.g;
  if (p.A_eq.rows() > 0) {
    grad -= p.A_eq.transpose() * y_eq;
    r.primal_equality = (p.A_eq * x - p.b_eq).cwiseAbs().maxCoeff();
  }
  if (p.A_in.rows() > 0) {
    grad -= p.A_in.transpose() * y_in;
    const VecX ax = p.A_in * x;
    for (Eigen::Index i = 0; i < ax.size(); ++i) {
      const double lo = std::isfinite(p.lower[i]) ? p.lower[i] - ax[i] : 0.0;
      const double hi = std::isfinite(p.upper[i]) ? ax[i] - p.upper[i] : 0.0;
      r.primal_inequality = std::max({r.primal_inequality, lo, hi});
      // a positive multiplier pairs with the lower side, a negative one with the upper
      double slack = 0.0;
      if (y_in[i] > 0.0) slack = std::isfinite(p.lower[i]) ? ax[i] - p.lower[i] : kInf;
      if (y_in[i] < 0.0) slack = std::isfinite(p.upper[i]) ? p.upper[i] - ax[i] : kInf;
      r.complementarity = std::max(r.complementarity, std::abs(y_in[i] * slack));
    }
  }
  r.stationarity = grad.size() > 0 ? grad.cwiseAbs().maxCoeff() : 0.0;
  return r;
}

namespace {

void write_block(std::ostream& os, const std::string& name, const MatX& m) {
  os << "% " << name << "\n%%MatrixMarket matrix array real general\n";
  os << m.rows() << " " << m.cols() << "\n";
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) os << m(r, c) << "\n";
  }
}

}  // namespace

void write_problem(const QpProblem& p, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << std::setprecision(17);
  write_block(os, "H", p.H);
  write_block(os, "g", p.g);
  write_block(os, "A_eq", p.A_eq);
  write_block(os, "b_eq", p.b_eq);
  write_block(os, "A_in", p.A_in);
  write_block(os, "lower", p.lower);
  write_block(os, "upper", p.upper);
}

QpSolution QpSolver::solve(const QpProblem& problem, const QpSettings& settings) {
  const auto start = std::chrono::steady_clock::now();
  problem.validate();
  const int n = problem.num_variables();
  const int me = static_cast<int>(problem.A_eq.rows());
  const int mi = static_cast<int>(problem.A_in.rows());

  QpSolution sol;
  sol.x = VecX::Zero(n);
  sol.y_eq = VecX::Zero(me);
  sol.y_in = VecX::Zero(mi);

  auto finish = [&](QpStatus status) {
    sol.status = status;
    sol.objective = problem.objective(sol.x);
    sol.residuals = kkt_residuals(problem, sol.x, sol.y_eq, sol.y_in);
    sol.solve_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (status == QpStatus::kSolved) {
      previous_active_ = sol.active_set;
    } else {
      ++failures_;
      previous_active_.clear();
      if (!settings.dump_directory.empty()) {
        write_problem(problem, settings.dump_directory /
                                   ("qp_failure_" + std::to_string(failures_) + ".mtx"));
      }
    }
    return sol;
  };

  Eigen::LLT<MatX> llt(problem.H);
  if (llt.info() != Eigen::Success) return finish(QpStatus::kNotConvex);
  {
    // J = L^-T
    J_ = MatX::Identity(n, n);
    llt.matrixU().solveInPlace(J_);
  }
  DualActiveSet active(J_, R_, n);

  VecX& x = sol.x;
  x = -llt.solve(problem.g);
  double f = 0.5 * problem.g.dot(x);

  // one-sided view: id 2r is lower side of row r, 2r+1 the upper side
  std::vector<double> row_norm(mi);
  for (int r = 0; r < mi; ++r) row_norm[r] = std::max(problem.A_in.row(r).norm(), 1e-300);
  auto side_bound = [&](int id) {
    const int r = id / 2;
    return (id % 2 == 0) ? problem.lower[r] : -problem.upper[r];
  };
  auto side_normal = [&](int id, VecX& np) {
    np = problem.A_in.row(id / 2).transpose();
    if (id % 2 == 1) np = -np;
  };
  auto slack = [&](int id) {
    const double ax = problem.A_in.row(id / 2).dot(x);
    return (id % 2 == 0) ? ax - problem.lower[id / 2] : problem.upper[id / 2] - ax;
  };

  // active constraint ids (equalities as -1-k) and their multipliers
  std::vector<int> ids;
  std::vector<double> u;
  ids.reserve(n);
  u.reserve(n);
  std::vector<char> row_active(mi, 0);

  VecX np(n), z(n), r;

  for (int k = 0; k < me; ++k) {
    np = problem.A_eq.row(k).transpose();
    active.directions(np, z, r);
    const double zn = z.dot(np);
    double t2 = 0.0;
    if (std::abs(zn) > kEps * (1.0 + np.squaredNorm())) {
      t2 = (problem.b_eq[k] - np.dot(x)) / zn;
    }
    x += t2 * z;
    for (int i = 0; i < active.size(); ++i) u[i] -= t2 * r[i];
    f += 0.5 * t2 * t2 * zn;
    if (!active.add()) return finish(QpStatus::kInfeasible);
    ids.push_back(-1 - k);
    u.push_back(t2);
  }
  sol.objective_trace.push_back(f);

  const bool warm = settings.warm_start && !previous_active_.empty();
  std::vector<char> preferred(2 * mi, 0);
  if (warm) {
    for (int id : previous_active_) {
      if (id >= 0 && id < 2 * mi) preferred[id] = 1;
    }
  }

  // violation threshold relative to the row scale
  auto violation = [&](int id) {
    const double b = side_bound(id);
    if (!std::isfinite(b)) return 0.0;
    const double s = slack(id) / row_norm[id / 2];
    const double thresh = 1e-11 * std::max(1.0, std::abs(b) / row_norm[id / 2]);
    return s < -thresh ? -s : 0.0;
  };

  for (;;) {
    if (sol.iterations >= settings.max_iter) return finish(QpStatus::kMaxIterations);
    ++sol.iterations;

    // step 1: most violated inactive constraint, previous active set first
    int p = -1;
    double worst = 0.0;
    for (int pass = warm ? 0 : 1; pass < 2 && p < 0; ++pass) {
      for (int id = 0; id < 2 * mi; ++id) {
        if (row_active[id / 2] || (pass == 0 && !preferred[id])) continue;
        const double v = violation(id);
        if (v > worst) {
          worst = v;
          p = id;
        }
      }
    }
    if (p < 0) break;

    side_normal(p, np);
    double up = 0.0;
    double sp = slack(p);
    for (;;) {
      active.directions(np, z, r);
      // partial step length: first inequality multiplier to hit zero
      double t1 = kInf;
      int l = -1;
      for (int i = 0; i < active.size(); ++i) {
        if (ids[i] < 0 || r[i] <= 0.0) continue;
        const double ratio = u[i] / r[i];
        if (ratio < t1) {
          t1 = ratio;
          l = i;
        }
      }
      const double zn = z.dot(np);
      const double t2 = (z.norm() > kEps * np.norm() && zn > 0.0) ? -sp / zn : kInf;
      const double t = std::min(t1, t2);
      if (!std::isfinite(t)) return finish(QpStatus::kInfeasible);

      if (!std::isfinite(t2)) {
        // step in dual space only
        for (int i = 0; i < active.size(); ++i) u[i] -= t * r[i];
        up += t;
        row_active[ids[l] / 2] = 0;
        active.remove(l);
        ids.erase(ids.begin() + l);
        u.erase(u.begin() + l);
        continue;
      }

      x += t * z;
      f += t * zn * (0.5 * t + up);
      for (int i = 0; i < active.size(); ++i) u[i] -= t * r[i];
      up += t;

      if (t == t2) {
        if (!active.add()) return finish(QpStatus::kInfeasible);
        ids.push_back(p);
        u.push_back(up);
        row_active[p / 2] = 1;
        sol.objective_trace.push_back(f);
        break;
      }
      row_active[ids[l] / 2] = 0;
      active.remove(l);
      ids.erase(ids.begin() + l);
      u.erase(u.begin() + l);
      sp = slack(p);
    }
  }

  for (std::size_t i = 0; i < ids.size(); ++i) {
    const int id = ids[i];
    if (id < 0) {
      sol.y_eq[-1 - id] = u[i];
    } else {
      sol.y_in[id / 2] = (id % 2 == 0) ? u[i] : -u[i];
      sol.active_set.push_back(id);
    }
  }
  std::sort(sol.active_set.begin(), sol.active_set.end());
  return finish(QpStatus::kSolved);
}

}  // namespace softwalk::qp
