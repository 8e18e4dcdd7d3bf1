#pragma once

// Elastic-net regression
//
//   minimise  ||y - Xw - b||^2 + lambda1 ||w||_1 + lambda2 ||w||^2
//
// solved by cyclic coordinate descent with covariance updates. The intercept is
// unpenalised; working on column-centred data eliminates it and it is recovered
// in closed form as b = mean(y) - mean(X) w.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "searchsurv/errors.hpp"

namespace searchsurv::enet {

struct ElasticNetModel {
  Eigen::VectorXd weights;
  double intercept = 0.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  int active_count = 0;
  int sweeps = 0;
};

struct RegularizationPath {
  std::vector<ElasticNetModel> models;  // decreasing lambda1
  double lambda_ratio = 0.0;
};

struct SolverOptions {
  double tolerance = 1e-9;  // max absolute coefficient change in one sweep
  int max_sweeps = 10000;
  // accept an active-set solve when its KKT violation is below this times max(1, lambda_max)
  double kkt_tolerance = 1e-9;
  int newton_every = 10;  // sweeps between active-set solve attempts
};

inline constexpr double kPathFloorRatio = 1e-4;
inline constexpr double kDefaultLambdaRatio = 0.5;
inline constexpr int kDefaultPathSize = 1000;

inline int count_active(const Eigen::VectorXd& w) { return static_cast<int>((w.array() != 0.0).count()); }

inline double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

// Centred sufficient statistics shared by every fit on the same (X, y).
class Problem {
 public:
  Problem(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    if (X.rows() != y.size()) throw InvalidArgument("design rows and target length differ");
    if (y.size() < 2) throw InvalidArgument("elastic net needs at least two samples");
    if (!X.allFinite() || !y.allFinite()) throw InvalidArgument("non-finite values in elastic-net input");
    x_mean_ = X.colwise().mean();
    y_mean_ = y.mean();
    Eigen::MatrixXd Xc = X.rowwise() - x_mean_.transpose();
    // constant columns must centre to exact zeros, not rounding residue
    for (Eigen::Index j = 0; j < X.cols(); ++j)
      if (X.col(j).maxCoeff() == X.col(j).minCoeff()) Xc.col(j).setZero();
    Eigen::VectorXd yc = y.array() - y_mean_;
    if (y.maxCoeff() == y.minCoeff()) yc.setZero();
    gram_ = Xc.transpose() * Xc;
    xty_ = Xc.transpose() * yc;
  }

  Eigen::Index features() const noexcept { return gram_.rows(); }
  const Eigen::MatrixXd& gram() const noexcept { return gram_; }
  const Eigen::VectorXd& xty() const noexcept { return xty_; }
  const Eigen::VectorXd& x_mean() const noexcept { return x_mean_; }
  double y_mean() const noexcept { return y_mean_; }

  double lambda_max() const { return xty_.size() == 0 ? 0.0 : 2.0 * xty_.cwiseAbs().maxCoeff(); }

  // Largest violation of the subgradient optimality conditions at w.
  double kkt_violation(const Eigen::VectorXd& w, double lambda1, double lambda2) const {
    const Eigen::VectorXd grad = xty_ - gram_ * w;  // x_j' r on centred data
    double worst = 0.0;
    for (Eigen::Index j = 0; j < w.size(); ++j) {
      if (w[j] != 0.0) {
        const double sgn = w[j] > 0.0 ? 1.0 : -1.0;
        worst = std::max(worst, std::abs(2.0 * grad[j] - lambda1 * sgn - 2.0 * lambda2 * w[j]));
      } else {
        worst = std::max(worst, std::abs(2.0 * grad[j]) - lambda1);
      }
    }
    return std::max(worst, 0.0);
  }

  ElasticNetModel fit(double lambda1, double lambda2, const Eigen::VectorXd* warm_start = nullptr,
                      const SolverOptions& opts = {}) const {
    if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0) || !std::isfinite(lambda1) || !std::isfinite(lambda2))
      throw InvalidArgument("regularisation parameters must be finite and non-negative");
    const Eigen::Index p = features();
    Eigen::VectorXd w = warm_start ? *warm_start : Eigen::VectorXd::Zero(p);
    if (w.size() != p) throw InvalidArgument("warm start has the wrong dimension");
    Eigen::VectorXd grad = xty_ - gram_ * w;
    const double half_l1 = lambda1 / 2.0;
    const double kkt_target = opts.kkt_tolerance * std::max(1.0, lambda_max());

    int sweep = 0;
    bool converged = false;
    while (sweep < opts.max_sweeps) {
      ++sweep;
      double max_delta = 0.0;
      for (Eigen::Index j = 0; j < p; ++j) {
        const double denom = gram_(j, j) + lambda2;
        if (denom <= 0.0) continue;
        const double rho = grad[j] + gram_(j, j) * w[j];
        const double updated = soft_threshold(rho, half_l1) / denom;
        const double delta = updated - w[j];
        if (delta != 0.0) {
          grad.noalias() -= gram_.col(j) * delta;
          w[j] = updated;
          max_delta = std::max(max_delta, std::abs(delta));
        }
      }
      if (max_delta < opts.tolerance) {
        converged = true;
        break;
      }
      if (opts.newton_every > 0 && sweep % opts.newton_every == 0) {
        if (auto exact = active_set_solve(w, lambda1, lambda2, kkt_target)) {
          w = std::move(*exact);
          converged = true;
          break;
        }
      }
    }
    if (!converged) {
      const double v = kkt_violation(w, lambda1, lambda2);
      throw ConvergenceError("coordinate descent did not converge (KKT violation " + std::to_string(v) + ")", v);
    }
    ElasticNetModel m;
    m.weights = std::move(w);
    m.intercept = y_mean_ - x_mean_.dot(m.weights);
    m.lambda1 = lambda1;
    m.lambda2 = lambda2;
    m.active_count = count_active(m.weights);
    m.sweeps = sweep;
    return m;
  }

 private:
  // Solves the stationarity equations on the current support with its signs
  // held fixed. Returned only when signs survive and the KKT check passes.
  std::optional<Eigen::VectorXd> active_set_solve(const Eigen::VectorXd& w, double lambda1, double lambda2,
                                                  double kkt_target) const {
    std::vector<Eigen::Index> active;
    for (Eigen::Index j = 0; j < w.size(); ++j)
      if (w[j] != 0.0) active.push_back(j);
    if (active.empty()) return std::nullopt;
    const auto k = static_cast<Eigen::Index>(active.size());
    Eigen::MatrixXd A(k, k);
    Eigen::VectorXd b(k);
    for (Eigen::Index a = 0; a < k; ++a) {
      const Eigen::Index ja = active[static_cast<std::size_t>(a)];
      for (Eigen::Index c = 0; c < k; ++c) A(a, c) = gram_(ja, active[static_cast<std::size_t>(c)]);
      A(a, a) += lambda2;
      b[a] = xty_[ja] - 0.5 * lambda1 * (w[ja] > 0.0 ? 1.0 : -1.0);
    }
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return std::nullopt;
    const Eigen::VectorXd sol = ldlt.solve(b);
    if (!sol.allFinite()) return std::nullopt;
    Eigen::VectorXd out = Eigen::VectorXd::Zero(w.size());
    for (Eigen::Index a = 0; a < k; ++a) {
      const Eigen::Index ja = active[static_cast<std::size_t>(a)];
      if (sol[a] == 0.0 || (sol[a] > 0.0) != (w[ja] > 0.0)) return std::nullopt;
      out[ja] = sol[a];
    }
    if (kkt_violation(out, lambda1, lambda2) > kkt_target) return std::nullopt;
    return out;
  }

  Eigen::VectorXd x_mean_;
  double y_mean_ = 0.0;
  Eigen::MatrixXd gram_;
  Eigen::VectorXd xty_;
};

// Smallest lambda1 at which w = 0 satisfies the optimality conditions.
inline double lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) { return Problem(X, y).lambda_max(); }

inline ElasticNetModel fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda1, double lambda2,
                           const SolverOptions& opts = {}) {
  return Problem(X, y).fit(lambda1, lambda2, nullptr, opts);
}

inline Eigen::VectorXd predict(const ElasticNetModel& model, const Eigen::MatrixXd& X) {
  if (X.cols() != model.weights.size()) throw InvalidArgument("feature count does not match the model");
  return (X * model.weights).array() + model.intercept;
}

inline double objective(const ElasticNetModel& model, const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const Eigen::VectorXd r = y - predict(model, X);
  return r.squaredNorm() + model.lambda1 * model.weights.lpNorm<1>() + model.lambda2 * model.weights.squaredNorm();
}

// Geometric lambda1 grid from lambda_max down to lambda_max * 1e-4 with
// lambda2 = lambda_ratio * lambda1; each fit is warm-started from the previous.
inline RegularizationPath fit_path(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int q,
                                   double lambda_ratio = kDefaultLambdaRatio, const SolverOptions& opts = {}) {
  if (q < 2) throw InvalidArgument("a regularisation path needs at least two models");
  if (!(lambda_ratio >= 0.0) || !std::isfinite(lambda_ratio)) throw InvalidArgument("lambda ratio must be non-negative");
  const Problem problem(X, y);
  const double lmax = problem.lambda_max();
  if (!(lmax > 0.0)) throw DegenerateInput("constant target or features: the path is empty");
  RegularizationPath path;
  path.lambda_ratio = lambda_ratio;
  path.models.reserve(static_cast<std::size_t>(q));
  Eigen::VectorXd warm = Eigen::VectorXd::Zero(problem.features());
  for (int i = 0; i < q; ++i) {
    const double frac = static_cast<double>(i) / static_cast<double>(q - 1);
    const double l1 = lmax * std::pow(kPathFloorRatio, frac);
    path.models.push_back(problem.fit(l1, lambda_ratio * l1, &warm, opts));
    warm = path.models.back().weights;
  }
  return path;
}

}  // namespace searchsurv::enet
