#pragma once

// Zero-mean Gaussian-process regression with sums of squared-exponential
// kernels over slices of the input vector plus an independent noise term.
// Hyperparameters are fitted by maximising the exact log marginal likelihood
// with a projected L-BFGS ascent and random restarts.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "searchsurv/errors.hpp"
#include "searchsurv/timeseries.hpp"

namespace searchsurv::gp {

// Which part of an input row a kernel component sees. Rows are laid out as
// [search lags..., outcome lags...]; `search_dim` is zero when no search data
// is used.
enum class Slice { Search, Outcome, Joint };

struct SeComponent {
  Slice slice = Slice::Joint;
  double sigma = 1.0;
  double lengthscale = 1.0;
};

struct KernelSpec {
  std::vector<SeComponent> components;
  double noise_sigma = 0.1;
  Eigen::Index search_dim = 0;

  void validate() const {
    for (const auto& c : components)
      if (!(c.sigma > 0.0) || !(c.lengthscale > 0.0))
        throw InvalidArgument("kernel scale and lengthscale must be positive");
    if (!(noise_sigma >= 0.0)) throw InvalidArgument("noise scale must be non-negative");
  }

  std::size_t parameter_count() const noexcept { return 2 * components.size() + 1; }
};

// sigma^2 exp(-|x - x'|^2 / (2 ell^2)) with the squared Euclidean distance.
inline double se_kernel(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& xp,
                        double sigma, double ell) {
  if (x.size() != xp.size()) throw InvalidArgument("kernel inputs differ in dimension");
  if (!(sigma > 0.0) || !(ell > 0.0)) throw InvalidArgument("kernel scale and lengthscale must be positive");
  return sigma * sigma * std::exp(-(x - xp).squaredNorm() / (2.0 * ell * ell));
}

inline Eigen::VectorXd slice_of(const Eigen::Ref<const Eigen::VectorXd>& x, Slice s, Eigen::Index search_dim) {
  switch (s) {
    case Slice::Search: return x.head(search_dim);
    case Slice::Outcome: return x.tail(x.size() - search_dim);
    case Slice::Joint: break;
  }
  return x;
}

// Full covariance function including the Kronecker-delta noise term, which
// fires only when the two inputs are identical.
inline double composite_kernel(const KernelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x,
                               const Eigen::Ref<const Eigen::VectorXd>& xp) {
  if (x.size() != xp.size()) throw InvalidArgument("kernel inputs differ in dimension");
  if (spec.search_dim > x.size()) throw InvalidArgument("search slice exceeds input dimension");
  double k = 0.0;
  for (const auto& c : spec.components)
    k += se_kernel(slice_of(x, c.slice, spec.search_dim), slice_of(xp, c.slice, spec.search_dim), c.sigma, c.lengthscale);
  if (x == xp) k += spec.noise_sigma * spec.noise_sigma;
  return k;
}

// Search-augmented kernel: SE on search lags + SE on outcome lags + SE on the
// joint vector + noise.
inline KernelSpec sarf_kernel(Eigen::Index search_dim, double s1, double l1, double s2, double l2, double s3, double l3,
                              double s4) {
  return KernelSpec{{{Slice::Search, s1, l1}, {Slice::Outcome, s2, l2}, {Slice::Joint, s3, l3}}, s4, search_dim};
}

// Outcome-only kernel: two SE components on the outcome lags + noise.
inline KernelSpec arf_kernel(double s1, double l1, double s2, double l2, double s3) {
  return KernelSpec{{{Slice::Outcome, s1, l1}, {Slice::Outcome, s2, l2}}, s3, 0};
}

inline double composite_kernel_sarf(const KernelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x,
                                    const Eigen::Ref<const Eigen::VectorXd>& xp) {
  if (spec.search_dim == 0 || spec.search_dim >= x.size()) throw InvalidArgument("input lacks a search or outcome slice");
  return composite_kernel(spec, x, xp);
}

inline double composite_kernel_arf(const KernelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& y,
                                   const Eigen::Ref<const Eigen::VectorXd>& yp) {
  if (spec.search_dim != 0) throw InvalidArgument("outcome-only kernel must not carry a search slice");
  return composite_kernel(spec, y, yp);
}

// Log-space hyperparameter vector: [log sigma_c, log ell_c]... , log noise.
inline Eigen::VectorXd pack(const KernelSpec& spec) {
  Eigen::VectorXd th(static_cast<Eigen::Index>(spec.parameter_count()));
  Eigen::Index i = 0;
  for (const auto& c : spec.components) {
    th[i++] = std::log(c.sigma);
    th[i++] = std::log(c.lengthscale);
  }
  th[i] = std::log(spec.noise_sigma);
  return th;
}

inline KernelSpec unpack(const KernelSpec& shape, const Eigen::VectorXd& th) {
  KernelSpec spec = shape;
  Eigen::Index i = 0;
  for (auto& c : spec.components) {
    c.sigma = std::exp(th[i++]);
    c.lengthscale = std::exp(th[i++]);
  }
  spec.noise_sigma = std::exp(th[i]);
  return spec;
}

// Squared distances between all training rows, restricted to one slice.
inline Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& X, Slice s, Eigen::Index search_dim) {
  Eigen::MatrixXd V;
  switch (s) {
    case Slice::Search: V = X.leftCols(search_dim); break;
    case Slice::Outcome: V = X.rightCols(X.cols() - search_dim); break;
    case Slice::Joint: V = X; break;
  }
  const Eigen::Index n = V.rows();
  Eigen::MatrixXd D(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    D(a, a) = 0.0;
    for (Eigen::Index b = a + 1; b < n; ++b) D(a, b) = D(b, a) = (V.row(a) - V.row(b)).squaredNorm();
  }
  return D;
}

inline constexpr double kJitterStart = 1e-10;
inline constexpr double kJitterMax = 1e-4;

// Cholesky of K + jitter I with jitter escalated by x10 from 1e-10 to 1e-4.
inline Eigen::LLT<Eigen::MatrixXd> robust_cholesky(const Eigen::MatrixXd& K, double* used_jitter = nullptr) {
  const Eigen::Index n = K.rows();
  for (double jitter = kJitterStart; jitter <= kJitterMax * 1.0000001; jitter *= 10.0) {
    Eigen::LLT<Eigen::MatrixXd> llt(K + jitter * Eigen::MatrixXd::Identity(n, n));
    if (llt.info() == Eigen::Success) {
      if (used_jitter) *used_jitter = jitter;
      return llt;
    }
  }
  throw NumericalError("kernel matrix is not positive definite after jitter escalation");
}

// Training-set kernel evaluator with cached per-slice distance matrices.
class MarginalLikelihood {
 public:
  MarginalLikelihood(const KernelSpec& shape, const Eigen::MatrixXd& X, const Eigen::VectorXd& y)
      : shape_(shape), y_(y) {
    if (X.rows() != y.size()) throw InvalidArgument("design rows and targets differ");
    if (X.rows() < 2) throw InvalidArgument("a GP needs at least two training rows");
    for (const auto& c : shape.components) dist_.push_back(squared_distances(X, c.slice, shape.search_dim));
  }

  Eigen::MatrixXd gram(const KernelSpec& spec) const {
    std::vector<Eigen::MatrixXd> parts;
    return gram(spec, parts);
  }

  // log p(y | X, theta) and optionally its gradient w.r.t. the log parameters.
  double value(const Eigen::VectorXd& theta, Eigen::VectorXd* grad = nullptr) const {
    const KernelSpec spec = unpack(shape_, theta);
    const Eigen::Index n = y_.size();
    std::vector<Eigen::MatrixXd> parts;
    const Eigen::MatrixXd K = gram(spec, parts);
    const auto llt = robust_cholesky(K);
    const Eigen::VectorXd alpha = llt.solve(y_);
    const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    const double lml = -0.5 * y_.dot(alpha) - 0.5 * logdet - 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
    if (grad) {
      Eigen::MatrixXd W = llt.solve(Eigen::MatrixXd::Identity(n, n));
      W = alpha * alpha.transpose() - W;
      grad->resize(theta.size());
      Eigen::Index i = 0;
      for (std::size_t c = 0; c < spec.components.size(); ++c) {
        const double l2 = spec.components[c].lengthscale * spec.components[c].lengthscale;
        (*grad)[i++] = (W.array() * parts[c].array()).sum();
        (*grad)[i++] = 0.5 * (W.array() * parts[c].array() * dist_[c].array()).sum() / l2;
      }
      (*grad)[i] = W.trace() * spec.noise_sigma * spec.noise_sigma;
    }
    return lml;
  }

 private:
  Eigen::MatrixXd gram(const KernelSpec& spec, std::vector<Eigen::MatrixXd>& parts) const {
    const Eigen::Index n = y_.size();
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, n);
    parts.clear();
    for (std::size_t c = 0; c < spec.components.size(); ++c) {
      const double s2 = spec.components[c].sigma * spec.components[c].sigma;
      const double l2 = spec.components[c].lengthscale * spec.components[c].lengthscale;
      parts.push_back(s2 * (-dist_[c].array() / (2.0 * l2)).exp().matrix());
      K += parts.back();
    }
    K.diagonal().array() += spec.noise_sigma * spec.noise_sigma;
    return K;
  }

  KernelSpec shape_;
  Eigen::VectorXd y_;
  std::vector<Eigen::MatrixXd> dist_;
};

struct OptimizerOptions {
  int restarts = 5;  // total starts; the first is the deterministic initialisation
  int max_iterations = 100;
  std::uint64_t seed = 0;
  std::optional<double> fixed_noise_sigma;  // excluded from optimisation when set
  double min_log_sigma = std::log(1e-3);
  double max_log_sigma = std::log(1e2);
  double min_log_ell = std::log(1e-3);
  double max_log_ell = std::log(1e3);
  double min_log_noise = std::log(1e-4);
  double max_log_noise = std::log(1e1);
};

struct OptimizationResult {
  Eigen::VectorXd theta;
  double lml = -std::numeric_limits<double>::infinity();
  std::vector<double> trace;  // accepted objective values of the winning start
  int iterations = 0;
};

namespace detail {

struct Box {
  Eigen::VectorXd lo, hi;
  Eigen::VectorXd clamp(const Eigen::VectorXd& x) const { return x.cwiseMax(lo).cwiseMin(hi); }
};

inline Box make_box(const KernelSpec& shape, const OptimizerOptions& o, const Eigen::VectorXd& start) {
  const auto p = static_cast<Eigen::Index>(shape.parameter_count());
  Box b{Eigen::VectorXd(p), Eigen::VectorXd(p)};
  for (Eigen::Index i = 0; i + 1 < p; i += 2) {
    b.lo[i] = o.min_log_sigma;
    b.hi[i] = o.max_log_sigma;
    b.lo[i + 1] = o.min_log_ell;
    b.hi[i + 1] = o.max_log_ell;
  }
  if (o.fixed_noise_sigma) {
    b.lo[p - 1] = b.hi[p - 1] = start[p - 1];
  } else {
    b.lo[p - 1] = o.min_log_noise;
    b.hi[p - 1] = o.max_log_noise;
  }
  return b;
}

// Projected L-BFGS ascent with Armijo backtracking; every accepted step
// strictly increases the objective.
inline OptimizationResult ascend(const MarginalLikelihood& f, Eigen::VectorXd theta, const Box& box, int max_iterations) {
  constexpr int kMemory = 7;
  constexpr double kArmijo = 1e-4;
  auto eval = [&](const Eigen::VectorXd& th, Eigen::VectorXd& g) {
    try {
      return f.value(th, &g);
    } catch (const NumericalError&) {
      return -std::numeric_limits<double>::infinity();
    }
  };
  auto project_grad = [&](const Eigen::VectorXd& th, Eigen::VectorXd g) {
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      if (box.lo[i] == box.hi[i]) g[i] = 0.0;
      else if (th[i] <= box.lo[i] && g[i] < 0.0) g[i] = 0.0;
      else if (th[i] >= box.hi[i] && g[i] > 0.0) g[i] = 0.0;
    }
    return g;
  };

  theta = box.clamp(theta);
  Eigen::VectorXd g;
  double val = eval(theta, g);
  OptimizationResult res;
  if (!std::isfinite(val)) return res;
  res.trace.push_back(val);
  std::vector<Eigen::VectorXd> S, Y;
  for (int it = 0; it < max_iterations; ++it) {
    const Eigen::VectorXd pg = project_grad(theta, g);
    if (pg.lpNorm<Eigen::Infinity>() < 1e-5 * std::max(1.0, std::abs(val))) break;
    // Two-loop recursion. Curvature pairs are those of the minimised objective
    // -val, so H * grad is an ascent direction.
    Eigen::VectorXd q = pg;
    std::vector<double> a(S.size());
    for (int k = static_cast<int>(S.size()) - 1; k >= 0; --k) {
      const double rho = 1.0 / Y[static_cast<std::size_t>(k)].dot(S[static_cast<std::size_t>(k)]);
      a[static_cast<std::size_t>(k)] = rho * S[static_cast<std::size_t>(k)].dot(q);
      q -= a[static_cast<std::size_t>(k)] * Y[static_cast<std::size_t>(k)];
    }
    double gamma = 1.0;
    if (!S.empty()) gamma = S.back().dot(Y.back()) / Y.back().squaredNorm();
    Eigen::VectorXd d = gamma * q;
    for (std::size_t k = 0; k < S.size(); ++k) {
      const double rho = 1.0 / Y[k].dot(S[k]);
      const double b = rho * Y[k].dot(d);
      d += S[k] * (a[k] - b);
    }
    d = project_grad(theta, d);
    if (d.dot(pg) <= 0.0) {
      d = pg;
      S.clear();
      Y.clear();
    }
    double step = S.empty() ? std::min(1.0, 1.0 / std::max(1e-12, d.lpNorm<Eigen::Infinity>())) : 1.0;
    bool accepted = false;
    Eigen::VectorXd next, gnext;
    double vnext = val;
    for (int ls = 0; ls < 40; ++ls) {
      next = box.clamp(theta + step * d);
      vnext = eval(next, gnext);
      if (std::isfinite(vnext) && vnext >= val + kArmijo * pg.dot(next - theta) && vnext > val) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    const Eigen::VectorXd s = next - theta;
    const Eigen::VectorXd y = g - gnext;  // gradient of the minimised objective -val
    if (s.dot(y) > 1e-12) {
      S.push_back(s);
      Y.push_back(y);
      if (S.size() > kMemory) {
        S.erase(S.begin());
        Y.erase(Y.begin());
      }
    }
    const double improvement = vnext - val;
    theta = next;
    g = gnext;
    val = vnext;
    res.trace.push_back(val);
    res.iterations = it + 1;
    if (improvement < 1e-9 * std::max(1.0, std::abs(val))) break;
  }
  res.theta = theta;
  res.lml = val;
  return res;
}

}  // namespace detail

inline OptimizationResult optimize_hyperparameters(const KernelSpec& initial, const Eigen::MatrixXd& X,
                                                   const Eigen::VectorXd& y, const OptimizerOptions& opts = {}) {
  initial.validate();
  KernelSpec shape = initial;
  if (opts.fixed_noise_sigma) shape.noise_sigma = *opts.fixed_noise_sigma;
  const MarginalLikelihood f(shape, X, y);
  const Eigen::VectorXd base = pack(shape);
  const detail::Box box = detail::make_box(shape, opts, base);
  OptimizationResult best;
  for (int r = 0; r < std::max(1, opts.restarts); ++r) {
    Eigen::VectorXd start = base;
    if (r > 0) {
      std::mt19937_64 rng(opts.seed * 1000003ULL + static_cast<std::uint64_t>(r));
      std::uniform_real_distribution<double> u(-std::log(10.0), std::log(10.0));
      for (Eigen::Index i = 0; i < start.size(); ++i)
        if (box.lo[i] != box.hi[i]) start[i] += u(rng);
    }
    auto res = detail::ascend(f, start, box, opts.max_iterations);
    if (std::isfinite(res.lml) && res.lml > best.lml) best = std::move(res);
  }
  if (!std::isfinite(best.lml)) throw NumericalError("no restart produced a finite marginal likelihood");
  return best;
}

// Median pairwise Euclidean distance over one slice (1 when degenerate).
inline double median_distance(const Eigen::MatrixXd& X, Slice s, Eigen::Index search_dim) {
  const Eigen::MatrixXd D = squared_distances(X, s, search_dim);
  std::vector<double> d;
  for (Eigen::Index a = 0; a < D.rows(); ++a)
    for (Eigen::Index b = a + 1; b < D.cols(); ++b) d.push_back(std::sqrt(D(a, b)));
  if (d.empty()) return 1.0;
  std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2), d.end());
  const double m = d[d.size() / 2];
  return m > 0.0 ? m : 1.0;
}

// Initial hyperparameters: sigma^2 = target variance, ell = median pairwise
// distance of the component's slice, noise variance = 0.1 target variance.
inline KernelSpec initial_kernel(const KernelSpec& shape, const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const double var = std::max((y.array() - y.mean()).square().mean(), 1e-4);
  KernelSpec spec = shape;
  for (auto& c : spec.components) {
    c.sigma = std::sqrt(var);
    c.lengthscale = median_distance(X, c.slice, shape.search_dim);
  }
  spec.noise_sigma = std::sqrt(0.1 * var);
  return spec;
}

// Trained GP in normalised space.
class GpModel {
 public:
  GpModel(KernelSpec spec, Eigen::MatrixXd X, const Eigen::VectorXd& y) : spec_(std::move(spec)), X_(std::move(X)) {
    spec_.validate();
    const MarginalLikelihood f(spec_, X_, y);
    llt_ = robust_cholesky(f.gram(spec_));
    alpha_ = llt_.solve(y);
    lml_ = f.value(pack(spec_));
  }

  const KernelSpec& kernel() const noexcept { return spec_; }
  const Eigen::MatrixXd& inputs() const noexcept { return X_; }
  double log_marginal_likelihood() const noexcept { return lml_; }

  // Posterior mean and latent-function variance (noise excluded) at x.
  std::pair<double, double> predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    if (x.size() != X_.cols()) throw InvalidArgument("query point has the wrong dimension");
    Eigen::VectorXd kstar = Eigen::VectorXd::Zero(X_.rows());
    double kss = 0.0;
    for (const auto& c : spec_.components) {
      const Eigen::VectorXd xs = slice_of(x, c.slice, spec_.search_dim);
      kss += c.sigma * c.sigma;
      for (Eigen::Index i = 0; i < X_.rows(); ++i) {
        const Eigen::VectorXd xi = X_.row(i).transpose();
        kstar[i] += se_kernel(xs, slice_of(xi, c.slice, spec_.search_dim), c.sigma, c.lengthscale);
      }
    }
    const double mean = kstar.dot(alpha_);
    const Eigen::VectorXd v = llt_.matrixL().solve(kstar);
    const double var = std::max(0.0, kss - v.squaredNorm());
    return {mean, var};
  }

 private:
  KernelSpec spec_;
  Eigen::MatrixXd X_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd alpha_;
  double lml_ = 0.0;
};

}  // namespace searchsurv::gp
