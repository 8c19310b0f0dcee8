#pragma once

// Small nonlinear least-squares engine: Levenberg-Marquardt with a numeric
// Jacobian, working in a transformed parameter space where selected
// parameters are kept positive via a log map.  If LM stalls or walks into
// non-finite territory, a Nelder-Mead simplex pass restarts from the best
// point seen; both run behind the single fit_least_squares() entry point.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "muxread/errors.hpp"

namespace muxread::detail {

// Residual evaluator: fills r (n_residuals) from user-space parameters p.
using ResidualFn = std::function<void(const std::vector<double>&, std::vector<double>&)>;

struct LeastSquaresOptions {
  int max_iterations = 200;
  double rel_tol = 1e-12;        // on the cost decrease
  int simplex_budget = 4000;     // fallback function evaluations
};

struct LeastSquaresResult {
  std::vector<double> params;      // user space
  std::vector<double> covariance;  // n_p x n_p row-major, user space
  double chi2 = 0.0;
  int iterations = 0;
  bool converged = false;
  bool used_fallback = false;
};

class TransformedProblem {
 public:
  TransformedProblem(ResidualFn fn, std::size_t n_residuals,
                     std::vector<bool> log_scale)
      : fn_(std::move(fn)), n_r_(n_residuals), log_scale_(std::move(log_scale)) {}

  std::size_t n_params() const { return log_scale_.size(); }
  std::size_t n_residuals() const { return n_r_; }

  std::vector<double> to_internal(const std::vector<double>& p) const {
    std::vector<double> th(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) {
      if (log_scale_[k]) {
        if (!(p[k] > 0.0))
          throw invalid_input("fit: positive parameter initialized <= 0");
        th[k] = std::log(p[k]);
      } else {
        th[k] = p[k];
      }
    }
    return th;
  }

  std::vector<double> to_user(const std::vector<double>& th) const {
    std::vector<double> p(th.size());
    for (std::size_t k = 0; k < th.size(); ++k)
      p[k] = log_scale_[k] ? std::exp(th[k]) : th[k];
    return p;
  }

  // d p_k / d theta_k, for mapping the covariance back to user space.
  double jacobian_scale(const std::vector<double>& th, std::size_t k) const {
    return log_scale_[k] ? std::exp(th[k]) : 1.0;
  }

  double cost(const std::vector<double>& th, std::vector<double>& r) const {
    fn_(to_user(th), r);
    double c = 0.0;
    for (double v : r) c += v * v;
    return std::isfinite(c) ? c : std::numeric_limits<double>::infinity();
  }

 private:
  ResidualFn fn_;
  std::size_t n_r_;
  std::vector<bool> log_scale_;
};

// Central-difference Jacobian in the internal space.
inline Eigen::MatrixXd numeric_jacobian(const TransformedProblem& prob,
                                        const std::vector<double>& th) {
  std::size_t np = prob.n_params(), nr = prob.n_residuals();
  Eigen::MatrixXd J(nr, np);
  std::vector<double> rp(nr), rm(nr), t = th;
  for (std::size_t k = 0; k < np; ++k) {
    double h = 1e-6 * std::max(1.0, std::abs(th[k]));
    t[k] = th[k] + h;
    prob.cost(t, rp);
    t[k] = th[k] - h;
    prob.cost(t, rm);
    t[k] = th[k];
    for (std::size_t i = 0; i < nr; ++i) J(i, k) = (rp[i] - rm[i]) / (2.0 * h);
  }
  return J;
}

inline bool levenberg_marquardt(const TransformedProblem& prob,
                                std::vector<double>& th, double& chi2,
                                int& iterations,
                                const LeastSquaresOptions& opt) {
  std::size_t np = prob.n_params(), nr = prob.n_residuals();
  std::vector<double> r(nr);
  chi2 = prob.cost(th, r);
  if (!std::isfinite(chi2)) return false;

  double lambda = 1e-3;
  for (iterations = 1; iterations <= opt.max_iterations; ++iterations) {
    Eigen::MatrixXd J = numeric_jacobian(prob, th);
    Eigen::VectorXd rv = Eigen::Map<Eigen::VectorXd>(r.data(), nr);
    Eigen::MatrixXd JtJ = J.transpose() * J;
    Eigen::VectorXd g = J.transpose() * rv;
    if (g.norm() < 1e-14 * std::max(1.0, chi2)) return true;

    bool stepped = false;
    for (int tries = 0; tries < 24; ++tries) {
      Eigen::MatrixXd A = JtJ;
      for (std::size_t k = 0; k < np; ++k)
        A(k, k) += lambda * std::max(JtJ(k, k), 1e-30);
      Eigen::VectorXd delta = A.ldlt().solve(-g);
      if (!delta.allFinite()) {
        lambda *= 8.0;
        continue;
      }
      std::vector<double> cand = th;
      for (std::size_t k = 0; k < np; ++k) cand[k] += delta(k);
      std::vector<double> rc(nr);
      double c = prob.cost(cand, rc);
      if (c < chi2) {
        double drop = chi2 - c;
        th = cand;
        r = rc;
        chi2 = c;
        lambda = std::max(lambda / 4.0, 1e-14);
        stepped = true;
        if (drop < opt.rel_tol * std::max(chi2, 1e-300) ||
            delta.norm() < 1e-14)
          return true;
        break;
      }
      lambda *= 8.0;
    }
    if (!stepped) return chi2 < std::numeric_limits<double>::infinity() &&
                         lambda > 1e12;  // flat landscape: accept if stuck
  }
  return false;
}

inline bool nelder_mead(const TransformedProblem& prob, std::vector<double>& th,
                        double& chi2, const LeastSquaresOptions& opt) {
  std::size_t np = prob.n_params();
  std::vector<double> r(prob.n_residuals());
  std::vector<std::vector<double>> simplex(np + 1, th);
  std::vector<double> f(np + 1);
  for (std::size_t k = 0; k < np; ++k)
    simplex[k + 1][k] += 0.05 * std::max(1.0, std::abs(th[k]));
  for (std::size_t v = 0; v <= np; ++v) f[v] = prob.cost(simplex[v], r);

  int evals = static_cast<int>(np) + 1;
  while (evals < opt.simplex_budget) {
    // Order the simplex.
    std::vector<std::size_t> idx(np + 1);
    for (std::size_t v = 0; v <= np; ++v) idx[v] = v;
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return f[a] < f[b]; });
    std::size_t best = idx[0], worst = idx[np], second = idx[np - 1];
    if (std::abs(f[worst] - f[best]) <=
        1e-14 * (std::abs(f[best]) + 1e-300))
      break;

    std::vector<double> centroid(np, 0.0);
    for (std::size_t v = 0; v <= np; ++v) {
      if (v == worst) continue;
      for (std::size_t k = 0; k < np; ++k) centroid[k] += simplex[v][k];
    }
    for (double& c : centroid) c /= static_cast<double>(np);

    auto blend = [&](double t) {
      std::vector<double> out(np);
      for (std::size_t k = 0; k < np; ++k)
        out[k] = centroid[k] + t * (centroid[k] - simplex[worst][k]);
      return out;
    };

    std::vector<double> refl = blend(1.0);
    double f_refl = prob.cost(refl, r);
    ++evals;
    if (f_refl < f[best]) {
      std::vector<double> exp_pt = blend(2.0);
      double f_exp = prob.cost(exp_pt, r);
      ++evals;
      simplex[worst] = f_exp < f_refl ? exp_pt : refl;
      f[worst] = std::min(f_exp, f_refl);
    } else if (f_refl < f[second]) {
      simplex[worst] = refl;
      f[worst] = f_refl;
    } else {
      std::vector<double> contr = blend(-0.5);
      double f_contr = prob.cost(contr, r);
      ++evals;
      if (f_contr < f[worst]) {
        simplex[worst] = contr;
        f[worst] = f_contr;
      } else {
        for (std::size_t v = 0; v <= np; ++v) {
          if (v == best) continue;
          for (std::size_t k = 0; k < np; ++k)
            simplex[v][k] = 0.5 * (simplex[v][k] + simplex[best][k]);
          f[v] = prob.cost(simplex[v], r);
          ++evals;
        }
      }
    }
  }
  std::size_t best = 0;
  for (std::size_t v = 1; v <= np; ++v)
    if (f[v] < f[best]) best = v;
  bool improved = f[best] < chi2;
  if (improved) {
    th = simplex[best];
    chi2 = f[best];
  }
  return improved;
}

inline LeastSquaresResult fit_least_squares(ResidualFn residuals,
                                            std::size_t n_residuals,
                                            const std::vector<double>& initial,
                                            const std::vector<bool>& log_scale,
                                            LeastSquaresOptions opt = {}) {
  if (initial.size() != log_scale.size() || initial.empty())
    throw invalid_input("fit_least_squares: bad parameter layout");
  if (n_residuals < initial.size())
    throw invalid_input("fit_least_squares: underdetermined problem");

  TransformedProblem prob(std::move(residuals), n_residuals, log_scale);
  std::vector<double> th = prob.to_internal(initial);

  LeastSquaresResult res;
  double chi2 = 0.0;
  bool ok = levenberg_marquardt(prob, th, chi2, res.iterations, opt);
  if (!ok) {
    res.used_fallback = true;
    nelder_mead(prob, th, chi2, opt);
    // Polish the simplex result with a second LM pass.
    int more = 0;
    ok = levenberg_marquardt(prob, th, chi2, more, opt);
    res.iterations += more;
  }
  res.converged = ok;
  res.chi2 = chi2;
  res.params = prob.to_user(th);

  // Covariance of the user-space parameters from the Gauss-Newton
  // approximation at the optimum, scaled by the residual variance.
  std::size_t np = prob.n_params();
  Eigen::MatrixXd J = numeric_jacobian(prob, th);
  Eigen::MatrixXd JtJ = J.transpose() * J;
  double dof = static_cast<double>(n_residuals) - static_cast<double>(np);
  double s2 = dof > 0.0 ? chi2 / dof : 0.0;
  Eigen::MatrixXd cov =
      JtJ.completeOrthogonalDecomposition().pseudoInverse() * s2;
  res.covariance.assign(np * np, 0.0);
  for (std::size_t a = 0; a < np; ++a)
    for (std::size_t b = 0; b < np; ++b)
      res.covariance[a * np + b] = cov(a, b) * prob.jacobian_scale(th, a) *
                                   prob.jacobian_scale(th, b);
  return res;
}

}  // namespace muxread::detail
