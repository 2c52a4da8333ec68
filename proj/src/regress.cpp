#include "dmlsim/regress.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "dmlsim/rng.hpp"

namespace dmlsim {

namespace {

[[noreturn]] void fail(const std::string& msg) {
  throw std::invalid_argument(msg);
}

std::string column_label(const std::vector<std::string>& names, int j) {
  if (j < static_cast<int>(names.size())) return "'" + names[j] + "'";
  return "column " + std::to_string(j);
}

}  // namespace

OlsFit ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
           const std::vector<std::string>& names) {
  const int n = static_cast<int>(X.rows());
  const int k = static_cast<int>(X.cols());
  if (y.size() != n) fail("ols: dimension mismatch");
  if (n <= k) fail("ols: need more rows than columns");
  if (!X.allFinite() || !y.allFinite()) fail("ols: non-finite inputs");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() < k) {
    // First column outside the pivot set is a linear combination of others.
    const auto& perm = qr.colsPermutation().indices();
    int offender = perm(qr.rank());
    fail("ols: design is rank deficient; " + column_label(names, offender) +
         " is collinear with earlier columns");
  }
  OlsFit fit;
  fit.coefficients = qr.solve(y);
  fit.fitted = X * fit.coefficients;
  fit.residuals = y - fit.fitted;

  // HC1: (X'X)^-1 X' diag(e^2) X (X'X)^-1 * n/(n-k)
  Eigen::MatrixXd xtx_inv =
      (X.transpose() * X).ldlt().solve(Eigen::MatrixXd::Identity(k, k));
  Eigen::MatrixXd meat =
      X.transpose() * fit.residuals.array().square().matrix().asDiagonal() * X;
  Eigen::MatrixXd cov =
      xtx_inv * meat * xtx_inv * (static_cast<double>(n) / (n - k));
  fit.standard_errors = cov.diagonal().array().max(0.0).sqrt();
  return fit;
}

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

LassoFit lasso_cd(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                  double lambda, const LassoOptions& opts) {
  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());
  if (y.size() != n) fail("lasso_cd: dimension mismatch");
  if (!X.allFinite() || !y.allFinite()) fail("lasso_cd: non-finite inputs");
  if (lambda < 0) fail("lasso_cd: negative lambda");
  Eigen::VectorXd pf = opts.penalty_factor;
  if (pf.size() == 0) pf = Eigen::VectorXd::Ones(p);
  if (pf.size() != p) fail("lasso_cd: penalty factor length mismatch");

  // Standardize columns to unit sd (1/n convention), center the response.
  Eigen::VectorXd mean = X.colwise().mean();
  Eigen::MatrixXd Xs = X.rowwise() - mean.transpose();
  Eigen::VectorXd scale(p);
  for (int j = 0; j < p; ++j) {
    double sd = std::sqrt(Xs.col(j).squaredNorm() / n);
    scale(j) = sd > 0 ? sd : 1.0;
    if (sd > 0) Xs.col(j) /= sd;
  }
  double ymean = y.mean();
  Eigen::VectorXd r = (y.array() - ymean).matrix();  // residual at beta = 0

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  LassoFit fit;
  fit.lambda = lambda;
  int sweep = 0;
  for (; sweep < opts.max_sweeps; ++sweep) {
    double max_delta = 0.0;
    for (int j = 0; j < p; ++j) {
      double old = beta(j);
      double z = old + Xs.col(j).dot(r) / n;
      double next = soft_threshold(z, lambda * pf(j));
      if (next != old) {
        r += Xs.col(j) * (old - next);
        beta(j) = next;
        max_delta = std::max(max_delta, std::fabs(next - old));
      }
    }
    if (opts.trace_objective)
      fit.objective_trace.push_back(0.5 * r.squaredNorm() / n +
                                    lambda *
                                        (pf.array() * beta.array().abs()).sum());
    if (max_delta < opts.tol) {
      ++sweep;
      break;
    }
  }
  fit.iterations = sweep;
  fit.converged = sweep < opts.max_sweeps;

  fit.coefficients = Eigen::VectorXd::Zero(p);
  for (int j = 0; j < p; ++j)
    if (beta(j) != 0.0) {
      fit.coefficients(j) = beta(j) / scale(j);
      fit.active_set.push_back(j);
    }
  fit.intercept = ymean - mean.dot(fit.coefficients);
  return fit;
}

double plugin_lambda_formula(int n, int p, double sigma, double c) {
  double gamma = 0.1 / std::log(static_cast<double>(std::max(n, p)));
  double quantile = inverse_normal_cdf(1.0 - gamma / (2.0 * p));
  return c * sigma * quantile / std::sqrt(static_cast<double>(n));
}

namespace {

double residual_sd(const Eigen::VectorXd& e) {
  return std::sqrt(e.squaredNorm() / e.size());
}

// Residual sd of an intercept OLS on the given columns, with a degrees-of-
// freedom correction so overfitting cannot drive the penalty into a dive.
// Falls back to the centered-response sd when the regression is infeasible.
double support_sigma(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     const std::vector<int>& cols) {
  const int n = static_cast<int>(X.rows());
  const int k = static_cast<int>(cols.size());
  if (k == 0 || k >= n - 2) {
    Eigen::VectorXd e = (y.array() - y.mean()).matrix();
    return residual_sd(e);
  }
  Eigen::MatrixXd D(n, k + 1);
  D.col(0).setOnes();
  for (int c = 0; c < k; ++c) D.col(c + 1) = X.col(cols[c]);
  Eigen::VectorXd beta = D.colPivHouseholderQr().solve(y);
  double rss = (y - D * beta).squaredNorm();
  return std::sqrt(rss / (n - k - 1));
}

}  // namespace

PluginFit plugin_lambda(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                        const PluginOptions& opts) {
  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());
  if (n < 10) fail("plugin_lambda: need n >= 10");
  double sd_y = residual_sd(y.array() - y.mean());
  if (sd_y <= 0) fail("plugin_lambda: zero-variance response");

  double sigma = sd_y;
  if (opts.top_k > 0) {
    // Rank columns by absolute correlation with the response.
    Eigen::VectorXd mean = X.colwise().mean();
    Eigen::VectorXd yc = (y.array() - y.mean()).matrix();
    std::vector<std::pair<double, int>> score(p);
    for (int j = 0; j < p; ++j) {
      Eigen::VectorXd xc = (X.col(j).array() - mean(j)).matrix();
      double sd = std::sqrt(xc.squaredNorm() / n);
      double cor = sd > 0 ? std::fabs(xc.dot(yc) / (n * sd)) : 0.0;
      score[j] = {-cor, j};
    }
    std::sort(score.begin(), score.end());
    std::vector<int> top;
    for (int j = 0; j < std::min(opts.top_k, p); ++j)
      top.push_back(score[j].second);
    sigma = support_sigma(X, y, top);
    if (sigma <= 0) sigma = sd_y;
  }

  PluginFit out;
  double lambda = plugin_lambda_formula(n, p, sigma, opts.c);
  std::vector<char> in_path(p, 0);
  for (int it = 0; it < opts.iterations; ++it) {
    LassoFit fit = lasso_cd(X, y, lambda);
    for (int j : fit.active_set) in_path[j] = 1;
    if (opts.post_refine) {
      sigma = support_sigma(X, y, fit.active_set);
    } else {
      Eigen::VectorXd e =
          y - X * fit.coefficients -
          Eigen::VectorXd::Constant(n, fit.intercept);
      sigma = residual_sd(e);
    }
    if (sigma <= 0) sigma = sd_y;
    double next = plugin_lambda_formula(n, p, sigma, opts.c);
    lambda = opts.monotone ? std::min(lambda, next) : next;
  }
  out.lambda = lambda;
  out.sigma_hat = sigma;
  LassoFit final_fit = lasso_cd(X, y, lambda);
  out.support = final_fit.active_set;
  for (int j : final_fit.active_set) in_path[j] = 1;
  if (opts.accumulate) {
    for (int j = 0; j < p; ++j)
      if (in_path[j]) out.support_path.push_back(j);
  } else {
    out.support_path = out.support;
  }
  return out;
}

OlsFit post_lasso(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                  const std::vector<int>& support,
                  const std::vector<std::string>& names) {
  const int n = static_cast<int>(X.rows());
  for (int j : support)
    if (j < 0 || j >= X.cols()) fail("post_lasso: support index out of range");
  if (static_cast<int>(support.size()) >= n)
    fail("post_lasso: support larger than sample");
  Eigen::MatrixXd D(n, support.size() + 1);
  D.col(0).setOnes();
  std::vector<std::string> dnames{"(intercept)"};
  for (size_t c = 0; c < support.size(); ++c) {
    D.col(c + 1) = X.col(support[c]);
    dnames.push_back(support[c] < static_cast<int>(names.size())
                         ? names[support[c]]
                         : "x" + std::to_string(support[c]));
  }
  return ols(D, y, dnames);
}

}  // namespace dmlsim
