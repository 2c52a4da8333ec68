#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

namespace dmlsim {

struct OlsFit {
  Eigen::VectorXd coefficients;
  Eigen::VectorXd standard_errors;  // heteroskedasticity-robust (HC1)
  Eigen::VectorXd residuals;
  Eigen::VectorXd fitted;
};

// Least squares via rank-revealing QR; rank deficiency raises an error
// naming the offending column.
OlsFit ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
           const std::vector<std::string>& names = {});

struct LassoFit {
  Eigen::VectorXd coefficients;  // original scale
  double intercept = 0.0;
  double lambda = 0.0;
  std::vector<int> active_set;
  int iterations = 0;
  bool converged = true;
  std::vector<double> objective_trace;  // filled when requested
};

struct LassoOptions {
  Eigen::VectorXd penalty_factor;  // per-column multiplier, empty = all ones
  int max_sweeps = 10000;
  double tol = 1e-7;
  bool trace_objective = false;
};

// Minimizes (1/2n)|y - Xb|^2 + lambda |b|_1 on the internally standardized
// design by cyclic coordinate descent; coefficients are mapped back to the
// original scale, the intercept comes from centering.
LassoFit lasso_cd(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                  double lambda, const LassoOptions& opts = {});

double soft_threshold(double z, double t);

// lambda = c * sigma * qnorm(1 - gamma/(2p)) / sqrt(n), gamma = 0.1/log(max(n,p)).
double plugin_lambda_formula(int n, int p, double sigma, double c = 1.1);

struct PluginOptions {
  // Initial sigma estimate: residual sd of an OLS on the top_k most
  // correlated columns, or the response sd when top_k == 0.
  int top_k = 0;
  bool post_refine = true;   // refine sigma from post-OLS residuals
  bool monotone = false;     // keep the smallest lambda seen
  bool accumulate = false;   // union supports along the refinement path
  int iterations = 5;
  double c = 1.1;
};

struct PluginFit {
  double lambda = 0.0;
  double sigma_hat = 0.0;
  std::vector<int> support;       // support of the final fit
  std::vector<int> support_path;  // union over refinement iterations
};

// Iterated plug-in penalty with the sigma refinement convention given in
// opts. Throws on zero-variance response.
PluginFit plugin_lambda(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                        const PluginOptions& opts = {});

// OLS of y on an intercept plus the support columns of X; empty support
// gives the intercept-only fit.
OlsFit post_lasso(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                  const std::vector<int>& support,
                  const std::vector<std::string>& names = {});

}  // namespace dmlsim
