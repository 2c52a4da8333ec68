#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dmlsim/regress.hpp"
#include "dmlsim/scm.hpp"

namespace dmlsim {

enum class Method { ols_all, naive_lasso, double_selection, partialling_out };

std::string to_string(Method m);
std::optional<Method> method_from_string(const std::string& s);

struct FitResult {
  double theta_hat = 0.0;
  double se = 0.0;
  std::vector<std::string> selected_controls;
  Method method = Method::double_selection;
  std::map<std::string, double> lambda_used;  // per selection equation

  std::string to_json() const;
};

struct EstimatorOptions {
  // Forces this penalty in every lasso step, bypassing the plug-in rule.
  std::optional<double> lambda_override;
};

// Selection conventions for the two estimator families. The DML reduced
// forms use the iterated plug-in with an aggressive variance start; the
// naive estimator keeps the textbook conservative start.
PluginOptions dml_plugin_options();
PluginOptions naive_plugin_options();

// Post-LASSO on the outcome equation alone, then refit of y on d plus the
// selected controls.
FitResult naive_post_lasso(const Dataset& data,
                           const EstimatorOptions& opts = {});

// Union of the LASSO-selected predictors of y and of d, then one OLS refit.
FitResult double_selection(const Dataset& data,
                           const EstimatorOptions& opts = {});

// Post-LASSO residuals of y and d on the controls, then the residual slope.
FitResult partialling_out(const Dataset& data,
                          const EstimatorOptions& opts = {});

// OLS of y on d and every control; the no-selection baseline.
FitResult ols_all(const Dataset& data);

FitResult run_method(Method m, const Dataset& data,
                     const EstimatorOptions& opts = {});

struct OrthogonalityProbe {
  double dml_deriv = 0.0;    // orthogonalized score (rho_y - theta rho_d) rho_d
  double naive_deriv = 0.0;  // non-orthogonal score (y - theta d - g(x)) d
};

// Central-difference Gateaux derivative of the empirical moments in the
// direction that rescales the true conditional means by 1 +/- epsilon.
// Requires the generating SCM for the population nuisance coefficients.
OrthogonalityProbe orthogonality_derivative(const LinearScm& scm,
                                            const Dataset& data,
                                            double epsilon);

}  // namespace dmlsim
