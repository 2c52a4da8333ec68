#include "dmlsim/dml.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "json.hpp"

namespace dmlsim {

namespace {

[[noreturn]] void fail(const std::string& msg) {
  throw std::invalid_argument(msg);
}

void check_input(const Dataset& data) {
  data.validate();
  if (data.n() < 10) fail("estimator: need n >= 10");
  auto var = [&](const Eigen::VectorXd& v) {
    return (v.array() - v.mean()).square().sum() / v.size();
  };
  if (var(data.y) <= 0) fail("estimator: outcome has zero variance");
  if (var(data.d) <= 0) fail("estimator: treatment has zero variance");
}

std::vector<std::string> select_names(const Dataset& data,
                                      const std::vector<int>& idx) {
  std::vector<std::string> out;
  out.reserve(idx.size());
  for (int j : idx) out.push_back(data.control_names[j]);
  return out;
}

// OLS of y on an intercept, d, and the chosen controls; theta and its HC1
// standard error come from the d column.
std::pair<double, double> refit_theta(const Dataset& data,
                                      const std::vector<int>& controls) {
  const int n = data.n();
  Eigen::MatrixXd D(n, controls.size() + 2);
  D.col(0).setOnes();
  D.col(1) = data.d;
  std::vector<std::string> names{"(intercept)", "d"};
  for (size_t c = 0; c < controls.size(); ++c) {
    D.col(c + 2) = data.X.col(controls[c]);
    names.push_back(data.control_names[controls[c]]);
  }
  OlsFit fit = ols(D, data.y, names);
  return {fit.coefficients(1), fit.standard_errors(1)};
}

// Selection step shared by the estimators: plug-in penalty unless a fixed
// lambda is forced. Returns selected column indices and the lambda used.
std::pair<std::vector<int>, double> select(const Eigen::MatrixXd& X,
                                           const Eigen::VectorXd& y,
                                           const PluginOptions& popts,
                                           const EstimatorOptions& eopts) {
  if (X.cols() == 0) return {{}, 0.0};
  if (eopts.lambda_override) {
    LassoFit fit = lasso_cd(X, y, *eopts.lambda_override);
    return {fit.active_set, *eopts.lambda_override};
  }
  PluginFit fit = plugin_lambda(X, y, popts);
  return {fit.support_path, fit.lambda};
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::ols_all: return "ols_all";
    case Method::naive_lasso: return "naive_lasso";
    case Method::double_selection: return "double_selection";
    case Method::partialling_out: return "partialling_out";
  }
  return "?";
}

std::optional<Method> method_from_string(const std::string& s) {
  if (s == "ols_all") return Method::ols_all;
  if (s == "naive_lasso") return Method::naive_lasso;
  if (s == "double_selection") return Method::double_selection;
  if (s == "partialling_out") return Method::partialling_out;
  return std::nullopt;
}

std::string FitResult::to_json() const {
  nlohmann::ordered_json j;
  j["method"] = to_string(method);
  j["theta_hat"] = theta_hat;
  j["se"] = se;
  j["selected_controls"] = selected_controls;
  j["lambda_used"] = lambda_used;
  return j.dump(2);
}

PluginOptions dml_plugin_options() {
  PluginOptions o;
  o.top_k = 20;
  o.post_refine = true;
  o.monotone = true;
  o.accumulate = true;
  o.c = 0.9;
  return o;
}

PluginOptions naive_plugin_options() {
  PluginOptions o;
  o.top_k = 0;           // start from sd(y)
  o.post_refine = false;  // refine through lasso residuals
  o.monotone = false;
  o.accumulate = false;
  return o;
}

FitResult naive_post_lasso(const Dataset& data, const EstimatorOptions& opts) {
  check_input(data);
  auto [sel, lambda] = select(data.X, data.y, naive_plugin_options(), opts);
  auto [theta, se] = refit_theta(data, sel);
  FitResult out;
  out.method = Method::naive_lasso;
  out.theta_hat = theta;
  out.se = se;
  out.selected_controls = select_names(data, sel);
  out.lambda_used["y"] = lambda;
  return out;
}

FitResult double_selection(const Dataset& data, const EstimatorOptions& opts) {
  check_input(data);
  auto popts = dml_plugin_options();
  auto [sy, ly] = select(data.X, data.y, popts, opts);
  auto [sd, ld] = select(data.X, data.d, popts, opts);
  std::set<int> u(sy.begin(), sy.end());
  u.insert(sd.begin(), sd.end());
  std::vector<int> sel(u.begin(), u.end());
  if (static_cast<int>(sel.size()) >= data.n() - 2)
    fail("double_selection: selected union leaves no degrees of freedom");
  auto [theta, se] = refit_theta(data, sel);
  FitResult out;
  out.method = Method::double_selection;
  out.theta_hat = theta;
  out.se = se;
  out.selected_controls = select_names(data, sel);
  out.lambda_used["y"] = ly;
  out.lambda_used["d"] = ld;
  return out;
}

FitResult partialling_out(const Dataset& data, const EstimatorOptions& opts) {
  check_input(data);
  auto popts = dml_plugin_options();
  auto [sy, ly] = select(data.X, data.y, popts, opts);
  auto [sd, ld] = select(data.X, data.d, popts, opts);
  OlsFit fy = post_lasso(data.X, data.y, sy, data.control_names);
  OlsFit fd = post_lasso(data.X, data.d, sd, data.control_names);
  Eigen::VectorXd rho_y = fy.residuals;
  Eigen::VectorXd rho_d = fd.residuals;
  if (rho_d.squaredNorm() / data.n() < 1e-12)
    fail("partialling_out: treatment residual has zero variance");
  Eigen::MatrixXd D(data.n(), 2);
  D.col(0).setOnes();
  D.col(1) = rho_d;
  OlsFit final_fit = ols(D, rho_y, {"(intercept)", "rho_d"});
  std::set<int> u(sy.begin(), sy.end());
  u.insert(sd.begin(), sd.end());
  FitResult out;
  out.method = Method::partialling_out;
  out.theta_hat = final_fit.coefficients(1);
  out.se = final_fit.standard_errors(1);
  out.selected_controls =
      select_names(data, std::vector<int>(u.begin(), u.end()));
  out.lambda_used["y"] = ly;
  out.lambda_used["d"] = ld;
  return out;
}

FitResult ols_all(const Dataset& data) {
  check_input(data);
  std::vector<int> all(data.p());
  for (int j = 0; j < data.p(); ++j) all[j] = j;
  auto [theta, se] = refit_theta(data, all);
  FitResult out;
  out.method = Method::ols_all;
  out.theta_hat = theta;
  out.se = se;
  out.selected_controls = data.control_names;
  return out;
}

FitResult run_method(Method m, const Dataset& data,
                     const EstimatorOptions& opts) {
  switch (m) {
    case Method::ols_all: return ols_all(data);
    case Method::naive_lasso: return naive_post_lasso(data, opts);
    case Method::double_selection: return double_selection(data, opts);
    case Method::partialling_out: return partialling_out(data, opts);
  }
  fail("unknown method");
}

OrthogonalityProbe orthogonality_derivative(const LinearScm& scm,
                                            const Dataset& data,
                                            double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 0.5))
    fail("orthogonality_derivative: epsilon must lie in (0, 0.5]");
  data.validate();
  const double theta0 = scm.direct_effect("D", "Y");
  // Population nuisance coefficients: linear conditional means of y and d
  // given the full control vector.
  auto py = scm.population_ols("Y", data.control_names);
  auto pd = scm.population_ols("D", data.control_names);
  const int p = data.p();
  Eigen::VectorXd coef_y(p), coef_d(p);
  for (int j = 0; j < p; ++j) {
    coef_y(j) = py.at(data.control_names[j]);
    coef_d(j) = pd.at(data.control_names[j]);
  }
  Eigen::VectorXd ell = data.X * coef_y;   // E[y|x]
  Eigen::VectorXd m = data.X * coef_d;     // E[d|x]
  Eigen::VectorXd g = ell - theta0 * m;    // E[y - theta0 d | x]

  auto dml_moment = [&](double s) {
    Eigen::VectorXd ry = data.y - s * ell;
    Eigen::VectorXd rd = data.d - s * m;
    return ((ry - theta0 * rd).array() * rd.array()).mean();
  };
  auto naive_moment = [&](double s) {
    return ((data.y - theta0 * data.d - s * g).array() * data.d.array())
        .mean();
  };
  OrthogonalityProbe out;
  out.dml_deriv =
      (dml_moment(1.0 + epsilon) - dml_moment(1.0 - epsilon)) / (2 * epsilon);
  out.naive_deriv =
      (naive_moment(1.0 + epsilon) - naive_moment(1.0 - epsilon)) /
      (2 * epsilon);
  return out;
}

}  // namespace dmlsim
