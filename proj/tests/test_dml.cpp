#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "dmlsim/dml.hpp"
#include "dmlsim/rng.hpp"
#include "doctest.h"

using namespace dmlsim;

namespace {

Dataset random_dataset(std::mt19937& rng, int n, int p) {
  std::normal_distribution<double> gauss;
  Dataset data;
  data.X.resize(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) data.X(i, j) = gauss(rng);
  data.d.resize(n);
  data.y.resize(n);
  for (int i = 0; i < n; ++i) {
    data.d(i) = 0.5 * data.X(i, 0) + gauss(rng);
    data.y(i) = 1.5 * data.d(i) + 0.7 * data.X(i, 1) + gauss(rng);
  }
  for (int j = 0; j < p; ++j)
    data.control_names.push_back("X" + std::to_string(j + 1));
  return data;
}

double full_ols_theta(const Dataset& data) {
  const int n = data.n();
  Eigen::MatrixXd D(n, data.p() + 2);
  D.col(0).setOnes();
  D.col(1) = data.d;
  D.rightCols(data.p()) = data.X;
  return ols(D, data.y).coefficients(1);
}

}  // namespace

TEST_CASE("estimators with no controls reduce to simple regression") {
  std::mt19937 rng(3);
  Dataset data = random_dataset(rng, 60, 3);
  Dataset bare = data;
  bare.X.resize(60, 0);
  bare.control_names.clear();
  FitResult fit = naive_post_lasso(bare);
  Eigen::MatrixXd D(60, 2);
  D.col(0).setOnes();
  D.col(1) = bare.d;
  OlsFit direct = ols(D, bare.y);
  CHECK(fit.theta_hat == doctest::Approx(direct.coefficients(1)).epsilon(1e-12));
  CHECK(fit.selected_controls.empty());
  CHECK(fit.se > 0);
}

TEST_CASE("FWL: forced lambda zero matches the full regression exactly") {
  std::mt19937 rng(7);
  EstimatorOptions zero;
  zero.lambda_override = 0.0;
  for (int iter = 0; iter < 100; ++iter) {
    int n = 50 + static_cast<int>(rng() % 30);
    int p = 4 + static_cast<int>(rng() % 5);
    Dataset data = random_dataset(rng, n, p);
    double want = full_ols_theta(data);
    CHECK(partialling_out(data, zero).theta_hat ==
          doctest::Approx(want).epsilon(1e-8));
    CHECK(double_selection(data, zero).theta_hat ==
          doctest::Approx(want).epsilon(1e-8));
    CHECK(naive_post_lasso(data, zero).theta_hat ==
          doctest::Approx(want).epsilon(1e-8));
    CHECK(ols_all(data).theta_hat == doctest::Approx(want).epsilon(1e-10));
  }
}

TEST_CASE("selected controls are invariant to column permutation") {
  std::mt19937 rng(11);
  ScenarioConfig cfg;
  cfg.tpl = Template::m_graph;
  cfg.n = 100;
  cfg.p = 30;
  cfg.q = 5;
  cfg.reps = 1;
  Dataset data = simulate(from_template(cfg), cfg.n, 1234);

  std::vector<int> perm(data.p());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Dataset shuffled = data;
  for (int j = 0; j < data.p(); ++j) {
    shuffled.X.col(j) = data.X.col(perm[j]);
    shuffled.control_names[j] = data.control_names[perm[j]];
  }
  FitResult a = double_selection(data);
  FitResult b = double_selection(shuffled);
  auto sorted = [](std::vector<std::string> v) {
    std::sort(v.begin(), v.end());
    return v;
  };
  CHECK(sorted(a.selected_controls) == sorted(b.selected_controls));
  CHECK(a.theta_hat == doctest::Approx(b.theta_hat).epsilon(1e-9));
}

TEST_CASE("rescaling the outcome rescales every estimate") {
  std::mt19937 rng(13);
  Dataset data = random_dataset(rng, 120, 15);
  const double k = 4.25;
  Dataset scaled = data;
  scaled.y *= k;
  for (Method m : {Method::naive_lasso, Method::double_selection,
                   Method::partialling_out, Method::ols_all}) {
    FitResult a = run_method(m, data);
    FitResult b = run_method(m, scaled);
    CHECK(b.theta_hat == doctest::Approx(k * a.theta_hat).epsilon(1e-6));
  }
}

TEST_CASE("null model with only noise controls stays centered") {
  ScenarioConfig cfg;
  cfg.tpl = Template::good_control;
  cfg.n = 100;
  cfg.p = 100;
  cfg.q = 0;
  cfg.b1 = 0.8;
  cfg.b2 = 0.2;
  cfg.reps = 1;
  auto scm = from_template(cfg);
  double sum_double = 0.0, sum_naive = 0.0;
  const int reps = 1000;
  for (int r = 0; r < reps; ++r) {
    Dataset data = simulate(scm, cfg.n, derive_seed(321, r + 1));
    sum_double += double_selection(data).theta_hat;
    sum_naive += naive_post_lasso(data).theta_hat;
  }
  // Textbook-penalty selection leaves the null design untouched.
  CHECK(std::fabs(sum_naive / reps - cfg.theta0) < 0.02);
  // The refined penalty admits about one spurious column per replication,
  // costing a small post-selection attenuation.
  CHECK(std::fabs(sum_double / reps - cfg.theta0) < 0.04);
}

TEST_CASE("degenerate inputs are rejected") {
  std::mt19937 rng(17);
  Dataset data = random_dataset(rng, 40, 3);
  Dataset flat = data;
  flat.y.setConstant(2.0);
  CHECK_THROWS_AS(naive_post_lasso(flat), std::invalid_argument);
  flat = data;
  flat.d.setConstant(1.0);
  CHECK_THROWS_AS(double_selection(flat), std::invalid_argument);
  Dataset tiny = data;
  tiny.y = data.y.head(5);
  tiny.d = data.d.head(5);
  tiny.X = data.X.topRows(5);
  CHECK_THROWS_AS(double_selection(tiny), std::invalid_argument);
}

TEST_CASE("fit results serialize with method and selection detail") {
  std::mt19937 rng(19);
  Dataset data = random_dataset(rng, 80, 6);
  FitResult fit = double_selection(data);
  std::string j = fit.to_json();
  CHECK(j.find("\"method\": \"double_selection\"") != std::string::npos);
  CHECK(j.find("theta_hat") != std::string::npos);
  CHECK(j.find("lambda_used") != std::string::npos);
  for (const auto& name : fit.selected_controls) {
    bool known = false;
    for (const auto& cand : data.control_names) known = known || cand == name;
    CHECK(known);
  }
}

TEST_CASE("orthogonality probe: zero direction and population behaviour") {
  ScenarioConfig cfg;
  cfg.tpl = Template::good_control;
  cfg.n = 100000;
  cfg.p = 20;
  cfg.q = 10;
  cfg.reps = 1;
  auto scm = from_template(cfg);
  Dataset data = simulate(scm, cfg.n, 2718);

  OrthogonalityProbe probe = orthogonality_derivative(scm, data, 0.25);
  CHECK(std::fabs(probe.dml_deriv) < 0.01);
  CHECK(std::fabs(probe.naive_deriv) > 0.1);
  // the non-orthogonal derivative has a known population value:
  // -E[g(x) d] = -q * b1 * b2 * Var(X) with these template covariances
  CHECK(probe.naive_deriv ==
        doctest::Approx(-cfg.q * cfg.b1 * cfg.b2).epsilon(0.05));
  CHECK_THROWS_AS(orthogonality_derivative(scm, data, 0.0),
                  std::invalid_argument);

  // with a zero perturbation direction both moments are flat: epsilon
  // cancels when the nuisance functions are identically zero
  ScenarioConfig null_cfg = cfg;
  null_cfg.n = 2000;
  null_cfg.q = 0;
  auto null_scm = from_template(null_cfg);
  Dataset null_data = simulate(null_scm, null_cfg.n, 999);
  OrthogonalityProbe null_probe =
      orthogonality_derivative(null_scm, null_data, 0.25);
  CHECK(null_probe.dml_deriv == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(null_probe.naive_deriv == doctest::Approx(0.0).epsilon(1e-12));
}
