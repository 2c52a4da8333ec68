#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dmlsim/graph.hpp"

namespace dmlsim {

// Unobserved standard-normal factor loading on two or more observed nodes.
// A plain bidirected arc is the two-node special case; shared factors let a
// single unobserved cause stand behind several arcs at once.
struct LatentFactor {
  std::string name;
  std::vector<std::pair<int, double>> loadings;  // (node index, coefficient)
};

// Linear-Gaussian SCM over a CausalGraph: structural coefficients on the
// directed edges, latent factors covering the bidirected arcs, independent
// zero-mean Gaussian disturbances.
class LinearScm {
 public:
  explicit LinearScm(CausalGraph graph);

  void set_edge_coeff(const std::string& from, const std::string& to,
                      double value);
  // Covers the arc a<->b with a fresh two-node factor.
  void add_arc_factor(const std::string& a, const std::string& b,
                      double load_a, double load_b);
  // Shared factor; every pair of loaded nodes must carry an arc.
  void add_shared_factor(const std::string& name,
                         const std::vector<std::pair<std::string, double>>&
                             loadings);
  void set_noise_var(const std::string& node, double var);

  // Every directed edge has a coefficient, every arc is covered by at least
  // one factor, noise variances positive. Throws std::invalid_argument.
  void validate() const;

  const CausalGraph& graph() const { return graph_; }
  const std::vector<LatentFactor>& factors() const { return factors_; }
  double edge_coeff(const std::string& from, const std::string& to) const;
  double noise_var(const std::string& node) const;

  // Sigma = (I-B)^{-1} Omega (I-B)^{-T} over observed + latent nodes,
  // marginalized to the observed block (order = graph node order).
  Eigen::MatrixXd implied_covariance() const;

  // Sum over directed d->y paths of coefficient products.
  double total_effect(const std::string& d, const std::string& y) const;
  // Structural coefficient on the edge d->y, 0 when absent.
  double direct_effect(const std::string& d, const std::string& y) const;

  // Population least squares of target on regressors, from the implied
  // covariance; no sampling.
  std::map<std::string, double> population_ols(
      const std::string& target, const std::vector<std::string>& regressors)
      const;

  // Coefficient on d when regressing y on {d} + z in the population.
  double adjustment_effect(const std::string& d, const std::string& y,
                           const std::vector<std::string>& z) const;

  // n draws of all observed nodes, columns in graph node order. Identical
  // (seed, n) give bit-identical output regardless of evaluation order.
  Eigen::MatrixXd simulate_matrix(std::uint64_t seed, int n) const;

  // CSV rows from,to,kind,value covering edges, loadings, noise variances.
  std::string coefficient_table() const;

 private:
  CausalGraph graph_;
  std::map<std::pair<int, int>, double> coeff_;
  std::vector<LatentFactor> factors_;
  std::vector<double> noise_var_;
};

enum class Template { good_control, m_graph, mediator, confounded_mediator };

std::string to_string(Template t);
std::optional<Template> template_from_string(const std::string& s);

struct ScenarioConfig {
  Template tpl = Template::good_control;
  int n = 100;
  int p = 100;
  int q = 10;
  double b1 = 0.8;
  double b2 = 0.2;
  double theta0 = 1.0;
  int reps = 1000;
  std::uint64_t seed = 1;

  void validate() const;
  std::string to_json() const;
  static ScenarioConfig from_json(const std::string& text);
};

struct Dataset {
  Eigen::VectorXd y;
  Eigen::VectorXd d;
  Eigen::MatrixXd X;
  std::vector<std::string> control_names;

  void validate() const;
  int n() const { return static_cast<int>(y.size()); }
  int p() const { return static_cast<int>(X.cols()); }
};

// The four simulation templates. Nodes D, Y, X1..Xp; edge D->Y carries
// theta0; q active covariates wired per template; unit disturbances.
LinearScm from_template(const ScenarioConfig& cfg);

// Draws from a template-shaped SCM (nodes D and Y required).
Dataset simulate(const LinearScm& scm, int n, std::uint64_t seed);

}  // namespace dmlsim
