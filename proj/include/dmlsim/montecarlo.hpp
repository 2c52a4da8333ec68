#pragma once

#include <string>
#include <vector>

#include "dmlsim/dml.hpp"
#include "dmlsim/scm.hpp"

namespace dmlsim {

struct McSummary {
  ScenarioConfig config;
  Method method = Method::double_selection;
  int reps_done = 0;
  int failures = 0;
  double target = 0.0;  // total effect, or direct effect for mediator models
  double bias = 0.0;    // mean(theta_hat) - target
  double sd = 0.0;
  std::vector<double> theta_hats;  // per successful replication, in rep order
  std::vector<double> ses;
  std::vector<double> studentized;

  std::string to_json() const;
};

// Ground-truth target for a template: the total effect for good_control and
// m_graph, the direct effect for the mediator templates.
double scenario_target(const LinearScm& scm, Template tpl);

// Runs cfg.reps seeded replications of `method`, in parallel over `workers`
// threads (0 = hardware default). Aggregate output is bit-identical for any
// worker count. Throws when more than 1% of replications fail.
McSummary run_scenario(const ScenarioConfig& cfg, Method method,
                       int workers = 0);

// (theta_hat_r - target) / se_r per replication.
std::vector<double> studentize(const McSummary& summary);

enum class GridAxis { strength_pairs, q_values };

struct GridCell {
  McSummary summary;
  bool failed = false;
  std::string error;
};

struct GridResult {
  GridAxis axis = GridAxis::strength_pairs;
  std::vector<std::pair<double, double>> strength_values;
  std::vector<int> q_values;
  // cells[template][value]; template order: good_control, m_graph,
  // mediator, confounded_mediator.
  std::vector<std::vector<GridCell>> cells;

  std::string to_csv() const;  // rows = templates, columns = axis values
};

// One run_scenario per template x axis value with fixed derived seeds.
GridResult bias_grid(const ScenarioConfig& base, GridAxis axis,
                     const std::vector<std::pair<double, double>>& strengths,
                     const std::vector<int>& qs, Method method,
                     int workers = 0);

// Bin counts of the studentized estimates, width 0.25 over [-5, 5]; a final
// row counts values outside the range.
std::string histogram_csv(const std::vector<double>& studentized);

// Metadata block stamped into artifacts: tool version, penalty rule, and
// the coefficient-split conventions behind the templates.
std::string artifact_metadata();

}  // namespace dmlsim
