#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dmlsim/csv.hpp"
#include "dmlsim/dml.hpp"
#include "dmlsim/graph.hpp"
#include "dmlsim/interactions.hpp"
#include "dmlsim/montecarlo.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace dmlsim;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write '" + path.string() + "'");
  out << content;
}

Method parse_method_or_throw(const std::string& s) {
  auto m = method_from_string(s);
  if (!m)
    throw std::invalid_argument(
        "unknown method '" + s +
        "'; valid: ols_all, naive_lasso, double_selection, partialling_out");
  return *m;
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

int cmd_mc(const std::string& config_path, const std::string& out_dir,
           std::optional<std::uint64_t> seed, std::optional<int> reps,
           std::optional<std::string> method_flag, int workers) {
  nlohmann::json j = nlohmann::json::parse(read_file(config_path));
  ScenarioConfig cfg = ScenarioConfig::from_json(j.dump());
  if (seed) cfg.seed = *seed;
  if (reps) cfg.reps = *reps;
  std::vector<Method> methods;
  if (method_flag) {
    methods.push_back(parse_method_or_throw(*method_flag));
  } else if (j.contains("methods")) {
    for (const auto& m : j["methods"])
      methods.push_back(parse_method_or_throw(m.get<std::string>()));
  } else if (j.contains("method")) {
    methods.push_back(parse_method_or_throw(j["method"].get<std::string>()));
  } else {
    methods.push_back(Method::double_selection);
  }

  fs::create_directories(out_dir);
  std::printf("%-18s %-18s %10s %10s %8s\n", "template", "method", "bias",
              "sd", "failures");
  for (Method m : methods) {
    McSummary s = run_scenario(cfg, m, workers);
    std::string stem =
        "scenario_" + to_string(cfg.tpl) + "_" + to_string(m);
    write_file(fs::path(out_dir) / (stem + ".json"), s.to_json());
    write_file(fs::path(out_dir) / (stem + "_hist.csv"),
               histogram_csv(s.studentized));
    std::printf("%-18s %-18s %10.4f %10.4f %8d\n", to_string(cfg.tpl).c_str(),
                to_string(m).c_str(), s.bias, s.sd, s.failures);
  }
  return 0;
}

int cmd_grid(const std::string& config_path, const std::string& out_dir,
             std::optional<std::uint64_t> seed, std::optional<int> reps,
             std::optional<std::string> method_flag, int workers) {
  nlohmann::json j = nlohmann::json::parse(read_file(config_path));
  ScenarioConfig base = ScenarioConfig::from_json(j.dump());
  if (seed) base.seed = *seed;
  if (reps) base.reps = *reps;
  Method method = method_flag ? parse_method_or_throw(*method_flag)
                  : j.contains("method")
                      ? parse_method_or_throw(j["method"].get<std::string>())
                      : Method::double_selection;

  std::vector<std::pair<double, double>> strengths{
      {0.8, 0.2}, {0.6, 0.4}, {0.5, 0.5}, {0.4, 0.6}, {0.2, 0.8}};
  std::vector<int> qs{1, 5, 10, 20, 50};
  if (j.contains("strength_pairs")) {
    strengths.clear();
    for (const auto& pair : j["strength_pairs"])
      strengths.emplace_back(pair[0].get<double>(), pair[1].get<double>());
  }
  if (j.contains("q_values")) qs = j["q_values"].get<std::vector<int>>();

  std::string axis_str = j.value("axis", std::string("both"));
  fs::create_directories(out_dir);
  int failed_cells = 0;
  auto run_axis = [&](GridAxis axis, const std::string& filename) {
    GridResult grid = bias_grid(base, axis, strengths, qs, method, workers);
    write_file(fs::path(out_dir) / filename, grid.to_csv());
    std::cout << grid.to_csv();
    for (const auto& row : grid.cells)
      for (const auto& cell : row)
        if (cell.failed) ++failed_cells;
  };
  if (axis_str == "strength" || axis_str == "both")
    run_axis(GridAxis::strength_pairs, "table1_top.csv");
  if (axis_str == "q" || axis_str == "both")
    run_axis(GridAxis::q_values, "table1_bottom.csv");
  if (axis_str != "strength" && axis_str != "q" && axis_str != "both")
    throw std::invalid_argument("config: axis must be strength, q, or both");
  write_file(fs::path(out_dir) / "metadata.json", artifact_metadata());
  return failed_cells > 0 ? 2 : 0;
}

int cmd_estimate(const std::string& csv_path, const std::string& outcome,
                 const std::string& treatment, const std::string& controls,
                 int degree, const std::string& method_str,
                 const std::string& out_path) {
  CsvTable table = read_csv(csv_path);
  std::vector<std::string> control_names;
  if (controls == "all-others") {
    for (const auto& h : table.header)
      if (h != outcome && h != treatment) control_names.push_back(h);
  } else {
    control_names = split_commas(controls);
  }
  Dataset data = dataset_from_table(table, outcome, treatment, control_names);
  if (data.n() <= 20)
    throw std::invalid_argument("estimate: need more than 20 rows");

  ExpandedDesign design =
      expand_interactions(data.X, data.control_names, degree);
  for (const auto& note : design.dropped)
    std::cerr << "note: dropped " << note << "\n";
  Dataset expanded;
  expanded.y = data.y;
  expanded.d = data.d;
  expanded.X = design.X;
  expanded.control_names = design.names;

  FitResult fit = run_method(parse_method_or_throw(method_str), expanded);
  nlohmann::ordered_json out = nlohmann::json::parse(fit.to_json());
  out["n"] = expanded.n();
  out["p_expanded"] = expanded.p();
  out["degree"] = degree;
  out["metadata"] = nlohmann::json::parse(artifact_metadata());
  std::string text = out.dump(2);
  if (!out_path.empty()) write_file(out_path, text);
  std::cout << text << "\n";
  return 0;
}

int cmd_graph(const std::string& file, const std::string& query,
              std::vector<std::string> args, const std::string& given) {
  CausalGraph g = parse_graph(read_file(file));
  auto as_set = [&](const std::string& csv) {
    auto items = split_commas(csv);
    return std::set<std::string>(items.begin(), items.end());
  };
  std::set<std::string> z = as_set(given);
  if (query == "dsep") {
    if (args.size() < 2)
      throw std::invalid_argument("dsep needs two node (or comma-list) args");
    for (size_t i = 2; i < args.size(); ++i) z.insert(args[i]);
    bool sep = d_separated(g, as_set(args[0]), as_set(args[1]), z);
    std::cout << (sep ? "d-separated" : "not d-separated") << "\n";
  } else if (query == "backdoor") {
    if (args.size() < 2)
      throw std::invalid_argument("backdoor needs treatment and outcome args");
    for (size_t i = 2; i < args.size(); ++i) z.insert(args[i]);
    bool ok = backdoor_admissible(g, args[0], args[1], z);
    std::cout << (ok ? "admissible" : "not admissible") << "\n";
  } else if (query == "classify") {
    if (args.size() != 3)
      throw std::invalid_argument("classify needs treatment, outcome, covariate");
    std::cout << to_string(classify_control(g, args[0], args[1], args[2]))
              << "\n";
  } else {
    throw std::invalid_argument("unknown query '" + query +
                                "'; valid: dsep, backdoor, classify");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Linear-Gaussian SCM simulation and DML bad-control analysis"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<int> reps;
  std::optional<std::string> method_flag;
  int workers = 0;

  auto* mc = app.add_subcommand("mc", "run one Monte Carlo scenario");
  mc->add_option("--config", config_path, "scenario config JSON")->required();
  mc->add_option("--out-dir", out_dir, "artifact directory");
  mc->add_option("--seed", seed, "override config seed");
  mc->add_option("--reps", reps, "override replication count");
  mc->add_option("--method", method_flag, "estimator to run");
  mc->add_option("--workers", workers, "worker threads (0 = hardware)");

  auto* grid = app.add_subcommand("grid", "reproduce the bias grids");
  grid->add_option("--config", config_path, "base config JSON")->required();
  grid->add_option("--out-dir", out_dir, "artifact directory");
  grid->add_option("--seed", seed, "override config seed");
  grid->add_option("--reps", reps, "override replication count");
  grid->add_option("--method", method_flag, "estimator to run");
  grid->add_option("--workers", workers, "worker threads (0 = hardware)");

  std::string csv_path, outcome, treatment, controls = "all-others";
  std::string est_method = "double_selection", est_out;
  int degree = 2;
  auto* est = app.add_subcommand("estimate", "run the estimator on a CSV");
  est->add_option("--csv", csv_path, "input data CSV")->required();
  est->add_option("--outcome", outcome, "outcome column")->required();
  est->add_option("--treatment", treatment, "treatment column")->required();
  est->add_option("--controls", controls,
                  "comma list of control columns, or all-others");
  est->add_option("--degree", degree, "interaction expansion degree (1 or 2)");
  est->add_option("--method", est_method, "estimator to run");
  est->add_option("--out", est_out, "output JSON path");

  std::string graph_file, query, given;
  std::vector<std::string> query_args;
  auto* gq = app.add_subcommand("graph", "query a causal graph file");
  gq->add_option("file", graph_file, "graph text file")->required();
  gq->add_option("query", query, "dsep | backdoor | classify")->required();
  gq->add_option("args", query_args, "query node arguments");
  gq->add_option("--given", given, "comma list of conditioning nodes");

  CLI11_PARSE(app, argc, argv);

  try {
    if (mc->parsed())
      return cmd_mc(config_path, out_dir, seed, reps, method_flag, workers);
    if (grid->parsed())
      return cmd_grid(config_path, out_dir, seed, reps, method_flag, workers);
    if (est->parsed())
      return cmd_estimate(csv_path, outcome, treatment, controls, degree,
                          est_method, est_out);
    if (gq->parsed()) return cmd_graph(graph_file, query, query_args, given);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: invalid config: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
