#include "dmlsim/scm.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "dmlsim/rng.hpp"
#include "json.hpp"

namespace dmlsim {

namespace {

[[noreturn]] void fail(const std::string& msg) {
  throw std::invalid_argument(msg);
}

// Split a two-edge path strength s into endpoint loadings whose product is
// s; symmetric for positive s, sign carried by the first endpoint.
std::pair<double, double> split_strength(double s) {
  double root = std::sqrt(std::fabs(s));
  return {s < 0 ? -root : root, root};
}

}  // namespace

LinearScm::LinearScm(CausalGraph graph) : graph_(std::move(graph)) {
  graph_.validate();
  noise_var_.assign(graph_.nodes().size(), 1.0);
}

void LinearScm::set_edge_coeff(const std::string& from, const std::string& to,
                               double value) {
  int f = graph_.node_index(from), t = graph_.node_index(to);
  if (!graph_.has_edge(f, t)) fail("no edge " + from + " -> " + to);
  coeff_[{f, t}] = value;
}

void LinearScm::add_arc_factor(const std::string& a, const std::string& b,
                               double load_a, double load_b) {
  int i = graph_.node_index(a), j = graph_.node_index(b);
  if (!graph_.has_arc(i, j)) fail("no arc " + a + " <-> " + b);
  factors_.push_back(
      {"L(" + a + "," + b + ")", {{i, load_a}, {j, load_b}}});
}

void LinearScm::add_shared_factor(
    const std::string& name,
    const std::vector<std::pair<std::string, double>>& loadings) {
  if (loadings.size() < 2) fail("factor '" + name + "' needs >= 2 loadings");
  LatentFactor f{name, {}};
  for (const auto& [node, l] : loadings)
    f.loadings.emplace_back(graph_.node_index(node), l);
  for (size_t i = 0; i < f.loadings.size(); ++i)
    for (size_t j = i + 1; j < f.loadings.size(); ++j)
      if (!graph_.has_arc(f.loadings[i].first, f.loadings[j].first))
        fail("factor '" + name + "' loads on nodes without an arc");
  factors_.push_back(std::move(f));
}

void LinearScm::set_noise_var(const std::string& node, double var) {
  if (var <= 0) fail("noise variance must be positive");
  noise_var_[graph_.node_index(node)] = var;
}

void LinearScm::validate() const {
  for (auto [f, t] : graph_.directed_edges())
    if (!coeff_.count({f, t}))
      fail("edge " + graph_.nodes()[f] + " -> " + graph_.nodes()[t] +
           " has no coefficient");
  for (auto [a, b] : graph_.bidirected_edges()) {
    bool covered = false;
    for (const auto& fac : factors_) {
      bool la = false, lb = false;
      for (const auto& [node, l] : fac.loadings) {
        la = la || node == a;
        lb = lb || node == b;
      }
      if (la && lb) {
        covered = true;
        break;
      }
    }
    if (!covered)
      fail("arc " + graph_.nodes()[a] + " <-> " + graph_.nodes()[b] +
           " has no latent factor");
  }
}

double LinearScm::edge_coeff(const std::string& from,
                             const std::string& to) const {
  auto it = coeff_.find({graph_.node_index(from), graph_.node_index(to)});
  return it == coeff_.end() ? 0.0 : it->second;
}

double LinearScm::noise_var(const std::string& node) const {
  return noise_var_[graph_.node_index(node)];
}

Eigen::MatrixXd LinearScm::implied_covariance() const {
  int n_obs = static_cast<int>(graph_.nodes().size());
  int m = n_obs + static_cast<int>(factors_.size());
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(m, m);
  for (const auto& [edge, c] : coeff_) B(edge.second, edge.first) = c;
  Eigen::VectorXd omega(m);
  for (int i = 0; i < n_obs; ++i) omega(i) = noise_var_[i];
  for (size_t f = 0; f < factors_.size(); ++f) {
    int fi = n_obs + static_cast<int>(f);
    omega(fi) = 1.0;
    for (const auto& [node, l] : factors_[f].loadings) B(node, fi) = l;
  }
  Eigen::MatrixXd ImB = Eigen::MatrixXd::Identity(m, m) - B;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(ImB);
  Eigen::MatrixXd Ainv = lu.solve(Eigen::MatrixXd::Identity(m, m));
  Eigen::MatrixXd full = Ainv * omega.asDiagonal() * Ainv.transpose();
  return full.topLeftCorner(n_obs, n_obs);
}

double LinearScm::total_effect(const std::string& d,
                               const std::string& y) const {
  int di = graph_.node_index(d), yi = graph_.node_index(y);
  if (di == yi) fail("total_effect: d equals y");
  int n_obs = static_cast<int>(graph_.nodes().size());
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n_obs, n_obs);
  for (const auto& [edge, c] : coeff_) B(edge.second, edge.first) = c;
  Eigen::MatrixXd ImB = Eigen::MatrixXd::Identity(n_obs, n_obs) - B;
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n_obs);
  e(di) = 1.0;
  Eigen::VectorXd col = ImB.partialPivLu().solve(e);
  return col(yi);
}

double LinearScm::direct_effect(const std::string& d,
                                const std::string& y) const {
  (void)graph_.node_index(d);
  (void)graph_.node_index(y);
  return edge_coeff(d, y);
}

std::map<std::string, double> LinearScm::population_ols(
    const std::string& target,
    const std::vector<std::string>& regressors) const {
  if (regressors.empty()) fail("population_ols: empty regressor set");
  int ti = graph_.node_index(target);
  std::vector<int> ri;
  for (const auto& r : regressors) {
    int i = graph_.node_index(r);
    if (i == ti) fail("population_ols: target among regressors");
    ri.push_back(i);
  }
  Eigen::MatrixXd sigma = implied_covariance();
  int k = static_cast<int>(ri.size());
  Eigen::MatrixXd S(k, k);
  Eigen::VectorXd s(k);
  for (int i = 0; i < k; ++i) {
    s(i) = sigma(ri[i], ti);
    for (int j = 0; j < k; ++j) S(i, j) = sigma(ri[i], ri[j]);
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(S);
  if (!lu.isInvertible()) fail("population_ols: singular regressor covariance");
  Eigen::VectorXd beta = lu.solve(s);
  std::map<std::string, double> out;
  for (int i = 0; i < k; ++i) out[regressors[i]] = beta(i);
  return out;
}

double LinearScm::adjustment_effect(const std::string& d,
                                    const std::string& y,
                                    const std::vector<std::string>& z) const {
  for (const auto& s : z)
    if (s == d || s == y) fail("adjustment set contains d or y");
  std::vector<std::string> regs{d};
  regs.insert(regs.end(), z.begin(), z.end());
  return population_ols(y, regs).at(d);
}

Eigen::MatrixXd LinearScm::simulate_matrix(std::uint64_t seed, int n) const {
  if (n < 1) fail("simulate: n must be >= 1");
  validate();
  int n_obs = static_cast<int>(graph_.nodes().size());
  int n_fac = static_cast<int>(factors_.size());
  // Factor draws first (streams n_obs..), stored only while propagating.
  Eigen::MatrixXd latents(n, n_fac);
  for (int f = 0; f < n_fac; ++f)
    for (int i = 0; i < n; ++i)
      latents(i, f) = counter_normal(seed, n_obs + f, i);
  std::vector<std::vector<std::pair<int, double>>> fac_loads(n_obs);
  for (int f = 0; f < n_fac; ++f)
    for (const auto& [node, l] : factors_[f].loadings)
      fac_loads[node].emplace_back(f, l);
  std::vector<std::vector<std::pair<int, double>>> par(n_obs);
  for (const auto& [edge, c] : coeff_) par[edge.second].emplace_back(edge.first, c);

  Eigen::MatrixXd X(n, n_obs);
  for (int node : graph_.topological_order()) {
    double sd = std::sqrt(noise_var_[node]);
    Eigen::VectorXd col(n);
    for (int i = 0; i < n; ++i)
      col(i) = sd * counter_normal(seed, node, i);
    for (const auto& [f, l] : fac_loads[node]) col += l * latents.col(f);
    for (const auto& [pnode, c] : par[node]) col += c * X.col(pnode);
    X.col(node) = col;
  }
  return X;
}

std::string LinearScm::coefficient_table() const {
  std::ostringstream out;
  out << "from,to,kind,value\n";
  char buf[64];
  auto fmt = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (auto [f, t] : graph_.directed_edges())
    out << graph_.nodes()[f] << "," << graph_.nodes()[t] << ",edge,"
        << fmt(coeff_.at({f, t})) << "\n";
  for (const auto& fac : factors_)
    for (const auto& [node, l] : fac.loadings)
      out << fac.name << "," << graph_.nodes()[node] << ",loading," << fmt(l)
          << "\n";
  for (size_t i = 0; i < noise_var_.size(); ++i)
    out << graph_.nodes()[i] << "," << graph_.nodes()[i] << ",noise,"
        << fmt(noise_var_[i]) << "\n";
  return out.str();
}

std::string to_string(Template t) {
  switch (t) {
    case Template::good_control: return "good_control";
    case Template::m_graph: return "m_graph";
    case Template::mediator: return "mediator";
    case Template::confounded_mediator: return "confounded_mediator";
  }
  return "?";
}

std::optional<Template> template_from_string(const std::string& s) {
  if (s == "good_control") return Template::good_control;
  if (s == "m_graph") return Template::m_graph;
  if (s == "mediator") return Template::mediator;
  if (s == "confounded_mediator") return Template::confounded_mediator;
  return std::nullopt;
}

void ScenarioConfig::validate() const {
  if (n < 2) fail("config: n must be >= 2");
  if (p < 1) fail("config: p must be >= 1");
  if (q < 0 || q > p) fail("config: q must satisfy 0 <= q <= p");
  auto strength_ok = [](double b) {
    return b > -1.0 && b < 1.0 && b != 0.0;
  };
  if (!strength_ok(b1)) fail("config: b1 must lie in (-1,1) and be nonzero");
  if (!strength_ok(b2)) fail("config: b2 must lie in (-1,1) and be nonzero");
  if (reps < 1) fail("config: reps must be >= 1");
}

std::string ScenarioConfig::to_json() const {
  nlohmann::ordered_json j;
  j["template"] = to_string(tpl);
  j["n"] = n;
  j["p"] = p;
  j["q"] = q;
  j["b1"] = b1;
  j["b2"] = b2;
  j["theta0"] = theta0;
  j["reps"] = reps;
  j["seed"] = seed;
  return j.dump(2);
}

ScenarioConfig ScenarioConfig::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(std::string("config: invalid JSON: ") + e.what());
  }
  ScenarioConfig cfg;
  if (j.contains("template")) {
    auto t = template_from_string(j["template"].get<std::string>());
    if (!t)
      fail("config: unknown template '" + j["template"].get<std::string>() +
           "'; valid: good_control, m_graph, mediator, confounded_mediator");
    cfg.tpl = *t;
  }
  if (j.contains("n")) cfg.n = j["n"].get<int>();
  if (j.contains("p")) cfg.p = j["p"].get<int>();
  if (j.contains("q")) cfg.q = j["q"].get<int>();
  if (j.contains("b1")) cfg.b1 = j["b1"].get<double>();
  if (j.contains("b2")) cfg.b2 = j["b2"].get<double>();
  if (j.contains("theta0")) cfg.theta0 = j["theta0"].get<double>();
  if (j.contains("reps")) cfg.reps = j["reps"].get<int>();
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  cfg.validate();
  return cfg;
}

void Dataset::validate() const {
  if (y.size() != d.size() || y.size() != X.rows())
    fail("dataset: inconsistent dimensions");
  if (static_cast<int>(control_names.size()) != X.cols())
    fail("dataset: control name count mismatch");
  if (!y.allFinite() || !d.allFinite() || !X.allFinite())
    fail("dataset: non-finite entries");
}

// Outcome-side confounding in the m-graph splits into a common and an
// idiosyncratic component; the common share keeps the per-arc path product
// at b2 while letting a single unobservable stand behind all arcs.
constexpr double kMgraphOutcomeCommonShare = 0.5;
// Strength of the extra X<->Y confounding in the confounded mediator.
constexpr double kConfounderStrength = 0.5;

LinearScm from_template(const ScenarioConfig& cfg) {
  cfg.validate();
  CausalGraph g;
  g.add_node("D");
  g.add_node("Y");
  std::vector<std::string> xs;
  xs.reserve(cfg.p);
  for (int j = 1; j <= cfg.p; ++j) {
    xs.push_back("X" + std::to_string(j));
    g.add_node(xs.back());
  }
  g.add_edge("D", "Y");

  auto active = [&](auto&& fn) {
    for (int j = 0; j < cfg.q; ++j) fn(xs[j]);
  };

  switch (cfg.tpl) {
    case Template::good_control:
      active([&](const std::string& x) {
        g.add_edge(x, "D");
        g.add_edge(x, "Y");
      });
      break;
    case Template::mediator:
      active([&](const std::string& x) {
        g.add_edge("D", x);
        g.add_edge(x, "Y");
      });
      break;
    case Template::m_graph:
      active([&](const std::string& x) {
        g.add_arc(x, "D");
        g.add_arc(x, "Y");
      });
      for (int i = 0; i < cfg.q; ++i)
        for (int j = i + 1; j < cfg.q; ++j) g.add_arc(xs[i], xs[j]);
      break;
    case Template::confounded_mediator:
      active([&](const std::string& x) {
        g.add_edge("D", x);
        g.add_edge(x, "Y");
        g.add_arc(x, "Y");
      });
      for (int i = 0; i < cfg.q; ++i)
        for (int j = i + 1; j < cfg.q; ++j) g.add_arc(xs[i], xs[j]);
      break;
  }

  LinearScm scm(std::move(g));
  scm.set_edge_coeff("D", "Y", cfg.theta0);
  switch (cfg.tpl) {
    case Template::good_control:
      active([&](const std::string& x) {
        scm.set_edge_coeff(x, "D", cfg.b1);
        scm.set_edge_coeff(x, "Y", cfg.b2);
      });
      break;
    case Template::mediator:
      active([&](const std::string& x) {
        scm.set_edge_coeff("D", x, cfg.b1);
        scm.set_edge_coeff(x, "Y", cfg.b2);
      });
      break;
    case Template::m_graph: {
      auto [ld, lx] = split_strength(cfg.b1);
      std::vector<std::pair<std::string, double>> u{{"D", ld}};
      active([&](const std::string& x) { u.emplace_back(x, lx); });
      scm.add_shared_factor("U", u);
      auto [ly_c, lx_c] = split_strength(cfg.b2 * kMgraphOutcomeCommonShare);
      std::vector<std::pair<std::string, double>> v{{"Y", ly_c}};
      active([&](const std::string& x) { v.emplace_back(x, lx_c); });
      scm.add_shared_factor("V", v);
      auto [ly_i, lx_i] =
          split_strength(cfg.b2 * (1.0 - kMgraphOutcomeCommonShare));
      int j = 0;
      active([&](const std::string& x) {
        scm.add_shared_factor("V" + std::to_string(++j),
                              {{x, lx_i}, {"Y", ly_i}});
      });
      break;
    }
    case Template::confounded_mediator: {
      active([&](const std::string& x) {
        scm.set_edge_coeff("D", x, cfg.b1);
        scm.set_edge_coeff(x, "Y", cfg.b2);
      });
      auto [ly, lx] = split_strength(kConfounderStrength);
      std::vector<std::pair<std::string, double>> c{{"Y", ly}};
      active([&](const std::string& x) { c.emplace_back(x, lx); });
      scm.add_shared_factor("C", c);
      break;
    }
  }
  scm.validate();
  return scm;
}

Dataset simulate(const LinearScm& scm, int n, std::uint64_t seed) {
  const auto& g = scm.graph();
  if (!g.has_node("D") || !g.has_node("Y"))
    fail("simulate: scm must contain nodes D and Y");
  Eigen::MatrixXd all = scm.simulate_matrix(seed, n);
  Dataset data;
  data.d = all.col(g.node_index("D"));
  data.y = all.col(g.node_index("Y"));
  std::vector<int> xcols;
  for (int i = 0; i < static_cast<int>(g.nodes().size()); ++i) {
    const auto& name = g.nodes()[i];
    if (name != "D" && name != "Y") {
      xcols.push_back(i);
      data.control_names.push_back(name);
    }
  }
  data.X.resize(n, static_cast<int>(xcols.size()));
  for (size_t c = 0; c < xcols.size(); ++c) data.X.col(c) = all.col(xcols[c]);
  data.validate();
  return data;
}

}  // namespace dmlsim
