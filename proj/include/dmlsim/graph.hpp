#pragma once

#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace dmlsim {

// Semi-Markovian causal graph: a DAG over named nodes plus bidirected arcs
// standing for unobserved common causes. Immutable after validate(); all
// query operations are pure and safe for concurrent reads.
class CausalGraph {
 public:
  CausalGraph() = default;

  int add_node(const std::string& name);
  void add_edge(const std::string& from, const std::string& to);
  void add_arc(const std::string& a, const std::string& b);
  // Checks acyclicity, self loops, duplicates. Throws std::invalid_argument.
  void validate() const;

  bool has_node(const std::string& name) const;
  int node_index(const std::string& name) const;  // throws on unknown name
  const std::vector<std::string>& nodes() const { return nodes_; }
  const std::vector<std::pair<int, int>>& directed_edges() const {
    return directed_;
  }
  const std::vector<std::pair<int, int>>& bidirected_edges() const {
    return bidirected_;
  }
  bool has_edge(int from, int to) const;
  bool has_arc(int a, int b) const;

  std::vector<int> topological_order() const;

  // Subgraph with every directed edge emitted by d removed; arcs kept.
  CausalGraph remove_emitted_edges(const std::string& d) const;

 private:
  std::vector<std::string> nodes_;
  std::vector<std::pair<int, int>> directed_;
  std::vector<std::pair<int, int>> bidirected_;
  std::unordered_map<std::string, int> index_;
};

enum class ControlClass {
  GoodControl,
  NeutralControl,
  ColliderOnBackdoor,
  Mediator,
  ConfoundedMediator,
};

std::string to_string(ControlClass c);

// Reflexive-transitive closure along directed edges.
std::set<std::string> descendants(const CausalGraph& g,
                                  const std::string& node);

// Reachability-style d-separation over the latent-augmented DAG (each arc
// materialized as a fresh hidden parent of both endpoints).
bool d_separated(const CausalGraph& g, const std::set<std::string>& a,
                 const std::set<std::string>& b,
                 const std::set<std::string>& z);

// Pearl's backdoor criterion: z holds no descendant of d and d-separates
// d from y once the edges emitted by d are deleted.
bool backdoor_admissible(const CausalGraph& g, const std::string& d,
                         const std::string& y,
                         const std::set<std::string>& z);

// Operationalizes the four-panel control taxonomy; ties resolved in the
// order Mediator, ConfoundedMediator, ColliderOnBackdoor, GoodControl.
ControlClass classify_control(const CausalGraph& g, const std::string& d,
                              const std::string& y, const std::string& x);

// Text format: one `A -> B` / `A <-> B` / `node N` item per line, `#`
// comments. Parse errors carry 1-based line numbers.
CausalGraph parse_graph(const std::string& text);
std::string format_graph(const CausalGraph& g);

}  // namespace dmlsim
