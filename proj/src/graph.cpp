#include "dmlsim/graph.hpp"

#include <algorithm>
#include <deque>
#include <sstream>
#include <stdexcept>

namespace dmlsim {

namespace {

[[noreturn]] void fail(const std::string& msg) {
  throw std::invalid_argument(msg);
}

}  // namespace

int CausalGraph::add_node(const std::string& name) {
  if (name.empty()) fail("node name must be nonempty");
  auto it = index_.find(name);
  if (it != index_.end()) return it->second;
  int id = static_cast<int>(nodes_.size());
  nodes_.push_back(name);
  index_.emplace(name, id);
  return id;
}

void CausalGraph::add_edge(const std::string& from, const std::string& to) {
  int f = add_node(from), t = add_node(to);
  if (f == t) fail("self loop on node '" + from + "'");
  if (has_edge(f, t)) fail("duplicate edge " + from + " -> " + to);
  directed_.emplace_back(f, t);
}

void CausalGraph::add_arc(const std::string& a, const std::string& b) {
  int i = add_node(a), j = add_node(b);
  if (i == j) fail("self loop arc on node '" + a + "'");
  if (has_arc(i, j)) fail("duplicate arc " + a + " <-> " + b);
  bidirected_.emplace_back(std::min(i, j), std::max(i, j));
}

bool CausalGraph::has_node(const std::string& name) const {
  return index_.count(name) > 0;
}

int CausalGraph::node_index(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) fail("unknown node '" + name + "'");
  return it->second;
}

bool CausalGraph::has_edge(int from, int to) const {
  return std::find(directed_.begin(), directed_.end(),
                   std::make_pair(from, to)) != directed_.end();
}

bool CausalGraph::has_arc(int a, int b) const {
  auto p = std::make_pair(std::min(a, b), std::max(a, b));
  return std::find(bidirected_.begin(), bidirected_.end(), p) !=
         bidirected_.end();
}

std::vector<int> CausalGraph::topological_order() const {
  int n = static_cast<int>(nodes_.size());
  std::vector<int> indeg(n, 0);
  std::vector<std::vector<int>> out(n);
  for (auto [f, t] : directed_) {
    ++indeg[t];
    out[f].push_back(t);
  }
  std::deque<int> ready;
  for (int i = 0; i < n; ++i)
    if (indeg[i] == 0) ready.push_back(i);
  std::vector<int> order;
  order.reserve(n);
  while (!ready.empty()) {
    int u = ready.front();
    ready.pop_front();
    order.push_back(u);
    for (int v : out[u])
      if (--indeg[v] == 0) ready.push_back(v);
  }
  if (static_cast<int>(order.size()) != n)
    fail("directed part contains a cycle");
  return order;
}

void CausalGraph::validate() const { (void)topological_order(); }

CausalGraph CausalGraph::remove_emitted_edges(const std::string& d) const {
  int di = node_index(d);
  CausalGraph sub;
  for (const auto& name : nodes_) sub.add_node(name);
  for (auto [f, t] : directed_)
    if (f != di) sub.add_edge(nodes_[f], nodes_[t]);
  for (auto [a, b] : bidirected_) sub.add_arc(nodes_[a], nodes_[b]);
  return sub;
}

std::string to_string(ControlClass c) {
  switch (c) {
    case ControlClass::GoodControl: return "GoodControl";
    case ControlClass::NeutralControl: return "NeutralControl";
    case ControlClass::ColliderOnBackdoor: return "ColliderOnBackdoor";
    case ControlClass::Mediator: return "Mediator";
    case ControlClass::ConfoundedMediator: return "ConfoundedMediator";
  }
  return "?";
}

std::set<std::string> descendants(const CausalGraph& g,
                                  const std::string& node) {
  int n = static_cast<int>(g.nodes().size());
  std::vector<std::vector<int>> out(n);
  for (auto [f, t] : g.directed_edges()) out[f].push_back(t);
  std::vector<char> seen(n, 0);
  std::deque<int> work{g.node_index(node)};
  seen[work.front()] = 1;
  while (!work.empty()) {
    int u = work.front();
    work.pop_front();
    for (int v : out[u])
      if (!seen[v]) {
        seen[v] = 1;
        work.push_back(v);
      }
  }
  std::set<std::string> result;
  for (int i = 0; i < n; ++i)
    if (seen[i]) result.insert(g.nodes()[i]);
  return result;
}

namespace {

// Plain DAG view with one hidden parent materialized per bidirected arc.
struct Augmented {
  int n_obs = 0;
  int n_all = 0;
  std::vector<std::vector<int>> parents;
  std::vector<std::vector<int>> children;

  explicit Augmented(const CausalGraph& g) {
    n_obs = static_cast<int>(g.nodes().size());
    n_all = n_obs + static_cast<int>(g.bidirected_edges().size());
    parents.resize(n_all);
    children.resize(n_all);
    for (auto [f, t] : g.directed_edges()) {
      parents[t].push_back(f);
      children[f].push_back(t);
    }
    int latent = n_obs;
    for (auto [a, b] : g.bidirected_edges()) {
      parents[a].push_back(latent);
      parents[b].push_back(latent);
      children[latent].push_back(a);
      children[latent].push_back(b);
      ++latent;
    }
  }
};

std::vector<int> to_indices(const CausalGraph& g,
                            const std::set<std::string>& names) {
  std::vector<int> out;
  out.reserve(names.size());
  for (const auto& s : names) out.push_back(g.node_index(s));
  return out;
}

void check_disjoint(const std::set<std::string>& a,
                    const std::set<std::string>& b, const char* la,
                    const char* lb) {
  for (const auto& s : a)
    if (b.count(s))
      fail(std::string("sets ") + la + " and " + lb + " overlap on '" + s +
           "'");
}

// Koller & Friedman's reachability procedure ("Bayes ball"). Returns the
// set of observed nodes reachable from `src` via trails active given z.
std::vector<char> active_reach(const Augmented& aug,
                               const std::vector<int>& src,
                               const std::vector<char>& in_z) {
  // Ancestors of z (z itself included).
  std::vector<char> anc(aug.n_all, 0);
  {
    std::deque<int> work;
    for (int i = 0; i < aug.n_all; ++i)
      if (in_z[i]) {
        anc[i] = 1;
        work.push_back(i);
      }
    while (!work.empty()) {
      int u = work.front();
      work.pop_front();
      for (int p : aug.parents[u])
        if (!anc[p]) {
          anc[p] = 1;
          work.push_back(p);
        }
    }
  }
  // State (node, direction): UP = entered from a child, DOWN = from a parent.
  enum { UP = 0, DOWN = 1 };
  std::vector<char> visited(2 * aug.n_all, 0);
  std::vector<char> reached(aug.n_all, 0);
  std::deque<std::pair<int, int>> work;
  for (int s : src) work.emplace_back(s, UP);
  while (!work.empty()) {
    auto [u, dir] = work.front();
    work.pop_front();
    if (visited[2 * u + dir]) continue;
    visited[2 * u + dir] = 1;
    if (!in_z[u]) reached[u] = 1;
    if (dir == UP && !in_z[u]) {
      for (int p : aug.parents[u]) work.emplace_back(p, UP);
      for (int c : aug.children[u]) work.emplace_back(c, DOWN);
    } else if (dir == DOWN) {
      if (!in_z[u])
        for (int c : aug.children[u]) work.emplace_back(c, DOWN);
      if (anc[u])  // collider with itself or a descendant observed
        for (int p : aug.parents[u]) work.emplace_back(p, UP);
    }
  }
  return reached;
}

}  // namespace

bool d_separated(const CausalGraph& g, const std::set<std::string>& a,
                 const std::set<std::string>& b,
                 const std::set<std::string>& z) {
  check_disjoint(a, b, "a", "b");
  check_disjoint(a, z, "a", "z");
  check_disjoint(b, z, "b", "z");
  auto ai = to_indices(g, a);
  auto bi = to_indices(g, b);
  auto zi = to_indices(g, z);
  Augmented aug(g);
  std::vector<char> in_z(aug.n_all, 0);
  for (int i : zi) in_z[i] = 1;
  auto reached = active_reach(aug, ai, in_z);
  for (int i : bi)
    if (reached[i]) return false;
  return true;
}

bool backdoor_admissible(const CausalGraph& g, const std::string& d,
                         const std::string& y,
                         const std::set<std::string>& z) {
  if (d == y) fail("treatment and outcome coincide");
  if (z.count(d) || z.count(y)) fail("conditioning set contains d or y");
  (void)g.node_index(d);
  (void)g.node_index(y);
  auto desc = descendants(g, d);
  for (const auto& s : z)
    if (desc.count(s)) return false;
  CausalGraph sub = g.remove_emitted_edges(d);
  return d_separated(sub, {d}, {y}, z);
}

namespace {

bool directed_reaches(const CausalGraph& g, int from, int to) {
  if (from == to) return true;
  int n = static_cast<int>(g.nodes().size());
  std::vector<std::vector<int>> out(n);
  for (auto [f, t] : g.directed_edges()) out[f].push_back(t);
  std::vector<char> seen(n, 0);
  std::deque<int> work{from};
  seen[from] = 1;
  while (!work.empty()) {
    int u = work.front();
    work.pop_front();
    for (int v : out[u]) {
      if (v == to) return true;
      if (!seen[v]) {
        seen[v] = 1;
        work.push_back(v);
      }
    }
  }
  return false;
}

// Depth-first enumeration of simple d..y paths in the augmented skeleton,
// looking for one where both adjacent edges point into x. Bounded so dense
// adversarial graphs fail loudly instead of hanging.
struct ColliderSearch {
  const Augmented& aug;
  int x, y;
  long budget = 1 << 22;
  std::vector<char> on_path;

  ColliderSearch(const Augmented& a, int x_, int y_)
      : aug(a), x(x_), y(y_), on_path(a.n_all, 0) {}

  // Try extending the path to v; head_at_v says the step edge points at v,
  // x_done says x already sits on the path as a collider.
  bool step_to(int v, bool head_at_v, bool x_done) {
    if (--budget < 0) fail("collider search budget exceeded; graph too dense");
    if (v == y) return x_done;
    on_path[v] = 1;
    bool found = expand(v, head_at_v, x_done);
    on_path[v] = 0;
    return found;
  }

  bool expand(int u, bool head_in, bool x_done) {
    // x entered tail-side can never be a collider on this simple path.
    if (u == x && !head_in) return false;
    if (u != x) {  // leaving x tail-first would also disqualify it
      for (int c : aug.children[u]) {
        if (on_path[c]) continue;
        if (step_to(c, true, x_done)) return true;
      }
    }
    for (int p : aug.parents[u]) {
      if (on_path[p]) continue;
      if (step_to(p, false, x_done || u == x)) return true;
    }
    return false;
  }

  bool run(int d) {
    on_path[d] = 1;
    bool found = false;
    for (int c : aug.children[d])
      if (c != y && step_to(c, true, false)) {
        found = true;
        break;
      }
    if (!found)
      for (int p : aug.parents[d])
        if (p != y && step_to(p, false, false)) {
          found = true;
          break;
        }
    on_path[d] = 0;
    return found;
  }
};

bool collider_on_some_path(const CausalGraph& g, const std::string& d,
                           const std::string& y, const std::string& x) {
  Augmented aug(g);
  ColliderSearch search(aug, g.node_index(x), g.node_index(y));
  return search.run(g.node_index(d));
}

}  // namespace

ControlClass classify_control(const CausalGraph& g, const std::string& d,
                              const std::string& y, const std::string& x) {
  if (x == d || x == y) fail("x must differ from d and y");
  int xi = g.node_index(x);
  int di = g.node_index(d);
  int yi = g.node_index(y);
  bool arc_touches_x = false, arc_links_xy = false;
  for (auto [a, b] : g.bidirected_edges()) {
    if (a == xi || b == xi) arc_touches_x = true;
    if ((a == xi && b == yi) || (a == yi && b == xi)) arc_links_xy = true;
  }
  bool on_directed_path =
      directed_reaches(g, di, xi) && directed_reaches(g, xi, yi);
  if (on_directed_path && !arc_touches_x) return ControlClass::Mediator;
  if (on_directed_path && arc_links_xy)
    return ControlClass::ConfoundedMediator;
  CausalGraph backdoor = g.remove_emitted_edges(d);
  if (collider_on_some_path(backdoor, d, y, x))
    return ControlClass::ColliderOnBackdoor;
  bool x_admissible = backdoor_admissible(g, d, y, {x});
  bool empty_admissible = backdoor_admissible(g, d, y, {});
  if (x_admissible && !empty_admissible) return ControlClass::GoodControl;
  return ControlClass::NeutralControl;
}

namespace {

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> toks;
  std::istringstream in(line);
  std::string t;
  while (in >> t) toks.push_back(t);
  return toks;
}

}  // namespace

CausalGraph parse_graph(const std::string& text) {
  CausalGraph g;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto toks = tokenize(line);
    if (toks.empty()) continue;
    auto err = [&](const std::string& what) {
      fail("line " + std::to_string(lineno) + ": " + what);
    };
    try {
      if (toks[0] == "node") {
        if (toks.size() != 2) err("expected 'node NAME'");
        g.add_node(toks[1]);
      } else if (toks.size() == 2 && (toks[1] == "->" || toks[1] == "<->")) {
        err("expected target node");
      } else if (toks.size() == 3 && toks[1] == "->") {
        g.add_edge(toks[0], toks[2]);
      } else if (toks.size() == 3 && toks[1] == "<->") {
        g.add_arc(toks[0], toks[2]);
      } else {
        err("expected 'A -> B', 'A <-> B' or 'node N'");
      }
    } catch (const std::invalid_argument& e) {
      std::string msg = e.what();
      if (msg.rfind("line ", 0) == 0) throw;
      fail("line " + std::to_string(lineno) + ": " + msg);
    }
  }
  g.validate();
  return g;
}

std::string format_graph(const CausalGraph& g) {
  std::ostringstream out;
  std::set<int> touched;
  for (auto [f, t] : g.directed_edges()) {
    touched.insert(f);
    touched.insert(t);
  }
  for (auto [a, b] : g.bidirected_edges()) {
    touched.insert(a);
    touched.insert(b);
  }
  for (int i = 0; i < static_cast<int>(g.nodes().size()); ++i)
    if (!touched.count(i)) out << "node " << g.nodes()[i] << "\n";
  for (auto [f, t] : g.directed_edges())
    out << g.nodes()[f] << " -> " << g.nodes()[t] << "\n";
  for (auto [a, b] : g.bidirected_edges())
    out << g.nodes()[a] << " <-> " << g.nodes()[b] << "\n";
  return out.str();
}

}  // namespace dmlsim
