#pragma once

#include <algorithm>
#include <compare>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "relc/model.hpp"
#include "relc/term.hpp"

namespace relc {

struct ConsistencyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Edge label: a variable or its complement; var == -1 encodes the identity,
// so {-1,true} is the "not identity" label.
struct ELabel {
  VarId var = -1;
  bool neg = false;
  auto operator<=>(const ELabel&) const = default;
};

struct GEdge {
  int s;
  ELabel l;
  int t;
  auto operator<=>(const GEdge&) const = default;
};

// 2-pointed labeled graph. Vertices are 0..n-1.
struct Graph2P {
  int n = 1;
  std::vector<GEdge> edges;
  int src = 0, dst = 0;
  bool operator==(const Graph2P&) const = default;
};

inline Graph2P one_vertex_graph() { return {}; }

inline Graph2P edge_graph(ELabel l) {
  Graph2P g;
  g.n = 2;
  g.edges.push_back({0, l, 1});
  g.dst = 1;
  return g;
}

inline Graph2P two_vertex_graph() {
  Graph2P g;
  g.n = 2;
  g.dst = 1;
  return g;
}

namespace detail {

struct UnionFind {
  std::vector<int> p;
  explicit UnionFind(int n) : p(n) {
    for (int i = 0; i < n; ++i) p[i] = i;
  }
  int find(int x) {
    while (p[x] != x) x = p[x] = p[p[x]];
    return x;
  }
  void unite(int a, int b) { p[find(a)] = find(b); }
};

// Disjoint union of graphs with some vertex identifications; returns the
// combined graph (points unset) and the map from stacked old indices.
inline std::pair<Graph2P, std::vector<int>> merge_graphs(
    const std::vector<const Graph2P*>& parts,
    const std::vector<std::pair<int, int>>& unify) {
  int total = 0;
  for (const Graph2P* g : parts) total += g->n;
  UnionFind uf(total);
  for (auto [a, b] : unify) uf.unite(a, b);
  std::vector<int> newid(total, -1);
  int m = 0;
  for (int i = 0; i < total; ++i) {
    int r = uf.find(i);
    if (newid[r] == -1) newid[r] = m++;
    newid[i] = newid[r];
  }
  Graph2P out;
  out.n = m;
  int off = 0;
  for (const Graph2P* g : parts) {
    for (const GEdge& e : g->edges)
      out.edges.push_back({newid[off + e.s], e.l, newid[off + e.t]});
    off += g->n;
  }
  return {std::move(out), std::move(newid)};
}

}  // namespace detail

enum class GraphOp : uint8_t { Series, Parallel, Converse };

inline Graph2P graph_compose(GraphOp k, const Graph2P& g,
                             const Graph2P* h = nullptr) {
  if (k == GraphOp::Converse) {
    Graph2P out = g;
    std::swap(out.src, out.dst);
    return out;
  }
  if (!h) throw std::invalid_argument("binary graph composition needs two graphs");
  std::vector<std::pair<int, int>> unify;
  if (k == GraphOp::Series)
    unify = {{g.dst, g.n + h->src}};
  else
    unify = {{g.src, g.n + h->src}, {g.dst, g.n + h->dst}};
  auto [out, map] = detail::merge_graphs({&g, h}, unify);
  out.src = map[g.src];
  out.dst = k == GraphOp::Series ? map[g.n + h->dst] : map[g.dst];
  return out;
}

// Glues f[z] onto vertex z by merging both of its points with z (Def. of
// graph loop extensions); the points of g are kept.
inline Graph2P loop_extend(const Graph2P& g, const std::vector<Graph2P>& f) {
  std::vector<const Graph2P*> parts{&g};
  for (const Graph2P& l : f) parts.push_back(&l);
  std::vector<std::pair<int, int>> unify;
  int off = g.n;
  for (int z = 0; z < g.n; ++z) {
    unify.push_back({z, off + f[z].src});
    unify.push_back({z, off + f[z].dst});
    off += f[z].n;
  }
  auto [out, map] = detail::merge_graphs(parts, unify);
  out.src = map[g.src];
  out.dst = map[g.dst];
  return out;
}

// Renumbers vertices in breadth-first order from the points and sorts the
// edge list, so structurally equal enumerations compare equal.
inline Graph2P normalize(const Graph2P& g) {
  std::vector<int> newid(g.n, -1);
  std::vector<int> queue;
  int m = 0;
  auto visit = [&](int v) {
    if (newid[v] == -1) {
      newid[v] = m++;
      queue.push_back(v);
    }
  };
  std::vector<std::vector<int>> adj(g.n);
  for (const GEdge& e : g.edges) {
    adj[e.s].push_back(e.t);
    adj[e.t].push_back(e.s);
  }
  visit(g.src);
  visit(g.dst);
  for (size_t qi = 0; qi < queue.size(); ++qi)
    for (int w : adj[queue[qi]]) visit(w);
  for (int v = 0; v < g.n; ++v) visit(v);
  Graph2P out;
  out.n = g.n;
  out.src = newid[g.src];
  out.dst = newid[g.dst];
  for (const GEdge& e : g.edges) out.edges.push_back({newid[e.s], e.l, newid[e.t]});
  std::sort(out.edges.begin(), out.edges.end());
  return out;
}

// ---------------------------------------------------------------------------
// Graph language enumeration.

struct GlangBudget {
  int star_k = 2;           // stars and pluses unroll to this exponent
  size_t max_graphs = 10000;  // intermediate and final language size cap
};

struct GlangResult {
  std::vector<Graph2P> graphs;
  bool complete = true;  // false iff max_graphs truncated some language
};

namespace detail {

class GlangEnum {
 public:
  GlangEnum(TermTable& tt, const Signature& sig, const GlangBudget& b)
      : tt_(tt), sig_(sig), b_(b) {}

  std::vector<Graph2P> run(Term t) {
    switch (t->tag) {
      case Tag::I: return {one_vertex_graph()};
      case Tag::Zero: return {};
      case Tag::Top: return {two_vertex_graph()};
      case Tag::Var: return {edge_graph({t->var, false})};
      case Tag::Neg:
        if (t->a->tag == Tag::Var) return {edge_graph({t->a->var, true})};
        if (t->a->tag == Tag::I) return {edge_graph({-1, true})};
        if (t->a->tag == Tag::Zero) return {two_vertex_graph()};
        throw FragmentError("graph language needs complements on variables or I only");
      case Tag::Conv: {
        std::vector<Graph2P> out = run(t->a);
        for (Graph2P& g : out) std::swap(g.src, g.dst);
        return out;
      }
      case Tag::Union: {
        std::vector<Graph2P> out = run(t->a);
        for (Graph2P& g : run(t->b))
          if (!push(out, std::move(g))) break;
        return out;
      }
      case Tag::Comp: return product(GraphOp::Series, run(t->a), run(t->b));
      case Tag::Cap: return product(GraphOp::Parallel, run(t->a), run(t->b));
      case Tag::Loop: {
        std::vector<Graph2P> out;
        Graph2P point = one_vertex_graph();
        for (const Graph2P& g : run(t->a))
          if (!push(out, graph_compose(GraphOp::Parallel, g, &point))) break;
        return out;
      }
      case Tag::Star: return iterate(run(t->a), 0);
      case Tag::Plus: return iterate(run(t->a), 1);
      case Tag::Dom:
        return run(tt_.cap(tt_.comp(t->a, tt_.top()), tt_.I()));
      case Tag::Adom:
        throw FragmentError("antidomain is outside the graph-language fragment");
      case Tag::Ite: {
        Term nb = complement_test(tt_, sig_, t->a);
        return run(tt_.sum(tt_.comp(t->a, t->b), tt_.comp(nb, t->c)));
      }
      case Tag::While: {
        Term nb = complement_test(tt_, sig_, t->a);
        return run(tt_.comp(tt_.star(tt_.comp(t->a, t->b)), nb));
      }
      case Tag::DoWhile: {
        Term nb = complement_test(tt_, sig_, t->a);
        return run(tt_.comp(t->b, tt_.comp(tt_.star(tt_.comp(t->a, t->b)), nb)));
      }
      case Tag::IterN: {
        Term nb = complement_test(tt_, sig_, t->a);
        return run(tt_.comp(tt_.pow(tt_.comp(t->a, t->b), t->k), nb));
      }
    }
    throw FragmentError("unreachable");
  }

  bool complete = true;

 private:
  TermTable& tt_;
  const Signature& sig_;
  const GlangBudget& b_;

  bool push(std::vector<Graph2P>& out, Graph2P g) {
    if (out.size() >= b_.max_graphs) {
      complete = false;
      return false;
    }
    out.push_back(std::move(g));
    return true;
  }

  std::vector<Graph2P> product(GraphOp op, const std::vector<Graph2P>& xs,
                               const std::vector<Graph2P>& ys) {
    std::vector<Graph2P> out;
    for (const Graph2P& x : xs)
      for (const Graph2P& y : ys)
        if (!push(out, graph_compose(op, x, &y))) return out;
    return out;
  }

  std::vector<Graph2P> iterate(const std::vector<Graph2P>& base, int from) {
    std::vector<Graph2P> out;
    std::vector<Graph2P> level{one_vertex_graph()};
    if (from == 0) push(out, level[0]);
    for (int e = 1; e <= b_.star_k; ++e) {
      level = product(GraphOp::Series, level, base);
      for (const Graph2P& g : level)
        if (!push(out, g)) return out;
      if (level.empty()) break;
    }
    return out;
  }
};

}  // namespace detail

inline GlangResult enumerate_glang(TermTable& tt, const Signature& sig, Term t,
                                   const GlangBudget& b = {}) {
  if (classify_fragment(sig, t).neg_full)
    throw FragmentError("graph language needs complements on variables or I only");
  detail::GlangEnum e(tt, sig, b);
  GlangResult r;
  r.graphs = e.run(t);
  r.complete = e.complete;
  return r;
}

// Language of loop extensions: every graph of t with every assignment of
// graphs of w@ to its vertices.
inline GlangResult enumerate_glang_loop(TermTable& tt, const Signature& sig,
                                        Term t, Term w,
                                        const GlangBudget& b = {}) {
  GlangResult base = enumerate_glang(tt, sig, t, b);
  GlangResult loops = enumerate_glang(tt, sig, tt.loop(w), b);
  GlangResult out;
  out.complete = base.complete && loops.complete;
  if (loops.graphs.empty()) return out;  // no assignment exists
  for (const Graph2P& g : base.graphs) {
    std::vector<size_t> pick(g.n, 0);
    for (;;) {
      std::vector<Graph2P> f;
      f.reserve(g.n);
      for (int z = 0; z < g.n; ++z) f.push_back(loops.graphs[pick[z]]);
      if (out.graphs.size() >= b.max_graphs) {
        out.complete = false;
        return out;
      }
      out.graphs.push_back(loop_extend(g, f));
      int z = 0;
      while (z < g.n && ++pick[z] == loops.graphs.size()) pick[z++] = 0;
      if (z == g.n) break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Homomorphism search into the pointed graph of a model.

using HomMap = std::vector<int>;

namespace detail {

inline bool label_holds(const Model& v, ELabel l, int i, int j) {
  if (l.var < 0) return l.neg ? i != j : i == j;
  bool in = v.at(l.var).get(i, j);
  return l.neg ? !in : in;
}

}  // namespace detail

inline bool check_hom(const Graph2P& g, const Model& v, int x, int y,
                      const HomMap& h) {
  if (static_cast<int>(h.size()) != g.n) return false;
  if (h[g.src] != x || h[g.dst] != y) return false;
  for (int u : h)
    if (u < 0 || u >= v.n) return false;
  for (const GEdge& e : g.edges)
    if (!detail::label_holds(v, e.l, h[e.s], h[e.t])) return false;
  return true;
}

inline std::optional<HomMap> find_hom(const Graph2P& g, const Model& v, int x,
                                      int y) {
  if (x < 0 || x >= v.n || y < 0 || y >= v.n) return std::nullopt;
  std::vector<int> img(g.n, -1);
  img[g.src] = x;
  if (img[g.dst] != -1 && img[g.dst] != y) return std::nullopt;
  img[g.dst] = y;

  // Static order: points first, then vertices adjacent to placed ones,
  // ties broken by incident-edge count then index.
  std::vector<int> degree(g.n, 0);
  for (const GEdge& e : g.edges) {
    ++degree[e.s];
    ++degree[e.t];
  }
  std::vector<std::vector<int>> adj(g.n);
  for (const GEdge& e : g.edges) {
    adj[e.s].push_back(e.t);
    adj[e.t].push_back(e.s);
  }
  std::vector<int> order;
  std::vector<bool> placed(g.n, false);
  auto place = [&](int u) {
    order.push_back(u);
    placed[u] = true;
  };
  place(g.src);
  if (!placed[g.dst]) place(g.dst);
  while (static_cast<int>(order.size()) < g.n) {
    int best = -1;
    bool best_adjacent = false;
    for (int u = 0; u < g.n; ++u) {
      if (placed[u]) continue;
      bool adjacent = false;
      for (int w : adj[u])
        if (placed[w]) {
          adjacent = true;
          break;
        }
      auto better = [&] {
        if (best == -1) return true;
        if (adjacent != best_adjacent) return adjacent;
        return degree[u] > degree[best];
      };
      if (better()) {
        best = u;
        best_adjacent = adjacent;
      }
    }
    place(best);
  }

  // Group edges by the latest endpoint in the order, so each is checked as
  // soon as both endpoints are assigned.
  std::vector<int> pos(g.n);
  for (int i = 0; i < g.n; ++i) pos[order[i]] = i;
  std::vector<std::vector<GEdge>> at_step(g.n);
  for (const GEdge& e : g.edges)
    at_step[std::max(pos[e.s], pos[e.t])].push_back(e);

  std::vector<int> choice(g.n, -1);
  int i = 0;
  while (i >= 0) {
    if (i == g.n) return HomMap(img);
    int u = order[i];
    bool fixed = u == g.src || u == g.dst;
    int c = fixed ? (choice[i] == -1 ? img[u] : v.n) : choice[i] + 1;
    bool advanced = false;
    for (; c < v.n; ++c) {
      img[u] = c;
      bool ok = true;
      for (const GEdge& e : at_step[i])
        if (!detail::label_holds(v, e.l, img[e.s], img[e.t])) {
          ok = false;
          break;
        }
      if (ok) {
        choice[i] = c;
        advanced = true;
        break;
      }
      if (fixed) break;
    }
    if (advanced) {
      ++i;
    } else {
      if (!fixed) img[u] = -1;
      choice[i] = -1;
      --i;
    }
  }
  return std::nullopt;
}

// Union over the language of all homomorphism images in v.
inline Rel hom_union_image(const std::vector<Graph2P>& gs, const Model& v) {
  Rel out(v.n);
  for (const Graph2P& g : gs)
    for (int x = 0; x < v.n; ++x)
      for (int y = 0; y < v.n; ++y)
        if (!out.get(x, y) && find_hom(g, v, x, y)) out.set(x, y);
  return out;
}

// ---------------------------------------------------------------------------
// Consistency and realization.

inline bool is_consistent(const Graph2P& g) {
  for (const GEdge& e : g.edges) {
    if (e.l.var < 0) {
      if (e.l.neg && e.s == e.t) return false;
      if (!e.l.neg && e.s != e.t) return false;  // uncontracted identity edge
      continue;
    }
    if (!e.l.neg) continue;
    for (const GEdge& o : g.edges)
      if (o.s == e.s && o.t == e.t && o.l.var == e.l.var && !o.l.neg)
        return false;
  }
  return true;
}

struct Realized {
  Model v;
  int x, y;
};

// Positive edges become the relations; a consistent graph maps into its own
// realization by the identity.
inline Realized realize_graph(const Graph2P& g) {
  if (!is_consistent(g)) throw ConsistencyError("graph is not consistent");
  Realized r;
  r.v.n = g.n;
  for (const GEdge& e : g.edges) {
    if (e.l.var < 0) continue;
    if (!r.v.rel.count(e.l.var)) r.v.rel[e.l.var] = Rel(g.n);
    if (!e.l.neg) r.v.rel[e.l.var].set(e.s, e.t);
  }
  r.x = g.src;
  r.y = g.dst;
  return r;
}

// ---------------------------------------------------------------------------
// Text form used by the CLI.

inline std::string print_graph(const Graph2P& g, const Signature& sig) {
  std::string out = "vertices " + std::to_string(g.n) + "\n";
  for (const GEdge& e : g.edges) {
    std::string name = e.l.var < 0 ? "I" : sig.name(e.l.var);
    if (e.l.neg) name = "!" + name;
    out += std::to_string(e.s) + " -" + name + "-> " + std::to_string(e.t) + "\n";
  }
  out += "source " + std::to_string(g.src) + "\n";
  out += "target " + std::to_string(g.dst) + "\n";
  return out;
}

}  // namespace relc
