#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "relc/graph.hpp"

namespace relc {

// ---------------------------------------------------------------------------
// Abstract graphs: the restriction of a graph to its two points, carried
// together with the concrete pre-image it was cut from.

// Induced subgraph on {source, target}, renumbered so the source is 0.
inline Graph2P endpoint_restriction(const Graph2P& g) {
  Graph2P out;
  out.n = g.src == g.dst ? 1 : 2;
  out.src = 0;
  out.dst = out.n - 1;
  for (const GEdge& e : g.edges) {
    bool s_in = e.s == g.src || e.s == g.dst;
    bool t_in = e.t == g.src || e.t == g.dst;
    if (!s_in || !t_in) continue;
    out.edges.push_back({e.s == g.src ? 0 : out.n - 1, e.l, e.t == g.src ? 0 : out.n - 1});
  }
  std::sort(out.edges.begin(), out.edges.end());
  out.edges.erase(std::unique(out.edges.begin(), out.edges.end()), out.edges.end());
  return out;
}

inline Graph2P merge_points(const Graph2P& g) {
  if (g.src == g.dst) return g;
  auto [out, map] = detail::merge_graphs({&g}, {{g.src, g.dst}});
  out.src = out.dst = map[g.src];
  return out;
}

struct AbstractGraph {
  Graph2P view;      // 1 or 2 vertices; equals endpoint_restriction(concrete)
  Graph2P concrete;  // consistent pre-image, used for witnesses and composition
};

// Whether identifying the two points keeps the concrete graph consistent.
// Interior vertices dropped by the restriction can carry an edge to each
// point with complementary labels, so this is not determined by the view.
inline bool points_mergeable(const AbstractGraph& a) {
  return is_consistent(merge_points(a.concrete));
}

inline std::optional<AbstractGraph> make_abstract(Graph2P concrete) {
  if (!is_consistent(concrete)) return std::nullopt;
  AbstractGraph a;
  a.view = endpoint_restriction(concrete);
  a.concrete = std::move(concrete);
  return a;
}

// Composition acts on the concretes and re-restricts. For series this agrees
// with composing the views on at most three vertices; for parallel the
// concrete check is strictly stronger exactly when the operation identifies
// the two points of one operand.
inline std::optional<AbstractGraph> abstract_compose(GraphOp k, const AbstractGraph& g,
                                                     const AbstractGraph* h = nullptr) {
  if (k == GraphOp::Converse) return make_abstract(graph_compose(k, g.concrete));
  if (!h) throw std::invalid_argument("binary graph composition needs two graphs");
  return make_abstract(graph_compose(k, g.concrete, &h->concrete));
}

// Two elements with equal keys stay interchangeable under every further
// composition: interior vertices never merge with anything later, so the only
// hidden state that can still matter is whether the points may be identified.
struct AbstractKey {
  int n;
  std::vector<GEdge> edges;
  bool merge_ok;
  auto operator<=>(const AbstractKey&) const = default;
};

inline AbstractKey abstract_key(const AbstractGraph& a) {
  return {a.view.n, a.view.edges, points_mergeable(a)};
}

struct AbstractLanguage {
  std::vector<AbstractGraph> items;
  bool complete = true;  // false iff the element budget truncated some set
};

namespace detail {

class AbstractEnum {
 public:
  AbstractEnum(TermTable& tt, const Signature& sig, size_t max_items)
      : tt_(tt), sig_(sig), max_items_(max_items) {}

  bool complete = true;

  struct Set {
    std::vector<AbstractGraph> items;
    std::set<AbstractKey> seen;
  };

  const Set& run(Term t) {
    if (auto it = memo_.find(t); it != memo_.end()) return it->second;
    Set out = build(t);
    return memo_.emplace(t, std::move(out)).first->second;
  }

 private:
  TermTable& tt_;
  const Signature& sig_;
  size_t max_items_;
  size_t total_ = 0;
  std::unordered_map<Term, Set> memo_;

  void insert(Set& set, std::optional<AbstractGraph> a) {
    if (!a) return;
    AbstractKey k = abstract_key(*a);
    if (set.seen.count(k)) return;
    if (total_ >= max_items_) {
      complete = false;
      return;
    }
    set.seen.insert(std::move(k));
    set.items.push_back(std::move(*a));
    ++total_;
  }

  void product(Set& out, GraphOp op, const Set& xs, const Set& ys) {
    for (const AbstractGraph& x : xs.items)
      for (const AbstractGraph& y : ys.items) insert(out, abstract_compose(op, x, &y));
  }

  // Least fixpoint of series composition seeded with the one-vertex graph.
  Set closure(const Set& base) {
    Set r;
    insert(r, make_abstract(one_vertex_graph()));
    for (size_t i = 0; i < r.items.size(); ++i) {
      AbstractGraph cur = r.items[i];  // items may grow and reallocate
      for (const AbstractGraph& s : base.items)
        insert(r, abstract_compose(GraphOp::Series, cur, &s));
    }
    return r;
  }

  Set build(Term t) {
    Set out;
    switch (t->tag) {
      case Tag::I:
        insert(out, make_abstract(one_vertex_graph()));
        break;
      case Tag::Zero:
        break;
      case Tag::Top:
        insert(out, make_abstract(two_vertex_graph()));
        break;
      case Tag::Var:
        insert(out, make_abstract(edge_graph({t->var, false})));
        break;
      case Tag::Neg:
        if (t->a->tag == Tag::Var)
          insert(out, make_abstract(edge_graph({t->a->var, true})));
        else if (t->a->tag == Tag::I)
          insert(out, make_abstract(edge_graph({-1, true})));
        else if (t->a->tag == Tag::Zero)
          insert(out, make_abstract(two_vertex_graph()));
        else
          throw FragmentError("abstract decider needs complements on variables or I only");
        break;
      case Tag::Conv:
        for (const AbstractGraph& a : run(t->a).items)
          insert(out, abstract_compose(GraphOp::Converse, a));
        break;
      case Tag::Union: {
        const Set& a = run(t->a);
        const Set& b = run(t->b);
        for (const AbstractGraph& g : a.items) insert(out, g);
        for (const AbstractGraph& g : b.items) insert(out, g);
        break;
      }
      case Tag::Comp:
        product(out, GraphOp::Series, run(t->a), run(t->b));
        break;
      case Tag::Cap:
        product(out, GraphOp::Parallel, run(t->a), run(t->b));
        break;
      case Tag::Loop: {
        AbstractGraph point = *make_abstract(one_vertex_graph());
        for (const AbstractGraph& a : run(t->a).items)
          insert(out, abstract_compose(GraphOp::Parallel, a, &point));
        break;
      }
      case Tag::Star:
        out = closure(run(t->a));
        break;
      case Tag::Plus: {
        const Set& base = run(t->a);
        product(out, GraphOp::Series, base, closure(base));
        break;
      }
      case Tag::Dom:
        out = run(tt_.cap(tt_.comp(t->a, tt_.top()), tt_.I()));
        break;
      case Tag::Adom:
        throw FragmentError("antidomain is outside the abstract decider fragment");
      case Tag::Ite: {
        Term nb = complement_test(tt_, sig_, t->a);
        out = run(tt_.sum(tt_.comp(t->a, t->b), tt_.comp(nb, t->c)));
        break;
      }
      case Tag::While: {
        Term nb = complement_test(tt_, sig_, t->a);
        out = run(tt_.comp(tt_.star(tt_.comp(t->a, t->b)), nb));
        break;
      }
      case Tag::DoWhile: {
        Term nb = complement_test(tt_, sig_, t->a);
        out = run(tt_.comp(t->b, tt_.comp(tt_.star(tt_.comp(t->a, t->b)), nb)));
        break;
      }
      case Tag::IterN: {
        Term nb = complement_test(tt_, sig_, t->a);
        out = run(tt_.comp(tt_.pow(tt_.comp(t->a, t->b), t->k), nb));
        break;
      }
    }
    return out;
  }
};

}  // namespace detail

inline AbstractLanguage abstract_language(TermTable& tt, const Signature& sig, Term t,
                                          size_t max_items = 100000) {
  if (classify_fragment(sig, t).neg_full)
    throw FragmentError("abstract decider needs complements on variables or I only");
  detail::AbstractEnum e(tt, sig, max_items);
  AbstractLanguage out;
  out.items = e.run(t).items;
  out.complete = e.complete;
  return out;
}

// ---------------------------------------------------------------------------
// Verdicts.

enum class Status : uint8_t { Empty, NonEmpty, Unknown };
enum class Method : uint8_t { Abstract, Structural, Bounded };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::Empty: return "empty";
    case Status::NonEmpty: return "nonempty";
    case Status::Unknown: return "unknown";
  }
  return "?";
}

inline const char* to_string(Method m) {
  switch (m) {
    case Method::Abstract: return "abstract";
    case Method::Structural: return "structural";
    case Method::Bounded: return "bounded";
  }
  return "?";
}

struct Verdict {
  Status status = Status::Unknown;
  Method method = Method::Bounded;
  ClassSpec cls;
  bool decidable = true;  // the route is complete for the queried fragment and class
  std::optional<Model> witness;
  int x = -1, y = -1;
};

namespace detail {

// Witness models only carry the variables that appear in some edge; pad the
// rest so evaluation of the full term cannot hit an undeclared id.
inline void pad_model(Model& m, TermTable& tt, const Signature& sig, Term t) {
  for (VarId v : vars_of(desugar(tt, sig, t)))
    if (!m.rel.count(v)) m.rel.emplace(v, Rel(m.n));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Plain-REL decider over the two-point abstraction.

inline Verdict decide_empty_rel(TermTable& tt, const Signature& sig, Term t,
                                size_t max_items = 100000) {
  AbstractLanguage lang = abstract_language(tt, sig, t, max_items);
  Verdict v;
  v.method = Method::Abstract;
  v.cls = ClassSpec::rel();
  if (lang.items.empty()) {
    v.status = lang.complete ? Status::Empty : Status::Unknown;
    return v;
  }
  const AbstractGraph* best = &lang.items[0];
  for (const AbstractGraph& a : lang.items)
    if (a.concrete.n < best->concrete.n) best = &a;
  Realized r = realize_graph(best->concrete);
  detail::pad_model(r.v, tt, sig, t);
  if (!evaluate(r.v, sig, t).get(r.x, r.y))
    throw std::logic_error("abstract witness failed its own model check");
  v.status = Status::NonEmpty;
  v.witness = std::move(r.v);
  v.x = r.x;
  v.y = r.y;
  return v;
}

// ---------------------------------------------------------------------------
// Structural non-emptiness for the two small-model fragments.

namespace detail {

// Whether the graph language of t is inhabited at all, by the evident
// recursion; stars always contribute the one-vertex graph.
inline bool glang_inhabited(TermTable& tt, const Signature& sig, Term t) {
  switch (t->tag) {
    case Tag::I:
    case Tag::Top:
    case Tag::Var:
      return true;
    case Tag::Zero:
      return false;
    case Tag::Neg:
      if (t->a->tag == Tag::Var || t->a->tag == Tag::I || t->a->tag == Tag::Zero)
        return true;
      throw FragmentError("structural recursion needs complements on variables or I only");
    case Tag::Conv:
    case Tag::Loop:
    case Tag::Plus:
    case Tag::Dom:
      return glang_inhabited(tt, sig, t->a);
    case Tag::Star:
      return true;
    case Tag::Comp:
    case Tag::Cap:
      return glang_inhabited(tt, sig, t->a) && glang_inhabited(tt, sig, t->b);
    case Tag::Union:
      return glang_inhabited(tt, sig, t->a) || glang_inhabited(tt, sig, t->b);
    case Tag::Adom:
      throw FragmentError("antidomain is outside the structural fragments");
    case Tag::Ite: {
      Term nb = complement_test(tt, sig, t->a);
      return (glang_inhabited(tt, sig, t->a) && glang_inhabited(tt, sig, t->b)) ||
             (glang_inhabited(tt, sig, nb) && glang_inhabited(tt, sig, t->c));
    }
    case Tag::While:
      return glang_inhabited(tt, sig, complement_test(tt, sig, t->a));
    case Tag::DoWhile:
      return glang_inhabited(tt, sig, t->b) &&
             glang_inhabited(tt, sig, complement_test(tt, sig, t->a));
    case Tag::IterN:
      return (t->k == 0 ||
              (glang_inhabited(tt, sig, t->a) && glang_inhabited(tt, sig, t->b))) &&
             glang_inhabited(tt, sig, complement_test(tt, sig, t->a));
  }
  throw FragmentError("unreachable");
}

}  // namespace detail

// With no complement every graph of the language maps into the one-point
// total model; with complemented atoms but no intersection or top, into the
// two-point model whose letters are all diagonal. Either way non-emptiness
// over REL and DREL is inhabitation of the graph language.
inline bool nonempty_structural(TermTable& tt, const Signature& sig, Term t) {
  Fragment f = classify_fragment(sig, t);
  bool complement_free = !f.neg_var && !f.neg_ident && !f.neg_full;
  bool intersection_free = !f.cap && !f.top && !f.neg_full;
  if (!complement_free && !intersection_free)
    throw FragmentError("term is outside both structural fragments");
  return detail::glang_inhabited(tt, sig, t);
}

// The fixed small model backing the structural verdict: one point with total
// letters for the complement-free fragment, two points with diagonal letters
// otherwise.
inline Model structural_model(TermTable& tt, const Signature& sig, Term t) {
  Fragment f = classify_fragment(sig, t);
  bool complement_free = !f.neg_var && !f.neg_ident && !f.neg_full;
  Model m;
  m.n = complement_free ? 1 : 2;
  for (VarId v : vars_of(desugar(tt, sig, t)))
    m.rel.emplace(v, complement_free ? rel_full(1) : rel_diag(2));
  return m;
}

// ---------------------------------------------------------------------------
// Bounded search.

struct BoundedOptions {
  uint64_t exhaustive_cap = 200000;  // largest model space enumerated outright
  uint64_t node_cap = 20000000;      // guard on the goal-directed search tree
  int max_points_cap = 32;           // clamp on the derived default bound
  uint64_t stride = 1, offset = 0;   // exhaustive-mode partitioning
};

namespace detail {

inline bool functional_in(const Signature& sig, const ClassSpec& cls, VarId v) {
  if (cls.drel && sig.kind(v) == VarKind::Action) return true;
  return cls.pack_func && std::find(cls.pack_func->begin(), cls.pack_func->end(), v) !=
                              cls.pack_func->end();
}

// Mirrors the generator modes of enumerate_models; returns 0 when the space
// does not fit in a uint64.
inline uint64_t model_space_size(const Signature& sig, const std::vector<VarId>& vars,
                                 const ClassSpec& cls, int max_n) {
  constexpr uint64_t kMax = uint64_t{1} << 62;
  uint64_t total = 0;
  for (int n = 1; n <= max_n; ++n) {
    uint64_t prod = 1;
    for (VarId v : vars) {
      uint64_t c;
      if (sig.kind(v) == VarKind::TestPos && cls.pack_test) {
        if (n >= 62) return 0;
        c = uint64_t{1} << n;
      } else if (functional_in(sig, cls, v)) {
        c = 1;
        for (int i = 0; i < n; ++i) {
          if (c > kMax / (static_cast<uint64_t>(n) + 1)) return 0;
          c *= static_cast<uint64_t>(n) + 1;
        }
      } else {
        if (n * n >= 62) return 0;
        c = uint64_t{1} << (n * n);
      }
      if (prod > kMax / c) return 0;
      prod *= c;
    }
    if (total > kMax - prod) return 0;
    total += prod;
  }
  return total;
}

// Goal-directed witness search over partial models. Diamonds drive the
// construction; complements of composite subterms impose nothing during the
// search and are settled by the final exact evaluation, so a found witness is
// always genuine while exhaustion is conclusive only for star-free terms
// whose complements sit on atoms.
class WitnessSearch {
 public:
  WitnessSearch(TermTable& tt, const Signature& sig, const ClassSpec& cls, Term root,
                int n_max, uint64_t node_cap)
      : tt_(tt), sig_(sig), cls_(cls), root_(root), n_max_(std::max(1, n_max)),
        node_cap_(node_cap) {
    std::set<VarId> vs = vars_of(desugar(tt_, sig_, root_));
    if (cls_.pack_test)
      for (VarId v : std::set<VarId>(vs))
        if (sig_.is_test(v)) vs.insert(sig_.partner(v));
    if (cls_.pack_func) vs.insert(cls_.pack_func->begin(), cls_.pack_func->end());
    if (cls_.pack_grid) vs.insert(cls_.pack_grid->begin(), cls_.pack_grid->end());
    emit_vars_.assign(vs.begin(), vs.end());
  }

  bool truncated = false;
  Model model;
  int x = 0, y = 0;

  bool run() {
    for (int yy = 0; yy < std::min(2, n_max_); ++yy) {
      cells_.clear();
      trail_.clear();
      n_ = 1 + yy;
      rx_ = 0;
      ry_ = yy;
      std::vector<Goal> goals{{rx_, ry_, root_, -1}};
      if (solve(goals)) return true;
    }
    return false;
  }

 private:
  struct Goal {
    int x, y;
    Term t;
    int fuel;  // star steps left; negative = not yet assigned
  };
  struct TrailEntry {
    VarId var;  // -1 marks a point allocation
    int idx;
  };

  TermTable& tt_;
  const Signature& sig_;
  const ClassSpec& cls_;
  Term root_;
  int n_max_;
  uint64_t node_cap_;
  uint64_t nodes_ = 0;
  std::map<VarId, std::vector<int8_t>> cells_;  // 0 unknown, 1 present, 2 absent
  std::vector<TrailEntry> trail_;
  int n_ = 1;
  int rx_ = 0, ry_ = 0;
  std::vector<VarId> emit_vars_;

  int8_t cell(VarId v, int x, int y) const {
    auto it = cells_.find(v);
    return it == cells_.end() ? int8_t{0} : it->second[x * n_max_ + y];
  }

  void rollback(size_t mark) {
    while (trail_.size() > mark) {
      TrailEntry e = trail_.back();
      trail_.pop_back();
      if (e.var < 0)
        --n_;
      else
        cells_[e.var][e.idx] = 0;
    }
  }

  bool set_literal(VarId v, int x, int y, bool pos) {
    auto [it, fresh] = cells_.try_emplace(v);
    if (fresh) it->second.assign(static_cast<size_t>(n_max_) * n_max_, 0);
    int8_t& c = it->second[x * n_max_ + y];
    int8_t want = pos ? 1 : 2;
    if (c == want) return true;
    if (c != 0) return false;
    if (pos) {
      if (cls_.pack_test && sig_.is_test(v) && x != y) return false;
      if (functional_in(sig_, cls_, v))
        for (int j = 0; j < n_; ++j)
          if (j != y && it->second[x * n_max_ + j] == 1) return false;
    }
    c = want;
    trail_.push_back({v, x * n_max_ + y});
    if (cls_.pack_test && sig_.is_test(v) && x == y)
      return set_literal(sig_.partner(v), x, y, !pos);
    return true;
  }

  bool solve(std::vector<Goal>& goals) {
    if (goals.empty()) return finalize();
    if (++nodes_ > node_cap_) {
      truncated = true;
      return false;
    }
    Goal g = goals.back();
    goals.pop_back();
    bool r = expand(goals, g);
    goals.push_back(g);
    return r;
  }

  bool with_goal(std::vector<Goal>& goals, Goal g) {
    goals.push_back(g);
    bool r = solve(goals);
    goals.pop_back();
    return r;
  }

  bool with_literal(std::vector<Goal>& goals, VarId v, int x, int y, bool pos) {
    size_t mark = trail_.size();
    bool r = set_literal(v, x, y, pos) && solve(goals);
    rollback(mark);
    return r;
  }

  // Existing points first, then at most one fresh point.
  template <typename Fn>
  bool each_point(Fn&& fn) {
    int lim = std::min(n_ + 1, n_max_);
    for (int z = 0; z < lim; ++z) {
      size_t mark = trail_.size();
      if (z == n_) {
        ++n_;
        trail_.push_back({-1, 0});
      }
      bool r = fn(z);
      rollback(mark);
      if (r) return true;
    }
    return false;
  }

  bool expand(std::vector<Goal>& goals, const Goal& g) {
    Term t = g.t;
    switch (t->tag) {
      case Tag::I:
        return g.x == g.y && solve(goals);
      case Tag::Zero:
        return false;
      case Tag::Top:
        return solve(goals);
      case Tag::Var:
        return with_literal(goals, t->var, g.x, g.y, true);
      case Tag::Neg:
        if (t->a->tag == Tag::Var) return with_literal(goals, t->a->var, g.x, g.y, false);
        if (t->a->tag == Tag::I) return g.x != g.y && solve(goals);
        if (t->a->tag == Tag::Zero) return solve(goals);
        return solve(goals);  // opaque; the final model check arbitrates
      case Tag::Conv:
        return with_goal(goals, {g.y, g.x, t->a, -1});
      case Tag::Comp:
        return each_point([&](int z) {
          goals.push_back({z, g.y, t->b, -1});
          bool r = with_goal(goals, {g.x, z, t->a, -1});
          goals.pop_back();
          return r;
        });
      case Tag::Union:
        return with_goal(goals, {g.x, g.y, t->a, -1}) ||
               with_goal(goals, {g.x, g.y, t->b, -1});
      case Tag::Cap: {
        goals.push_back({g.x, g.y, t->b, -1});
        bool r = with_goal(goals, {g.x, g.y, t->a, -1});
        goals.pop_back();
        return r;
      }
      case Tag::Loop:
        return g.x == g.y && with_goal(goals, {g.x, g.x, t->a, -1});
      case Tag::Star: {
        int fuel = g.fuel < 0 ? n_max_ : g.fuel;
        if (g.x == g.y && solve(goals)) return true;
        if (fuel < 1) return false;
        return each_point([&](int z) {
          goals.push_back({z, g.y, t, fuel - 1});
          bool r = with_goal(goals, {g.x, z, t->a, -1});
          goals.pop_back();
          return r;
        });
      }
      case Tag::Plus:
        return with_goal(goals, {g.x, g.y, tt_.comp(t->a, tt_.star(t->a)), -1});
      case Tag::Dom:
        if (g.x != g.y) return false;
        return each_point([&](int z) { return with_goal(goals, {g.x, z, t->a, -1}); });
      case Tag::Adom:
        return solve(goals);  // opaque
      case Tag::Ite: {
        Term nb = complement_test(tt_, sig_, t->a);
        return with_goal(goals,
                         {g.x, g.y,
                          tt_.sum(tt_.comp(t->a, t->b), tt_.comp(nb, t->c)), -1});
      }
      case Tag::While: {
        Term nb = complement_test(tt_, sig_, t->a);
        return with_goal(
            goals, {g.x, g.y, tt_.comp(tt_.star(tt_.comp(t->a, t->b)), nb), -1});
      }
      case Tag::DoWhile: {
        Term nb = complement_test(tt_, sig_, t->a);
        return with_goal(goals,
                         {g.x, g.y,
                          tt_.comp(t->b, tt_.comp(tt_.star(tt_.comp(t->a, t->b)), nb)),
                          -1});
      }
      case Tag::IterN: {
        Term nb = complement_test(tt_, sig_, t->a);
        Term body = tt_.pow(tt_.comp(t->a, t->b), t->k);
        return with_goal(goals, {g.x, g.y, tt_.comp(body, nb), -1});
      }
    }
    return false;
  }

  bool finalize() {
    Model m;
    m.n = n_;
    for (VarId v : emit_vars_) {
      Rel r(n_);
      for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j)
          if (cell(v, i, j) == 1) r.set(i, j);
      m.rel.emplace(v, std::move(r));
    }
    if (cls_.pack_test) {
      for (VarId v : emit_vars_) {
        if (sig_.kind(v) != VarKind::TestPos) continue;
        VarId q = sig_.partner(v);
        for (int i = 0; i < n_; ++i) {
          bool pp = cell(v, i, i) == 1, qq = cell(q, i, i) == 1;
          if (pp || qq) continue;
          if (cell(q, i, i) != 2)
            m.rel.at(q).set(i, i);
          else if (cell(v, i, i) != 2)
            m.rel.at(v).set(i, i);
          else
            return false;
        }
      }
    }
    if (!check_class(m, sig_, cls_)) return false;
    if (!evaluate(m, sig_, root_).get(rx_, ry_)) return false;
    model = std::move(m);
    x = rx_;
    y = ry_;
    return true;
  }
};

}  // namespace detail

inline Verdict decide_empty_bounded(TermTable& tt, const Signature& sig, Term t,
                                    const ClassSpec& cls, int max_n = -1,
                                    const BoundedOptions& opts = {}) {
  Fragment f = classify_fragment(sig, t);
  uint64_t size = term_size(tt, sig, t);
  int derived = static_cast<int>(
      std::min<uint64_t>(size < UINT64_MAX ? size + 1 : size,
                         static_cast<uint64_t>(opts.max_points_cap)));
  int bound = max_n > 0 ? max_n : derived;
  bool covers = !f.star && !f.neg_full && !cls.pack_grid && cls.extra.empty() &&
                size < static_cast<uint64_t>(bound);

  Verdict v;
  v.method = Method::Bounded;
  v.cls = cls;
  v.decidable = covers;

  Term d = desugar(tt, sig, t);
  std::set<VarId> vs = vars_of(d);
  if (cls.pack_test)
    for (VarId x : std::set<VarId>(vs))
      if (sig.is_test(x)) vs.insert(sig.partner(x));
  if (cls.pack_func) vs.insert(cls.pack_func->begin(), cls.pack_func->end());
  if (cls.pack_grid) vs.insert(cls.pack_grid->begin(), cls.pack_grid->end());
  std::vector<VarId> enum_vars;
  for (VarId x : vs) {
    if (cls.pack_test && sig.kind(x) == VarKind::TestNeg) continue;  // pair-driven
    enum_vars.push_back(x);
  }

  uint64_t space = detail::model_space_size(sig, enum_vars, cls, bound);
  if (space > 0 && space <= opts.exhaustive_cap) {
    EnumSpec es;
    es.vars = enum_vars;
    es.cls = cls;
    es.max_n = bound;
    es.stride = opts.stride;
    es.offset = opts.offset;
    std::optional<Model> wit;
    int wx = -1, wy = -1;
    enumerate_models(sig, es, [&](const Model& m) {
      Rel r = evaluate(m, sig, t);
      if (auto p = r.first_pair()) {
        wit = m;
        wx = p->first;
        wy = p->second;
        return false;
      }
      return true;
    });
    if (wit) {
      v.status = Status::NonEmpty;
      v.witness = std::move(wit);
      detail::pad_model(*v.witness, tt, sig, t);
      v.x = wx;
      v.y = wy;
    } else {
      v.status = covers && opts.stride <= 1 ? Status::Empty : Status::Unknown;
    }
    return v;
  }

  detail::WitnessSearch ws(tt, sig, cls, t, bound, opts.node_cap);
  if (ws.run()) {
    if (!check_class(ws.model, sig, cls))
      throw std::logic_error("bounded witness failed the class check");
    v.status = Status::NonEmpty;
    v.witness = std::move(ws.model);
    detail::pad_model(*v.witness, tt, sig, t);
    v.x = ws.x;
    v.y = ws.y;
  } else {
    v.status = covers && !ws.truncated ? Status::Empty : Status::Unknown;
  }
  return v;
}

// ---------------------------------------------------------------------------
// Dispatch.

inline Verdict decide(TermTable& tt, const Signature& sig, Term t, const ClassSpec& cls,
                      int budget = -1, const BoundedOptions& opts = {}) {
  Fragment f = classify_fragment(sig, t);
  bool packs = cls.pack_test || cls.pack_func.has_value() || cls.pack_grid.has_value() ||
               !cls.extra.empty();
  if (!cls.drel && !packs && !f.neg_full) return decide_empty_rel(tt, sig, t);
  bool complement_free = !f.neg_var && !f.neg_ident && !f.neg_full;
  bool intersection_free = !f.cap && !f.top && !f.neg_full;
  if (!packs && (complement_free || intersection_free)) {
    Verdict v;
    v.method = Method::Structural;
    v.cls = cls;
    if (!nonempty_structural(tt, sig, t)) {
      v.status = Status::Empty;
      return v;
    }
    Model m = structural_model(tt, sig, t);
    auto p = evaluate(m, sig, t).first_pair();
    if (!p || !check_class(m, sig, cls))
      throw std::logic_error("structural witness failed its own model check");
    v.status = Status::NonEmpty;
    v.witness = std::move(m);
    v.x = p->first;
    v.y = p->second;
    return v;
  }
  return decide_empty_bounded(tt, sig, t, cls, budget, opts);
}

}  // namespace relc
