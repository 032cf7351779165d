#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "relc/gen.hpp"
#include "relc/graph.hpp"

#include "oracles.hpp"

using namespace relc;

TEST_CASE("graph composition") {
  Graph2P a = edge_graph({0, false});
  Graph2P b = edge_graph({1, false});

  Graph2P path = graph_compose(GraphOp::Series, a, &b);
  REQUIRE(path.n == 3);
  REQUIRE(path.edges.size() == 2);
  REQUIRE(path.src != path.dst);

  Graph2P conv = graph_compose(GraphOp::Converse, a, nullptr);
  REQUIRE(conv.src == a.dst);
  REQUIRE(conv.dst == a.src);
  REQUIRE(conv.edges == a.edges);

  // parallel of two paths glues endpoints only
  Graph2P par = graph_compose(GraphOp::Parallel, path, &path);
  REQUIRE(par.n == 4);
  REQUIRE(par.edges.size() == 4);

  // series with the one-vertex graph is a no-op up to numbering
  Graph2P unit = one_vertex_graph();
  REQUIRE(normalize(graph_compose(GraphOp::Series, a, &unit)) == normalize(a));
  REQUIRE(normalize(graph_compose(GraphOp::Series, unit, &a)) == normalize(a));

  // parallel with the one-vertex graph merges the two points
  Graph2P loop = graph_compose(GraphOp::Parallel, a, &unit);
  REQUIRE(loop.n == 1);
  REQUIRE(loop.src == loop.dst);
  REQUIRE(loop.edges.size() == 1);
}

TEST_CASE("five vertex diamond from parallel paths") {
  Signature sig;
  TermTable tt;
  Term a = tt.var(sig.action("a"));
  Term b = tt.var(sig.action("b"));
  Term c = tt.var(sig.action("c"));
  // (a ; b ; !I) & (a ; I ; c)
  Term t = tt.cap(tt.comp(a, tt.comp(b, tt.neg(tt.I()))),
                  tt.comp(a, tt.comp(tt.I(), c)));
  GlangResult r = enumerate_glang(tt, sig, t);
  REQUIRE(r.complete);
  REQUIRE(r.graphs.size() == 1);
  REQUIRE(r.graphs[0].n == 5);
  REQUIRE(r.graphs[0].edges.size() == 5);
}

TEST_CASE("graph language clauses") {
  Signature sig;
  TermTable tt;
  Term a = tt.var(sig.action("a"));
  Term b = tt.var(sig.action("b"));
  Term c = tt.var(sig.action("c"));
  GlangBudget bud;
  bud.star_k = 2;

  GlangResult zero = enumerate_glang(tt, sig, tt.zero(), bud);
  REQUIRE(zero.complete);
  REQUIRE(zero.graphs.empty());

  GlangResult ident = enumerate_glang(tt, sig, tt.I(), bud);
  REQUIRE(ident.graphs.size() == 1);
  REQUIRE(ident.graphs[0].n == 1);
  REQUIRE(ident.graphs[0].edges.empty());

  GlangResult top = enumerate_glang(tt, sig, tt.top(), bud);
  REQUIRE(top.graphs.size() == 1);
  REQUIRE(top.graphs[0].n == 2);
  REQUIRE(top.graphs[0].edges.empty());
  REQUIRE(top.graphs[0].src != top.graphs[0].dst);

  // a^+ at k=2: the 2-vertex and 3-vertex paths only
  GlangResult plus = enumerate_glang(tt, sig, tt.plus(a), bud);
  REQUIRE(plus.graphs.size() == 2);
  REQUIRE(plus.graphs[0].n == 2);
  REQUIRE(plus.graphs[1].n == 3);

  GlangResult star = enumerate_glang(tt, sig, tt.star(a), bud);
  REQUIRE(star.graphs.size() == 3);
  REQUIRE(star.graphs[0].n == 1);

  // (a;b)@ ; c^ ; (!a)@ ; b@ is a single 3-vertex graph
  Term t = tt.comp(tt.comp(tt.comp(tt.loop(tt.comp(a, b)), tt.conv(c)),
                           tt.loop(tt.neg(a))),
                   tt.loop(b));
  GlangResult g = enumerate_glang(tt, sig, t, bud);
  REQUIRE(g.graphs.size() == 1);
  REQUIRE(g.graphs[0].n == 3);
  REQUIRE(g.graphs[0].edges.size() == 5);

  REQUIRE_THROWS_AS(enumerate_glang(tt, sig, tt.adom(a), bud), FragmentError);
  REQUIRE_THROWS_AS(enumerate_glang(tt, sig, tt.neg(tt.comp(a, b)), bud),
                    FragmentError);

  // budget truncation is reported
  Term wide = tt.star(tt.sum(a, b));
  GlangBudget tight;
  tight.star_k = 6;
  tight.max_graphs = 10;
  REQUIRE(!enumerate_glang(tt, sig, wide, tight).complete);
}

TEST_CASE("homomorphism search") {
  Signature sig;
  VarId a = sig.action("a");
  Model cyc;
  cyc.n = 2;
  Rel r(2);
  r.set(0, 1);
  r.set(1, 0);
  cyc.rel[a] = r;

  Graph2P e = edge_graph({a, false});
  auto h = find_hom(e, cyc, 0, 1);
  REQUIRE(h.has_value());
  REQUIRE(check_hom(e, cyc, 0, 1, *h));
  REQUIRE(!find_hom(e, cyc, 0, 0).has_value());

  // repeated runs are deterministic
  REQUIRE(find_hom(e, cyc, 0, 1) == find_hom(e, cyc, 0, 1));

  // ((a;b;!I) & (a;I;c)) has no hom into a 1-vertex total model
  Signature sig2;
  TermTable tt;
  Term ta = tt.var(sig2.action("a"));
  Term tb = tt.var(sig2.action("b"));
  Term tc = tt.var(sig2.action("c"));
  Term t = tt.cap(tt.comp(ta, tt.comp(tb, tt.neg(tt.I()))),
                  tt.comp(ta, tt.comp(tt.I(), tc)));
  Graph2P diamond = enumerate_glang(tt, sig2, t).graphs[0];
  Model point;
  point.n = 1;
  Rel full(1);
  full.set(0, 0);
  point.rel[sig2.find("a")] = full;
  point.rel[sig2.find("b")] = full;
  point.rel[sig2.find("c")] = full;
  REQUIRE(!find_hom(diamond, point, 0, 0).has_value());
}

TEST_CASE("evaluation agrees with homomorphism images over the language") {
  Signature sig;
  TermTable tt;
  auto [p, np] = sig.test("p");
  (void)np;
  std::vector<VarId> tests{p};
  std::vector<VarId> actions{sig.action("a"), sig.action("b")};
  std::vector<VarId> all{p, sig.partner(p), actions[0], actions[1]};
  Rng rng(71);
  TermGenOpts opts;
  opts.top = true;
  int checked = 0, attempts = 0;
  while (checked < 150 && attempts < 600) {
    ++attempts;
    Term t = rng.coin() ? random_pwp(tt, rng, tests, actions, sig, 3)
                        : random_term(tt, rng, all, 3, opts);
    int n = 1 + static_cast<int>(rng.below(3));
    GlangBudget bud;
    bud.star_k = n * n;
    bud.max_graphs = 4000;
    GlangResult lang = enumerate_glang(tt, sig, t, bud);
    if (!lang.complete) continue;
    Model v = random_model(rng, sig, all, n);
    INFO("term with " << lang.graphs.size() << " graphs, n=" << n);
    REQUIRE(hom_union_image(lang.graphs, v) == evaluate(v, sig, t));
    ++checked;
  }
  REQUIRE(checked == 150);
}

TEST_CASE("hom witnesses restrict to their image submodel") {
  Signature sig;
  TermTable tt;
  std::vector<VarId> actions{sig.action("a"), sig.action("b")};
  Rng rng(73);
  int replayed = 0;
  for (int round = 0; round < 300 && replayed < 60; ++round) {
    Term t = random_term(tt, rng, actions, 3);
    GlangBudget bud;
    bud.star_k = 4;
    bud.max_graphs = 500;
    GlangResult lang = enumerate_glang(tt, sig, t, bud);
    if (lang.graphs.empty()) continue;
    Model v = random_model(rng, sig, actions, 4);
    for (const Graph2P& g : lang.graphs) {
      for (int x = 0; x < v.n && replayed < 60; ++x)
        for (int y = 0; y < v.n && replayed < 60; ++y) {
          auto h = find_hom(g, v, x, y);
          if (!h) continue;
          std::vector<int> keep(h->begin(), h->end());
          std::sort(keep.begin(), keep.end());
          keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
          Model sub = submodel(v, keep);
          std::vector<int> index(v.n, -1);
          for (size_t i = 0; i < keep.size(); ++i) index[keep[i]] = static_cast<int>(i);
          HomMap hh(h->size());
          for (size_t i = 0; i < h->size(); ++i) hh[i] = index[(*h)[i]];
          REQUIRE(check_hom(g, sub, index[x], index[y], hh));
          ++replayed;
        }
      if (replayed >= 60) break;
    }
  }
  REQUIRE(replayed == 60);
}

TEST_CASE("homs compose with model isomorphisms") {
  Signature sig;
  VarId a = sig.action("a");
  VarId b = sig.action("b");
  Rng rng(79);
  for (int round = 0; round < 50; ++round) {
    Model v = random_model(rng, sig, {a, b}, 4);
    // a cyclic relabeling of vertices
    auto mapv = [&](int i) { return (i + 1) % v.n; };
    Model w;
    w.n = v.n;
    for (const auto& [x, r] : v.rel) {
      Rel m(v.n);
      for (auto [i, j] : r.pairs()) m.set(mapv(i), mapv(j));
      w.rel[x] = m;
    }
    Graph2P g;
    g.n = 3;
    g.edges = {{0, {a, false}, 1}, {1, {b, false}, 2}, {0, {b, true}, 2}};
    g.dst = 2;
    for (int x = 0; x < v.n; ++x)
      for (int y = 0; y < v.n; ++y) {
        auto h = find_hom(g, v, x, y);
        if (!h) continue;
        HomMap composed(h->size());
        for (size_t i = 0; i < h->size(); ++i) composed[i] = mapv((*h)[i]);
        REQUIRE(check_hom(g, w, mapv(x), mapv(y), composed));
      }
  }
}

TEST_CASE("loop extension") {
  Signature sig;
  VarId E = sig.action("E"), u = sig.action("u"), w = sig.action("w");

  Graph2P base = edge_graph({E, false});
  std::vector<Graph2P> trivial(base.n, one_vertex_graph());
  REQUIRE(normalize(loop_extend(base, trivial)) == normalize(base));

  // attach a (u,w) 2-cycle loop at both vertices of an E edge
  Graph2P cyc;
  cyc.n = 2;
  cyc.edges = {{0, {u, false}, 1}, {1, {w, false}, 0}};
  cyc.src = cyc.dst = 0;
  Graph2P ext = loop_extend(base, {cyc, cyc});
  REQUIRE(ext.n == 4);
  REQUIRE(ext.edges.size() == 5);
  REQUIRE(ext.src != ext.dst);
}

TEST_CASE("loop extension language") {
  Signature sig;
  TermTable tt;
  Term a = tt.var(sig.action("a"));
  Term b = tt.var(sig.action("b"));
  GlangBudget bud;
  bud.star_k = 2;
  bud.max_graphs = 2000;

  // with w = I the language is the plain one up to numbering
  Term t = tt.comp(a, tt.star(b));
  GlangResult plain = enumerate_glang(tt, sig, t, bud);
  GlangResult looped = enumerate_glang_loop(tt, sig, t, tt.I(), bud);
  REQUIRE(plain.graphs.size() == looped.graphs.size());
  for (size_t i = 0; i < plain.graphs.size(); ++i)
    REQUIRE(normalize(plain.graphs[i]) == normalize(looped.graphs[i]));

  // G_{ab}(I) is the (ab) cycle at a single point
  GlangResult gi = enumerate_glang_loop(tt, sig, tt.I(), tt.comp(a, b), bud);
  REQUIRE(gi.graphs.size() == 1);
  GlangResult cyc = enumerate_glang(tt, sig, tt.loop(tt.comp(a, b)), bud);
  REQUIRE(normalize(gi.graphs[0]) == normalize(cyc.graphs[0]));
}

TEST_CASE("consistency") {
  Signature sig;
  VarId a = sig.action("a");
  REQUIRE(is_consistent(edge_graph({a, false})));
  REQUIRE(is_consistent(edge_graph({a, true})));

  Graph2P clash;
  clash.n = 2;
  clash.dst = 1;
  clash.edges = {{0, {a, false}, 1}, {0, {a, true}, 1}};
  REQUIRE(!is_consistent(clash));

  // same labels on different pairs are fine
  Graph2P ok = clash;
  ok.edges[1] = {1, {a, true}, 0};
  REQUIRE(is_consistent(ok));

  Graph2P negself;
  negself.edges = {{0, {-1, true}, 0}};
  REQUIRE(!is_consistent(negself));

  Graph2P negdistinct;
  negdistinct.n = 2;
  negdistinct.dst = 1;
  negdistinct.edges = {{0, {-1, true}, 1}};
  REQUIRE(is_consistent(negdistinct));

  Graph2P uncontracted;
  uncontracted.n = 2;
  uncontracted.dst = 1;
  uncontracted.edges = {{0, {-1, false}, 1}};
  REQUIRE(!is_consistent(uncontracted));
}

TEST_CASE("realization") {
  Signature sig;
  VarId a = sig.action("a"), b = sig.action("b");

  Realized r = realize_graph(edge_graph({a, false}));
  REQUIRE(r.v.n == 2);
  REQUIRE(r.v.at(a).get(0, 1));
  REQUIRE(r.v.at(a).count() == 1);
  REQUIRE(r.x == 0);
  REQUIRE(r.y == 1);

  Graph2P g;
  g.n = 2;
  g.dst = 1;
  g.edges = {{0, {a, false}, 1}, {0, {b, true}, 1}};
  Realized r2 = realize_graph(g);
  REQUIRE(r2.v.at(b).empty());
  HomMap ident{0, 1};
  REQUIRE(check_hom(g, r2.v, r2.x, r2.y, ident));
  REQUIRE(find_hom(g, r2.v, r2.x, r2.y).has_value());

  Graph2P distinct;
  distinct.n = 2;
  distinct.dst = 1;
  distinct.edges = {{0, {-1, true}, 1}};
  Realized r3 = realize_graph(distinct);
  REQUIRE(r3.x != r3.y);

  Graph2P clash;
  clash.n = 2;
  clash.dst = 1;
  clash.edges = {{0, {a, false}, 1}, {0, {a, true}, 1}};
  REQUIRE_THROWS_AS(realize_graph(clash), ConsistencyError);

  // realized consistent graphs witness their own language membership
  Signature sig2;
  TermTable tt;
  std::vector<VarId> actions{sig2.action("x"), sig2.action("y")};
  Rng rng(83);
  TermGenOpts opts;
  opts.neg_ident = true;
  int hits = 0;
  for (int round = 0; round < 200 && hits < 40; ++round) {
    Term t = random_term(tt, rng, actions, 3, opts);
    GlangBudget bud;
    bud.star_k = 2;
    bud.max_graphs = 200;
    for (const Graph2P& g2 : enumerate_glang(tt, sig2, t, bud).graphs) {
      if (!is_consistent(g2)) continue;
      Realized rr = realize_graph(g2);
      for (VarId v : actions)
        if (!rr.v.rel.count(v)) rr.v.rel[v] = Rel(rr.v.n);
      REQUIRE(evaluate(rr.v, sig2, t).get(rr.x, rr.y));
      ++hits;
      break;
    }
  }
  REQUIRE(hits == 40);
}

TEST_CASE("graph text form") {
  Signature sig;
  VarId a = sig.action("a");
  sig.test("p");
  Graph2P g;
  g.n = 3;
  g.dst = 2;
  g.edges = {{0, {a, false}, 1}, {1, {sig.find("~p"), false}, 2}, {0, {-1, true}, 2}};
  std::string s = print_graph(g, sig);
  REQUIRE(s ==
          "vertices 3\n"
          "0 -a-> 1\n"
          "1 -~p-> 2\n"
          "0 -!I-> 2\n"
          "source 0\n"
          "target 2\n");
}
