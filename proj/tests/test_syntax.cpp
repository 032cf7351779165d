#include <catch2/catch_amalgamated.hpp>

#include "relc/gen.hpp"
#include "relc/syntax.hpp"

using namespace relc;

TEST_CASE("parse respects precedence and binding") {
  Signature sig;
  TermTable tt;
  Term a = tt.var(sig.action("a"));
  Term b = tt.var(sig.action("b"));
  Term c = tt.var(sig.action("c"));

  REQUIRE(parse_term(tt, sig, "a ; b + I") == tt.sum(tt.comp(a, b), tt.I()));
  REQUIRE(parse_term(tt, sig, "(a;b)@ & !I") ==
          tt.cap(tt.loop(tt.comp(a, b)), tt.neg(tt.I())));
  REQUIRE(parse_term(tt, sig, "a + b & c") == tt.sum(a, tt.cap(b, c)));
  REQUIRE(parse_term(tt, sig, "a ; b ; c") == tt.comp(tt.comp(a, b), c));
  REQUIRE(parse_term(tt, sig, "!a*") == tt.neg(tt.star(a)));
  REQUIRE(parse_term(tt, sig, "!a ; b") == tt.comp(tt.neg(a), b));
  REQUIRE(parse_term(tt, sig, "a^+ ; b") == tt.comp(tt.plus(a), b));
  REQUIRE(parse_term(tt, sig, "a^ + b") == tt.sum(tt.conv(a), b));
  REQUIRE(parse_term(tt, sig, "a^^+") == tt.plus(tt.conv(a)));
  REQUIRE(parse_term(tt, sig, "a^+^") == tt.conv(tt.plus(a)));
  REQUIRE(parse_term(tt, sig, "TOP") == tt.top());
  REQUIRE(parse_term(tt, sig, "0*") == tt.star(tt.zero()));
  REQUIRE(parse_term(tt, sig, "dom(a) ; adom(b)") ==
          tt.comp(tt.dom(a), tt.adom(b)));
}

TEST_CASE("derived operator tags survive parsing") {
  Signature sig;
  TermTable tt;
  Term t = parse_term(tt, sig, "while(p, a)");
  auto [p, np] = sig.test("p");
  Term tp = tt.var(p), ta = tt.var(sig.action("a"));
  REQUIRE(t == tt.while_(tp, ta));
  REQUIRE(desugar(tt, sig, t) ==
          tt.comp(tt.star(tt.comp(tp, ta)), tt.var(np)));
  REQUIRE(sig.kind(p) == VarKind::TestPos);

  Term t2 = parse_term(tt, sig, "ite(p, a, dowhile(~q, a))");
  VarId q = sig.find("q");
  REQUIRE(q >= 0);
  REQUIRE(sig.kind(q) == VarKind::TestPos);
  REQUIRE(t2 == tt.ite(tp, ta, tt.dowhile(tt.var(sig.find("~q")), ta)));

  Term t3 = parse_term(tt, sig, "iter(3, p, a)");
  REQUIRE(t3 == tt.iter(3, tp, ta));
  REQUIRE(t3->k == 3);
}

TEST_CASE("variable kinds are inferred from context") {
  Signature sig;
  TermTable tt;
  parse_term(tt, sig, "~r ; s");
  REQUIRE(sig.kind(sig.find("r")) == VarKind::TestPos);
  REQUIRE(sig.kind(sig.find("~r")) == VarKind::TestNeg);
  REQUIRE(sig.kind(sig.find("s")) == VarKind::Action);
  parse_term(tt, sig, "while(u + r, s)");
  REQUIRE(sig.kind(sig.find("u")) == VarKind::TestPos);

  Signature strict;
  strict.action("a");
  REQUIRE_THROWS_AS(parse_term(tt, strict, "a ; c", true), UnknownVariable);
  REQUIRE(parse_term(tt, strict, "a ; a", true) ==
          tt.comp(tt.var(strict.find("a")), tt.var(strict.find("a"))));
}

TEST_CASE("parse errors carry locations") {
  Signature sig;
  TermTable tt;
  REQUIRE_THROWS_AS(parse_term(tt, sig, "a +"), ParseError);
  REQUIRE_THROWS_AS(parse_term(tt, sig, "(a ; b"), ParseError);
  REQUIRE_THROWS_AS(parse_term(tt, sig, "a b"), ParseError);
  REQUIRE_THROWS_AS(parse_term(tt, sig, "3"), ParseError);
  REQUIRE_THROWS_AS(parse_term(tt, sig, "iter(a, p, a)"), ParseError);
  REQUIRE_THROWS_AS(parse_term(tt, sig, "a ? b"), ParseError);
  REQUIRE_THROWS_AS(parse_term(tt, sig, "not"), ParseError);
  REQUIRE_THROWS_AS(parse_term(tt, sig, "while(p a)"), ParseError);
  try {
    parse_term(tt, sig, "a ;\n; b");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    REQUIRE(e.line == 2);
    REQUIRE(e.col == 1);
  }
}

TEST_CASE("formula parsing") {
  Signature sig;
  TermTable tt;
  Term a = tt.var(sig.action("a"));
  Term b = tt.var(sig.action("b"));

  REQUIRE(f_equal(parse_formula(tt, sig, "a <= b"), f_leq(a, b)));
  REQUIRE(f_equal(parse_formula(tt, sig, "a == b && b <= a"),
                  f_and(f_eq(a, b), f_leq(b, a))));
  REQUIRE(f_equal(parse_formula(tt, sig, "not a <= b"), f_not(f_leq(a, b))));
  REQUIRE(f_equal(parse_formula(tt, sig, "a <= b || b <= a"),
                  f_or(f_leq(a, b), f_leq(b, a))));
  REQUIRE(f_equal(parse_formula(tt, sig, "a <= b => b == b"),
                  f_implies(f_leq(a, b), f_eq(b, b))));
  REQUIRE(f_equal(parse_formula(tt, sig, "(a <= b)"), f_leq(a, b)));
  REQUIRE(f_equal(parse_formula(tt, sig, "(a) <= b"), f_leq(a, b)));
  REQUIRE(f_equal(parse_formula(tt, sig, "not (a <= b) && a == a"),
                  f_and(f_not(f_leq(a, b)), f_eq(a, a))));
  // => associates right
  REQUIRE(f_equal(
      parse_formula(tt, sig, "a <= b => a <= b => b <= a"),
      f_implies(f_leq(a, b), f_implies(f_leq(a, b), f_leq(b, a)))));
  REQUIRE_THROWS_AS(parse_formula(tt, sig, "a + b"), ParseError);
  REQUIRE_THROWS_AS(parse_formula(tt, sig, "a < b"), ParseError);
}

TEST_CASE("print examples") {
  Signature sig;
  TermTable tt;
  Term a = tt.var(sig.action("a"));
  Term b = tt.var(sig.action("b"));
  REQUIRE(print_term(sig, tt.I()) == "I");
  REQUIRE(print_term(sig, tt.comp(a, tt.star(b))) == "a ; b*");
  REQUIRE(print_term(sig, tt.loop(tt.comp(a, b))) == "(a ; b)@");
  REQUIRE(print_term(sig, tt.sum(a, tt.sum(b, a))) == "a + (b + a)");
  REQUIRE(print_term(sig, tt.star(tt.neg(a))) == "(!a)*");
  REQUIRE(print_term(sig, tt.neg(tt.star(a))) == "!a*");
  REQUIRE(print_term(sig, tt.sum(tt.conv(a), b)) == "a^ + b");
  REQUIRE(print_term(sig, tt.iter(2, tt.var(sig.test("p").first), a)) ==
          "iter(2, p, a)");
}

TEST_CASE("terms round-trip through print and parse") {
  Signature sig;
  TermTable tt;
  auto [p, np] = sig.test("p");
  (void)np;
  std::vector<VarId> tests{p};
  std::vector<VarId> actions{sig.action("a"), sig.action("b")};
  std::vector<VarId> leaves{p, sig.partner(p), actions[0], actions[1]};
  VarId fresh = sig.fresh_action();
  leaves.push_back(fresh);
  Rng rng(101);
  TermGenOpts opts;
  opts.top = true;
  for (int round = 0; round < 600; ++round) {
    Term t = rng.coin() ? random_pwp(tt, rng, tests, actions, sig, 4)
                        : random_term(tt, rng, leaves, 4, opts);
    std::string s = print_term(sig, t);
    INFO(s);
    REQUIRE(parse_term(tt, sig, s, true) == t);
  }
}

TEST_CASE("formulas round-trip through print and parse") {
  Signature sig;
  TermTable tt;
  std::vector<VarId> vars{sig.action("a"), sig.action("b")};
  Rng rng(103);
  for (int round = 0; round < 300; ++round) {
    Formula f = random_formula(tt, rng, vars, 3);
    std::string s = print_formula(sig, f);
    INFO(s);
    REQUIRE(f_equal(parse_formula(tt, sig, s, true), f));
  }
}

TEST_CASE("parser is total on fuzzed input") {
  Signature sig;
  TermTable tt;
  sig.action("a");
  sig.test("p");
  const std::string alphabet = "ab~!;&+*^@()I0, pq$<=|#xw\n\"\\.?";
  Rng rng(107);
  int parsed = 0;
  for (int round = 0; round < 3000; ++round) {
    std::string s;
    int len = static_cast<int>(rng.below(24));
    for (int i = 0; i < len; ++i) s += alphabet[rng.below(alphabet.size())];
    try {
      parse_term(tt, sig, s);
      ++parsed;
    } catch (const ParseError&) {
    } catch (const UnknownVariable&) {
    }
    try {
      parse_formula(tt, sig, s);
    } catch (const ParseError&) {
    } catch (const UnknownVariable&) {
    }
  }
  REQUIRE(parsed > 0);
}

TEST_CASE("model files parse and print") {
  Signature sig;
  Model v = parse_model("universe 2\naction a\nedge a 0 1\n", sig);
  REQUIRE(v.n == 2);
  REQUIRE(v.at(sig.find("a")).get(0, 1));
  REQUIRE(v.at(sig.find("a")).count() == 1);

  Signature sig2;
  Model w = parse_model("universe 1\ntest p\nedge p 0 0\n", sig2);
  REQUIRE(w.at(sig2.find("p")).get(0, 0));
  REQUIRE(w.at(sig2.find("~p")).empty());

  Signature sig3;
  std::string text =
      "# comment\n"
      "universe 3\n"
      "action a  # trailing\n"
      "test p\n"
      "\n"
      "edge a 0 1\n"
      "edge a 1 2\n"
      "edge p 1 1\n"
      "edge ~p 0 0\n"
      "edge ~p 2 2\n";
  Model m = parse_model(text, sig3);
  REQUIRE(m.n == 3);
  REQUIRE(m.at(sig3.find("a")).count() == 2);
  REQUIRE(check_class(m, sig3, ClassSpec::rel().with_test()));
  std::string printed = print_model(m, sig3);
  Signature sig4;
  Model m2 = parse_model(printed, sig4);
  REQUIRE(m2.n == m.n);
  REQUIRE(m2.at(sig4.find("a")) == m.at(sig3.find("a")));
  REQUIRE(m2.at(sig4.find("~p")) == m.at(sig3.find("~p")));
}

TEST_CASE("model file errors") {
  Signature sig;
  REQUIRE_THROWS_AS(parse_model("universe 2\nedge a 0 1\n", sig), ParseError);
  REQUIRE_THROWS_AS(parse_model("action a\n", sig), ParseError);
  REQUIRE_THROWS_AS(parse_model("universe 0\n", sig), ParseError);
  REQUIRE_THROWS_AS(parse_model("universe 2\naction a\nedge a 0 2\n", sig),
                    ParseError);
  REQUIRE_THROWS_AS(parse_model("universe 2\naction a\naction a\n", sig),
                    ParseError);
  REQUIRE_THROWS_AS(parse_model("universe 2\nbogus a\n", sig), ParseError);
  REQUIRE_THROWS_AS(parse_model("universe 2\naction I\n", sig), ParseError);
  REQUIRE_THROWS_AS(parse_model("", sig), ParseError);
  // off-diagonal test edges rejected only in strict mode
  Signature s5;
  Model lax = parse_model("universe 2\ntest p\nedge p 0 1\n", s5);
  REQUIRE(lax.at(s5.find("p")).get(0, 1));
  Signature s6;
  REQUIRE_THROWS_AS(parse_model("universe 2\ntest p\nedge p 0 1\n", s6, true),
                    ParseError);
}

TEST_CASE("random models round-trip through files") {
  Signature sig;
  auto [p, np] = sig.test("p");
  VarId a = sig.action("a");
  Rng rng(109);
  for (int round = 0; round < 100; ++round) {
    Model v = random_model(rng, sig, {p, np, a}, 1 + static_cast<int>(rng.below(5)));
    Signature sig2;
    Model w = parse_model(print_model(v, sig), sig2);
    REQUIRE(w.n == v.n);
    REQUIRE(w.at(sig2.find("a")) == v.at(a));
    REQUIRE(w.at(sig2.find("p")) == v.at(p));
    REQUIRE(w.at(sig2.find("~p")) == v.at(np));
  }
}

TEST_CASE("domino files parse and print") {
  DominoSystem one = parse_domino("colors 1\nH 0 0\nV 0 0\n");
  REQUIRE(one.colors == 1);
  REQUIRE(one.H.count({0, 0}) == 1);

  DominoSystem alt = parse_domino("colors 2\nH 0 1\nH 1 0\nV 0 0\nV 1 1\n");
  REQUIRE(alt.H.size() == 2);
  REQUIRE(alt.V.size() == 2);

  DominoSystem fig;
  fig.colors = 4;
  fig.H = {{0, 2}, {2, 1}, {1, 3}, {3, 0}};
  fig.V = {{0, 1}, {1, 0}, {2, 3}, {3, 2}};
  REQUIRE(parse_domino(print_domino(fig)) == fig);

  REQUIRE_THROWS_AS(parse_domino("colors 2\nH 0 2\n"), ParseError);
  REQUIRE_THROWS_AS(parse_domino("H 0 0\n"), ParseError);
  REQUIRE_THROWS_AS(parse_domino("colors 0\n"), ParseError);
  REQUIRE_THROWS_AS(parse_domino(""), ParseError);
}
