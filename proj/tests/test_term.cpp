#include <catch2/catch_amalgamated.hpp>

#include "relc/gen.hpp"
#include "relc/term.hpp"

#include "oracles.hpp"

using namespace relc;

TEST_CASE("signature interning and partner involution") {
  Signature sig;
  VarId a = sig.action("a");
  REQUIRE(sig.action("a") == a);
  auto [p, np] = sig.test("p");
  REQUIRE(sig.partner(p) == np);
  REQUIRE(sig.partner(np) == p);
  REQUIRE(p != np);
  REQUIRE(sig.name(np) == "~p");
  REQUIRE(sig.kind(np) == VarKind::TestNeg);
  REQUIRE(sig.find("missing") == -1);

  VarId f0 = sig.fresh_action();
  REQUIRE(sig.name(f0) == "$0");
  auto [q, nq] = sig.fresh_test();
  REQUIRE(sig.name(q) == "$1");
  REQUIRE(sig.partner(nq) == q);

  REQUIRE_THROWS_AS(sig.test("a"), SigError);
  REQUIRE_THROWS_AS(sig.action("$3"), SigError);
  REQUIRE_THROWS_AS(sig.action("~x"), SigError);
}

TEST_CASE("terms are hash-consed") {
  Signature sig;
  TermTable tt;
  Term a = tt.var(sig.action("a"));
  Term b = tt.var(sig.action("b"));
  REQUIRE(tt.comp(a, b) == tt.comp(a, b));
  REQUIRE(tt.comp(a, b) != tt.comp(b, a));
  REQUIRE(tt.star(a) == tt.star(a));
  REQUIRE(tt.iter(2, a, b) != tt.iter(3, a, b));
}

TEST_CASE("desugar expands derived operators") {
  Signature sig;
  TermTable tt;
  auto [p, np] = sig.test("p");
  Term a = tt.var(sig.action("a"));
  Term b = tt.var(sig.action("b"));
  Term tp = tt.var(p), tnp = tt.var(np);

  REQUIRE(desugar(tt, sig, tt.top()) == tt.neg(tt.zero()));
  REQUIRE(desugar(tt, sig, tt.cap(a, b)) == tt.neg(tt.sum(tt.neg(a), tt.neg(b))));
  REQUIRE(desugar(tt, sig, tt.loop(a)) == tt.neg(tt.sum(tt.neg(a), tt.neg(tt.I()))));
  REQUIRE(desugar(tt, sig, tt.plus(a)) == tt.comp(a, tt.star(a)));
  REQUIRE(desugar(tt, sig, tt.ite(tp, a, b)) ==
          tt.sum(tt.comp(tp, a), tt.comp(tnp, b)));
  REQUIRE(desugar(tt, sig, tt.while_(tp, a)) ==
          tt.comp(tt.star(tt.comp(tp, a)), tnp));
  REQUIRE(desugar(tt, sig, tt.dowhile(tp, a)) ==
          tt.comp(a, tt.comp(tt.star(tt.comp(tp, a)), tnp)));
  // t^{(2)_p} = (p;t)(p;t);~p
  REQUIRE(desugar(tt, sig, tt.iter(2, tp, a)) ==
          tt.comp(tt.comp(tt.comp(tp, a), tt.comp(tp, a)), tnp));
}

TEST_CASE("term_size counts desugared symbols") {
  Signature sig;
  TermTable tt;
  Term a = tt.var(sig.action("a"));
  Term b = tt.var(sig.action("b"));
  REQUIRE(term_size(tt, sig, tt.zero()) == 1);
  REQUIRE(term_size(tt, sig, tt.comp(a, b)) == 3);
  REQUIRE(term_size(tt, sig, tt.star(tt.sum(a, b))) == 4);
  REQUIRE(term_size(tt, sig, tt.loop(a)) == term_size(tt, sig, tt.cap(a, tt.I())));
}

TEST_CASE("substitute") {
  Signature sig;
  TermTable tt;
  VarId x = sig.action("x");
  Term tx = tt.var(x);
  Term y = tt.var(sig.action("y"));
  Term z = tt.var(sig.action("z"));

  REQUIRE(substitute(tt, tt.comp(tx, y), x, z) == tt.comp(z, y));
  REQUIRE(substitute(tt, tt.loop(tx), x, tt.loop(tx)) == tt.loop(tt.loop(tx)));
  REQUIRE(substitute(tt, tx, x, tt.plus(tx)) == tt.plus(tx));
  REQUIRE(substitute(tt, y, x, z) == y);
  // homomorphism over every constructor; identity substitution
  Signature sig2;
  TermTable tt2;
  auto [p, np] = sig2.test("p");
  (void)np;
  std::vector<VarId> tests{p}, actions{sig2.action("a"), sig2.action("b")};
  Rng rng(7);
  for (int i = 0; i < 50; ++i) {
    Term t = random_pwp(tt2, rng, tests, actions, sig2, 3);
    REQUIRE(substitute(tt2, t, actions[0], tt2.var(actions[0])) == t);
  }
}

TEST_CASE("complement_test") {
  Signature sig;
  TermTable tt;
  auto [p, np] = sig.test("p");
  auto [q, nq] = sig.test("q");
  Term tp = tt.var(p), tq = tt.var(q);

  REQUIRE(complement_test(tt, sig, tp) == tt.var(np));
  REQUIRE(complement_test(tt, sig, tt.var(np)) == tp);
  REQUIRE(complement_test(tt, sig, tt.zero()) == tt.I());
  REQUIRE(complement_test(tt, sig, tt.I()) == tt.zero());
  REQUIRE(complement_test(tt, sig, tt.sum(tp, tq)) ==
          tt.comp(tt.var(np), tt.var(nq)));
  REQUIRE(complement_test(tt, sig, tt.comp(tp, tq)) ==
          tt.sum(tt.var(np), tt.var(nq)));
  // complement is an involution on the nose for this grammar
  Term b = tt.sum(tt.comp(tp, tq), tt.var(nq));
  REQUIRE(complement_test(tt, sig, complement_test(tt, sig, b)) == b);

  REQUIRE_THROWS_AS(complement_test(tt, sig, tt.var(sig.action("a"))),
                    TestGrammarError);
  REQUIRE_THROWS_AS(complement_test(tt, sig, tt.star(tp)), TestGrammarError);
}

TEST_CASE("test grammar recognizer") {
  Signature sig;
  TermTable tt;
  auto [p, np] = sig.test("p");
  (void)np;
  Term tp = tt.var(p);
  Term a = tt.var(sig.action("a"));
  REQUIRE(is_test(sig, tt.sum(tt.comp(tp, tp), tt.I())));
  REQUIRE(!is_test(sig, a));
  REQUIRE(!is_test(sig, tt.star(tp)));
}

TEST_CASE("fragment classification") {
  Signature sig;
  TermTable tt;
  Term a = tt.var(sig.action("a"));
  Term b = tt.var(sig.action("b"));

  Fragment f1 = classify_fragment(sig, tt.sum(tt.comp(a, b), tt.I()));
  REQUIRE(f1.cls == FragClass::PCoR);
  REQUIRE(f1.pcor_x() == "{}");
  REQUIRE(f1.kl);

  Fragment f2 = classify_fragment(sig, tt.comp(tt.loop(tt.comp(a, b)), tt.neg(tt.I())));
  REQUIRE(f2.cls == FragClass::PCoR);
  REQUIRE(f2.loop);
  REQUIRE(f2.cap);
  REQUIRE(f2.neg_ident);
  REQUIRE(f2.pcor_x() == "{-I}");

  // (p((qN^{+_~q})↺E)^{+_~p})↺
  auto [p, np] = sig.test("p");
  auto [q, nq] = sig.test("q");
  Term N = tt.var(sig.action("N"));
  Term E = tt.var(sig.action("E"));
  Term inner = tt.loop(tt.comp(tt.var(q), tt.dowhile(tt.var(nq), N)));
  Term tgr = tt.loop(tt.comp(tt.var(p), tt.dowhile(tt.var(np), tt.comp(inner, E))));
  Fragment f3 = classify_fragment(sig, tgr);
  REQUIRE(f3.cls == FragClass::PwpLoop);

  // converse of an atom stays inside the while-program grammar extension
  Fragment f4 = classify_fragment(sig, tt.conv(a));
  REQUIRE(f4.cls == FragClass::PwpLoopConv);
  REQUIRE(f4.conv);
  // converse of a composite does not
  Fragment f4b = classify_fragment(sig, tt.conv(tt.comp(a, b)));
  REQUIRE(f4b.cls == FragClass::PCoR);
  REQUIRE(f4b.pcor_x() == "{}");
  Fragment f5 = classify_fragment(sig, tt.comp(tgr, tt.conv(a)));
  REQUIRE(f5.cls == FragClass::PwpLoopConv);
  Fragment f6 = classify_fragment(sig, tt.cap(tgr, tgr));
  REQUIRE(f6.cls == FragClass::PwpCap);
  Fragment f7 = classify_fragment(sig, tt.neg(tt.comp(a, b)));
  REQUIRE(f7.cls == FragClass::FullS);
  REQUIRE(classify_fragment(sig, tt.var(p)).cls == FragClass::Test);
  // antidomain smuggles in a full complement
  REQUIRE(classify_fragment(sig, tt.adom(a)).neg_full);
}

TEST_CASE("simplify_zeros folds and preserves shape") {
  Signature sig;
  TermTable tt;
  auto [p, np] = sig.test("p");
  (void)np;
  Term a = tt.var(sig.action("a"));
  Term tp = tt.var(p);

  REQUIRE(simplify_zeros(tt, sig, tt.comp(tt.zero(), a)) == tt.zero());
  REQUIRE(simplify_zeros(tt, sig, tt.comp(a, tt.zero())) == tt.zero());
  REQUIRE(simplify_zeros(tt, sig, tt.sum(a, tt.zero())) == a);
  REQUIRE(simplify_zeros(tt, sig, tt.star(tt.zero())) == tt.I());
  REQUIRE(simplify_zeros(tt, sig, tt.loop(tt.zero())) == tt.zero());
  REQUIRE(simplify_zeros(tt, sig, tt.cap(a, tt.zero())) == tt.zero());
  REQUIRE(simplify_zeros(tt, sig, tt.comp(tt.I(), a)) == a);
  REQUIRE(simplify_zeros(tt, sig, tt.adom(tt.zero())) == tt.I());
  REQUIRE(simplify_zeros(tt, sig, tt.while_(tp, tt.zero())) == tt.var(np));
  Term chain = tt.ite(tp, tt.comp(a, tt.sum(tt.zero(), tt.zero())), tt.zero());
  REQUIRE(simplify_zeros(tt, sig, chain) == tt.zero());
}

TEST_CASE("simplify_zeros and desugar are sound on random models") {
  Signature sig;
  TermTable tt;
  auto [p, np] = sig.test("p");
  (void)np;
  std::vector<VarId> tests{p};
  std::vector<VarId> actions{sig.action("a"), sig.action("b")};
  std::vector<VarId> all{p, sig.partner(p), actions[0], actions[1]};
  Rng rng(3);
  for (int round = 0; round < 200; ++round) {
    Term t = rng.coin() ? random_pwp(tt, rng, tests, actions, sig, 3)
                        : random_term(tt, rng, actions, 3);
    int n = 1 + static_cast<int>(rng.below(3));
    Model v = random_model(rng, sig, all, n);
    oracle::NRel ref = oracle::neval(v, sig, t);
    REQUIRE(oracle::to_nrel(evaluate(v, sig, t)) == ref);
    REQUIRE(oracle::to_nrel(evaluate(v, sig, desugar(tt, sig, t))) == ref);
    REQUIRE(oracle::to_nrel(evaluate(v, sig, simplify_zeros(tt, sig, t))) == ref);
  }
}
