#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "relc/formula.hpp"
#include "relc/model.hpp"

namespace relc {

// Hypothesis eliminations: each transformer trades a class constraint
// (w ≤ 0, u ≥ I, x ≤ I, test axioms, ...) for extra structure in the goal,
// so constrained questions reduce to questions over a weaker class.
//
// Direction of validity differs per transformer. The "⇐" directions hold
// per model; the "⇒" directions are class-level and are validated in the
// test suite only up to a model-size bound.

struct PatternError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Inequation {
  Term lhs = nullptr;
  Term rhs = nullptr;
};

inline Formula as_formula(const Inequation& g) { return f_leq(g.lhs, g.rhs); }

namespace detail {

inline bool has_programs(Term t) {
  switch (t->tag) {
    case Tag::Ite:
    case Tag::While:
    case Tag::DoWhile:
    case Tag::IterN:
      return true;
    default:
      return (t->a && has_programs(t->a)) || (t->b && has_programs(t->b)) ||
             (t->c && has_programs(t->c));
  }
}

// Rewrites the program sugar (if/while/do-while/iter) into ;, +, * with
// explicit test complements, leaving every other constructor in place.
inline Term expand_programs(TermTable& tt, const Signature& sig, Term t,
                            std::unordered_map<Term, Term>* memo = nullptr) {
  std::unordered_map<Term, Term> local;
  if (!memo) memo = &local;
  if (auto it = memo->find(t); it != memo->end()) return it->second;
  auto rec = [&](Term u) { return expand_programs(tt, sig, u, memo); };
  Term r = nullptr;
  switch (t->tag) {
    case Tag::Ite:
      r = tt.sum(tt.comp(rec(t->a), rec(t->b)),
                 tt.comp(rec(complement_test(tt, sig, t->a)), rec(t->c)));
      break;
    case Tag::While:
      r = tt.comp(tt.star(tt.comp(rec(t->a), rec(t->b))),
                  rec(complement_test(tt, sig, t->a)));
      break;
    case Tag::DoWhile:
      r = tt.comp(rec(t->b), rec(tt.while_(t->a, t->b)));
      break;
    case Tag::IterN:
      r = tt.comp(rec(tt.pow(tt.comp(t->a, t->b), t->k)),
                  rec(complement_test(tt, sig, t->a)));
      break;
    default:
      if (!t->a) {
        r = t;
      } else {
        Term a = rec(t->a);
        Term b = t->b ? rec(t->b) : nullptr;
        r = tt.rebuild(t->tag, t->var, t->k, a, b, nullptr);
      }
      break;
  }
  memo->emplace(t, r);
  return r;
}

inline bool negates_any(Term t, const std::set<VarId>& xs) {
  if (t->tag == Tag::Neg && t->a->tag == Tag::Var && xs.count(t->a->var))
    return true;
  return (t->a && negates_any(t->a, xs)) || (t->b && negates_any(t->b, xs)) ||
         (t->c && negates_any(t->c, xs));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Hoare hypotheses: w ≤ 0 over any subclass moves into the goal as ⊤;w;⊤.
// Several hypotheses w1 ≤ 0, w2 ≤ 0 merge into the single w1+w2 ≤ 0 first.
// Exact per model: holds(v, w≤0 → t≤s) iff holds(v, t ≤ s+⊤w⊤).

inline Inequation elim_hoare(TermTable& tt, const Inequation& g, Term w) {
  return {g.lhs, tt.sum(g.rhs, tt.comp(tt.top(), tt.comp(w, tt.top())))};
}

// Over classes closed under induced submodels the two ⊤ fences shrink to
// (ΣA)*, provided the left-hand side is a Kleene-lattice term ({I,0,;,+,*,∩},
// with ⁺ and ↺ as derived forms) whose variables all lie in A. The shrunken
// form is class-sensitive: it is not valid over arbitrary classes.
inline Inequation elim_hoare_bounded(TermTable& tt, const Signature& sig,
                                     const Inequation& g, Term w,
                                     const std::vector<VarId>& alphabet) {
  if (!classify_fragment(sig, g.lhs).kl)
    throw FragmentError("bounded Hoare elimination needs a {I,0,;,+,*,cap} lhs");
  for (VarId v : vars_of(g.lhs))
    if (std::find(alphabet.begin(), alphabet.end(), v) == alphabet.end())
      throw FragmentError("lhs variable missing from the fence alphabet");
  Term fence = tt.I();
  if (!alphabet.empty()) {
    std::vector<Term> vs;
    for (VarId v : alphabet) vs.push_back(tt.var(v));
    fence = tt.star(tt.sum_n(vs));
  }
  return {g.lhs, tt.sum(g.rhs, tt.comp(fence, tt.comp(w, fence)))};
}

// ---------------------------------------------------------------------------
// Substitution eliminations: a hypothesis of a recognized shape is equivalent
// to "x equals some fixed term w(x)", and then the hypothesis disappears by
// substituting w for x throughout the goal. Each pattern records its defining
// per-model equivalence as a formula so the suite can replay it.

struct SubstPattern {
  std::string id;
  VarId x = -1;            // the variable being replaced
  Term param = nullptr;    // w, b, or the fresh mirror variable, if any
  Term replacement = nullptr;
  Formula side = nullptr;  // the equivalence that justifies the rewrite
};

inline SubstPattern make_subst_pattern(TermTable& tt, const Signature& sig,
                                       const std::string& id, VarId x,
                                       Term param = nullptr) {
  SubstPattern p;
  p.id = id;
  p.x = x;
  p.param = param;
  Term vx = tt.var(x);
  if (id == "x<=I-loop") {
    p.replacement = tt.loop(vx);
    p.side = f_iff(f_leq(vx, tt.I()), f_eq(vx, p.replacement));
  } else if (id == "x<=I-dom") {
    p.replacement = tt.dom(vx);
    p.side = f_iff(f_leq(vx, tt.I()), f_eq(vx, p.replacement));
  } else if (id == "xx<=x") {
    p.replacement = tt.plus(vx);
    p.side = f_iff(f_leq(tt.comp(vx, vx), vx), f_eq(vx, p.replacement));
  } else if (id == "xw<=x") {
    if (!param) throw PatternError("xw<=x needs the absorbed factor w");
    if (vars_of(param).count(x))
      throw PatternError("absorbed factor must not mention the variable");
    p.replacement = tt.comp(vx, tt.star(param));
    p.side = f_iff(f_leq(tt.comp(vx, param), vx), f_eq(vx, p.replacement));
  } else if (id == "bx=b") {
    if (!param) throw PatternError("bx=b needs the guarding test b");
    if (!is_test(sig, param)) throw PatternError("guard must be a test term");
    if (vars_of(param).count(x))
      throw PatternError("guard must not mention the variable");
    Term nb = complement_test(tt, sig, param);
    p.replacement = tt.sum(tt.comp(nb, vx), param);
    // Valid over test models, where b and its complement partition I.
    p.side = f_iff(f_eq(tt.comp(param, vx), param), f_eq(vx, p.replacement));
  } else if (id == "test-loop" || id == "test-dom") {
    if (!sig.is_test(x)) throw PatternError("pattern applies to test variables");
    if (!param || param->tag != Tag::Var)
      throw PatternError("pattern needs a fresh plain variable");
    Term q = param;
    bool pos = sig.kind(x) == VarKind::TestPos;
    if (id == "test-loop") {
      p.replacement = pos ? tt.loop(q) : tt.loop(tt.neg(q));
      p.side = f_and(
          f_eq(tt.cap(tt.loop(q), tt.loop(tt.neg(q))), tt.zero()),
          f_eq(tt.sum(tt.loop(q), tt.loop(tt.neg(q))), tt.I()));
    } else {
      p.replacement = pos ? tt.dom(q) : tt.adom(q);
      p.side = f_and(f_eq(tt.cap(tt.dom(q), tt.adom(q)), tt.zero()),
                     f_eq(tt.sum(tt.dom(q), tt.adom(q)), tt.I()));
    }
  } else {
    throw PatternError("unknown substitution pattern: " + id);
  }
  return p;
}

inline Term elim_subst(TermTable& tt, const Signature& sig, Term t,
                       const SubstPattern& p) {
  // Replacing a test variable by a non-test breaks annotation positions, so
  // spell the programs out first in that case.
  Term s = t;
  if (sig.is_test(p.x) && !is_test(sig, p.replacement) &&
      detail::has_programs(s))
    s = detail::expand_programs(tt, sig, s);
  return substitute(tt, s, p.x, p.replacement);
}

inline Formula elim_subst(TermTable& tt, const Signature& sig, const Formula& f,
                          const SubstPattern& p) {
  return map_terms(f, [&](Term t) { return elim_subst(tt, sig, t, p); });
}

inline Inequation elim_subst(TermTable& tt, const Signature& sig,
                             const Inequation& g, const SubstPattern& p) {
  return {elim_subst(tt, sig, g.lhs, p), elim_subst(tt, sig, g.rhs, p)};
}

// ---------------------------------------------------------------------------
// Loop transform: wraps every atom in u;_;u so that hypotheses u ≥ I can be
// discharged. Stars pick up a trailing u. Program sugar is spelled out on
// the way; ↺, ⁺ and dom expand through their defining shapes, keeping every
// complement on a variable or on I.

namespace detail {

// Syntactic subidentities. Test variables count as below I here: they are
// diagonal in every class the transforms target, though not in a raw model
// that ignores the signature kinds.
inline bool is_coreflexive(const Signature& sig, Term t) {
  switch (t->tag) {
    case Tag::I:
    case Tag::Zero:
    case Tag::Loop:
    case Tag::Dom:
    case Tag::Adom:
      return true;
    case Tag::Var:
      return sig.is_test(t->var);
    case Tag::Conv:
    case Tag::Star:
    case Tag::Plus:
      return is_coreflexive(sig, t->a);
    case Tag::Comp:
    case Tag::Union:
      return is_coreflexive(sig, t->a) && is_coreflexive(sig, t->b);
    case Tag::Cap:
      return is_coreflexive(sig, t->a) || is_coreflexive(sig, t->b);
    default:
      return false;
  }
}

inline Term loop_T(TermTable& tt, const Signature& sig, Term t, Term u,
                   Term neg_ident_image,
                   std::unordered_map<Term, Term>& memo) {
  if (auto it = memo.find(t); it != memo.end()) return it->second;
  auto rec = [&](Term s) { return loop_T(tt, sig, s, u, neg_ident_image, memo); };
  auto wrap = [&](Term s) { return tt.comp(u, tt.comp(s, u)); };
  Term r = nullptr;
  switch (t->tag) {
    case Tag::I:
    case Tag::Top:
    case Tag::Var:
      r = wrap(t);
      break;
    case Tag::Zero:
      r = t;
      break;
    case Tag::Neg:
      if (t->a->tag == Tag::I && neg_ident_image)
        r = neg_ident_image;
      else if (t->a->tag == Tag::I || t->a->tag == Tag::Var ||
               t->a->tag == Tag::Zero)
        r = wrap(t);
      else
        throw FragmentError("loop transform: complement must sit on a variable or I");
      break;
    case Tag::Comp:
      r = tt.comp(rec(t->a), rec(t->b));
      break;
    case Tag::Union:
      r = tt.sum(rec(t->a), rec(t->b));
      break;
    case Tag::Cap:
      r = tt.cap(rec(t->a), rec(t->b));
      break;
    case Tag::Conv:
      r = tt.conv(rec(t->a));
      break;
    case Tag::Star:
      r = tt.comp(tt.star(rec(t->a)), u);
      break;
    case Tag::Plus: {
      Term a = rec(t->a);
      r = tt.comp(a, tt.comp(tt.star(a), u));
      break;
    }
    case Tag::Loop:
      // X ∩ uIu and X↺;u agree whenever u stays below I, and the second form
      // keeps the image intersection-free.
      r = is_coreflexive(sig, u) ? tt.comp(tt.loop(rec(t->a)), u)
                                 : tt.cap(rec(t->a), wrap(tt.I()));
      break;
    case Tag::Dom:
      r = tt.cap(tt.comp(rec(t->a), wrap(tt.top())), wrap(tt.I()));
      break;
    case Tag::Adom:
      throw FragmentError("loop transform: complement must sit on a variable or I");
    case Tag::Ite:
      r = rec(tt.sum(tt.comp(t->a, t->b),
                     tt.comp(complement_test(tt, sig, t->a), t->c)));
      break;
    case Tag::While:
      r = rec(tt.comp(tt.star(tt.comp(t->a, t->b)),
                      complement_test(tt, sig, t->a)));
      break;
    case Tag::DoWhile:
      r = rec(tt.comp(t->b, tt.while_(t->a, t->b)));
      break;
    case Tag::IterN:
      r = rec(tt.comp(tt.pow(tt.comp(t->a, t->b), t->k),
                      complement_test(tt, sig, t->a)));
      break;
  }
  memo.emplace(t, r);
  return r;
}

}  // namespace detail

inline Term loop_transform(TermTable& tt, const Signature& sig, Term t, Term u) {
  std::unordered_map<Term, Term> memo;
  return detail::loop_T(tt, sig, t, u, nullptr, memo);
}

// Annotation-preserving variant for while-programs: whole test subterms and
// action atoms are wrapped, composition and the program constructors pass
// through untouched, so the output is again a while-program.
inline Term loop_transform_pwp(TermTable& tt, const Signature& sig, Term t,
                               Term u) {
  auto wrap = [&](Term s) { return tt.comp(u, tt.comp(s, u)); };
  if (is_test(sig, t)) return wrap(t);
  auto rec = [&](Term s) { return loop_transform_pwp(tt, sig, s, u); };
  switch (t->tag) {
    case Tag::Var:
      return wrap(t);
    case Tag::Conv:
      if (t->a->tag == Tag::Var && !sig.is_test(t->a->var)) return wrap(t);
      throw FragmentError("while-program transform: converse only on actions");
    case Tag::Comp:
      return tt.comp(rec(t->a), rec(t->b));
    case Tag::Loop:
      return tt.loop(rec(t->a));
    case Tag::Ite:
      return tt.ite(t->a, rec(t->b), rec(t->c));
    case Tag::While:
      return tt.while_(t->a, rec(t->b));
    case Tag::DoWhile:
      return tt.dowhile(t->a, rec(t->b));
    case Tag::IterN:
      return tt.iter(t->k, t->a, rec(t->b));
    default:
      throw FragmentError("not a while-program shape");
  }
}

// ---------------------------------------------------------------------------
// Test eliminations. Tests come in signature pairs (p, ~p); the suite of
// test axioms over them can be discharged in two ways.

enum class TestStyle { Loop, Dom };

struct TestElim {
  Inequation goal;
  std::vector<VarId> fresh;  // one mirror variable per eliminated pair
};

// Substitution route: each pair (p, ~p) is replaced by the two halves of a
// partition of I carved out of one fresh plain variable q — loops of q and
// of ¬q, or domain and antidomain of q. With rhs_simplified (loop style
// only), the right-hand side takes the bare q / ¬q instead; that needs the
// rhs to mention the tests only positively and to keep complements on atoms.
inline TestElim elim_tests_subst(TermTable& tt, Signature& sig,
                                 const Inequation& g,
                                 const std::vector<VarId>& tests,
                                 TestStyle style = TestStyle::Loop,
                                 bool rhs_simplified = false) {
  std::set<VarId> all;
  for (VarId p : tests) {
    if (sig.kind(p) != VarKind::TestPos)
      throw PatternError("tests must be listed by their positive halves");
    all.insert(p);
    all.insert(sig.partner(p));
  }
  Term L = g.lhs, R = g.rhs;
  if (detail::has_programs(L)) L = detail::expand_programs(tt, sig, L);
  if (detail::has_programs(R)) R = detail::expand_programs(tt, sig, R);
  if (rhs_simplified) {
    if (style != TestStyle::Loop)
      throw PatternError("rhs simplification needs the loop encoding");
    if (classify_fragment(sig, R).neg_full || detail::negates_any(R, all))
      throw PatternError("rhs must mention the tests positively");
    // The bare encoding is exact for a pair only when the right side uses a
    // single half of it: q must mirror that half alone, and ⊤ ≤ p + ~p
    // versus ⊤ ≤ q + ~q separates the two readings otherwise.
    std::set<VarId> rv = vars_of(R);
    for (VarId p : tests)
      if (rv.count(p) && rv.count(sig.partner(p)))
        throw PatternError("rhs may use only one half of each test pair");
  }
  TestElim out;
  for (VarId p : tests) {
    VarId q = sig.fresh_action();
    out.fresh.push_back(q);
    Term vq = tt.var(q);
    Term pos = style == TestStyle::Loop ? tt.loop(vq) : tt.dom(vq);
    Term neg = style == TestStyle::Loop ? tt.loop(tt.neg(vq)) : tt.adom(vq);
    L = substitute(tt, L, p, pos);
    L = substitute(tt, L, sig.partner(p), neg);
    if (rhs_simplified) {
      R = substitute(tt, R, p, vq);
      R = substitute(tt, R, sig.partner(p), tt.neg(vq));
    } else {
      R = substitute(tt, R, p, pos);
      R = substitute(tt, R, sig.partner(p), neg);
    }
  }
  out.goal = {L, R};
  return out;
}

// Loop-transform route: the disjointness axioms p;~p ≤ 0 move to the right
// as ⊤(Σ p~p)⊤, the covering axioms p+~p ≥ I become the wrapping transform
// T_u with u = ⨟(p+~p), and the remaining p ≤ I axioms disappear by the
// loop (or domain) substitution. With the loop encoding the right side can
// stay untouched when it mentions the tests positively (loops shrink, so
// monotonicity covers it); domains are not below their arguments, so the
// dom encoding always substitutes both sides.
inline Inequation elim_tests_loopH(TermTable& tt, const Signature& sig,
                                   const Inequation& g,
                                   const std::vector<VarId>& tests,
                                   TestStyle style = TestStyle::Loop) {
  std::vector<Term> prods, sums;
  std::set<VarId> all;
  for (VarId p : tests) {
    if (sig.kind(p) != VarKind::TestPos)
      throw PatternError("tests must be listed by their positive halves");
    Term vp = tt.var(p), vq = tt.var(sig.partner(p));
    prods.push_back(tt.comp(vp, vq));
    sums.push_back(tt.sum(vp, vq));
    all.insert(p);
    all.insert(sig.partner(p));
  }
  Term w0 = tt.comp(tt.top(), tt.comp(tt.sum_n(prods), tt.top()));
  Term R = tt.sum(g.rhs, w0);
  if (tests.empty()) return {g.lhs, R};
  Term u = tt.comp_n(sums);
  Term L = loop_transform(tt, sig, g.lhs, u);
  bool both = style == TestStyle::Dom ||
              classify_fragment(sig, g.rhs).neg_full ||
              detail::negates_any(g.rhs, all);
  for (VarId v : all) {
    Term rep = style == TestStyle::Loop ? tt.loop(tt.var(v)) : tt.dom(tt.var(v));
    L = substitute(tt, L, v, rep);
    if (both) R = substitute(tt, R, v, rep);
  }
  return {L, R};
}

// ---------------------------------------------------------------------------
// One-test reduction: a while-program over tests p_1..p_n and the four
// torus actions is rewritten over a single test. Every original vertex
// becomes a block of m = 2n+3 cells: cells 0 and 1 carry the marker, odd
// cells 3..2n+1 hold one test each, and the last two cells stay blank so
// that consecutive marker loops single out block origins. The two blank
// cells are required: with a narrower block the last test (or the marker
// pattern itself) collides with the next block's origin.

struct OneTestVocab {
  std::array<VarId, 4> acts;  // east, north, west, south
  std::vector<VarId> tests;   // positive halves, in marker order
  VarId marker = -1;
};

inline int one_test_block(int num_tests) { return 2 * num_tests + 3; }

inline OneTestVocab make_one_test_vocab(Signature& sig,
                                        std::array<VarId, 4> acts,
                                        std::vector<VarId> tests) {
  for (VarId a : acts)
    if (sig.is_test(a)) throw PatternError("actions must be plain variables");
  for (VarId p : tests)
    if (sig.kind(p) != VarKind::TestPos)
      throw PatternError("tests must be listed by their positive halves");
  OneTestVocab v;
  v.acts = acts;
  v.tests = std::move(tests);
  v.marker = sig.fresh_test().first;
  return v;
}

namespace detail {

inline int one_test_index(const OneTestVocab& voc, VarId p) {
  for (size_t i = 0; i < voc.tests.size(); ++i)
    if (voc.tests[i] == p) return static_cast<int>(i) + 1;
  return -1;
}

}  // namespace detail

inline Term reduce_one_test(TermTable& tt, const Signature& sig, Term t,
                            const OneTestVocab& voc) {
  const int m = one_test_block(static_cast<int>(voc.tests.size()));
  Term P = tt.var(voc.marker);
  Term Pn = tt.var(sig.partner(voc.marker));
  Term E = tt.var(voc.acts[0]), W = tt.var(voc.acts[2]);
  Term U = tt.comp_n({P, E, P, W});
  auto rec = [&](Term s) { return reduce_one_test(tt, sig, s, voc); };
  auto marker_at = [&](int k, bool pos) {
    return tt.comp_n({U, tt.pow(E, k), pos ? P : Pn, tt.pow(W, k), U});
  };
  // Annotations are single test literals of either polarity; a negative
  // literal probes the complement of the marker at the same cell.
  auto annot = [&](Term b) {
    if (b->tag != Tag::Var || !sig.is_test(b->var))
      throw FragmentError("one-test reduction: annotation must be a single test");
    bool pos = sig.kind(b->var) == VarKind::TestPos;
    int i = detail::one_test_index(voc, pos ? b->var : sig.partner(b->var));
    if (i < 0)
      throw FragmentError("one-test reduction: annotation outside the listed tests");
    return std::pair<int, bool>(i, pos);
  };
  switch (t->tag) {
    case Tag::I:
      return U;
    case Tag::Zero:
      return t;
    case Tag::Var: {
      if (!sig.is_test(t->var)) {
        bool listed = std::find(voc.acts.begin(), voc.acts.end(), t->var) !=
                      voc.acts.end();
        if (!listed)
          throw FragmentError("one-test reduction: action outside the four listed");
        return tt.comp_n({U, tt.pow(t, m), U});
      }
      bool pos = sig.kind(t->var) == VarKind::TestPos;
      int i = detail::one_test_index(voc, pos ? t->var : sig.partner(t->var));
      if (i < 0)
        throw FragmentError("one-test reduction: test outside the listed ones");
      return marker_at(2 * i + 1, pos);
    }
    case Tag::Comp:
      return tt.comp(rec(t->a), rec(t->b));
    case Tag::Loop:
      return tt.loop(rec(t->a));
    case Tag::Ite: {
      Term b = t->a, yes = t->b, no = t->c;
      if (b->tag == Tag::Var && sig.kind(b->var) == VarKind::TestNeg) {
        b = tt.var(sig.partner(b->var));
        std::swap(yes, no);
      }
      if (b->tag != Tag::Var)
        throw FragmentError("one-test reduction: annotation must be a single test");
      int i = detail::one_test_index(voc, b->var);
      if (i < 0)
        throw FragmentError("one-test reduction: annotation outside the listed tests");
      Term ek = tt.pow(E, 2 * i + 1), wk = tt.pow(W, 2 * i + 1);
      return tt.comp(ek, tt.ite(P, tt.comp(wk, rec(yes)), tt.comp(wk, rec(no))));
    }
    case Tag::While: {
      auto [i, pos] = annot(t->a);
      Term ek = tt.pow(E, 2 * i + 1), wk = tt.pow(W, 2 * i + 1);
      return tt.comp(
          ek, tt.comp(tt.while_(pos ? P : Pn, tt.comp(wk, tt.comp(rec(t->b), ek))),
                      wk));
    }
    case Tag::DoWhile:
      return rec(tt.comp(t->b, tt.while_(t->a, t->b)));
    case Tag::IterN: {
      auto [i, pos] = annot(t->a);
      Term ek = tt.pow(E, 2 * i + 1), wk = tt.pow(W, 2 * i + 1);
      return tt.comp(
          ek,
          tt.comp(tt.iter(t->k, pos ? P : Pn, tt.comp(wk, tt.comp(rec(t->b), ek))),
                  wk));
    }
    default:
      throw FragmentError("one-test reduction: not a primitive while-program");
  }
}

inline Formula reduce_one_test(TermTable& tt, const Signature& sig,
                               const Formula& f, const OneTestVocab& voc) {
  return map_terms(f, [&](Term t) { return reduce_one_test(tt, sig, t, voc); });
}

namespace detail {

struct Torus {
  int h = 0, v = 0;
  std::vector<std::pair<int, int>> coord;  // vertex -> (column, row)
  std::vector<std::vector<int>> at;        // at[column][row] -> vertex
};

inline const Rel& rel_or_throw(const Model& v, VarId x, const char* what) {
  auto it = v.rel.find(x);
  if (it == v.rel.end()) throw ShapeError(std::string("model lacks ") + what);
  return it->second;
}

inline std::vector<int> perm_of(const Rel& r, const char* what) {
  std::vector<int> p(r.n(), -1), seen(r.n(), 0);
  for (int i = 0; i < r.n(); ++i) {
    for (int j = 0; j < r.n(); ++j)
      if (r.get(i, j)) {
        if (p[i] >= 0) throw ShapeError(std::string(what) + " is not a function");
        p[i] = j;
      }
    if (p[i] < 0) throw ShapeError(std::string(what) + " is not total");
    if (seen[p[i]]++) throw ShapeError(std::string(what) + " is not injective");
  }
  return p;
}

inline Torus recognize_torus(const Model& v, const std::array<VarId, 4>& acts) {
  const Rel& rE = rel_or_throw(v, acts[0], "the east action");
  const Rel& rN = rel_or_throw(v, acts[1], "the north action");
  const Rel& rW = rel_or_throw(v, acts[2], "the west action");
  const Rel& rS = rel_or_throw(v, acts[3], "the south action");
  for (int i = 0; i < v.n; ++i)
    for (int j = 0; j < v.n; ++j) {
      if (rW.get(i, j) != rE.get(j, i))
        throw ShapeError("west is not the converse of east");
      if (rS.get(i, j) != rN.get(j, i))
        throw ShapeError("south is not the converse of north");
    }
  std::vector<int> pe = perm_of(rE, "east"), pn = perm_of(rN, "north");
  for (int i = 0; i < v.n; ++i)
    if (pe[pn[i]] != pn[pe[i]]) throw ShapeError("shifts do not commute");
  Torus t;
  for (int z = pe[0];; z = pe[z]) {
    ++t.h;
    if (z == 0) break;
  }
  for (int z = pn[0];; z = pn[z]) {
    ++t.v;
    if (z == 0) break;
  }
  if (t.h * t.v != v.n) throw ShapeError("not a rectangular torus");
  t.coord.assign(v.n, {-1, -1});
  t.at.assign(t.h, std::vector<int>(t.v, -1));
  int row = 0;
  for (int y = 0; y < t.v; ++y, row = pn[row]) {
    int z = row;
    for (int x = 0; x < t.h; ++x, z = pe[z]) {
      if (t.coord[z].first >= 0) throw ShapeError("shifts do not tile the model");
      t.coord[z] = {x, y};
      t.at[x][y] = z;
    }
  }
  return t;
}

}  // namespace detail

// Blows a torus model up cell-by-cell into blocks of m = 2n+3 cells per
// direction. The marker test holds on cells 0 and 1 of every block row
// origin and on odd cell 2i+1 exactly where test i held; the four actions
// become single-cell shifts on the refined torus; the original tests (and,
// optionally, copies of the original actions under the given fresh names)
// survive embedded at block origins.
inline Model expand_one_test_model(const Signature& sig, const Model& v,
                                   const OneTestVocab& voc,
                                   const std::vector<VarId>& primed = {}) {
  if (!primed.empty() && primed.size() != 4)
    throw std::invalid_argument("primed copies need exactly four names");
  detail::Torus tor = detail::recognize_torus(v, voc.acts);
  const int m = one_test_block(static_cast<int>(voc.tests.size()));
  const int H = m * tor.h, V = m * tor.v;
  auto idx2 = [&](int x, int y) { return y * H + x; };
  Model out;
  out.n = H * V;
  Rel P(out.n), E(out.n), N(out.n), Wr(out.n), S(out.n);
  const Rel& rE = v.rel.at(voc.acts[0]);
  std::map<VarId, Rel> embedded;
  for (VarId p : voc.tests) embedded.emplace(p, Rel(out.n));
  for (int x = 0; x < tor.h; ++x)
    for (int y = 0; y < tor.v; ++y) {
      int z = tor.at[x][y], bx = m * x, by = m * y;
      P.set(idx2(bx, by), idx2(bx, by));
      P.set(idx2(bx + 1, by), idx2(bx + 1, by));
      for (size_t i = 0; i < voc.tests.size(); ++i) {
        auto it = v.rel.find(voc.tests[i]);
        bool on = it != v.rel.end() && it->second.get(z, z);
        bool succ = false;
        for (int j = 0; j < v.n && !succ; ++j) succ = rE.get(z, j);
        if (on && succ)
          P.set(idx2(bx + 2 * static_cast<int>(i) + 3, by),
                idx2(bx + 2 * static_cast<int>(i) + 3, by));
        if (on) {
          Rel& e = embedded.at(voc.tests[i]);
          e.set(idx2(bx, by), idx2(bx, by));
        }
      }
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
          int cx = bx + i, cy = by + j;
          E.set(idx2(cx, cy), idx2((cx + 1) % H, cy));
          Wr.set(idx2((cx + 1) % H, cy), idx2(cx, cy));
          N.set(idx2(cx, cy), idx2(cx, (cy + 1) % V));
          S.set(idx2(cx, (cy + 1) % V), idx2(cx, cy));
        }
    }
  auto diag_complement = [&](const Rel& r) {
    Rel c(out.n);
    for (int i = 0; i < out.n; ++i)
      if (!r.get(i, i)) c.set(i, i);
    return c;
  };
  out.rel.emplace(voc.marker, P);
  out.rel.emplace(sig.partner(voc.marker), diag_complement(P));
  out.rel.emplace(voc.acts[0], std::move(E));
  out.rel.emplace(voc.acts[1], std::move(N));
  out.rel.emplace(voc.acts[2], std::move(Wr));
  out.rel.emplace(voc.acts[3], std::move(S));
  for (VarId p : voc.tests) {
    out.rel.emplace(sig.partner(p), diag_complement(embedded.at(p)));
    out.rel.emplace(p, std::move(embedded.at(p)));
  }
  for (size_t k = 0; k < primed.size(); ++k) {
    Rel copy(out.n);
    auto it = v.rel.find(voc.acts[k]);
    if (it != v.rel.end())
      for (int a = 0; a < v.n; ++a)
        for (int b = 0; b < v.n; ++b)
          if (it->second.get(a, b))
            copy.set(idx2(m * tor.coord[a].first, m * tor.coord[a].second),
                     idx2(m * tor.coord[b].first, m * tor.coord[b].second));
    out.rel.emplace(primed[k], std::move(copy));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Converse elimination: push ˘ down to the atoms, then let a fresh mirror
// variable z stand for x˘. The four loop penalties on the right force z and
// x˘ apart exactly when they disagree somewhere, so the goal is unchanged
// over models where every mirror is exact.

struct ConverseElim {
  Inequation goal;
  std::vector<std::pair<VarId, VarId>> mirrors;  // (x, mirror of x˘)
};

namespace detail {

inline Term push_conv(TermTable& tt, const Signature& sig, Term t, bool flip) {
  auto go = [&](Term s, bool f) { return push_conv(tt, sig, s, f); };
  switch (t->tag) {
    case Tag::I:
    case Tag::Zero:
    case Tag::Top:
      return t;
    case Tag::Var:
      return flip ? tt.conv(t) : t;
    case Tag::Neg:
      return tt.neg(go(t->a, flip));
    case Tag::Comp:
      if (flip) return tt.comp(go(t->b, true), go(t->a, true));
      return tt.comp(go(t->a, false), go(t->b, false));
    case Tag::Union:
      return tt.sum(go(t->a, flip), go(t->b, flip));
    case Tag::Cap:
      return tt.cap(go(t->a, flip), go(t->b, flip));
    case Tag::Conv:
      return go(t->a, !flip);
    case Tag::Star:
      return tt.star(go(t->a, flip));
    case Tag::Plus:
      return tt.plus(go(t->a, flip));
    // Loops, domains and antidomains are symmetric subidentities, so the
    // flip stops here.
    case Tag::Loop:
      return tt.loop(go(t->a, false));
    case Tag::Dom:
      return tt.dom(go(t->a, false));
    case Tag::Adom:
      return tt.adom(go(t->a, false));
    case Tag::Ite:
    case Tag::While:
    case Tag::DoWhile:
    case Tag::IterN:
      if (!flip) {
        Term b = go(t->b, false);
        Term c = t->c ? go(t->c, false) : nullptr;
        return tt.rebuild(t->tag, t->var, t->k, t->a, b, c);
      }
      return go(expand_programs(tt, sig, t), true);
  }
  return t;
}

inline void collect_conv_vars(Term t, std::set<VarId>& out) {
  if (t->tag == Tag::Conv && t->a->tag == Tag::Var) {
    out.insert(t->a->var);
    return;
  }
  if (t->a) collect_conv_vars(t->a, out);
  if (t->b) collect_conv_vars(t->b, out);
  if (t->c) collect_conv_vars(t->c, out);
}

inline Term replace_conv_atoms(TermTable& tt, Term t,
                               const std::map<VarId, VarId>& mirror) {
  if (t->tag == Tag::Conv && t->a->tag == Tag::Var)
    return tt.var(mirror.at(t->a->var));
  if (!t->a) return t;
  Term a = replace_conv_atoms(tt, t->a, mirror);
  Term b = t->b ? replace_conv_atoms(tt, t->b, mirror) : nullptr;
  Term c = t->c ? replace_conv_atoms(tt, t->c, mirror) : nullptr;
  return tt.rebuild(t->tag, t->var, t->k, a, b, c);
}

}  // namespace detail

inline ConverseElim elim_converse(TermTable& tt, Signature& sig,
                                  const Inequation& g) {
  Term L = detail::push_conv(tt, sig, g.lhs, false);
  Term R = detail::push_conv(tt, sig, g.rhs, false);
  std::set<VarId> xs;
  detail::collect_conv_vars(L, xs);
  detail::collect_conv_vars(R, xs);
  ConverseElim out;
  if (xs.empty()) {
    out.goal = {L, R};
    return out;
  }
  std::map<VarId, VarId> mirror;
  std::vector<Term> pens;
  for (VarId x : xs) {
    VarId z = sig.fresh_action();
    mirror[x] = z;
    out.mirrors.emplace_back(x, z);
    Term vx = tt.var(x), vz = tt.var(z);
    Term nx = tt.neg(vx), nz = tt.neg(vz);
    pens.push_back(tt.sum(
        tt.sum(tt.loop(tt.comp(vx, nz)), tt.loop(tt.comp(nz, vx))),
        tt.sum(tt.loop(tt.comp(vz, nx)), tt.loop(tt.comp(nx, vz)))));
  }
  L = detail::replace_conv_atoms(tt, L, mirror);
  R = detail::replace_conv_atoms(tt, R, mirror);
  Term penalty = tt.comp(tt.top(), tt.comp(tt.sum_n(pens), tt.top()));
  out.goal = {L, tt.sum(R, penalty)};
  return out;
}

// ---------------------------------------------------------------------------
// Difference elimination: a fresh variable Q takes over the role of vertex
// identity. The goal is translated twice (atoms wrapped in Q, then every
// atom of the result wrapped in Q↺), ¬I becomes ¬Q, the axioms forcing Q
// to behave like an equivalence consistent with the atoms move to the right
// as loop penalties, and transitivity disappears by substituting Q⁺ for Q.
// The output mentions no ¬I; complements sit on variables only.

struct DifferenceElim {
  Inequation goal;
  VarId q = -1;
};

namespace detail {

// t[w/x] at occurrences outside complements. Complemented subterms stay put
// so the result keeps complements on variables only.
inline Term subst_outside_neg(TermTable& tt, Term t, VarId x, Term w,
                              std::unordered_map<Term, Term>& memo) {
  if (auto it = memo.find(t); it != memo.end()) return it->second;
  Term r;
  if (t->tag == Tag::Var) {
    r = t->var == x ? w : t;
  } else if (t->tag == Tag::Neg) {
    r = t;
  } else {
    auto rec = [&](Term s) {
      return s ? subst_outside_neg(tt, s, x, w, memo) : nullptr;
    };
    r = tt.rebuild(t->tag, t->var, t->k, rec(t->a), rec(t->b), rec(t->c));
  }
  memo.emplace(t, r);
  return r;
}

}  // namespace detail

inline DifferenceElim elim_difference(TermTable& tt, Signature& sig,
                                      const Inequation& g) {
  std::set<VarId> alphabet = vars_of(g.lhs);
  std::set<VarId> rv = vars_of(g.rhs);
  alphabet.insert(rv.begin(), rv.end());
  VarId Q = sig.fresh_action();
  Term vQ = tt.var(Q);
  Term nQ = tt.neg(vQ);
  std::unordered_map<Term, Term> memoL, memoR;
  Term L = detail::loop_T(tt, sig, g.lhs, vQ, nQ, memoL);
  Term R = detail::loop_T(tt, sig, g.rhs, vQ, nQ, memoR);
  // A Q-edge whose reverse is missing, and an a-edge next to a ~a-edge
  // between Q-related endpoints: loops that are empty exactly when Q is
  // symmetric and consistent with the alphabet.
  Term pen = tt.loop(tt.comp(vQ, nQ));
  for (VarId a : alphabet) {
    Term va = tt.var(a);
    pen = tt.sum(pen, tt.loop(tt.comp_n(
                          {vQ, va, vQ, tt.conv(tt.neg(va)), vQ})));
  }
  R = tt.sum(R, tt.comp(tt.top(), tt.comp(pen, tt.top())));
  L = loop_transform(tt, sig, L, tt.loop(vQ));
  // Q := Q⁺ discharges transitivity; complemented occurrences stay Q, which
  // is harmless: whenever the substituted first penalty loop is empty, Q is
  // already symmetric and transitive, so Q⁺ and Q agree pointwise.
  Term qplus = tt.plus(vQ);
  std::unordered_map<Term, Term> m1, m2;
  DifferenceElim out;
  out.q = Q;
  out.goal = {detail::subst_outside_neg(tt, L, Q, qplus, m1),
              detail::subst_outside_neg(tt, R, Q, qplus, m2)};
  return out;
}

}  // namespace relc
