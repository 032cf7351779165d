#pragma once

#include <memory>
#include <vector>

#include "relc/term.hpp"

namespace relc {

enum class FTag : uint8_t { Eq, Leq, And, Not };

struct FormulaNode;
using Formula = std::shared_ptr<const FormulaNode>;

struct FormulaNode {
  FTag tag;
  Term l = nullptr, r = nullptr;  // Eq / Leq
  Formula a, b;                   // And / Not
};

inline Formula f_eq(Term l, Term r) {
  return std::make_shared<FormulaNode>(FormulaNode{FTag::Eq, l, r, nullptr, nullptr});
}
inline Formula f_leq(Term l, Term r) {
  return std::make_shared<FormulaNode>(FormulaNode{FTag::Leq, l, r, nullptr, nullptr});
}
inline Formula f_and(Formula x, Formula y) {
  return std::make_shared<FormulaNode>(
      FormulaNode{FTag::And, nullptr, nullptr, std::move(x), std::move(y)});
}
inline Formula f_not(Formula x) {
  return std::make_shared<FormulaNode>(
      FormulaNode{FTag::Not, nullptr, nullptr, std::move(x), nullptr});
}

// Derived connectives desugar at construction.
inline Formula f_or(Formula x, Formula y) {
  return f_not(f_and(f_not(std::move(x)), f_not(std::move(y))));
}
inline Formula f_implies(Formula x, Formula y) {
  return f_not(f_and(std::move(x), f_not(std::move(y))));
}
inline Formula f_iff(Formula x, Formula y) {
  Formula fwd = f_implies(x, y);
  return f_and(std::move(fwd), f_implies(std::move(y), std::move(x)));
}
inline Formula f_true(TermTable& tt) { return f_eq(tt.zero(), tt.zero()); }
inline Formula f_false(TermTable& tt) { return f_not(f_true(tt)); }

inline Formula f_all(std::vector<Formula> fs, TermTable& tt) {
  if (fs.empty()) return f_true(tt);
  Formula r = fs[0];
  for (size_t i = 1; i < fs.size(); ++i) r = f_and(r, fs[i]);
  return r;
}

// t1 ≤ t2 as the abbreviation t1 + t2 = t2.
inline Formula leq_as_eq(TermTable& tt, const Formula& f) {
  if (f->tag != FTag::Leq) return f;
  return f_eq(tt.sum(f->l, f->r), f->r);
}

// Structural equality; terms compare by node identity (they are interned).
inline bool f_equal(const Formula& x, const Formula& y) {
  if (x == y) return true;
  if (x->tag != y->tag) return false;
  switch (x->tag) {
    case FTag::Eq:
    case FTag::Leq:
      return x->l == y->l && x->r == y->r;
    case FTag::And:
      return f_equal(x->a, y->a) && f_equal(x->b, y->b);
    case FTag::Not:
      return f_equal(x->a, y->a);
  }
  return false;
}

inline void formula_terms(const Formula& f, std::vector<Term>& out) {
  switch (f->tag) {
    case FTag::Eq:
    case FTag::Leq:
      out.push_back(f->l);
      out.push_back(f->r);
      break;
    case FTag::And:
      formula_terms(f->a, out);
      formula_terms(f->b, out);
      break;
    case FTag::Not:
      formula_terms(f->a, out);
      break;
  }
}

// Applies a term transformation to every term of the formula.
template <typename Fn>
inline Formula map_terms(const Formula& f, Fn&& fn) {
  switch (f->tag) {
    case FTag::Eq:
      return f_eq(fn(f->l), fn(f->r));
    case FTag::Leq:
      return f_leq(fn(f->l), fn(f->r));
    case FTag::And:
      return f_and(map_terms(f->a, fn), map_terms(f->b, fn));
    case FTag::Not:
      return f_not(map_terms(f->a, fn));
  }
  return f;
}

}  // namespace relc
