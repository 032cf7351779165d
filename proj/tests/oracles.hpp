#pragma once

// Naive set-based reference implementations, kept deliberately independent of
// the bitset machinery in the library headers.

#include <set>
#include <utility>

#include "relc/model.hpp"

namespace oracle {

using NRel = std::set<std::pair<int, int>>;

inline NRel to_nrel(const relc::Rel& r) {
  NRel out;
  for (auto [i, j] : r.pairs()) out.insert({i, j});
  return out;
}

inline NRel ncomp(const NRel& a, const NRel& b) {
  NRel out;
  for (auto [i, j] : a)
    for (auto [k, l] : b)
      if (j == k) out.insert({i, l});
  return out;
}

inline NRel nunion(const NRel& a, const NRel& b) {
  NRel out = a;
  out.insert(b.begin(), b.end());
  return out;
}

inline NRel ninter(const NRel& a, const NRel& b) {
  NRel out;
  for (auto& p : a)
    if (b.count(p)) out.insert(p);
  return out;
}

inline NRel nconv(const NRel& a) {
  NRel out;
  for (auto [i, j] : a) out.insert({j, i});
  return out;
}

inline NRel ncompl(const NRel& a, int n) {
  NRel out;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (!a.count({i, j})) out.insert({i, j});
  return out;
}

inline NRel ndiag(int n) {
  NRel out;
  for (int i = 0; i < n; ++i) out.insert({i, i});
  return out;
}

inline NRel nstar(const NRel& a, int n) {
  NRel out = ndiag(n);
  for (int round = 0; round <= n * n; ++round) out = nunion(out, ncomp(out, a));
  return out;
}

// Reference evaluator: every derived tag gets its direct set-theoretic
// meaning rather than going through desugar.
inline NRel neval(const relc::Model& v, const relc::Signature& sig, relc::Term t) {
  using relc::Tag;
  auto rec = [&](relc::Term u) { return neval(v, sig, u); };
  switch (t->tag) {
    case Tag::I:
      return ndiag(v.n);
    case Tag::Zero:
      return {};
    case Tag::Top:
      return ncompl({}, v.n);
    case Tag::Var:
      return to_nrel(v.at(t->var));
    case Tag::Comp:
      return ncomp(rec(t->a), rec(t->b));
    case Tag::Union:
      return nunion(rec(t->a), rec(t->b));
    case Tag::Cap:
      return ninter(rec(t->a), rec(t->b));
    case Tag::Conv:
      return nconv(rec(t->a));
    case Tag::Star:
      return nstar(rec(t->a), v.n);
    case Tag::Neg:
      return ncompl(rec(t->a), v.n);
    case Tag::Loop:
      return ninter(rec(t->a), ndiag(v.n));
    case Tag::Plus:
      return ncomp(rec(t->a), nstar(rec(t->a), v.n));
    case Tag::Dom: {
      NRel x = rec(t->a), out;
      for (auto [i, j] : x) out.insert({i, i});
      return out;
    }
    case Tag::Adom: {
      NRel x = rec(t->a), out;
      for (int i = 0; i < v.n; ++i) {
        bool any = false;
        for (int j = 0; j < v.n && !any; ++j) any = x.count({i, j}) > 0;
        if (!any) out.insert({i, i});
      }
      return out;
    }
    case Tag::Ite: {
      relc::TermTable tmp;
      NRel c = rec(t->a);
      NRel nc = neval(v, sig, relc::complement_test(tmp, sig, t->a));
      return nunion(ncomp(c, rec(t->b)), ncomp(nc, rec(t->c)));
    }
    case Tag::While: {
      relc::TermTable tmp;
      NRel c = rec(t->a);
      NRel nc = neval(v, sig, relc::complement_test(tmp, sig, t->a));
      return ncomp(nstar(ncomp(c, rec(t->b)), v.n), nc);
    }
    case Tag::DoWhile: {
      relc::TermTable tmp;
      NRel c = rec(t->a);
      NRel nc = neval(v, sig, relc::complement_test(tmp, sig, t->a));
      NRel body = rec(t->b);
      return ncomp(body, ncomp(nstar(ncomp(c, body), v.n), nc));
    }
    case Tag::IterN: {
      relc::TermTable tmp;
      NRel c = rec(t->a);
      NRel nc = neval(v, sig, relc::complement_test(tmp, sig, t->a));
      NRel body = rec(t->b);
      NRel acc = ndiag(v.n);
      for (int i = 0; i < t->k; ++i) acc = ncomp(acc, ncomp(c, body));
      return ncomp(acc, nc);
    }
  }
  return {};
}

}  // namespace oracle
