#pragma once

#include <cstdint>
#include <vector>

#include "relc/formula.hpp"
#include "relc/model.hpp"
#include "relc/term.hpp"

namespace relc {

// splitmix64; self-contained so seeded runs reproduce across platforms.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : s_(seed) {}
  uint64_t next() {
    uint64_t z = (s_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
  uint64_t below(uint64_t k) { return k ? next() % k : 0; }
  bool coin() { return next() & 1; }

 private:
  uint64_t s_;
};

struct TermGenOpts {
  bool star = true;
  bool conv = true;
  bool cap = true;
  bool loop = true;
  bool top = false;
  bool neg_var = true;
  bool neg_ident = true;
  bool constants = true;  // I and 0 leaves
  int max_star_nesting = 1;
};

// Random term in the chosen PCoR fragment.
inline Term random_term(TermTable& tt, Rng& rng, const std::vector<VarId>& vars,
                        int depth, const TermGenOpts& o = {}, int star_depth = 0) {
  if (depth <= 0 || rng.below(8) == 0) {
    uint64_t pick = rng.below(o.constants ? 8 : 6);
    if (o.constants && pick == 6) return tt.I();
    if (o.constants && pick == 7) return o.top && rng.coin() ? tt.top() : tt.zero();
    VarId v = vars[rng.below(vars.size())];
    if (o.neg_var && rng.below(5) == 0) return tt.neg(tt.var(v));
    return tt.var(v);
  }
  for (;;) {
    switch (rng.below(8)) {
      case 0:
      case 1:
        return tt.comp(random_term(tt, rng, vars, depth - 1, o, star_depth),
                       random_term(tt, rng, vars, depth - 1, o, star_depth));
      case 2:
      case 3:
        return tt.sum(random_term(tt, rng, vars, depth - 1, o, star_depth),
                      random_term(tt, rng, vars, depth - 1, o, star_depth));
      case 4:
        if (!o.cap) break;
        return tt.cap(random_term(tt, rng, vars, depth - 1, o, star_depth),
                      random_term(tt, rng, vars, depth - 1, o, star_depth));
      case 5:
        if (!o.conv) break;
        return tt.conv(random_term(tt, rng, vars, depth - 1, o, star_depth));
      case 6:
        if (!o.star || star_depth >= o.max_star_nesting) break;
        return tt.star(random_term(tt, rng, vars, depth - 1, o, star_depth + 1));
      case 7:
        if (!o.loop) break;
        return tt.loop(random_term(tt, rng, vars, depth - 1, o, star_depth));
    }
  }
}

// Random while-program over the given tests and actions.
inline Term random_pwp(TermTable& tt, Rng& rng, const std::vector<VarId>& tests,
                       const std::vector<VarId>& actions, const Signature& sig,
                       int depth) {
  auto random_test = [&](auto&& self, int d) -> Term {
    if (d <= 0 || rng.below(3) == 0) {
      uint64_t pick = rng.below(tests.size() * 2 + 2);
      if (pick == tests.size() * 2) return tt.I();
      if (pick == tests.size() * 2 + 1) return tt.zero();
      VarId p = tests[pick / 2];
      return tt.var(pick % 2 ? sig.partner(p) : p);
    }
    Term a = self(self, d - 1), b = self(self, d - 1);
    return rng.coin() ? tt.sum(a, b) : tt.comp(a, b);
  };
  if (depth <= 0 || rng.below(6) == 0) {
    if (rng.below(3) == 0) return random_test(random_test, 1);
    return tt.var(actions[rng.below(actions.size())]);
  }
  switch (rng.below(6)) {
    case 0:
    case 1:
      return tt.comp(random_pwp(tt, rng, tests, actions, sig, depth - 1),
                     random_pwp(tt, rng, tests, actions, sig, depth - 1));
    case 2:
      return tt.ite(random_test(random_test, 1),
                    random_pwp(tt, rng, tests, actions, sig, depth - 1),
                    random_pwp(tt, rng, tests, actions, sig, depth - 1));
    case 3:
      return tt.while_(random_test(random_test, 1),
                       random_pwp(tt, rng, tests, actions, sig, depth - 1));
    case 4:
      return tt.loop(random_pwp(tt, rng, tests, actions, sig, depth - 1));
    default:
      return tt.dowhile(random_test(random_test, 1),
                        random_pwp(tt, rng, tests, actions, sig, depth - 1));
  }
}

inline Formula random_formula(TermTable& tt, Rng& rng,
                              const std::vector<VarId>& vars, int depth) {
  if (depth <= 0 || rng.below(3) == 0) {
    Term l = random_term(tt, rng, vars, 2);
    Term r = random_term(tt, rng, vars, 2);
    return rng.coin() ? f_leq(l, r) : f_eq(l, r);
  }
  switch (rng.below(4)) {
    case 0: return f_not(random_formula(tt, rng, vars, depth - 1));
    case 1:
      return f_and(random_formula(tt, rng, vars, depth - 1),
                   random_formula(tt, rng, vars, depth - 1));
    case 2:
      return f_or(random_formula(tt, rng, vars, depth - 1),
                  random_formula(tt, rng, vars, depth - 1));
    default:
      return f_implies(random_formula(tt, rng, vars, depth - 1),
                       random_formula(tt, rng, vars, depth - 1));
  }
}

// Random model over the listed variables honoring the packs of the class.
inline Model random_model(Rng& rng, const Signature& sig, const std::vector<VarId>& vars,
                          int n, const ClassSpec& cls = {}) {
  Model v;
  v.n = n;
  for (VarId x : vars) {
    bool func = (cls.drel && sig.kind(x) == VarKind::Action) ||
                (cls.pack_func && std::find(cls.pack_func->begin(), cls.pack_func->end(),
                                            x) != cls.pack_func->end());
    if (sig.kind(x) == VarKind::TestPos && cls.pack_test) {
      Rel r(n), rq(n);
      for (int i = 0; i < n; ++i) {
        if (rng.coin())
          r.set(i, i);
        else
          rq.set(i, i);
      }
      v.rel[x] = std::move(r);
      v.rel[sig.partner(x)] = std::move(rq);
    } else if (sig.kind(x) == VarKind::TestNeg && cls.pack_test) {
      continue;  // set with its partner
    } else if (func) {
      Rel r(n);
      for (int i = 0; i < n; ++i) {
        int succ = static_cast<int>(rng.below(n + 1));
        if (succ > 0) r.set(i, succ - 1);
      }
      v.rel[x] = std::move(r);
    } else {
      Rel r(n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          if (rng.coin()) r.set(i, j);
      v.rel[x] = std::move(r);
    }
  }
  return v;
}

}  // namespace relc
