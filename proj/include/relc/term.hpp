#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "relc/sig.hpp"

namespace relc {

// Core constructors I,0,x,;,+,˘,*,⁻ plus the derived operators that are kept
// as distinct tags before desugaring: ⊤, ∩, t↺, t⁺, domain, antidomain and
// the while-program forms. Evaluation treats a tag and its expansion alike;
// fragment classification needs the undesugared shape.
enum class Tag : uint8_t {
  I,
  Zero,
  Var,
  Comp,
  Union,
  Conv,
  Star,
  Neg,
  Top,      // 0⁻
  Cap,      // (a⁻+b⁻)⁻
  Loop,     // t ∩ I
  Plus,     // t ; t*
  Dom,      // (t⊤)↺
  Adom,     // ((t⊤)⁻)↺
  Ite,      // b;t + ~b;s
  While,    // (b;t)* ; ~b
  DoWhile,  // t ; While(b,t)
  IterN,    // (b;t)^n ; ~b
};

struct TermNode;
using Term = const TermNode*;

struct TermNode {
  Tag tag;
  VarId var = -1;                            // Var
  int k = 0;                                 // IterN
  Term a = nullptr, b = nullptr, c = nullptr;  // Ite: (cond, then, else)
  uint32_t id = 0;                           // intern index
};

struct TestGrammarError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct FragmentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Hash-consing arena. Equal constructor applications return the same node,
// so derived structures are DAGs and per-node memo tables stay small even
// for the compiled reduction terms.
class TermTable {
 public:
  Term I() { return get(Tag::I, -1, 0, nullptr, nullptr, nullptr); }
  Term zero() { return get(Tag::Zero, -1, 0, nullptr, nullptr, nullptr); }
  Term top() { return get(Tag::Top, -1, 0, nullptr, nullptr, nullptr); }
  Term var(VarId v) { return get(Tag::Var, v, 0, nullptr, nullptr, nullptr); }
  Term comp(Term x, Term y) { return get(Tag::Comp, -1, 0, x, y, nullptr); }
  Term sum(Term x, Term y) { return get(Tag::Union, -1, 0, x, y, nullptr); }
  Term conv(Term x) { return get(Tag::Conv, -1, 0, x, nullptr, nullptr); }
  Term star(Term x) { return get(Tag::Star, -1, 0, x, nullptr, nullptr); }
  Term neg(Term x) { return get(Tag::Neg, -1, 0, x, nullptr, nullptr); }
  Term cap(Term x, Term y) { return get(Tag::Cap, -1, 0, x, y, nullptr); }
  Term loop(Term x) { return get(Tag::Loop, -1, 0, x, nullptr, nullptr); }
  Term plus(Term x) { return get(Tag::Plus, -1, 0, x, nullptr, nullptr); }
  Term dom(Term x) { return get(Tag::Dom, -1, 0, x, nullptr, nullptr); }
  Term adom(Term x) { return get(Tag::Adom, -1, 0, x, nullptr, nullptr); }
  Term ite(Term b, Term t, Term s) { return get(Tag::Ite, -1, 0, b, t, s); }
  Term while_(Term b, Term t) { return get(Tag::While, -1, 0, b, t, nullptr); }
  Term dowhile(Term b, Term t) { return get(Tag::DoWhile, -1, 0, b, t, nullptr); }
  Term iter(int n, Term b, Term t) { return get(Tag::IterN, -1, n, b, t, nullptr); }

  // Σ of a list; Σ∅ = 0.
  Term sum_n(const std::vector<Term>& ts) {
    if (ts.empty()) return zero();
    Term r = ts[0];
    for (size_t i = 1; i < ts.size(); ++i) r = sum(r, ts[i]);
    return r;
  }

  // ⨟ of a list; empty product is I.
  Term comp_n(const std::vector<Term>& ts) {
    if (ts.empty()) return I();
    Term r = ts[0];
    for (size_t i = 1; i < ts.size(); ++i) r = comp(r, ts[i]);
    return r;
  }

  Term pow(Term t, int n) {
    if (n <= 0) return I();
    Term r = t;
    for (int i = 1; i < n; ++i) r = comp(r, t);
    return r;
  }

  // Same node shape with different children, for generic rewrites.
  Term rebuild(Tag tag, VarId var, int k, Term a, Term b, Term c) {
    return get(tag, var, k, a, b, c);
  }

  size_t node_count() const { return arena_.size(); }

 private:
  struct Key {
    Tag tag;
    VarId var;
    int k;
    Term a, b, c;
    bool operator==(const Key& o) const {
      return tag == o.tag && var == o.var && k == o.k && a == o.a && b == o.b &&
             c == o.c;
    }
  };
  struct KeyHash {
    size_t operator()(const Key& x) const {
      size_t h = static_cast<size_t>(x.tag) * 1000003u + static_cast<size_t>(x.var + 1);
      h = h * 1000003u + static_cast<size_t>(x.k);
      auto mix = [&h](Term t) {
        h = h * 1000003u + (t ? static_cast<size_t>(t->id) + 1 : 0);
      };
      mix(x.a);
      mix(x.b);
      mix(x.c);
      return h;
    }
  };

  Term get(Tag tag, VarId var, int k, Term a, Term b, Term c) {
    Key key{tag, var, k, a, b, c};
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    auto node = std::make_unique<TermNode>();
    node->tag = tag;
    node->var = var;
    node->k = k;
    node->a = a;
    node->b = b;
    node->c = c;
    node->id = static_cast<uint32_t>(arena_.size());
    Term t = node.get();
    arena_.push_back(std::move(node));
    memo_.emplace(key, t);
    return t;
  }

  std::vector<std::unique_ptr<TermNode>> arena_;
  std::unordered_map<Key, Term, KeyHash> memo_;
};

// b ∈ B iff built from test variables, I, 0, ; and + only.
inline bool is_test(const Signature& sig, Term t) {
  switch (t->tag) {
    case Tag::I:
    case Tag::Zero:
      return true;
    case Tag::Var:
      return sig.is_test(t->var);
    case Tag::Comp:
    case Tag::Union:
      return is_test(sig, t->a) && is_test(sig, t->b);
    default:
      return false;
  }
}

// Complement within the test grammar: p ↦ ~p, I ↦ 0, 0 ↦ I, and the two
// De Morgan swaps. Double application gives a term equal on test models.
inline Term complement_test(TermTable& tt, const Signature& sig, Term t) {
  switch (t->tag) {
    case Tag::I:
      return tt.zero();
    case Tag::Zero:
      return tt.I();
    case Tag::Var:
      if (!sig.is_test(t->var)) throw TestGrammarError("not a test variable");
      return tt.var(sig.partner(t->var));
    case Tag::Comp:
      return tt.sum(complement_test(tt, sig, t->a), complement_test(tt, sig, t->b));
    case Tag::Union:
      return tt.comp(complement_test(tt, sig, t->a), complement_test(tt, sig, t->b));
    default:
      throw TestGrammarError("term outside the test grammar");
  }
}

// Expands every derived tag into the core constructors.
inline Term desugar(TermTable& tt, const Signature& sig, Term t,
                    std::unordered_map<Term, Term>* memo = nullptr) {
  std::unordered_map<Term, Term> local;
  if (!memo) memo = &local;
  if (auto it = memo->find(t); it != memo->end()) return it->second;
  auto rec = [&](Term x) { return desugar(tt, sig, x, memo); };
  Term r = nullptr;
  switch (t->tag) {
    case Tag::I:
    case Tag::Zero:
    case Tag::Var:
      r = t;
      break;
    case Tag::Comp:
      r = tt.comp(rec(t->a), rec(t->b));
      break;
    case Tag::Union:
      r = tt.sum(rec(t->a), rec(t->b));
      break;
    case Tag::Conv:
      r = tt.conv(rec(t->a));
      break;
    case Tag::Star:
      r = tt.star(rec(t->a));
      break;
    case Tag::Neg:
      r = tt.neg(rec(t->a));
      break;
    case Tag::Top:
      r = tt.neg(tt.zero());
      break;
    case Tag::Cap:
      r = tt.neg(tt.sum(tt.neg(rec(t->a)), tt.neg(rec(t->b))));
      break;
    case Tag::Loop:
      r = rec(tt.cap(t->a, tt.I()));
      break;
    case Tag::Plus:
      r = tt.comp(rec(t->a), tt.star(rec(t->a)));
      break;
    case Tag::Dom:
      r = rec(tt.loop(tt.comp(t->a, tt.top())));
      break;
    case Tag::Adom:
      r = rec(tt.loop(tt.neg(tt.comp(t->a, tt.top()))));
      break;
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
    case Tag::IterN: {
      Term body = tt.pow(tt.comp(t->a, t->b), t->k);
      r = tt.comp(rec(body), rec(complement_test(tt, sig, t->a)));
      break;
    }
  }
  memo->emplace(t, r);
  return r;
}

// ‖t‖: symbol count of the desugared term, saturating (compiled reduction
// terms are DAGs whose tree size can overflow).
inline uint64_t term_size(TermTable& tt, const Signature& sig, Term t) {
  Term d = desugar(tt, sig, t);
  std::unordered_map<Term, uint64_t> memo;
  constexpr uint64_t kMax = std::numeric_limits<uint64_t>::max();
  auto add = [](uint64_t x, uint64_t y) { return x > kMax - y ? kMax : x + y; };
  auto rec = [&](auto&& self, Term u) -> uint64_t {
    if (auto it = memo.find(u); it != memo.end()) return it->second;
    uint64_t s = 1;
    if (u->a) s = add(s, self(self, u->a));
    if (u->b) s = add(s, self(self, u->b));
    if (u->c) s = add(s, self(self, u->c));
    memo.emplace(u, s);
    return s;
  };
  return rec(rec, d);
}

// t[w/x]: replaces every occurrence of the variable, including occurrences
// inside annotation positions. Desugar first if a replacement would leave
// an annotation outside the test grammar.
inline Term substitute(TermTable& tt, Term t, VarId x, Term w,
                       std::unordered_map<Term, Term>* memo = nullptr) {
  std::unordered_map<Term, Term> local;
  if (!memo) memo = &local;
  if (auto it = memo->find(t); it != memo->end()) return it->second;
  Term r = nullptr;
  auto rec = [&](Term u) { return substitute(tt, u, x, w, memo); };
  switch (t->tag) {
    case Tag::I:
    case Tag::Zero:
    case Tag::Top:
      r = t;
      break;
    case Tag::Var:
      r = (t->var == x) ? w : t;
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
      r = tt.star(rec(t->a));
      break;
    case Tag::Neg:
      r = tt.neg(rec(t->a));
      break;
    case Tag::Loop:
      r = tt.loop(rec(t->a));
      break;
    case Tag::Plus:
      r = tt.plus(rec(t->a));
      break;
    case Tag::Dom:
      r = tt.dom(rec(t->a));
      break;
    case Tag::Adom:
      r = tt.adom(rec(t->a));
      break;
    case Tag::Ite:
      r = tt.ite(rec(t->a), rec(t->b), rec(t->c));
      break;
    case Tag::While:
      r = tt.while_(rec(t->a), rec(t->b));
      break;
    case Tag::DoWhile:
      r = tt.dowhile(rec(t->a), rec(t->b));
      break;
    case Tag::IterN:
      r = tt.iter(t->k, rec(t->a), rec(t->b));
      break;
  }
  memo->emplace(t, r);
  return r;
}

inline void vars_of(Term t, std::set<VarId>& out) {
  if (t->tag == Tag::Var) out.insert(t->var);
  if (t->a) vars_of(t->a, out);
  if (t->b) vars_of(t->b, out);
  if (t->c) vars_of(t->c, out);
}

inline std::set<VarId> vars_of(Term t) {
  std::set<VarId> out;
  vars_of(t, out);
  return out;
}

enum class FragClass {
  Test,
  PwpLoop,      // while programs with ↺
  PwpLoopConv,  // plus converse on action atoms
  PwpCap,       // plus binary ∩
  PCoR,         // positive calculus (I,0,⊤,;,+,∩,˘,↺) + extension flags
  FullS,        // complement applied beyond ¬I / ¬x
};

struct Fragment {
  bool star = false;
  bool cap = false;
  bool conv = false;
  bool loop = false;
  bool top = false;
  bool neg_ident = false;  // ¬I
  bool neg_var = false;    // ¬x
  bool neg_full = false;   // ¬ of anything else
  FragClass cls = FragClass::PCoR;
  bool kl = false;               // {I,0,x,;,+,*} possibly with ∩/↺
  bool regular_program = false;  // tests and actions under ;,+,*

  std::string pcor_x() const {
    std::string s = "{";
    auto app = [&s](const char* op) {
      if (s.size() > 1) s += ",";
      s += op;
    };
    if (star) app("*");
    if (neg_ident) app("-I");
    if (neg_var) app("-x");
    s += "}";
    return s;
  }
};

namespace detail {

inline void frag_flags(Term t, Fragment& f) {
  switch (t->tag) {
    case Tag::Star:
      f.star = true;
      break;
    case Tag::Cap:
      f.cap = true;
      break;
    case Tag::Conv:
      f.conv = true;
      break;
    case Tag::Loop:
      f.loop = true;
      f.cap = true;  // ∩-sugar
      break;
    case Tag::Plus:
      f.star = true;
      break;
    case Tag::Top:
      f.top = true;
      break;
    case Tag::Dom:
      f.loop = true;
      f.cap = true;
      f.top = true;
      break;
    case Tag::Adom:
      f.loop = true;
      f.cap = true;
      f.top = true;
      f.neg_full = true;
      break;
    case Tag::While:
    case Tag::DoWhile:
      f.star = true;
      break;
    case Tag::IterN:
      break;
    case Tag::Neg:
      if (t->a->tag == Tag::Var)
        f.neg_var = true;
      else if (t->a->tag == Tag::I)
        f.neg_ident = true;
      else if (t->a->tag == Tag::Zero)
        f.top = true;
      else
        f.neg_full = true;
      break;
    default:
      break;
  }
  if (t->a) frag_flags(t->a, f);
  if (t->b) frag_flags(t->b, f);
  if (t->c) frag_flags(t->c, f);
}

// W grammar: b | x | t;t | t+_b t | t^{*_b} | t↺ (do-while and bounded
// iteration are sugar over the same shapes).
inline bool is_pwp(const Signature& sig, Term t, bool allow_conv, bool allow_cap) {
  if (is_test(sig, t)) return true;
  switch (t->tag) {
    case Tag::Var:
      return true;  // action atom
    case Tag::Conv:
      return allow_conv && t->a->tag == Tag::Var && !sig.is_test(t->a->var);
    case Tag::Cap:
      return allow_cap && is_pwp(sig, t->a, allow_conv, allow_cap) &&
             is_pwp(sig, t->b, allow_conv, allow_cap);
    case Tag::Comp:
      return is_pwp(sig, t->a, allow_conv, allow_cap) &&
             is_pwp(sig, t->b, allow_conv, allow_cap);
    case Tag::Loop:
      return is_pwp(sig, t->a, allow_conv, allow_cap);
    case Tag::Ite:
      return is_test(sig, t->a) && is_pwp(sig, t->b, allow_conv, allow_cap) &&
             is_pwp(sig, t->c, allow_conv, allow_cap);
    case Tag::While:
    case Tag::DoWhile:
    case Tag::IterN:
      return is_test(sig, t->a) && is_pwp(sig, t->b, allow_conv, allow_cap);
    default:
      return false;
  }
}

inline bool is_kl(const Signature& sig, Term t) {
  switch (t->tag) {
    case Tag::I:
    case Tag::Zero:
    case Tag::Var:
      return true;
    case Tag::Comp:
    case Tag::Union:
    case Tag::Cap:
      return is_kl(sig, t->a) && is_kl(sig, t->b);
    case Tag::Loop:
    case Tag::Star:
    case Tag::Plus:
      return is_kl(sig, t->a);
    default:
      return false;
  }
}

inline bool is_regular_program(const Signature& sig, Term t) {
  if (is_test(sig, t)) return true;
  switch (t->tag) {
    case Tag::Var:
      return true;
    case Tag::Comp:
    case Tag::Union:
      return is_regular_program(sig, t->a) && is_regular_program(sig, t->b);
    case Tag::Star:
    case Tag::Plus:
      return is_regular_program(sig, t->a);
    case Tag::Ite:
      return is_test(sig, t->a) && is_regular_program(sig, t->b) &&
             is_regular_program(sig, t->c);
    case Tag::While:
    case Tag::DoWhile:
    case Tag::IterN:
      return is_test(sig, t->a) && is_regular_program(sig, t->b);
    default:
      return false;
  }
}

}  // namespace detail

inline Fragment classify_fragment(const Signature& sig, Term t) {
  Fragment f;
  detail::frag_flags(t, f);
  f.kl = detail::is_kl(sig, t);
  f.regular_program = detail::is_regular_program(sig, t);
  if (is_test(sig, t))
    f.cls = FragClass::Test;
  else if (detail::is_pwp(sig, t, false, false))
    f.cls = FragClass::PwpLoop;
  else if (detail::is_pwp(sig, t, true, false))
    f.cls = FragClass::PwpLoopConv;
  else if (detail::is_pwp(sig, t, false, true))
    f.cls = FragClass::PwpCap;
  else if (f.neg_full)
    f.cls = FragClass::FullS;
  else
    f.cls = FragClass::PCoR;
  return f;
}

// Constant folding with REL-valid identities only; used to collapse the
// degenerate compiled terms that contain Σ∅ = 0 factors.
inline Term simplify_zeros(TermTable& tt, const Signature& sig, Term t,
                           std::unordered_map<Term, Term>* memo = nullptr) {
  std::unordered_map<Term, Term> local;
  if (!memo) memo = &local;
  if (auto it = memo->find(t); it != memo->end()) return it->second;
  auto rec = [&](Term u) { return simplify_zeros(tt, sig, u, memo); };
  auto is0 = [](Term u) { return u->tag == Tag::Zero; };
  auto isI = [](Term u) { return u->tag == Tag::I; };
  Term r = nullptr;
  switch (t->tag) {
    case Tag::I:
    case Tag::Zero:
    case Tag::Top:
    case Tag::Var:
      r = t;
      break;
    case Tag::Comp: {
      Term a = rec(t->a), b = rec(t->b);
      if (is0(a) || is0(b))
        r = tt.zero();
      else if (isI(a))
        r = b;
      else if (isI(b))
        r = a;
      else
        r = tt.comp(a, b);
      break;
    }
    case Tag::Union: {
      Term a = rec(t->a), b = rec(t->b);
      if (is0(a))
        r = b;
      else if (is0(b))
        r = a;
      else
        r = tt.sum(a, b);
      break;
    }
    case Tag::Cap: {
      Term a = rec(t->a), b = rec(t->b);
      if (is0(a) || is0(b))
        r = tt.zero();
      else if (isI(a) && isI(b))
        r = tt.I();
      else
        r = tt.cap(a, b);
      break;
    }
    case Tag::Conv: {
      Term a = rec(t->a);
      r = is0(a) ? tt.zero() : isI(a) ? tt.I() : tt.conv(a);
      break;
    }
    case Tag::Star: {
      Term a = rec(t->a);
      r = (is0(a) || isI(a)) ? tt.I() : tt.star(a);
      break;
    }
    case Tag::Plus: {
      Term a = rec(t->a);
      r = is0(a) ? tt.zero() : isI(a) ? tt.I() : tt.plus(a);
      break;
    }
    case Tag::Loop: {
      Term a = rec(t->a);
      r = is0(a) ? tt.zero() : isI(a) ? tt.I() : tt.loop(a);
      break;
    }
    case Tag::Dom: {
      Term a = rec(t->a);
      r = is0(a) ? tt.zero() : tt.dom(a);
      break;
    }
    case Tag::Adom: {
      Term a = rec(t->a);
      r = is0(a) ? tt.I() : tt.adom(a);
      break;
    }
    case Tag::Neg:
      r = tt.neg(rec(t->a));
      break;
    case Tag::Ite: {
      Term b = rec(t->b), c = rec(t->c);
      if (is0(b) && is0(c))
        r = tt.zero();
      else
        r = tt.ite(t->a, b, c);
      break;
    }
    case Tag::While: {
      Term body = rec(t->b);
      if (is0(body))
        r = complement_test(tt, sig, t->a);
      else
        r = tt.while_(t->a, body);
      break;
    }
    case Tag::DoWhile: {
      Term body = rec(t->b);
      if (is0(body))
        r = tt.zero();
      else
        r = tt.dowhile(t->a, body);
      break;
    }
    case Tag::IterN: {
      Term body = rec(t->b);
      if (is0(body))
        r = t->k >= 1 ? tt.zero() : complement_test(tt, sig, t->a);
      else
        r = tt.iter(t->k, t->a, body);
      break;
    }
  }
  memo->emplace(t, r);
  return r;
}

}  // namespace relc
