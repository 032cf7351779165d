#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "relc/formula.hpp"
#include "relc/term.hpp"

namespace relc {

struct UnknownVariable : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Binary relation over {0..n-1} as a row-major bitset.
class Rel {
 public:
  Rel() = default;
  explicit Rel(int n) : n_(n), w_((n + 63) / 64), bits_(static_cast<size_t>(n) * w_, 0) {}

  int n() const { return n_; }
  bool get(int i, int j) const {
    return (bits_[row_off(i) + j / 64] >> (j % 64)) & 1u;
  }
  void set(int i, int j, bool v = true) {
    uint64_t m = uint64_t{1} << (j % 64);
    if (v)
      bits_[row_off(i) + j / 64] |= m;
    else
      bits_[row_off(i) + j / 64] &= ~m;
  }

  bool operator==(const Rel& o) const { return n_ == o.n_ && bits_ == o.bits_; }
  bool operator!=(const Rel& o) const { return !(*this == o); }

  bool empty() const {
    for (uint64_t x : bits_)
      if (x) return false;
    return true;
  }

  size_t count() const {
    size_t c = 0;
    for (uint64_t x : bits_) c += static_cast<size_t>(__builtin_popcountll(x));
    return c;
  }

  bool subset_of(const Rel& o) const {
    for (size_t i = 0; i < bits_.size(); ++i)
      if (bits_[i] & ~o.bits_[i]) return false;
    return true;
  }

  std::vector<std::pair<int, int>> pairs() const {
    std::vector<std::pair<int, int>> out;
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j)
        if (get(i, j)) out.emplace_back(i, j);
    return out;
  }

  std::optional<std::pair<int, int>> first_pair() const {
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j)
        if (get(i, j)) return std::make_pair(i, j);
    return std::nullopt;
  }

  // row i as word span
  const uint64_t* row(int i) const { return bits_.data() + row_off(i); }
  uint64_t* row(int i) { return bits_.data() + row_off(i); }
  int words_per_row() const { return w_; }

  friend Rel rel_union(const Rel& a, const Rel& b) {
    Rel r(a.n_);
    for (size_t i = 0; i < r.bits_.size(); ++i) r.bits_[i] = a.bits_[i] | b.bits_[i];
    return r;
  }
  friend Rel rel_inter(const Rel& a, const Rel& b) {
    Rel r(a.n_);
    for (size_t i = 0; i < r.bits_.size(); ++i) r.bits_[i] = a.bits_[i] & b.bits_[i];
    return r;
  }
  friend Rel rel_neg(const Rel& a) {
    Rel r(a.n_);
    for (size_t i = 0; i < r.bits_.size(); ++i) r.bits_[i] = ~a.bits_[i];
    r.mask_tail();
    return r;
  }
  friend Rel rel_conv(const Rel& a) {
    Rel r(a.n_);
    for (int i = 0; i < a.n_; ++i)
      for (int j = 0; j < a.n_; ++j)
        if (a.get(i, j)) r.set(j, i);
    return r;
  }
  friend Rel rel_comp(const Rel& a, const Rel& b) {
    Rel r(a.n_);
    for (int i = 0; i < a.n_; ++i) {
      uint64_t* out = r.row(i);
      for (int jw = 0; jw < a.w_; ++jw) {
        uint64_t word = a.row(i)[jw];
        while (word) {
          int bit = __builtin_ctzll(word);
          word &= word - 1;
          const uint64_t* src = b.row(jw * 64 + bit);
          for (int k = 0; k < a.w_; ++k) out[k] |= src[k];
        }
      }
    }
    return r;
  }

 private:
  size_t row_off(int i) const { return static_cast<size_t>(i) * w_; }
  void mask_tail() {
    if (n_ % 64 == 0) return;
    uint64_t mask = (uint64_t{1} << (n_ % 64)) - 1;
    for (int i = 0; i < n_; ++i) bits_[row_off(i) + w_ - 1] &= mask;
  }

  int n_ = 0, w_ = 0;
  std::vector<uint64_t> bits_;
};

inline Rel rel_empty(int n) { return Rel(n); }
inline Rel rel_diag(int n) {
  Rel r(n);
  for (int i = 0; i < n; ++i) r.set(i, i);
  return r;
}
inline Rel rel_full(int n) { return rel_neg(Rel(n)); }

// Reflexive-transitive closure by repeated squaring.
inline Rel rel_star(const Rel& a) {
  Rel s = rel_union(rel_diag(a.n()), a);
  for (;;) {
    Rel next = rel_union(s, rel_comp(s, s));
    if (next == s) return s;
    s = next;
  }
}

struct Model {
  int n = 1;
  std::map<VarId, Rel> rel;

  const Rel& at(VarId v) const {
    auto it = rel.find(v);
    if (it == rel.end()) throw UnknownVariable("undeclared variable id " + std::to_string(v));
    return it->second;
  }
  bool has(VarId v) const { return rel.count(v) > 0; }
};

namespace detail {

// Complement of a test evaluated directly through the partner variables,
// so evaluation of annotation tags needs no term construction.
inline Rel eval_test_complement(const Model& v, const Signature& sig, Term b);

inline Rel evaluate_memo(const Model& v, const Signature& sig, Term t,
                         std::unordered_map<Term, Rel>& memo) {
  if (auto it = memo.find(t); it != memo.end()) return it->second;
  auto rec = [&](Term u) { return evaluate_memo(v, sig, u, memo); };
  Rel r;
  switch (t->tag) {
    case Tag::I:
      r = rel_diag(v.n);
      break;
    case Tag::Zero:
      r = rel_empty(v.n);
      break;
    case Tag::Top:
      r = rel_full(v.n);
      break;
    case Tag::Var:
      r = v.at(t->var);
      break;
    case Tag::Comp:
      r = rel_comp(rec(t->a), rec(t->b));
      break;
    case Tag::Union:
      r = rel_union(rec(t->a), rec(t->b));
      break;
    case Tag::Cap:
      r = rel_inter(rec(t->a), rec(t->b));
      break;
    case Tag::Conv:
      r = rel_conv(rec(t->a));
      break;
    case Tag::Star:
      r = rel_star(rec(t->a));
      break;
    case Tag::Neg:
      r = rel_neg(rec(t->a));
      break;
    case Tag::Loop:
      r = rel_inter(rec(t->a), rel_diag(v.n));
      break;
    case Tag::Plus: {
      Rel x = rec(t->a);
      r = rel_comp(x, rel_star(x));
      break;
    }
    case Tag::Dom: {
      Rel x = rec(t->a);
      r = rel_empty(v.n);
      for (int i = 0; i < v.n; ++i) {
        bool any = false;
        for (int k = 0; k < x.words_per_row() && !any; ++k) any = x.row(i)[k] != 0;
        if (any) r.set(i, i);
      }
      break;
    }
    case Tag::Adom: {
      Rel x = rec(t->a);
      r = rel_empty(v.n);
      for (int i = 0; i < v.n; ++i) {
        bool any = false;
        for (int k = 0; k < x.words_per_row() && !any; ++k) any = x.row(i)[k] != 0;
        if (!any) r.set(i, i);
      }
      break;
    }
    case Tag::Ite: {
      Rel cond = rec(t->a);
      Rel ncond = eval_test_complement(v, sig, t->a);
      r = rel_union(rel_comp(cond, rec(t->b)), rel_comp(ncond, rec(t->c)));
      break;
    }
    case Tag::While: {
      Rel body = rel_comp(rec(t->a), rec(t->b));
      r = rel_comp(rel_star(body), eval_test_complement(v, sig, t->a));
      break;
    }
    case Tag::DoWhile: {
      Rel cond = rec(t->a);
      Rel body = rec(t->b);
      Rel w = rel_comp(rel_star(rel_comp(cond, body)), eval_test_complement(v, sig, t->a));
      r = rel_comp(body, w);
      break;
    }
    case Tag::IterN: {
      Rel step = rel_comp(rec(t->a), rec(t->b));
      Rel acc = rel_diag(v.n);
      for (int i = 0; i < t->k; ++i) acc = rel_comp(acc, step);
      r = rel_comp(acc, eval_test_complement(v, sig, t->a));
      break;
    }
  }
  memo.emplace(t, r);
  return r;
}

inline Rel eval_test_complement(const Model& v, const Signature& sig, Term b) {
  switch (b->tag) {
    case Tag::I:
      return rel_empty(v.n);
    case Tag::Zero:
      return rel_diag(v.n);
    case Tag::Var:
      if (!sig.is_test(b->var)) throw TestGrammarError("annotation is not a test");
      return v.at(sig.partner(b->var));
    case Tag::Comp: {
      return rel_union(eval_test_complement(v, sig, b->a),
                       eval_test_complement(v, sig, b->b));
    }
    case Tag::Union: {
      return rel_comp(eval_test_complement(v, sig, b->a),
                      eval_test_complement(v, sig, b->b));
    }
    default:
      throw TestGrammarError("annotation outside the test grammar");
  }
}

}  // namespace detail

inline Rel evaluate(const Model& v, const Signature& sig, Term t) {
  std::unordered_map<Term, Rel> memo;
  return detail::evaluate_memo(v, sig, t, memo);
}

// Shared-memo variant for evaluating many terms on one model.
class Evaluator {
 public:
  Evaluator(const Model& v, const Signature& sig) : v_(v), sig_(sig) {}
  const Rel& operator()(Term t) {
    auto it = memo_.find(t);
    if (it != memo_.end()) return it->second;
    detail::evaluate_memo(v_, sig_, t, memo_);
    return memo_.at(t);
  }

 private:
  const Model& v_;
  const Signature& sig_;
  std::unordered_map<Term, Rel> memo_;
};

inline bool holds(const Model& v, const Signature& sig, const Formula& f) {
  switch (f->tag) {
    case FTag::Eq:
      return evaluate(v, sig, f->l) == evaluate(v, sig, f->r);
    case FTag::Leq:
      return evaluate(v, sig, f->l).subset_of(evaluate(v, sig, f->r));
    case FTag::And:
      return holds(v, sig, f->a) && holds(v, sig, f->b);
    case FTag::Not:
      return !holds(v, sig, f->a);
  }
  return false;
}

// Hypothesis packs over a base class.
struct ClassSpec {
  bool drel = false;                          // every action is a partial function
  bool pack_test = false;                     // p ∩ ~p = 0 and p + ~p = I per pair
  std::optional<std::vector<VarId>> pack_func;  // a˘a ≤ I for the listed variables
  std::optional<std::array<VarId, 4>> pack_grid;  // E,N,W,S torus equations
  std::vector<Formula> extra;

  static ClassSpec rel() { return {}; }
  static ClassSpec drel_class() {
    ClassSpec c;
    c.drel = true;
    return c;
  }
  ClassSpec& with_test() {
    pack_test = true;
    return *this;
  }
};

inline bool is_partial_function(const Rel& r) {
  for (int i = 0; i < r.n(); ++i) {
    int cnt = 0;
    for (int j = 0; j < r.n(); ++j)
      if (r.get(i, j) && ++cnt > 1) return false;
  }
  return true;
}

inline bool check_class(const Model& v, const Signature& sig, const ClassSpec& c) {
  if (c.drel) {
    for (const auto& [var, r] : v.rel)
      if (sig.kind(var) == VarKind::Action && !is_partial_function(r)) return false;
  }
  if (c.pack_func) {
    for (VarId a : *c.pack_func)
      if (!is_partial_function(v.at(a))) return false;
  }
  if (c.pack_test) {
    Rel diag = rel_diag(v.n);
    for (const auto& [var, r] : v.rel) {
      if (sig.kind(var) != VarKind::TestPos) continue;
      VarId q = sig.partner(var);
      if (!v.has(q)) return false;
      const Rel& rq = v.at(q);
      if (!rel_inter(r, rq).empty()) return false;
      if (rel_union(r, rq) != diag) return false;
    }
  }
  if (c.pack_grid) {
    auto [E, N, W, S] = *c.pack_grid;
    Rel diag = rel_diag(v.n);
    const Rel &re = v.at(E), &rn = v.at(N), &rw = v.at(W), &rs = v.at(S);
    if (rel_comp(re, rw) != diag) return false;
    if (rel_comp(rw, re) != diag) return false;
    if (rel_comp(rn, rs) != diag) return false;
    if (rel_comp(rs, rn) != diag) return false;
    Rel cyc = rel_comp(rel_comp(re, rn), rel_comp(rw, rs));
    if (!diag.subset_of(cyc)) return false;
    Rel all = rel_union(rel_union(re, rn), rel_union(rw, rs));
    if (rel_star(all) != rel_full(v.n)) return false;
  }
  for (const auto& f : c.extra)
    if (!holds(v, sig, f)) return false;
  return true;
}

inline Model submodel(const Model& v, const std::vector<int>& keep) {
  if (keep.empty()) throw ModelError("empty submodel universe");
  std::vector<int> idx(v.n, -1);
  std::vector<int> sorted = keep;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  for (size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i] < 0 || sorted[i] >= v.n) throw ModelError("submodel vertex out of range");
    idx[sorted[i]] = static_cast<int>(i);
  }
  Model out;
  out.n = static_cast<int>(sorted.size());
  for (const auto& [var, r] : v.rel) {
    Rel nr(out.n);
    for (int i : sorted)
      for (int j : sorted)
        if (r.get(i, j)) nr.set(idx[i], idx[j]);
    out.rel.emplace(var, std::move(nr));
  }
  return out;
}

struct NotEquivalence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Quotient by the equivalence v(q); relations are existential images.
inline Model quotient(const Model& v, const Signature& sig, VarId q,
                      std::vector<int>* cls_out = nullptr) {
  const Rel& e = v.at(q);
  for (int i = 0; i < v.n; ++i)
    if (!e.get(i, i)) throw NotEquivalence("not reflexive");
  for (int i = 0; i < v.n; ++i)
    for (int j = 0; j < v.n; ++j) {
      if (e.get(i, j) && !e.get(j, i)) throw NotEquivalence("not symmetric");
      if (e.get(i, j))
        for (int k = 0; k < v.n; ++k)
          if (e.get(j, k) && !e.get(i, k)) throw NotEquivalence("not transitive");
    }
  std::vector<int> cls(v.n, -1);
  int m = 0;
  for (int i = 0; i < v.n; ++i) {
    if (cls[i] >= 0) continue;
    cls[i] = m;
    for (int j = i + 1; j < v.n; ++j)
      if (e.get(i, j)) cls[j] = m;
    ++m;
  }
  Model out;
  out.n = m;
  for (const auto& [var, r] : v.rel) {
    Rel nr(m);
    for (int i = 0; i < v.n; ++i)
      for (int j = 0; j < v.n; ++j)
        if (r.get(i, j)) nr.set(cls[i], cls[j]);
    out.rel.emplace(var, std::move(nr));
  }
  if (cls_out) *cls_out = cls;
  (void)sig;
  return out;
}

// v[w/x]: rebinds x to the evaluated relation of w, without mutating v.
inline Model rebind(const Model& v, const Signature& sig, VarId x, Term w) {
  Model out = v;
  out.rel[x] = evaluate(v, sig, w);
  return out;
}

// Enumeration of all models over the given variables satisfying the packs,
// in deterministic lexicographic order. Test variables range over diagonal
// subsets with the partner forced; variables under a func pack (or any
// action under DREL) range over partial-function successor tables; other
// variables range over all bitsets. seed/stride partition the space.
struct EnumSpec {
  std::vector<VarId> vars;  // positive test vars stand for their pair
  ClassSpec cls;
  int max_n = 3;
  uint64_t stride = 1, offset = 0;
};

namespace detail {

struct VarGen {
  VarId var;
  VarId partner = -1;  // test pair
  enum class Mode { Bitset, Func, TestDiag } mode;
  uint64_t count(int n) const {
    switch (mode) {
      case Mode::Bitset:
        return n * n >= 63 ? 0 : (uint64_t{1} << (n * n));
      case Mode::Func: {
        uint64_t c = 1;
        for (int i = 0; i < n; ++i) c *= static_cast<uint64_t>(n) + 1;
        return c;
      }
      case Mode::TestDiag:
        return uint64_t{1} << n;
    }
    return 0;
  }
  void fill(Model& v, int n, uint64_t code) const {
    switch (mode) {
      case Mode::Bitset: {
        Rel r(n);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            if ((code >> (i * n + j)) & 1) r.set(i, j);
        v.rel[var] = std::move(r);
        break;
      }
      case Mode::Func: {
        Rel r(n);
        for (int i = 0; i < n; ++i) {
          int succ = static_cast<int>(code % (n + 1));
          code /= (n + 1);
          if (succ > 0) r.set(i, succ - 1);
        }
        v.rel[var] = std::move(r);
        break;
      }
      case Mode::TestDiag: {
        Rel r(n), rq(n);
        for (int i = 0; i < n; ++i) {
          if ((code >> i) & 1)
            r.set(i, i);
          else
            rq.set(i, i);
        }
        v.rel[var] = std::move(r);
        v.rel[partner] = std::move(rq);
        break;
      }
    }
  }
};

}  // namespace detail

inline void enumerate_models(const Signature& sig, const EnumSpec& spec,
                             const std::function<bool(const Model&)>& fn) {
  std::vector<detail::VarGen> gens;
  for (VarId v : spec.vars) {
    detail::VarGen g;
    g.var = v;
    if (sig.kind(v) == VarKind::TestPos && spec.cls.pack_test) {
      g.mode = detail::VarGen::Mode::TestDiag;
      g.partner = sig.partner(v);
    } else if (sig.kind(v) == VarKind::TestPos || sig.kind(v) == VarKind::TestNeg) {
      g.mode = detail::VarGen::Mode::Bitset;
    } else if ((spec.cls.drel && sig.kind(v) == VarKind::Action) ||
               (spec.cls.pack_func &&
                std::find(spec.cls.pack_func->begin(), spec.cls.pack_func->end(), v) !=
                    spec.cls.pack_func->end())) {
      g.mode = detail::VarGen::Mode::Func;
    } else {
      g.mode = detail::VarGen::Mode::Bitset;
    }
    gens.push_back(g);
  }
  uint64_t counter = 0;
  for (int n = 1; n <= spec.max_n; ++n) {
    std::vector<uint64_t> counts;
    uint64_t total = 1;
    bool overflow = false;
    for (const auto& g : gens) {
      uint64_t c = g.count(n);
      if (c == 0) overflow = true;
      counts.push_back(c);
      if (!overflow && total > (uint64_t{1} << 62) / (c ? c : 1)) overflow = true;
      if (!overflow) total *= c;
    }
    if (overflow) throw ModelError("enumeration space too large");
    for (uint64_t code = 0; code < total; ++code) {
      if (spec.stride > 1 && (counter++ % spec.stride) != spec.offset) continue;
      Model v;
      v.n = n;
      uint64_t rest = code;
      for (size_t gi = 0; gi < gens.size(); ++gi) {
        gens[gi].fill(v, n, rest % counts[gi]);
        rest /= counts[gi];
      }
      if (!check_class(v, sig, spec.cls)) continue;
      if (!fn(v)) return;
    }
  }
}

}  // namespace relc
