#pragma once

#include <cctype>
#include <cstdint>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "relc/formula.hpp"
#include "relc/model.hpp"
#include "relc/term.hpp"

namespace relc {

struct ParseError : std::runtime_error {
  int line, col;
  ParseError(const std::string& msg, int line_, int col_)
      : std::runtime_error(msg + " at " + std::to_string(line_) + ":" +
                           std::to_string(col_)),
        line(line_),
        col(col_) {}
};

namespace detail {

enum class Tok : uint8_t {
  Ident, Number, LParen, RParen, Comma,
  Star, Caret, CaretPlus, At, Bang, Semi, Amp, Plus,
  Leq, EqEq, AndAnd, OrOr, Arrow,
  End
};

struct Token {
  Tok kind;
  std::string text;
  long long num = 0;
  int line = 1, col = 1;
};

inline bool ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}
inline bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$' ||
         c == '\'';
}

inline std::vector<Token> lex(const std::string& src) {
  std::vector<Token> out;
  int line = 1, col = 1;
  size_t i = 0;
  while (i < src.size()) {
    char c = src[i];
    if (c == '\n') {
      ++line;
      col = 1;
      ++i;
      continue;
    }
    if (c == ' ' || c == '\t' || c == '\r') {
      ++col;
      ++i;
      continue;
    }
    if (c == '#') {
      while (i < src.size() && src[i] != '\n') ++i;
      continue;
    }
    int tline = line, tcol = col;
    auto located = [&](Tok k, std::string text, size_t len) {
      out.push_back({k, std::move(text), 0, tline, tcol});
      i += len;
      col += static_cast<int>(len);
    };
    switch (c) {
      case '(': located(Tok::LParen, "(", 1); continue;
      case ')': located(Tok::RParen, ")", 1); continue;
      case ',': located(Tok::Comma, ",", 1); continue;
      case '*': located(Tok::Star, "*", 1); continue;
      case '@': located(Tok::At, "@", 1); continue;
      case '!': located(Tok::Bang, "!", 1); continue;
      case ';': located(Tok::Semi, ";", 1); continue;
      case '+': located(Tok::Plus, "+", 1); continue;
      case '^':
        if (i + 1 < src.size() && src[i + 1] == '+')
          located(Tok::CaretPlus, "^+", 2);
        else
          located(Tok::Caret, "^", 1);
        continue;
      case '&':
        if (i + 1 < src.size() && src[i + 1] == '&')
          located(Tok::AndAnd, "&&", 2);
        else
          located(Tok::Amp, "&", 1);
        continue;
      case '|':
        if (i + 1 < src.size() && src[i + 1] == '|') {
          located(Tok::OrOr, "||", 2);
          continue;
        }
        throw ParseError("stray '|'", tline, tcol);
      case '<':
        if (i + 1 < src.size() && src[i + 1] == '=') {
          located(Tok::Leq, "<=", 2);
          continue;
        }
        throw ParseError("stray '<'", tline, tcol);
      case '=':
        if (i + 1 < src.size() && src[i + 1] == '=') {
          located(Tok::EqEq, "==", 2);
          continue;
        }
        if (i + 1 < src.size() && src[i + 1] == '>') {
          located(Tok::Arrow, "=>", 2);
          continue;
        }
        throw ParseError("stray '='", tline, tcol);
      default: break;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t j = i;
      long long n = 0;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) {
        n = n * 10 + (src[j] - '0');
        if (n > 1000000000) throw ParseError("number too large", tline, tcol);
        ++j;
      }
      Token t{Tok::Number, src.substr(i, j - i), n, tline, tcol};
      out.push_back(t);
      col += static_cast<int>(j - i);
      i = j;
      continue;
    }
    if (ident_start(c) || (c == '~' && i + 1 < src.size() && ident_start(src[i + 1]))) {
      size_t j = i + (c == '~' ? 2 : 1);
      while (j < src.size() && ident_char(src[j])) ++j;
      Token t{Tok::Ident, src.substr(i, j - i), 0, tline, tcol};
      out.push_back(t);
      col += static_cast<int>(j - i);
      i = j;
      continue;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", tline, tcol);
  }
  out.push_back({Tok::End, "", 0, line, col});
  return out;
}

inline bool is_keyword(const std::string& s) {
  return s == "I" || s == "TOP" || s == "ite" || s == "while" ||
         s == "dowhile" || s == "dom" || s == "adom" || s == "iter" ||
         s == "not";
}

class Parser {
 public:
  Parser(TermTable& tt, Signature& sig, std::vector<Token> toks, bool strict)
      : tt_(tt), sig_(sig), toks_(std::move(toks)), strict_(strict) {}

  Term term() {
    Term t = parse_union();
    expect(Tok::End, "end of input");
    return t;
  }

  Formula formula() {
    Formula f = parse_implies();
    expect(Tok::End, "end of input");
    return f;
  }

 private:
  TermTable& tt_;
  Signature& sig_;
  std::vector<Token> toks_;
  bool strict_;
  bool test_ctx_ = false;
  size_t pos_ = 0;

  const Token& cur() const { return toks_[pos_]; }
  bool at(Tok k) const { return cur().kind == k; }
  bool eat(Tok k) {
    if (!at(k)) return false;
    ++pos_;
    return true;
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg, cur().line, cur().col);
  }
  void expect(Tok k, const std::string& what) {
    if (!eat(k)) fail("expected " + what);
  }

  Term parse_union() {
    Term t = parse_cap();
    while (eat(Tok::Plus)) t = tt_.sum(t, parse_cap());
    return t;
  }
  Term parse_cap() {
    Term t = parse_comp();
    while (eat(Tok::Amp)) t = tt_.cap(t, parse_comp());
    return t;
  }
  Term parse_comp() {
    Term t = parse_prefix();
    while (eat(Tok::Semi)) t = tt_.comp(t, parse_prefix());
    return t;
  }
  Term parse_prefix() {
    if (eat(Tok::Bang)) return tt_.neg(parse_prefix());
    return parse_postfix();
  }
  Term parse_postfix() {
    Term t = parse_atom();
    for (;;) {
      if (eat(Tok::Star))
        t = tt_.star(t);
      else if (eat(Tok::CaretPlus))
        t = tt_.plus(t);
      else if (eat(Tok::Caret))
        t = tt_.conv(t);
      else if (eat(Tok::At))
        t = tt_.loop(t);
      else
        return t;
    }
  }
  Term parse_annotation() {
    bool saved = test_ctx_;
    test_ctx_ = true;
    Term b = parse_union();
    test_ctx_ = saved;
    return b;
  }
  Term parse_atom() {
    if (eat(Tok::LParen)) {
      Term t = parse_union();
      expect(Tok::RParen, "')'");
      return t;
    }
    if (at(Tok::Number)) {
      if (cur().num != 0) fail("only the constant 0 may appear here");
      ++pos_;
      return tt_.zero();
    }
    if (!at(Tok::Ident)) fail("expected a term");
    std::string name = cur().text;
    Token tok = cur();
    ++pos_;
    if (name == "I") return tt_.I();
    if (name == "TOP") return tt_.top();
    if (name == "dom" || name == "adom") {
      expect(Tok::LParen, "'('");
      Term t = parse_union();
      expect(Tok::RParen, "')'");
      return name == "dom" ? tt_.dom(t) : tt_.adom(t);
    }
    if (name == "ite") {
      expect(Tok::LParen, "'('");
      Term b = parse_annotation();
      expect(Tok::Comma, "','");
      Term t = parse_union();
      expect(Tok::Comma, "','");
      Term s = parse_union();
      expect(Tok::RParen, "')'");
      return tt_.ite(b, t, s);
    }
    if (name == "while" || name == "dowhile") {
      expect(Tok::LParen, "'('");
      Term b = parse_annotation();
      expect(Tok::Comma, "','");
      Term t = parse_union();
      expect(Tok::RParen, "')'");
      return name == "while" ? tt_.while_(b, t) : tt_.dowhile(b, t);
    }
    if (name == "iter") {
      expect(Tok::LParen, "'('");
      if (!at(Tok::Number)) fail("expected an iteration count");
      int k = static_cast<int>(cur().num);
      ++pos_;
      expect(Tok::Comma, "','");
      Term b = parse_annotation();
      expect(Tok::Comma, "','");
      Term t = parse_union();
      expect(Tok::RParen, "')'");
      return tt_.iter(k, b, t);
    }
    if (name == "not") fail("'not' is a formula operator");
    return tt_.var(resolve(name, tok));
  }

  VarId resolve(const std::string& name, const Token& tok) {
    VarId v = sig_.find(name);
    if (v >= 0) return v;
    if (strict_) throw UnknownVariable("unknown variable '" + name + "'");
    try {
      if (name[0] == '~') {
        sig_.test(name.substr(1));
        return sig_.find(name);
      }
      if (test_ctx_) return sig_.test(name).first;
      return sig_.action(name);
    } catch (const SigError& e) {
      throw ParseError(e.what(), tok.line, tok.col);
    }
  }

  Formula parse_implies() {
    Formula l = parse_or();
    if (eat(Tok::Arrow)) return f_implies(l, parse_implies());
    return l;
  }
  Formula parse_or() {
    Formula l = parse_and();
    while (eat(Tok::OrOr)) l = f_or(l, parse_and());
    return l;
  }
  Formula parse_and() {
    Formula l = parse_not();
    while (eat(Tok::AndAnd)) l = f_and(l, parse_not());
    return l;
  }
  Formula parse_not() {
    if (at(Tok::Ident) && cur().text == "not") {
      ++pos_;
      return f_not(parse_not());
    }
    return parse_fatom();
  }
  Formula parse_fatom() {
    if (at(Tok::LParen)) {
      size_t saved = pos_;
      ++pos_;
      try {
        Formula f = parse_implies();
        expect(Tok::RParen, "')'");
        return f;
      } catch (const ParseError&) {
        pos_ = saved;
      }
    }
    Term l = parse_union();
    if (eat(Tok::Leq)) return f_leq(l, parse_union());
    if (eat(Tok::EqEq)) return f_eq(l, parse_union());
    fail("expected '<=' or '=='");
  }
};

}  // namespace detail

inline Term parse_term(TermTable& tt, Signature& sig, const std::string& src,
                       bool strict = false) {
  detail::Parser p(tt, sig, detail::lex(src), strict);
  return p.term();
}

inline Formula parse_formula(TermTable& tt, Signature& sig,
                             const std::string& src, bool strict = false) {
  detail::Parser p(tt, sig, detail::lex(src), strict);
  return p.formula();
}

namespace detail {

// Precedence levels for printing: atoms 5, postfix 4, prefix 3,
// composition 2, intersection 1, union 0.
inline int print_level(Term t) {
  switch (t->tag) {
    case Tag::Union: return 0;
    case Tag::Cap: return 1;
    case Tag::Comp: return 2;
    case Tag::Neg: return 3;
    case Tag::Star:
    case Tag::Plus:
    case Tag::Conv:
    case Tag::Loop: return 4;
    default: return 5;
  }
}

inline void print_rec(const Signature& sig, Term t, int min_level,
                      std::string& out) {
  int lvl = print_level(t);
  if (lvl < min_level) {
    out += '(';
    print_rec(sig, t, 0, out);
    out += ')';
    return;
  }
  switch (t->tag) {
    case Tag::I: out += 'I'; return;
    case Tag::Zero: out += '0'; return;
    case Tag::Top: out += "TOP"; return;
    case Tag::Var: out += sig.name(t->var); return;
    case Tag::Union:
      print_rec(sig, t->a, 0, out);
      out += " + ";
      print_rec(sig, t->b, 1, out);
      return;
    case Tag::Cap:
      print_rec(sig, t->a, 1, out);
      out += " & ";
      print_rec(sig, t->b, 2, out);
      return;
    case Tag::Comp:
      print_rec(sig, t->a, 2, out);
      out += " ; ";
      print_rec(sig, t->b, 3, out);
      return;
    case Tag::Neg:
      out += '!';
      print_rec(sig, t->a, 3, out);
      return;
    case Tag::Star:
      print_rec(sig, t->a, 4, out);
      out += '*';
      return;
    case Tag::Plus:
      print_rec(sig, t->a, 4, out);
      out += "^+";
      return;
    case Tag::Conv:
      print_rec(sig, t->a, 4, out);
      out += '^';
      return;
    case Tag::Loop:
      print_rec(sig, t->a, 4, out);
      out += '@';
      return;
    case Tag::Dom:
    case Tag::Adom:
      out += t->tag == Tag::Dom ? "dom(" : "adom(";
      print_rec(sig, t->a, 0, out);
      out += ')';
      return;
    case Tag::Ite:
      out += "ite(";
      print_rec(sig, t->a, 0, out);
      out += ", ";
      print_rec(sig, t->b, 0, out);
      out += ", ";
      print_rec(sig, t->c, 0, out);
      out += ')';
      return;
    case Tag::While:
    case Tag::DoWhile:
      out += t->tag == Tag::While ? "while(" : "dowhile(";
      print_rec(sig, t->a, 0, out);
      out += ", ";
      print_rec(sig, t->b, 0, out);
      out += ')';
      return;
    case Tag::IterN:
      out += "iter(" + std::to_string(t->k) + ", ";
      print_rec(sig, t->a, 0, out);
      out += ", ";
      print_rec(sig, t->b, 0, out);
      out += ')';
      return;
  }
}

}  // namespace detail

inline std::string print_term(const Signature& sig, Term t) {
  std::string out;
  detail::print_rec(sig, t, 0, out);
  return out;
}

inline std::string print_formula(const Signature& sig, const Formula& f) {
  switch (f->tag) {
    case FTag::Leq:
      return print_term(sig, f->l) + " <= " + print_term(sig, f->r);
    case FTag::Eq:
      return print_term(sig, f->l) + " == " + print_term(sig, f->r);
    case FTag::Not: {
      if (f->a->tag == FTag::Not) return "not " + print_formula(sig, f->a);
      return "not (" + print_formula(sig, f->a) + ")";
    }
    case FTag::And: {
      auto side = [&](const Formula& g) {
        std::string s = print_formula(sig, g);
        if (g->tag == FTag::Leq || g->tag == FTag::Eq || g->tag == FTag::Not)
          return s;
        return "(" + s + ")";
      };
      return side(f->a) + " && " + side(f->b);
    }
  }
  return "";
}

// ---------------------------------------------------------------------------
// Model files: `universe n`, then `action id` / `test id` / `edge id i j`.

inline Model parse_model(const std::string& src, Signature& sig,
                         bool strict_tests = false) {
  std::istringstream in(src);
  std::string rawline;
  int lineno = 0;
  Model v;
  bool have_universe = false;
  std::set<std::string> declared;
  auto err = [&](const std::string& msg) -> ParseError {
    return ParseError(msg, lineno, 1);
  };
  while (std::getline(in, rawline)) {
    ++lineno;
    std::string line = rawline.substr(0, rawline.find('#'));
    std::istringstream ls(line);
    std::string kw;
    if (!(ls >> kw)) continue;
    if (kw == "universe") {
      int n;
      if (have_universe) throw err("duplicate universe line");
      if (!(ls >> n) || n < 1) throw err("universe needs a positive size");
      v.n = n;
      have_universe = true;
      continue;
    }
    if (!have_universe) throw err("expected a universe line first");
    if (kw == "action" || kw == "test") {
      std::string id;
      if (!(ls >> id)) throw err("missing identifier");
      if (detail::is_keyword(id)) throw err("'" + id + "' is reserved");
      if (!declared.insert(id).second) throw err("duplicate declaration of '" + id + "'");
      try {
        if (kw == "action") {
          VarId a = sig.action(id);
          if (!v.rel.count(a)) v.rel[a] = Rel(v.n);
        } else {
          auto [p, np] = sig.test(id);
          if (!v.rel.count(p)) v.rel[p] = Rel(v.n);
          if (!v.rel.count(np)) v.rel[np] = Rel(v.n);
        }
      } catch (const SigError& e) {
        throw err(e.what());
      }
      continue;
    }
    if (kw == "edge") {
      std::string id;
      int i, j;
      if (!(ls >> id >> i >> j)) throw err("edge needs an identifier and two vertices");
      VarId x = sig.find(id);
      if (x < 0 || !v.rel.count(x)) throw err("edge on undeclared '" + id + "'");
      if (i < 0 || i >= v.n || j < 0 || j >= v.n) throw err("vertex out of range");
      if (strict_tests && sig.kind(x) != VarKind::Action && i != j)
        throw err("off-diagonal edge on test '" + id + "'");
      v.rel[x].set(i, j);
      continue;
    }
    throw err("unknown directive '" + kw + "'");
  }
  if (!have_universe) throw ParseError("empty model file", lineno, 1);
  return v;
}

inline std::string print_model(const Model& v, const Signature& sig) {
  std::string out = "universe " + std::to_string(v.n) + "\n";
  for (const auto& [x, r] : v.rel) {
    (void)r;
    switch (sig.kind(x)) {
      case VarKind::Action: out += "action " + sig.name(x) + "\n"; break;
      case VarKind::TestPos: out += "test " + sig.name(x) + "\n"; break;
      case VarKind::TestNeg: break;
    }
  }
  for (const auto& [x, r] : v.rel)
    for (auto [i, j] : r.pairs())
      out += "edge " + sig.name(x) + " " + std::to_string(i) + " " +
             std::to_string(j) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Domino system files: `colors k`, then `H i j` / `V i j`.

struct DominoSystem {
  int colors = 0;
  std::set<std::pair<int, int>> H, V;

  bool operator==(const DominoSystem& o) const {
    return colors == o.colors && H == o.H && V == o.V;
  }
};

inline DominoSystem parse_domino(const std::string& src) {
  std::istringstream in(src);
  std::string rawline;
  int lineno = 0;
  DominoSystem d;
  bool have_colors = false;
  while (std::getline(in, rawline)) {
    ++lineno;
    std::string line = rawline.substr(0, rawline.find('#'));
    std::istringstream ls(line);
    std::string kw;
    if (!(ls >> kw)) continue;
    if (kw == "colors") {
      if (have_colors) throw ParseError("duplicate colors line", lineno, 1);
      if (!(ls >> d.colors) || d.colors < 1)
        throw ParseError("colors needs a positive count", lineno, 1);
      have_colors = true;
      continue;
    }
    if (kw == "H" || kw == "V") {
      if (!have_colors) throw ParseError("expected a colors line first", lineno, 1);
      int i, j;
      if (!(ls >> i >> j)) throw ParseError("expected two colors", lineno, 1);
      if (i < 0 || i >= d.colors || j < 0 || j >= d.colors)
        throw ParseError("color out of range", lineno, 1);
      (kw == "H" ? d.H : d.V).emplace(i, j);
      continue;
    }
    throw ParseError("unknown directive '" + kw + "'", lineno, 1);
  }
  if (!have_colors) throw ParseError("empty domino file", lineno, 1);
  return d;
}

inline std::string print_domino(const DominoSystem& d) {
  std::string out = "colors " + std::to_string(d.colors) + "\n";
  for (auto [i, j] : d.H)
    out += "H " + std::to_string(i) + " " + std::to_string(j) + "\n";
  for (auto [i, j] : d.V)
    out += "V " + std::to_string(i) + " " + std::to_string(j) + "\n";
  return out;
}

}  // namespace relc
