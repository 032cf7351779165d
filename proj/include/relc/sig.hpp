#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace relc {

enum class VarKind : uint8_t { Action, TestPos, TestNeg };

using VarId = int32_t;

struct VarInfo {
  std::string name;
  VarKind kind = VarKind::Action;
  VarId partner = -1;  // fixpoint-free involution partner, test kinds only
};

struct SigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Variable registry. Test variables always come in partner pairs (p, ~p).
// Names starting with '$' are reserved for machine-generated fresh variables
// and are rejected for user declarations.
class Signature {
 public:
  VarId action(const std::string& name) {
    if (auto it = byname_.find(name); it != byname_.end()) {
      if (vars_[it->second].kind != VarKind::Action)
        throw SigError("variable redeclared with different kind: " + name);
      return it->second;
    }
    check_user_name(name);
    return push(name, VarKind::Action, -1);
  }

  // Declares p and its complement partner ~p.
  std::pair<VarId, VarId> test(const std::string& name) {
    if (auto it = byname_.find(name); it != byname_.end()) {
      VarId p = it->second;
      if (vars_[p].kind != VarKind::TestPos)
        throw SigError("variable redeclared with different kind: " + name);
      return {p, vars_[p].partner};
    }
    check_user_name(name);
    VarId p = push(name, VarKind::TestPos, -1);
    VarId q = push("~" + name, VarKind::TestNeg, p);
    vars_[p].partner = q;
    return {p, q};
  }

  VarId fresh_action() { return push(next_fresh(), VarKind::Action, -1); }

  std::pair<VarId, VarId> fresh_test() {
    std::string nm = next_fresh();
    VarId p = push(nm, VarKind::TestPos, -1);
    VarId q = push("~" + nm, VarKind::TestNeg, p);
    vars_[p].partner = q;
    return {p, q};
  }

  VarId find(const std::string& name) const {
    auto it = byname_.find(name);
    return it == byname_.end() ? -1 : it->second;
  }

  const VarInfo& info(VarId v) const { return vars_.at(static_cast<size_t>(v)); }
  const std::string& name(VarId v) const { return info(v).name; }
  VarKind kind(VarId v) const { return info(v).kind; }
  bool is_test(VarId v) const { return kind(v) != VarKind::Action; }

  VarId partner(VarId v) const {
    VarId p = info(v).partner;
    if (p < 0) throw SigError("variable has no partner: " + name(v));
    return p;
  }

  int size() const { return static_cast<int>(vars_.size()); }

  std::vector<VarId> all(VarKind k) const {
    std::vector<VarId> out;
    for (VarId v = 0; v < size(); ++v)
      if (vars_[v].kind == k) out.push_back(v);
    return out;
  }

 private:
  static void check_user_name(const std::string& name) {
    if (name.empty()) throw SigError("empty variable name");
    if (name[0] == '$' || name[0] == '~')
      throw SigError("reserved variable name: " + name);
  }

  std::string next_fresh() { return "$" + std::to_string(freshc_++); }

  VarId push(const std::string& name, VarKind k, VarId partner) {
    VarId id = static_cast<VarId>(vars_.size());
    vars_.push_back(VarInfo{name, k, partner});
    byname_.emplace(name, id);
    return id;
  }

  std::vector<VarInfo> vars_;
  std::unordered_map<std::string, VarId> byname_;
  int freshc_ = 0;
};

}  // namespace relc
