#include "cfisurface/oracle.hpp"

#include <algorithm>
#include <memory>
#include <stdexcept>

#include "cfisurface/error.hpp"

namespace cfisurface {
namespace {

using Members = std::vector<std::uint32_t>;

/// Function at function-slot `index`: -1 if absent or pure, -2 past the end.
long long slot_target(const ProgramFacts& facts, const VTableRecord& table, std::uint32_t index) {
  std::uint32_t seen = 0;
  for (const auto& e : table.entries) {
    if (e.kind == EntryKind::kOffset) continue;
    if (seen == index) {
      if (e.kind == EntryKind::kPure || !e.function_id) return -1;
      auto f = facts.function_index(*e.function_id);
      return f ? static_cast<long long>(*f) : -1;
    }
    ++seen;
  }
  return -2;
}

bool types_interchange(const TypeExpr& a, const TypeExpr& b, bool pointers_interchange) {
  if (a == b) return true;
  return pointers_interchange && a.pointer_depth() > 0 && b.pointer_depth() > 0;
}

bool same_params(const std::vector<TypeExpr>& provided, const FunctionRecord& f,
                 bool pointers_interchange) {
  if (f.is_variadic || provided.size() != f.params.size()) return false;
  for (std::size_t i = 0; i < provided.size(); ++i) {
    if (!types_interchange(provided[i], f.params[i], pointers_interchange)) return false;
  }
  return true;
}

Members dedupe(Members m) {
  std::sort(m.begin(), m.end());
  m.erase(std::unique(m.begin(), m.end()), m.end());
  return m;
}

}  // namespace

TargetOracle::TargetOracle(const ProgramFacts& facts, PolicyOptions options)
    : facts_(&facts), options_(options), bases_(facts.classes().size()) {
  const auto classes = facts.classes();
  for (std::size_t c = 0; c < classes.size(); ++c) {
    for (const auto& b : classes[c].bases) {
      if (auto i = facts.class_index(b.class_id)) bases_[c].push_back(*i);
    }
  }
  island_label_.resize(classes.size());
  for (std::size_t c = 0; c < classes.size(); ++c) island_label_[c] = c;
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& t : facts.vtables()) {
      std::size_t least = classes.size();
      std::vector<std::size_t> on_path;
      for (const auto& id : t.base_path) {
        if (auto i = facts.class_index(id)) on_path.push_back(*i);
      }
      for (auto i : on_path) least = std::min(least, island_label_[i]);
      for (auto i : on_path) {
        if (island_label_[i] != least) {
          island_label_[i] = least;
          changed = true;
        }
      }
    }
  }
}

void TargetOracle::require_virtual(PolicyId policy, const Callsite& cs) const {
  if (!cs.is_virtual()) {
    throw PolicyNotApplicableError(std::string(policy_name(policy)) + " needs a virtual callsite");
  }
}

TargetSet TargetOracle::targets(PolicyId policy, const Callsite& cs) const {
  Members m;
  switch (policy) {
    case PolicyId::kBinTypes: m = bin_types(cs); break;
    case PolicyId::kSafeSrcTypes: m = by_parameters(cs, true); break;
    case PolicyId::kSrcTypes: m = by_parameters(cs, false); break;
    case PolicyId::kStrictSrcTypes: m = strict_src_types(cs); break;
    case PolicyId::kAllVtables:
      require_virtual(policy, cs);
      m = all_vtables();
      break;
    case PolicyId::kVtableIsland: m = vtable_island(cs); break;
    case PolicyId::kSubHierarchy: m = sub_hierarchy(cs); break;
    case PolicyId::kStrictSubHierarchy: m = strict_sub_hierarchy(cs); break;
  }
  return {cs.id, policy, std::make_shared<const Members>(dedupe(std::move(m)))};
}

Members TargetOracle::bin_types(const Callsite& cs) const {
  std::size_t provided = cs.args.size();
  if (provided > 6) {
    if (options_.over_six_args == PolicyOptions::OverSixArgs::kExclude) {
      throw PolicyNotApplicableError("more than six arguments");
    }
    provided = 6;
  }
  Members out;
  const auto functions = facts_->functions();
  for (std::size_t f = 0; f < functions.size(); ++f) {
    const auto& rec = functions[f];
    if (rec.is_pure_virtual) continue;
    const bool void_target = rec.return_type.pointer_depth() == 0 && rec.return_type.leaf() == TypeLeaf::kVoid;
    if (cs.returns_used && void_target) continue;
    const std::size_t expects = rec.params.size();
    const bool ok = options_.bin_arity == PolicyOptions::BinArity::kTargetAtMostProvided
                        ? expects <= provided
                        : provided <= expects && expects <= 6;
    if (ok) out.push_back(static_cast<std::uint32_t>(f));
  }
  return out;
}

Members TargetOracle::by_parameters(const Callsite& cs, bool pointers_interchange) const {
  Members out;
  const auto functions = facts_->functions();
  for (std::size_t f = 0; f < functions.size(); ++f) {
    if (functions[f].is_pure_virtual) continue;
    if (same_params(cs.args, functions[f], pointers_interchange)) out.push_back(static_cast<std::uint32_t>(f));
  }
  return out;
}

Members TargetOracle::strict_src_types(const Callsite& cs) const {
  if (!cs.callee_name_hint) throw MissingNameHintError("callsite " + cs.id + " has no name hint");
  Members out;
  const auto functions = facts_->functions();
  for (std::size_t f = 0; f < functions.size(); ++f) {
    const auto& rec = functions[f];
    if (!rec.is_virtual || rec.is_pure_virtual || rec.name != *cs.callee_name_hint) continue;
    if (!same_params(cs.args, rec, options_.strict_pointer_interchange)) continue;
    bool in_table = false;
    for (const auto& t : facts_->vtables()) {
      for (const auto& e : t.entries) {
        if ((e.kind == EntryKind::kFunction || e.kind == EntryKind::kThunk) && e.function_id == rec.id) {
          in_table = true;
        }
      }
    }
    if (in_table) out.push_back(static_cast<std::uint32_t>(f));
  }
  return out;
}

Members TargetOracle::all_vtables() const {
  Members out;
  for (const auto& t : facts_->vtables()) {
    for (const auto& e : t.entries) {
      if (e.kind != EntryKind::kFunction && e.kind != EntryKind::kThunk) continue;
      if (auto f = facts_->function_index(*e.function_id)) out.push_back(static_cast<std::uint32_t>(*f));
    }
  }
  return out;
}

Members TargetOracle::vtable_island(const Callsite& cs) const {
  require_virtual(PolicyId::kVtableIsland, cs);
  const auto static_class = facts_->class_index(*cs.static_class);
  if (!static_class) throw std::invalid_argument("unknown static class");
  const std::size_t label = island_label_[*static_class];
  Members out;
  for (const auto& t : facts_->vtables()) {
    auto owner = facts_->class_index(t.owning_class);
    if (!owner || island_label_[*owner] != label) continue;
    const long long target = slot_target(*facts_, t, *cs.entry_index);
    if (target >= 0) out.push_back(static_cast<std::uint32_t>(target));
  }
  return out;
}

bool TargetOracle::derives_from(std::size_t derived, std::size_t base,
                                std::vector<signed char>& memo) const {
  if (derived == base) return true;
  if (memo[derived] >= 0) return memo[derived] != 0;
  memo[derived] = 0;
  bool found = false;
  for (auto b : bases_[derived]) found = found || derives_from(b, base, memo);
  memo[derived] = found ? 1 : 0;
  return found;
}

Members TargetOracle::sub_hierarchy(const Callsite& cs) const {
  require_virtual(PolicyId::kSubHierarchy, cs);
  const auto root = facts_->class_index(*cs.static_class);
  if (!root) throw std::invalid_argument("unknown static class");
  std::vector<signed char> memo(facts_->classes().size(), -1);
  Members out;
  for (const auto& t : facts_->vtables()) {
    auto owner = facts_->class_index(t.owning_class);
    if (!owner || !derives_from(*owner, *root, memo)) continue;
    const long long target = slot_target(*facts_, t, *cs.entry_index);
    if (target >= 0) out.push_back(static_cast<std::uint32_t>(target));
  }
  return out;
}

Members TargetOracle::strict_sub_hierarchy(const Callsite& cs) const {
  require_virtual(PolicyId::kStrictSubHierarchy, cs);
  const VTableRecord* root = nullptr;
  for (const auto& t : facts_->vtables()) {
    if (t.owning_class == *cs.static_class && t.order == *cs.table_order) root = &t;
  }
  if (!root) throw std::invalid_argument("callsite names no table");
  const auto& suffix = root->base_path;
  Members out;
  for (const auto& t : facts_->vtables()) {
    const auto& path = t.base_path;
    // Every table extending `root` carries root's base_path as its tail.
    if (path.size() < suffix.size() ||
        !std::equal(suffix.rbegin(), suffix.rend(), path.rbegin())) {
      continue;
    }
    const long long target = slot_target(*facts_, t, *cs.entry_index);
    if (target >= 0) out.push_back(static_cast<std::uint32_t>(target));
  }
  return out;
}

TargetSet oracle_targets(const ProgramFacts& facts, PolicyId policy, const Callsite& cs,
                         PolicyOptions options) {
  return TargetOracle(facts, options).targets(policy, cs);
}

}  // namespace cfisurface
