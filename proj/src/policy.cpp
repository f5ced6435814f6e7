#include "cfisurface/policy.hpp"

#include <algorithm>
#include <stdexcept>

#include "cfisurface/error.hpp"
#include "cfisurface/signature.hpp"

namespace cfisurface {
namespace {

struct PolicyNames {
  PolicyId id;
  std::string_view name;
  std::string_view cli;
  std::string_view label;
};

constexpr std::array<PolicyNames, 8> kNames{{
    {PolicyId::kBinTypes, "BinTypes", "bin-types", "Bin types"},
    {PolicyId::kSafeSrcTypes, "SafeSrcTypes", "safe-src-types", "Safe src types"},
    {PolicyId::kSrcTypes, "SrcTypes", "src-types", "Src types"},
    {PolicyId::kStrictSrcTypes, "StrictSrcTypes", "strict-src-types", "Strict src types"},
    {PolicyId::kAllVtables, "AllVtables", "all-vtables", "All vTables"},
    {PolicyId::kVtableIsland, "VtableIsland", "vtable-island", "vTable hierarchy"},
    {PolicyId::kSubHierarchy, "SubHierarchy", "sub-hierarchy", "Sub-hierarchy"},
    {PolicyId::kStrictSubHierarchy, "StrictSubHierarchy", "strict-sub-hierarchy",
     "Strict sub-hierarchy"},
}};

const PolicyNames& names_of(PolicyId p) { return kNames[static_cast<std::size_t>(p)]; }

std::shared_ptr<const MemberList> finish(MemberList members) {
  std::sort(members.begin(), members.end());
  members.erase(std::unique(members.begin(), members.end()), members.end());
  return std::make_shared<const MemberList>(std::move(members));
}

std::string strict_key(const std::string& name, const std::string& params) {
  return name + '\x1f' + params;
}

}  // namespace

std::string_view policy_name(PolicyId p) noexcept { return names_of(p).name; }
std::string_view policy_cli_name(PolicyId p) noexcept { return names_of(p).cli; }
std::string_view policy_label(PolicyId p) noexcept { return names_of(p).label; }
int policy_number(PolicyId p) noexcept { return static_cast<int>(p) + 1; }

std::optional<PolicyId> parse_policy(std::string_view text) noexcept {
  for (const auto& n : kNames) {
    if (text == n.name || text == n.cli || text == std::to_string(policy_number(n.id))) return n.id;
  }
  return std::nullopt;
}

bool covers_function_pointers(PolicyId p) noexcept {
  return p == PolicyId::kBinTypes || p == PolicyId::kSafeSrcTypes || p == PolicyId::kSrcTypes;
}

bool TargetSet::contains(std::uint32_t function) const {
  return members && std::binary_search(members->begin(), members->end(), function);
}

std::vector<std::string> TargetSet::member_ids(const ProgramFacts& facts) const {
  std::vector<std::string> out;
  if (!members) return out;
  out.reserve(members->size());
  for (auto f : *members) out.push_back(facts.functions()[f].id);
  return out;
}

PolicyEngine::PolicyEngine(const ProgramFacts& facts, PolicyOptions options)
    : facts_(&facts),
      options_(options),
      classes_(facts),
      vtables_(facts),
      empty_(std::make_shared<const MemberList>()) {
  const auto functions = facts.functions();
  const auto n = static_cast<std::uint32_t>(functions.size());

  // Bin types: 14 possible sets, one per (void rule, capped arity).
  for (int used = 0; used < 2; ++used) {
    for (std::size_t provided = 0; provided <= kBinTypesArgCap; ++provided) {
      MemberList members;
      for (std::uint32_t f = 0; f < n; ++f) {
        const auto& rec = functions[f];
        if (rec.is_pure_virtual) continue;
        if (used && rec.return_type.is_void()) continue;
        const std::size_t arity = rec.params.size();
        const bool arity_ok = options_.bin_arity == PolicyOptions::BinArity::kTargetAtMostProvided
                                  ? arity <= provided
                                  : arity >= provided && arity <= kBinTypesArgCap;
        if (arity_ok) members.push_back(f);
      }
      bin_types_[used][provided] = finish(std::move(members));
    }
  }

  std::vector<char> in_vtable(n, 0);
  MemberList all;
  for (NodeIndex t = 0; t < vtables_.size(); ++t) {
    for (auto target : vtables_.slots(t)) {
      if (target >= 0) {
        in_vtable[static_cast<std::size_t>(target)] = 1;
        all.push_back(static_cast<std::uint32_t>(target));
      }
    }
  }
  all_vtables_ = finish(std::move(all));

  std::unordered_map<std::string, MemberList> safe, src, strict;
  for (std::uint32_t f = 0; f < n; ++f) {
    const auto& rec = functions[f];
    if (rec.is_pure_virtual || rec.is_variadic) continue;
    const std::string exact = exact_param_key(rec.params);
    const std::string erased = pointer_erased_param_key(rec.params);
    safe[erased].push_back(f);
    src[exact].push_back(f);
    if (rec.is_virtual && in_vtable[f]) {
      strict[strict_key(rec.name, options_.strict_pointer_interchange ? erased : exact)].push_back(f);
    }
  }
  for (auto& [k, v] : safe) safe_src_.emplace(k, finish(std::move(v)));
  for (auto& [k, v] : src) src_.emplace(k, finish(std::move(v)));
  for (auto& [k, v] : strict) strict_src_.emplace(k, finish(std::move(v)));

  island_slots_.resize(vtables_.island_count());
  for (std::uint32_t island = 0; island < vtables_.island_count(); ++island) {
    std::vector<MemberList> per_slot;
    for (NodeIndex t : vtables_.island_members(island)) {
      const auto slots = vtables_.slots(t);
      if (per_slot.size() < slots.size()) per_slot.resize(slots.size());
      for (std::size_t s = 0; s < slots.size(); ++s) {
        if (slots[s] >= 0) per_slot[s].push_back(static_cast<std::uint32_t>(slots[s]));
      }
    }
    for (auto& members : per_slot) island_slots_[island].push_back(finish(std::move(members)));
  }
}

bool PolicyEngine::applicable(PolicyId policy, const Callsite& cs) const noexcept {
  switch (policy) {
    case PolicyId::kBinTypes:
      return options_.over_six_args == PolicyOptions::OverSixArgs::kCap ||
             cs.args.size() <= kBinTypesArgCap;
    case PolicyId::kSafeSrcTypes:
    case PolicyId::kSrcTypes:
    case PolicyId::kStrictSrcTypes:
      return true;
    case PolicyId::kAllVtables:
    case PolicyId::kVtableIsland:
    case PolicyId::kSubHierarchy:
    case PolicyId::kStrictSubHierarchy:
      return cs.is_virtual();
  }
  return false;
}

TargetSet PolicyEngine::evaluate(PolicyId policy, const Callsite& cs) const {
  switch (policy) {
    case PolicyId::kBinTypes: return eval_bin_types(cs);
    case PolicyId::kSafeSrcTypes: return eval_safe_src_types(cs);
    case PolicyId::kSrcTypes: return eval_src_types(cs);
    case PolicyId::kStrictSrcTypes: return eval_strict_src_types(cs);
    case PolicyId::kAllVtables: return eval_all_vtables(cs);
    case PolicyId::kVtableIsland: return eval_vtable_island(cs);
    case PolicyId::kSubHierarchy: return eval_sub_hierarchy(cs);
    case PolicyId::kStrictSubHierarchy: return eval_strict_sub_hierarchy(cs);
  }
  throw std::invalid_argument("unknown policy");
}

TargetSet PolicyEngine::make(PolicyId policy, const Callsite& cs,
                             std::shared_ptr<const MemberList> m) const {
  return {cs.id, policy, std::move(m)};
}

std::shared_ptr<const MemberList> PolicyEngine::lookup(const Buckets& buckets,
                                                       const std::string& key) const {
  auto it = buckets.find(key);
  return it == buckets.end() ? empty_ : it->second;
}

PolicyEngine::DispatchSite PolicyEngine::dispatch_site(PolicyId policy, const Callsite& cs) const {
  if (!cs.is_virtual()) {
    throw PolicyNotApplicableError(std::string(policy_name(policy)) +
                                   " applies to virtual callsites only; " + cs.id + " is not one");
  }
  auto c = classes_.node(*cs.static_class);
  auto t = c ? vtables_.table_of_class(*c, *cs.table_order) : std::nullopt;
  if (!t) throw std::invalid_argument("callsite " + cs.id + " has unresolved dispatch coordinates");
  return {*c, *t, *cs.entry_index};
}

TargetSet PolicyEngine::eval_bin_types(const Callsite& cs) const {
  if (!applicable(PolicyId::kBinTypes, cs)) {
    throw PolicyNotApplicableError("callsite " + cs.id + " provides more than six arguments");
  }
  const std::size_t provided = std::min(cs.args.size(), kBinTypesArgCap);
  return make(PolicyId::kBinTypes, cs, bin_types_[cs.returns_used ? 1 : 0][provided]);
}

TargetSet PolicyEngine::eval_safe_src_types(const Callsite& cs) const {
  return make(PolicyId::kSafeSrcTypes, cs, lookup(safe_src_, pointer_erased_param_key(cs.args)));
}

TargetSet PolicyEngine::eval_src_types(const Callsite& cs) const {
  return make(PolicyId::kSrcTypes, cs, lookup(src_, exact_param_key(cs.args)));
}

TargetSet PolicyEngine::eval_strict_src_types(const Callsite& cs) const {
  if (!cs.callee_name_hint) {
    throw MissingNameHintError("callsite " + cs.id + " has no callee name hint");
  }
  const std::string params = options_.strict_pointer_interchange ? pointer_erased_param_key(cs.args)
                                                                 : exact_param_key(cs.args);
  return make(PolicyId::kStrictSrcTypes, cs,
              lookup(strict_src_, strict_key(*cs.callee_name_hint, params)));
}

TargetSet PolicyEngine::eval_all_vtables(const Callsite& cs) const {
  dispatch_site(PolicyId::kAllVtables, cs);
  return make(PolicyId::kAllVtables, cs, all_vtables_);
}

TargetSet PolicyEngine::eval_vtable_island(const Callsite& cs) const {
  const DispatchSite site = dispatch_site(PolicyId::kVtableIsland, cs);
  const auto& slots = island_slots_[vtables_.island(site.table)];
  return make(PolicyId::kVtableIsland, cs,
              site.entry_index < slots.size() ? slots[site.entry_index] : empty_);
}

TargetSet PolicyEngine::eval_sub_hierarchy(const Callsite& cs) const {
  const DispatchSite site = dispatch_site(PolicyId::kSubHierarchy, cs);
  MemberList members;
  for (NodeIndex c : classes_.descendants(site.static_class)) {
    for (NodeIndex t : vtables_.tables_of_class(c)) {
      const auto slots = vtables_.slots(t);
      if (site.entry_index < slots.size() && slots[site.entry_index] >= 0) {
        members.push_back(static_cast<std::uint32_t>(slots[site.entry_index]));
      }
    }
  }
  return make(PolicyId::kSubHierarchy, cs, finish(std::move(members)));
}

TargetSet PolicyEngine::eval_strict_sub_hierarchy(const Callsite& cs) const {
  const DispatchSite site = dispatch_site(PolicyId::kStrictSubHierarchy, cs);
  MemberList members;
  for (NodeIndex t : vtables_.descendants(site.table)) {
    const auto slots = vtables_.slots(t);
    if (site.entry_index < slots.size() && slots[site.entry_index] >= 0) {
      members.push_back(static_cast<std::uint32_t>(slots[site.entry_index]));
    }
  }
  return make(PolicyId::kStrictSubHierarchy, cs, finish(std::move(members)));
}

std::optional<std::string> benign_dispatch_target(const ProgramFacts& facts, const Callsite& cs,
                                                  std::string_view dynamic_class) {
  if (!cs.is_virtual() || !cs.static_class || !cs.table_order || !cs.entry_index) {
    throw PolicyNotApplicableError("callsite " + cs.id + " is not a virtual dispatch");
  }
  const VTableRecord* static_table = nullptr;
  for (std::size_t t : facts.vtables_of_class(*cs.static_class)) {
    if (facts.vtables()[t].order == *cs.table_order) static_table = &facts.vtables()[t];
  }
  if (!static_table) throw std::invalid_argument("callsite " + cs.id + " names no table");

  const auto& wanted = static_table->base_path;
  for (std::size_t t : facts.vtables_of_class(dynamic_class)) {
    const auto& path = facts.vtables()[t].base_path;
    if (path.size() < wanted.size() ||
        !std::equal(wanted.begin(), wanted.end(), path.end() - static_cast<std::ptrdiff_t>(wanted.size()))) {
      continue;
    }
    const auto& entries = facts.vtables()[t].entries;
    std::uint32_t slot = 0;
    for (const auto& e : entries) {
      if (!e.is_function_slot()) continue;
      if (slot++ != *cs.entry_index) continue;
      if (e.kind == EntryKind::kPure) return std::nullopt;
      return e.function_id;
    }
    return std::nullopt;
  }
  throw std::invalid_argument(std::string(dynamic_class) + " does not derive from " + *cs.static_class);
}

}  // namespace cfisurface
