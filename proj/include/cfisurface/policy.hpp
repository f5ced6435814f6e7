#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cfisurface/facts.hpp"
#include "cfisurface/hierarchy.hpp"

namespace cfisurface {

/// The eight modeled forward-edge policies, in report order.
enum class PolicyId : std::uint8_t {
  kBinTypes,
  kSafeSrcTypes,
  kSrcTypes,
  kStrictSrcTypes,
  kAllVtables,
  kVtableIsland,
  kSubHierarchy,
  kStrictSubHierarchy,
};

inline constexpr std::array<PolicyId, 8> kAllPolicies{
    PolicyId::kBinTypes,     PolicyId::kSafeSrcTypes, PolicyId::kSrcTypes,
    PolicyId::kStrictSrcTypes, PolicyId::kAllVtables, PolicyId::kVtableIsland,
    PolicyId::kSubHierarchy, PolicyId::kStrictSubHierarchy,
};

/// Enumeration name, e.g. "SubHierarchy".
std::string_view policy_name(PolicyId p) noexcept;
/// Command-line spelling, e.g. "sub-hierarchy".
std::string_view policy_cli_name(PolicyId p) noexcept;
/// Table label, e.g. "Sub-hierarchy".
std::string_view policy_label(PolicyId p) noexcept;
/// 1-based position in kAllPolicies.
int policy_number(PolicyId p) noexcept;
/// Accepts the enumeration name, the command-line spelling, or the number.
std::optional<PolicyId> parse_policy(std::string_view text) noexcept;

/// Bin types, safe src types and src types constrain every indirect callsite;
/// the rest are defined over virtual dispatch.
bool covers_function_pointers(PolicyId p) noexcept;

/// Function indices (into ProgramFacts::functions()), ascending and distinct.
using MemberList = std::vector<std::uint32_t>;

struct TargetSet {
  std::string callsite_id;
  PolicyId policy = PolicyId::kBinTypes;
  /// Shared between callsites whose sets coincide by construction.
  std::shared_ptr<const MemberList> members;

  std::size_t size() const noexcept { return members ? members->size() : 0; }
  bool contains(std::uint32_t function) const;
  std::vector<std::string> member_ids(const ProgramFacts& facts) const;
};

struct PolicyOptions {
  enum class BinArity : std::uint8_t {
    /// Target needs at most as many parameters as the callsite provides.
    kTargetAtMostProvided,
    /// Target expects at least as many as provided, and at most six.
    kTargetAtLeastProvided,
  };
  enum class OverSixArgs : std::uint8_t { kCap, kExclude };

  BinArity bin_arity = BinArity::kTargetAtMostProvided;
  OverSixArgs over_six_args = OverSixArgs::kCap;
  /// Lets strict src types collapse pointer parameters like safe src types.
  bool strict_pointer_interchange = false;
};

inline constexpr std::size_t kBinTypesArgCap = 6;

/// Evaluates policies against one program. Construction builds every index;
/// evaluation afterwards is const and touches no shared mutable state, so
/// distinct callsites may be evaluated concurrently.
///
/// Adding a policy means answering, in code: which primitives it reads
/// (callsite types, function types, vtables, hierarchies); whether those
/// primitives nest (class sub-hierarchy vs. table sub-hierarchy); whether it
/// needs hierarchical metadata at all; what the callsite/target match is; and
/// what one match counts as (here: one distinct function). Add the enum
/// value, an eval_* member, a case in evaluate(), and the naive counterpart
/// in the oracle.
class PolicyEngine {
 public:
  /// `facts` must be validated and must outlive the engine.
  explicit PolicyEngine(const ProgramFacts& facts, PolicyOptions options = {});

  const ProgramFacts& facts() const noexcept { return *facts_; }
  const PolicyOptions& options() const noexcept { return options_; }
  const ClassHierarchy& class_hierarchy() const noexcept { return classes_; }
  const VTableHierarchy& vtable_hierarchy() const noexcept { return vtables_; }

  /// False when evaluate() would throw PolicyNotApplicableError.
  bool applicable(PolicyId policy, const Callsite& cs) const noexcept;

  TargetSet evaluate(PolicyId policy, const Callsite& cs) const;

  TargetSet eval_bin_types(const Callsite& cs) const;
  TargetSet eval_safe_src_types(const Callsite& cs) const;
  TargetSet eval_src_types(const Callsite& cs) const;
  /// Needs a callee name hint (MissingNameHintError otherwise); accepts
  /// function-pointer callsites too.
  TargetSet eval_strict_src_types(const Callsite& cs) const;
  TargetSet eval_all_vtables(const Callsite& cs) const;
  TargetSet eval_vtable_island(const Callsite& cs) const;
  TargetSet eval_sub_hierarchy(const Callsite& cs) const;
  TargetSet eval_strict_sub_hierarchy(const Callsite& cs) const;

 private:
  using Buckets = std::unordered_map<std::string, std::shared_ptr<const MemberList>>;

  struct DispatchSite {
    NodeIndex static_class;
    NodeIndex table;
    std::uint32_t entry_index;
  };

  DispatchSite dispatch_site(PolicyId policy, const Callsite& cs) const;
  std::shared_ptr<const MemberList> lookup(const Buckets& buckets, const std::string& key) const;
  TargetSet make(PolicyId policy, const Callsite& cs, std::shared_ptr<const MemberList> m) const;

  const ProgramFacts* facts_;
  PolicyOptions options_;
  ClassHierarchy classes_;
  VTableHierarchy vtables_;

  std::shared_ptr<const MemberList> empty_;
  // [returns_used][capped arg count]
  std::array<std::array<std::shared_ptr<const MemberList>, kBinTypesArgCap + 1>, 2> bin_types_;
  Buckets safe_src_;
  Buckets src_;
  Buckets strict_src_;
  std::shared_ptr<const MemberList> all_vtables_;
  // [island][slot]
  std::vector<std::vector<std::shared_ptr<const MemberList>>> island_slots_;
};

/// What C++ dispatch would call for `cs` on an object whose dynamic type is
/// `dynamic_class`: the dynamic class's table extending the callsite's table,
/// at the callsite's slot. nullopt for a pure slot. Computed straight from
/// the facts, independently of PolicyEngine. Throws PolicyNotApplicableError
/// for non-virtual callsites and std::invalid_argument when `dynamic_class`
/// does not derive from the static class.
std::optional<std::string> benign_dispatch_target(const ProgramFacts& facts, const Callsite& cs,
                                                  std::string_view dynamic_class);

}  // namespace cfisurface
