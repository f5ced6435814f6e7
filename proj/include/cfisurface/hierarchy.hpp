#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cfisurface/facts.hpp"

namespace cfisurface {

/// Dense node handle. Class nodes are indices into ProgramFacts::classes(),
/// table nodes are indices into ProgramFacts::vtables().
using NodeIndex = std::uint32_t;

/// A root and everything reachable from it along base -> derived edges,
/// root included. Members are sorted by id.
struct SubHierarchy {
  std::string root;
  std::vector<std::string> members;

  friend bool operator==(const SubHierarchy&, const SubHierarchy&) = default;
};

/// Inheritance graph over all classes, edges oriented base -> derived.
class ClassHierarchy {
 public:
  explicit ClassHierarchy(const ProgramFacts& facts);

  std::size_t size() const noexcept { return derived_.size(); }
  std::optional<NodeIndex> node(std::string_view class_id) const;
  const std::string& id(NodeIndex n) const { return facts_->classes()[n].id; }

  std::span<const NodeIndex> derived(NodeIndex n) const { return derived_[n]; }
  std::span<const NodeIndex> bases(NodeIndex n) const { return bases_[n]; }

  /// Reflexive-transitive derived closure, ascending.
  std::vector<NodeIndex> descendants(NodeIndex n) const;

  /// (base id, derived id) pairs, sorted.
  std::vector<std::pair<std::string, std::string>> edges() const;

 private:
  const ProgramFacts* facts_;
  std::vector<std::vector<NodeIndex>> derived_;
  std::vector<std::vector<NodeIndex>> bases_;
};

/// Graph over the vtables of virtual classes. A table of class C with
/// base_path [C, B, ...] is the child of the table of B whose base_path is
/// [B, ...]. Island membership also joins all tables of one class, since a
/// class's table set belongs to a single object layout.
class VTableHierarchy {
 public:
  explicit VTableHierarchy(const ProgramFacts& facts);

  std::size_t size() const noexcept { return parent_.size(); }
  std::optional<NodeIndex> node(std::string_view vtable_id) const;
  const std::string& id(NodeIndex n) const { return facts_->vtables()[n].id; }

  std::optional<NodeIndex> parent(NodeIndex n) const;
  std::span<const NodeIndex> children(NodeIndex n) const { return children_[n]; }

  /// The least-derived table the chain through `n` starts from.
  NodeIndex root(NodeIndex n) const { return root_[n]; }
  std::uint32_t island(NodeIndex n) const { return island_[n]; }
  std::size_t island_count() const noexcept { return island_members_.size(); }
  std::span<const NodeIndex> island_members(std::uint32_t island) const {
    return island_members_[island];
  }

  /// Tables of a class in ascending order, indexed by class node.
  std::span<const NodeIndex> tables_of_class(NodeIndex class_node) const {
    return class_tables_[class_node];
  }
  std::optional<NodeIndex> table_of_class(NodeIndex class_node, std::uint32_t order) const;

  /// Resolved function per function slot: function index, or -1 for a pure slot.
  std::span<const std::int32_t> slots(NodeIndex n) const { return slots_[n]; }

  /// Reflexive-transitive closure over child edges, ascending.
  std::vector<NodeIndex> descendants(NodeIndex n) const;

  /// (parent id, child id) pairs, sorted.
  std::vector<std::pair<std::string, std::string>> edges() const;

 private:
  const ProgramFacts* facts_;
  std::vector<std::int64_t> parent_;
  std::vector<std::vector<NodeIndex>> children_;
  std::vector<NodeIndex> root_;
  std::vector<std::uint32_t> island_;
  std::vector<std::vector<NodeIndex>> island_members_;
  std::vector<std::vector<NodeIndex>> class_tables_;
  std::vector<std::vector<std::int32_t>> slots_;
};

ClassHierarchy build_class_hierarchy(const ProgramFacts& facts);
VTableHierarchy build_vtable_hierarchy(const ProgramFacts& facts);

/// Islands as lists of vtable ids; each list sorted, lists ordered by first id.
std::vector<std::vector<std::string>> find_islands(const VTableHierarchy& vh);

/// Throws std::out_of_range for an unknown root.
SubHierarchy class_sub_hierarchy(const ClassHierarchy& ch, std::string_view root);
SubHierarchy vtable_sub_hierarchy(const VTableHierarchy& vh, std::string_view root);

/// Tables of a class ordered by sub-object order; empty for non-virtual classes.
std::vector<std::string> vtable_set(const ProgramFacts& facts, std::string_view class_id);

/// Function at a function slot (thunks resolve to their target); nullopt for a
/// pure slot. Throws IndexOutOfRangeError past the last function slot.
std::optional<std::string> resolve_entry(const ProgramFacts& facts, std::string_view vtable_id,
                                         std::uint32_t entry_index);

}  // namespace cfisurface
