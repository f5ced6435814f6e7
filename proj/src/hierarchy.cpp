#include "cfisurface/hierarchy.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include "cfisurface/error.hpp"

namespace cfisurface {
namespace {

template <typename Adjacency>
std::vector<NodeIndex> closure(const Adjacency& next, NodeIndex start) {
  std::vector<char> seen(next.size(), 0);
  std::vector<NodeIndex> out{start};
  seen[start] = 1;
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (NodeIndex s : next[out[i]]) {
      if (!seen[s]) {
        seen[s] = 1;
        out.push_back(s);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string path_key(std::span<const std::string> path) {
  std::string key;
  for (const auto& p : path) {
    key += p;
    key += '\x1f';
  }
  return key;
}

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace

ClassHierarchy::ClassHierarchy(const ProgramFacts& facts)
    : facts_(&facts), derived_(facts.classes().size()), bases_(facts.classes().size()) {
  const auto classes = facts.classes();
  for (NodeIndex d = 0; d < classes.size(); ++d) {
    for (const auto& b : classes[d].bases) {
      auto base = facts.class_index(b.class_id);
      if (!base) continue;
      bases_[d].push_back(static_cast<NodeIndex>(*base));
      derived_[*base].push_back(d);
    }
  }
  for (auto& list : derived_) std::sort(list.begin(), list.end());
}

std::optional<NodeIndex> ClassHierarchy::node(std::string_view class_id) const {
  auto i = facts_->class_index(class_id);
  if (!i) return std::nullopt;
  return static_cast<NodeIndex>(*i);
}

std::vector<NodeIndex> ClassHierarchy::descendants(NodeIndex n) const { return closure(derived_, n); }

std::vector<std::pair<std::string, std::string>> ClassHierarchy::edges() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (NodeIndex b = 0; b < derived_.size(); ++b) {
    for (NodeIndex d : derived_[b]) out.emplace_back(id(b), id(d));
  }
  std::sort(out.begin(), out.end());
  return out;
}

VTableHierarchy::VTableHierarchy(const ProgramFacts& facts)
    : facts_(&facts),
      parent_(facts.vtables().size(), -1),
      children_(facts.vtables().size()),
      root_(facts.vtables().size()),
      island_(facts.vtables().size()),
      class_tables_(facts.classes().size()),
      slots_(facts.vtables().size()) {
  const auto tables = facts.vtables();

  std::unordered_map<std::string, NodeIndex> by_path;
  by_path.reserve(tables.size());
  for (NodeIndex t = 0; t < tables.size(); ++t) by_path.emplace(path_key(tables[t].base_path), t);

  for (NodeIndex t = 0; t < tables.size(); ++t) {
    const auto& rec = tables[t];
    if (auto c = facts.class_index(rec.owning_class)) class_tables_[*c].push_back(t);
    if (rec.base_path.size() > 1) {
      auto it = by_path.find(path_key(std::span(rec.base_path).subspan(1)));
      if (it != by_path.end()) {
        parent_[t] = it->second;
        children_[it->second].push_back(t);
      }
    }
    auto& slots = slots_[t];
    slots.reserve(rec.entries.size());
    for (const auto& e : rec.entries) {
      if (!e.is_function_slot()) continue;
      std::int32_t target = -1;
      if (e.kind != EntryKind::kPure && e.function_id) {
        if (auto f = facts.function_index(*e.function_id)) target = static_cast<std::int32_t>(*f);
      }
      slots.push_back(target);
    }
  }
  for (auto& list : children_) std::sort(list.begin(), list.end());
  for (auto& list : class_tables_) {
    std::sort(list.begin(), list.end(),
              [&](NodeIndex a, NodeIndex b) { return tables[a].order < tables[b].order; });
  }

  for (NodeIndex t = 0; t < tables.size(); ++t) {
    NodeIndex r = t;
    // Parents are unique per table and the base relation is acyclic, so this ends.
    while (parent_[r] >= 0) r = static_cast<NodeIndex>(parent_[r]);
    root_[t] = r;
  }

  DisjointSets sets(tables.size());
  for (NodeIndex t = 0; t < tables.size(); ++t) {
    if (parent_[t] >= 0) sets.unite(t, static_cast<std::size_t>(parent_[t]));
  }
  for (const auto& list : class_tables_) {
    for (std::size_t i = 1; i < list.size(); ++i) sets.unite(list[0], list[i]);
  }
  std::unordered_map<std::size_t, std::uint32_t> label;
  for (NodeIndex t = 0; t < tables.size(); ++t) {
    auto [it, inserted] = label.try_emplace(sets.find(t), static_cast<std::uint32_t>(label.size()));
    if (inserted) island_members_.emplace_back();
    island_[t] = it->second;
    island_members_[it->second].push_back(t);
  }
}

std::optional<NodeIndex> VTableHierarchy::node(std::string_view vtable_id) const {
  auto i = facts_->vtable_index(vtable_id);
  if (!i) return std::nullopt;
  return static_cast<NodeIndex>(*i);
}

std::optional<NodeIndex> VTableHierarchy::parent(NodeIndex n) const {
  if (parent_[n] < 0) return std::nullopt;
  return static_cast<NodeIndex>(parent_[n]);
}

std::optional<NodeIndex> VTableHierarchy::table_of_class(NodeIndex class_node,
                                                         std::uint32_t order) const {
  for (NodeIndex t : class_tables_[class_node]) {
    if (facts_->vtables()[t].order == order) return t;
  }
  return std::nullopt;
}

std::vector<NodeIndex> VTableHierarchy::descendants(NodeIndex n) const { return closure(children_, n); }

std::vector<std::pair<std::string, std::string>> VTableHierarchy::edges() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (NodeIndex p = 0; p < children_.size(); ++p) {
    for (NodeIndex c : children_[p]) out.emplace_back(id(p), id(c));
  }
  std::sort(out.begin(), out.end());
  return out;
}

ClassHierarchy build_class_hierarchy(const ProgramFacts& facts) { return ClassHierarchy(facts); }

VTableHierarchy build_vtable_hierarchy(const ProgramFacts& facts) { return VTableHierarchy(facts); }

std::vector<std::vector<std::string>> find_islands(const VTableHierarchy& vh) {
  std::vector<std::vector<std::string>> out;
  for (std::uint32_t i = 0; i < vh.island_count(); ++i) {
    auto& ids = out.emplace_back();
    for (NodeIndex t : vh.island_members(i)) ids.push_back(vh.id(t));
    std::sort(ids.begin(), ids.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

SubHierarchy class_sub_hierarchy(const ClassHierarchy& ch, std::string_view root) {
  auto n = ch.node(root);
  if (!n) throw std::out_of_range("unknown class " + std::string(root));
  SubHierarchy out{std::string(root), {}};
  for (NodeIndex m : ch.descendants(*n)) out.members.push_back(ch.id(m));
  return out;
}

SubHierarchy vtable_sub_hierarchy(const VTableHierarchy& vh, std::string_view root) {
  auto n = vh.node(root);
  if (!n) throw std::out_of_range("unknown vtable " + std::string(root));
  SubHierarchy out{std::string(root), {}};
  for (NodeIndex m : vh.descendants(*n)) out.members.push_back(vh.id(m));
  return out;
}

std::vector<std::string> vtable_set(const ProgramFacts& facts, std::string_view class_id) {
  std::vector<std::string> out;
  for (std::size_t t : facts.vtables_of_class(class_id)) out.push_back(facts.vtables()[t].id);
  return out;
}

std::optional<std::string> resolve_entry(const ProgramFacts& facts, std::string_view vtable_id,
                                         std::uint32_t entry_index) {
  const VTableRecord* table = facts.find_vtable(vtable_id);
  if (!table) throw std::out_of_range("unknown vtable " + std::string(vtable_id));
  std::uint32_t slot = 0;
  for (const auto& e : table->entries) {
    if (!e.is_function_slot()) continue;
    if (slot++ != entry_index) continue;
    if (e.kind == EntryKind::kPure) return std::nullopt;
    return e.function_id;
  }
  throw IndexOutOfRangeError("entry " + std::to_string(entry_index) + " out of range for vtable " +
                             std::string(vtable_id));
}

}  // namespace cfisurface
