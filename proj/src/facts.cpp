#include "cfisurface/facts.hpp"

#include <algorithm>

namespace cfisurface {
namespace {

template <typename Record, typename Index>
void sort_and_index(std::vector<Record>& records, Index& index) {
  std::stable_sort(records.begin(), records.end(),
                   [](const Record& a, const Record& b) { return a.id < b.id; });
  index.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) index.try_emplace(records[i].id, i);
}

template <typename Index>
std::optional<std::size_t> lookup(const Index& index, std::string_view id) {
  auto it = index.find(id);
  if (it == index.end()) return std::nullopt;
  return it->second;
}

}  // namespace

std::size_t VTableRecord::function_slot_count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(entries.begin(), entries.end(),
                    [](const VTableEntry& e) { return e.is_function_slot(); }));
}

ProgramFacts::ProgramFacts(std::vector<ClassRecord> classes, std::vector<FunctionRecord> functions,
                           std::vector<VTableRecord> vtables, std::vector<Callsite> callsites,
                           std::uint32_t format_version)
    : classes_(std::move(classes)),
      functions_(std::move(functions)),
      vtables_(std::move(vtables)),
      callsites_(std::move(callsites)),
      format_version_(format_version) {
  sort_and_index(classes_, class_ids_);
  sort_and_index(functions_, function_ids_);
  sort_and_index(vtables_, vtable_ids_);
  sort_and_index(callsites_, callsite_ids_);
  for (std::size_t t = 0; t < vtables_.size(); ++t) class_tables_[vtables_[t].owning_class].push_back(t);
  for (auto& [owner, list] : class_tables_) {
    std::stable_sort(list.begin(), list.end(), [this](std::size_t a, std::size_t b) {
      return vtables_[a].order < vtables_[b].order;
    });
  }
}

std::span<const std::size_t> ProgramFacts::vtables_of_class(std::string_view class_id) const {
  auto it = class_tables_.find(class_id);
  if (it == class_tables_.end()) return {};
  return it->second;
}

std::optional<std::size_t> ProgramFacts::class_index(std::string_view id) const {
  return lookup(class_ids_, id);
}
std::optional<std::size_t> ProgramFacts::function_index(std::string_view id) const {
  return lookup(function_ids_, id);
}
std::optional<std::size_t> ProgramFacts::vtable_index(std::string_view id) const {
  return lookup(vtable_ids_, id);
}
std::optional<std::size_t> ProgramFacts::callsite_index(std::string_view id) const {
  return lookup(callsite_ids_, id);
}

const ClassRecord* ProgramFacts::find_class(std::string_view id) const {
  auto i = class_index(id);
  return i ? &classes_[*i] : nullptr;
}
const FunctionRecord* ProgramFacts::find_function(std::string_view id) const {
  auto i = function_index(id);
  return i ? &functions_[*i] : nullptr;
}
const VTableRecord* ProgramFacts::find_vtable(std::string_view id) const {
  auto i = vtable_index(id);
  return i ? &vtables_[*i] : nullptr;
}
const Callsite* ProgramFacts::find_callsite(std::string_view id) const {
  auto i = callsite_index(id);
  return i ? &callsites_[*i] : nullptr;
}

GadgetFlags GadgetAnnotations::lookup(std::string_view function_id) const {
  auto it = flags_.find(function_id);
  return it == flags_.end() ? GadgetFlags{} : it->second;
}

}  // namespace cfisurface
