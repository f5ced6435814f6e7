#include <algorithm>
#include <map>
#include <set>
#include <utility>

#include "cfisurface/facts.hpp"

namespace cfisurface {
namespace {

class Validator {
 public:
  explicit Validator(const ProgramFacts& facts) : facts_(facts) {}

  std::vector<Diagnostic> run() {
    check_version();
    check_ids(facts_.classes(), "class");
    check_ids(facts_.functions(), "function");
    check_ids(facts_.vtables(), "vtable");
    check_ids(facts_.callsites(), "callsite");
    check_class_bases();
    const bool acyclic = check_cycles();
    check_functions();
    if (acyclic) check_virtual_classes();
    check_vtables();
    check_callsites();
    return std::move(out_);
  }

 private:
  void emit(DiagnosticCode code, std::string id, std::string message) {
    out_.push_back({code, std::move(id), std::move(message)});
  }

  void check_version() {
    if (facts_.format_version() != kFactsFormatVersion) {
      emit(DiagnosticCode::kBadFormatVersion, std::to_string(facts_.format_version()),
           "format_version must be " + std::to_string(kFactsFormatVersion));
    }
  }

  template <typename Record>
  void check_ids(std::span<const Record> records, const char* what) {
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (records[i].id.empty()) emit(DiagnosticCode::kEmptyId, "", std::string(what) + " with empty id");
      if (i > 0 && records[i].id == records[i - 1].id &&
          (i < 2 || records[i - 2].id != records[i].id)) {
        emit(DiagnosticCode::kDuplicateId, records[i].id, std::string("duplicate ") + what + " id");
      }
    }
  }

  void check_class_bases() {
    for (const auto& c : facts_.classes()) {
      std::set<std::string_view> seen;
      for (const auto& b : c.bases) {
        if (!facts_.find_class(b.class_id)) {
          emit(DiagnosticCode::kDanglingClassRef, b.class_id, "base of class " + c.id);
        } else if (!seen.insert(b.class_id).second) {
          emit(DiagnosticCode::kDuplicateBase, c.id, "class " + b.class_id + " listed twice");
        }
      }
    }
  }

  // Kosaraju over the base relation; one diagnostic per cyclic component,
  // named by its smallest class id.
  bool check_cycles() {
    const auto classes = facts_.classes();
    const std::size_t n = classes.size();
    std::vector<std::vector<std::size_t>> succ(n), pred(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (const auto& b : classes[i].bases) {
        if (auto j = facts_.class_index(b.class_id)) {
          succ[i].push_back(*j);
          pred[*j].push_back(i);
        }
      }
    }
    std::vector<std::size_t> finish;
    std::vector<char> seen(n, 0);
    for (std::size_t root = 0; root < n; ++root) {
      if (seen[root]) continue;
      std::vector<std::pair<std::size_t, std::size_t>> stack{{root, 0}};
      seen[root] = 1;
      while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < succ[node].size()) {
          const std::size_t s = succ[node][next++];
          if (!seen[s]) {
            seen[s] = 1;
            stack.emplace_back(s, 0);
          }
        } else {
          finish.push_back(node);
          stack.pop_back();
        }
      }
    }
    std::vector<std::ptrdiff_t> component(n, -1);
    std::vector<std::vector<std::size_t>> components;
    for (auto it = finish.rbegin(); it != finish.rend(); ++it) {
      if (component[*it] >= 0) continue;
      const auto label = static_cast<std::ptrdiff_t>(components.size());
      components.emplace_back();
      std::vector<std::size_t> stack{*it};
      component[*it] = label;
      while (!stack.empty()) {
        const std::size_t node = stack.back();
        stack.pop_back();
        components.back().push_back(node);
        for (std::size_t p : pred[node]) {
          if (component[p] < 0) {
            component[p] = label;
            stack.push_back(p);
          }
        }
      }
    }
    std::vector<std::string> cyclic;
    for (const auto& members : components) {
      const bool self_loop =
          members.size() == 1 &&
          std::find(succ[members[0]].begin(), succ[members[0]].end(), members[0]) !=
              succ[members[0]].end();
      if (members.size() > 1 || self_loop) {
        std::size_t least = *std::min_element(members.begin(), members.end());
        cyclic.push_back(classes[least].id);
      }
    }
    std::sort(cyclic.begin(), cyclic.end());
    for (auto& id : cyclic) emit(DiagnosticCode::kInheritanceCycle, id, "class is on an inheritance cycle");
    return cyclic.empty();
  }

  void check_functions() {
    for (const auto& f : facts_.functions()) {
      if (f.owning_class && !facts_.find_class(*f.owning_class)) {
        emit(DiagnosticCode::kDanglingClassRef, *f.owning_class, "owning class of function " + f.id);
      }
      if (f.is_pure_virtual && !f.is_virtual) {
        emit(DiagnosticCode::kPureNotVirtual, f.id, "pure virtual function must be virtual");
      }
      if (f.is_virtual && !f.owning_class) {
        emit(DiagnosticCode::kVirtualWithoutClass, f.id, "virtual function without owning class");
      }
      for (const auto& p : f.params) {
        if (p.is_void()) emit(DiagnosticCode::kVoidParameter, f.id, "parameter of type void");
      }
      for (const auto& caller : f.direct_callers) {
        if (!facts_.find_function(caller)) {
          emit(DiagnosticCode::kDanglingFunctionRef, caller, "direct caller of function " + f.id);
        }
      }
    }
  }

  void check_virtual_classes() {
    const auto classes = facts_.classes();
    std::vector<char> defines(classes.size(), 0);
    for (const auto& f : facts_.functions()) {
      if (!f.is_virtual || !f.owning_class) continue;
      if (auto i = facts_.class_index(*f.owning_class)) defines[*i] = 1;
    }
    // 0 = unknown, 1 = non-virtual, 2 = virtual.
    std::vector<char> state(classes.size(), 0);
    for (std::size_t root = 0; root < classes.size(); ++root) {
      std::vector<std::size_t> stack{root};
      while (!stack.empty()) {
        const std::size_t c = stack.back();
        if (state[c]) {
          stack.pop_back();
          continue;
        }
        bool pending = false;
        bool inherited = false;
        for (const auto& b : classes[c].bases) {
          auto j = facts_.class_index(b.class_id);
          if (!j) continue;
          if (!state[*j]) {
            stack.push_back(*j);
            pending = true;
          } else if (state[*j] == 2) {
            inherited = true;
          }
        }
        if (pending) continue;
        state[c] = (defines[c] || inherited) ? 2 : 1;
        stack.pop_back();
      }
    }
    for (std::size_t i = 0; i < classes.size(); ++i) {
      const bool expected = state[i] == 2;
      if (classes[i].is_virtual_class != expected) {
        emit(DiagnosticCode::kVirtualClassMismatch, classes[i].id,
             expected ? "class defines or inherits a virtual function but is not marked virtual"
                      : "class is marked virtual but has no virtual function");
      }
    }
  }

  bool is_direct_base(std::string_view derived, std::string_view base) const {
    const ClassRecord* c = facts_.find_class(derived);
    if (!c) return false;
    return std::any_of(c->bases.begin(), c->bases.end(),
                       [&](const BaseSpec& b) { return b.class_id == base; });
  }

  void check_vtables() {
    for (const auto& t : facts_.vtables()) {
      const ClassRecord* owner = facts_.find_class(t.owning_class);
      if (!owner) {
        emit(DiagnosticCode::kDanglingClassRef, t.owning_class, "owning class of vtable " + t.id);
      } else if (!owner->is_virtual_class) {
        emit(DiagnosticCode::kVtableOnNonvirtualClass, t.id, "vtable owned by non-virtual class " + owner->id);
      }
      if (!by_order_.emplace(std::pair<std::string_view, std::uint32_t>(t.owning_class, t.order), &t).second) {
        emit(DiagnosticCode::kDuplicateTableOrder, t.id,
             "order " + std::to_string(t.order) + " repeated for class " + t.owning_class);
      }
      if (!paths_.insert(t.base_path).second) {
        emit(DiagnosticCode::kBadBasePath, t.id, "base_path repeated for class " + t.owning_class);
      }
    }
    for (const auto& t : facts_.vtables()) {
      check_base_path(t);
      check_entries(t);
    }
    for (const auto& c : facts_.classes()) {
      if (c.is_virtual_class && !by_order_.count({c.id, 0})) {
        emit(DiagnosticCode::kMissingPrimaryVtable, c.id, "virtual class without a primary vtable");
      }
    }
  }

  void check_base_path(const VTableRecord& t) {
    const auto& path = t.base_path;
    if (path.empty() || path.front() != t.owning_class) {
      emit(DiagnosticCode::kBadBasePath, t.id, "base_path must start with the owning class");
      return;
    }
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
      if (!is_direct_base(path[i], path[i + 1])) {
        emit(DiagnosticCode::kBadBasePath, t.id, path[i + 1] + " is not a direct base of " + path[i]);
        return;
      }
    }
    if (path.size() > 1) {
      const std::vector<std::string> tail(path.begin() + 1, path.end());
      if (!paths_.count(tail)) {
        emit(DiagnosticCode::kBadBasePath, t.id, "no vtable of " + tail.front() + " matches the path tail");
      }
    }
  }

  void check_entries(const VTableRecord& t) {
    std::uint32_t next_index = 0;
    for (const auto& e : t.entries) {
      switch (e.kind) {
        case EntryKind::kOffset:
          if (e.function_id || e.entry_index) {
            emit(DiagnosticCode::kBadEntry, t.id, "offset entry carries a function or index");
          }
          continue;
        case EntryKind::kPure:
          if (e.function_id) emit(DiagnosticCode::kBadEntry, t.id, "pure entry carries a function");
          break;
        case EntryKind::kFunction:
        case EntryKind::kThunk:
          if (!e.function_id) {
            emit(DiagnosticCode::kBadEntry, t.id, "function entry without a function");
          } else if (const FunctionRecord* f = facts_.find_function(*e.function_id); !f) {
            emit(DiagnosticCode::kDanglingFunctionRef, *e.function_id, "entry of vtable " + t.id);
          } else if (!f->is_virtual) {
            emit(DiagnosticCode::kNonVirtualEntryTarget, t.id, "entry targets non-virtual function " + f->id);
          }
          break;
      }
      if (!e.entry_index || *e.entry_index != next_index) {
        emit(DiagnosticCode::kNondenseEntryIndex, t.id,
             "expected entry index " + std::to_string(next_index));
        return;
      }
      ++next_index;
    }
  }

  void check_callsites() {
    for (const auto& cs : facts_.callsites()) {
      for (const auto& a : cs.args) {
        if (a.is_void()) emit(DiagnosticCode::kVoidParameter, cs.id, "argument of type void");
      }
      if (cs.enclosing_function && !facts_.find_function(*cs.enclosing_function)) {
        emit(DiagnosticCode::kDanglingFunctionRef, *cs.enclosing_function,
             "enclosing function of callsite " + cs.id);
      }
      if (!cs.is_virtual()) {
        if (cs.static_class || cs.table_order || cs.entry_index) {
          emit(DiagnosticCode::kUnexpectedDispatchFields, cs.id,
               "function-pointer callsite carries dispatch coordinates");
        }
        continue;
      }
      if (!cs.static_class || !cs.table_order || !cs.entry_index) {
        emit(DiagnosticCode::kBadCallsiteCoordinates, cs.id, "virtual callsite missing dispatch coordinates");
        continue;
      }
      const ClassRecord* c = facts_.find_class(*cs.static_class);
      if (!c) {
        emit(DiagnosticCode::kDanglingClassRef, *cs.static_class, "static class of callsite " + cs.id);
        continue;
      }
      const auto it = by_order_.find({c->id, *cs.table_order});
      if (!c->is_virtual_class || it == by_order_.end() ||
          *cs.entry_index >= it->second->function_slot_count()) {
        emit(DiagnosticCode::kBadCallsiteCoordinates, cs.id,
             "no slot " + std::to_string(*cs.entry_index) + " in table " +
                 std::to_string(*cs.table_order) + " of class " + c->id);
      }
    }
  }

  const ProgramFacts& facts_;
  std::vector<Diagnostic> out_;
  std::map<std::pair<std::string_view, std::uint32_t>, const VTableRecord*> by_order_;
  // base_path[0] is the owning class, so paths alone identify tables.
  std::set<std::vector<std::string>> paths_;
};

}  // namespace

std::string_view to_string(DiagnosticCode code) noexcept {
  switch (code) {
    case DiagnosticCode::kBadFormatVersion: return "BAD_FORMAT_VERSION";
    case DiagnosticCode::kDuplicateId: return "DUPLICATE_ID";
    case DiagnosticCode::kEmptyId: return "EMPTY_ID";
    case DiagnosticCode::kDanglingClassRef: return "DANGLING_CLASS_REF";
    case DiagnosticCode::kDanglingFunctionRef: return "DANGLING_FUNCTION_REF";
    case DiagnosticCode::kInheritanceCycle: return "INHERITANCE_CYCLE";
    case DiagnosticCode::kDuplicateBase: return "DUPLICATE_BASE";
    case DiagnosticCode::kVirtualClassMismatch: return "VIRTUAL_CLASS_MISMATCH";
    case DiagnosticCode::kPureNotVirtual: return "PURE_NOT_VIRTUAL";
    case DiagnosticCode::kVirtualWithoutClass: return "VIRTUAL_WITHOUT_CLASS";
    case DiagnosticCode::kVoidParameter: return "VOID_PARAMETER";
    case DiagnosticCode::kBadEntry: return "BAD_ENTRY";
    case DiagnosticCode::kNonVirtualEntryTarget: return "NON_VIRTUAL_ENTRY_TARGET";
    case DiagnosticCode::kNondenseEntryIndex: return "NONDENSE_ENTRY_INDEX";
    case DiagnosticCode::kDuplicateTableOrder: return "DUPLICATE_TABLE_ORDER";
    case DiagnosticCode::kBadBasePath: return "BAD_BASE_PATH";
    case DiagnosticCode::kVtableOnNonvirtualClass: return "VTABLE_ON_NONVIRTUAL_CLASS";
    case DiagnosticCode::kMissingPrimaryVtable: return "MISSING_PRIMARY_VTABLE";
    case DiagnosticCode::kBadCallsiteCoordinates: return "BAD_CALLSITE_COORDINATES";
    case DiagnosticCode::kUnexpectedDispatchFields: return "UNEXPECTED_DISPATCH_FIELDS";
    case DiagnosticCode::kDanglingGadgetRef: return "DANGLING_GADGET_REF";
  }
  return "UNKNOWN";
}

std::string Diagnostic::str() const {
  return std::string(to_string(code)) + "(" + id + "): " + message;
}

std::vector<Diagnostic> validate_facts(const ProgramFacts& facts) { return Validator(facts).run(); }

std::vector<Diagnostic> validate_gadgets(const ProgramFacts& facts,
                                         const GadgetAnnotations& gadgets) {
  std::vector<Diagnostic> out;
  for (const auto& [id, flags] : gadgets.entries()) {
    if (!facts.find_function(id)) {
      out.push_back({DiagnosticCode::kDanglingGadgetRef, id, "gadget annotation for unknown function"});
    }
  }
  return out;
}

}  // namespace cfisurface
