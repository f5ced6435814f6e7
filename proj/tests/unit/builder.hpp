#pragma once

#include <initializer_list>
#include <string>
#include <vector>

#include "cfisurface/facts.hpp"
#include "cfisurface/type_expr.hpp"

namespace testing {

using namespace cfisurface;

inline std::vector<TypeExpr> types(std::initializer_list<const char*> items) {
  std::vector<TypeExpr> out;
  for (const char* t : items) out.push_back(parse_type(t));
  return out;
}

struct Entry {
  EntryKind kind;
  std::string function;
};

inline Entry fn(std::string id) { return {EntryKind::kFunction, std::move(id)}; }
inline Entry thunk(std::string id) { return {EntryKind::kThunk, std::move(id)}; }
inline Entry offset() { return {EntryKind::kOffset, {}}; }
inline Entry pure() { return {EntryKind::kPure, {}}; }

// Hand-built programs for tests. Virtual-class flags and entry indices are
// filled in by the caller or derived automatically where unambiguous.
struct Builder {
  std::vector<ClassRecord> classes;
  std::vector<FunctionRecord> functions;
  std::vector<VTableRecord> vtables;
  std::vector<Callsite> callsites;
  std::uint32_t line = 1;

  Builder& cls(std::string id, std::vector<std::string> bases = {}, bool is_virtual = true) {
    ClassRecord c{id, id, {}, is_virtual};
    for (auto& b : bases) c.bases.push_back({std::move(b), false});
    classes.push_back(std::move(c));
    return *this;
  }

  Builder& func(std::string id, std::string name, std::initializer_list<const char*> params,
                const char* ret = "void", std::optional<std::string> owner = std::nullopt,
                bool is_virtual = false, bool is_pure = false, bool variadic = false) {
    FunctionRecord f;
    f.id = std::move(id);
    f.name = std::move(name);
    f.owning_class = std::move(owner);
    f.params = types(params);
    f.is_variadic = variadic;
    f.return_type = parse_type(ret);
    f.is_virtual = is_virtual;
    f.is_pure_virtual = is_pure;
    f.source_loc = {"test.cc", line++, 1};
    functions.push_back(std::move(f));
    return *this;
  }

  Builder& method(std::string id, std::string name, std::string owner,
                  std::initializer_list<const char*> params = {}, const char* ret = "void") {
    return func(std::move(id), std::move(name), params, ret, std::move(owner), true);
  }

  Builder& pure_method(std::string id, std::string name, std::string owner,
                       std::initializer_list<const char*> params = {}) {
    return func(std::move(id), std::move(name), params, "void", std::move(owner), true, true);
  }

  Builder& vtable(std::string id, std::string owner, std::uint32_t order, std::vector<std::string> path,
                  std::vector<Entry> entries) {
    VTableRecord t{std::move(id), std::move(owner), order, std::move(path), {}};
    std::uint32_t index = 0;
    for (auto& e : entries) {
      VTableEntry v{e.kind, std::nullopt, std::nullopt};
      if (!e.function.empty()) v.function_id = e.function;
      if (e.kind != EntryKind::kOffset) v.entry_index = index++;
      t.entries.push_back(std::move(v));
    }
    vtables.push_back(std::move(t));
    return *this;
  }

  Builder& vcall(std::string id, std::string static_class, std::uint32_t order, std::uint32_t index,
                 std::initializer_list<const char*> args = {}, bool returns_used = false,
                 std::optional<std::string> hint = std::nullopt) {
    Callsite cs;
    cs.id = std::move(id);
    cs.kind = CallsiteKind::kVirtualDispatch;
    cs.source_loc = {"call.cc", line++, 5};
    cs.args = types(args);
    cs.returns_used = returns_used;
    cs.callee_name_hint = std::move(hint);
    cs.static_class = std::move(static_class);
    cs.table_order = order;
    cs.entry_index = index;
    callsites.push_back(std::move(cs));
    return *this;
  }

  Builder& pcall(std::string id, std::initializer_list<const char*> args = {}, bool returns_used = false,
                 std::optional<std::string> hint = std::nullopt,
                 std::optional<std::string> enclosing = std::nullopt) {
    Callsite cs;
    cs.id = std::move(id);
    cs.kind = CallsiteKind::kFunctionPointer;
    cs.source_loc = {"call.cc", line++, 9};
    cs.args = types(args);
    cs.returns_used = returns_used;
    cs.callee_name_hint = std::move(hint);
    cs.enclosing_function = std::move(enclosing);
    callsites.push_back(std::move(cs));
    return *this;
  }

  ProgramFacts build() const { return ProgramFacts(classes, functions, vtables, callsites); }
};

// A(f), B(g), D : A, B overriding both. D's primary table extends A's, its
// secondary table extends B's; one dispatch through A's slot 0.
inline ProgramFacts multiple_inheritance() {
  Builder b;
  b.cls("A").cls("B").cls("D", {"A", "B"});
  b.method("A::f", "f", "A", {"i32"}).method("B::g", "g", "B", {"i32"});
  b.method("D::f", "f", "D", {"i32"}).method("D::g", "g", "D", {"i32"});
  b.vtable("VA", "A", 0, {"A"}, {fn("A::f")});
  b.vtable("VB", "B", 0, {"B"}, {fn("B::g")});
  b.vtable("VD0", "D", 0, {"D", "A"}, {fn("D::f")});
  b.vtable("VD1", "D", 1, {"D", "B"}, {offset(), thunk("D::g")});
  b.vcall("S1", "A", 0, 0, {"i32"}, false, "f");
  b.vcall("S2", "B", 0, 0, {"i32"}, false, "g");
  b.vcall("S3", "D", 1, 0, {"i32"}, false, "g");
  return b.build();
}

}  // namespace testing
