#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cfisurface/type_expr.hpp"

namespace cfisurface {

inline constexpr std::uint32_t kFactsFormatVersion = 1;

struct SourceLoc {
  std::string file;
  std::uint32_t line = 0;
  std::uint32_t column = 0;

  friend bool operator==(const SourceLoc&, const SourceLoc&) = default;
};

struct FunctionRecord {
  std::string id;
  /// Unqualified name, as written at the definition.
  std::string name;
  std::optional<std::string> owning_class;
  std::vector<TypeExpr> params;
  bool is_variadic = false;
  TypeExpr return_type;
  bool is_virtual = false;
  bool is_pure_virtual = false;
  SourceLoc source_loc;
  /// Enclosing function of each direct callsite of this function. Optional
  /// data; feeds the return-target metrics only.
  std::vector<std::string> direct_callers;

  friend bool operator==(const FunctionRecord&, const FunctionRecord&) = default;
};

struct BaseSpec {
  std::string class_id;
  bool is_virtual_base = false;

  friend bool operator==(const BaseSpec&, const BaseSpec&) = default;
};

struct ClassRecord {
  std::string id;
  std::string name;
  std::vector<BaseSpec> bases;
  bool is_virtual_class = false;

  friend bool operator==(const ClassRecord&, const ClassRecord&) = default;
};

enum class EntryKind : std::uint8_t { kFunction, kThunk, kOffset, kPure };

struct VTableEntry {
  EntryKind kind = EntryKind::kFunction;
  std::optional<std::string> function_id;
  /// Present for every kind except kOffset.
  std::optional<std::uint32_t> entry_index;

  bool is_function_slot() const noexcept { return kind != EntryKind::kOffset; }

  friend bool operator==(const VTableEntry&, const VTableEntry&) = default;
};

struct VTableRecord {
  std::string id;
  std::string owning_class;
  std::uint32_t order = 0;
  /// owning_class first, then each successive direct base down to the class
  /// whose table this one extends.
  std::vector<std::string> base_path;
  std::vector<VTableEntry> entries;

  std::size_t function_slot_count() const noexcept;

  friend bool operator==(const VTableRecord&, const VTableRecord&) = default;
};

enum class CallsiteKind : std::uint8_t { kVirtualDispatch, kFunctionPointer };

struct Callsite {
  std::string id;
  CallsiteKind kind = CallsiteKind::kFunctionPointer;
  SourceLoc source_loc;
  std::vector<TypeExpr> args;
  bool returns_used = false;
  std::optional<std::string> callee_name_hint;
  std::optional<std::string> enclosing_function;
  // Virtual dispatch coordinates.
  std::optional<std::string> static_class;
  std::optional<std::uint32_t> table_order;
  std::optional<std::uint32_t> entry_index;

  bool is_virtual() const noexcept { return kind == CallsiteKind::kVirtualDispatch; }

  friend bool operator==(const Callsite&, const Callsite&) = default;
};

/// Immutable whole-program snapshot. Every collection is kept sorted by id
/// (byte order) regardless of the order it was supplied in. Duplicate ids are
/// kept so that validation can report them; lookups return the first.
class ProgramFacts {
 public:
  ProgramFacts() = default;
  ProgramFacts(std::vector<ClassRecord> classes, std::vector<FunctionRecord> functions,
               std::vector<VTableRecord> vtables, std::vector<Callsite> callsites,
               std::uint32_t format_version = kFactsFormatVersion);

  std::span<const ClassRecord> classes() const noexcept { return classes_; }
  std::span<const FunctionRecord> functions() const noexcept { return functions_; }
  std::span<const VTableRecord> vtables() const noexcept { return vtables_; }
  std::span<const Callsite> callsites() const noexcept { return callsites_; }
  std::uint32_t format_version() const noexcept { return format_version_; }

  std::optional<std::size_t> class_index(std::string_view id) const;
  std::optional<std::size_t> function_index(std::string_view id) const;
  std::optional<std::size_t> vtable_index(std::string_view id) const;
  std::optional<std::size_t> callsite_index(std::string_view id) const;

  const ClassRecord* find_class(std::string_view id) const;
  const FunctionRecord* find_function(std::string_view id) const;
  const VTableRecord* find_vtable(std::string_view id) const;
  const Callsite* find_callsite(std::string_view id) const;

  /// Indices into vtables() of the tables owned by a class, ascending by order.
  std::span<const std::size_t> vtables_of_class(std::string_view class_id) const;

  friend bool operator==(const ProgramFacts& a, const ProgramFacts& b) {
    return a.format_version_ == b.format_version_ && a.classes_ == b.classes_ &&
           a.functions_ == b.functions_ && a.vtables_ == b.vtables_ &&
           a.callsites_ == b.callsites_;
  }

 private:
  struct StringHash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const noexcept {
      return std::hash<std::string_view>{}(s);
    }
  };
  using IdIndex = std::unordered_map<std::string, std::size_t, StringHash, std::equal_to<>>;

  std::vector<ClassRecord> classes_;
  std::vector<FunctionRecord> functions_;
  std::vector<VTableRecord> vtables_;
  std::vector<Callsite> callsites_;
  std::uint32_t format_version_ = kFactsFormatVersion;
  IdIndex class_ids_;
  IdIndex function_ids_;
  IdIndex vtable_ids_;
  IdIndex callsite_ids_;
  std::unordered_map<std::string, std::vector<std::size_t>, StringHash, std::equal_to<>> class_tables_;
};

struct GadgetFlags {
  bool has_forward_gadget = false;
  bool has_return_gadget = false;

  friend bool operator==(const GadgetFlags&, const GadgetFlags&) = default;
};

/// Function id -> gadget flags. Functions not listed carry no gadgets.
class GadgetAnnotations {
 public:
  using Map = std::map<std::string, GadgetFlags, std::less<>>;

  GadgetAnnotations() = default;
  explicit GadgetAnnotations(Map flags) : flags_(std::move(flags)) {}

  GadgetFlags lookup(std::string_view function_id) const;
  void set(std::string function_id, GadgetFlags flags) { flags_[std::move(function_id)] = flags; }
  const Map& entries() const noexcept { return flags_; }
  bool empty() const noexcept { return flags_.empty(); }

 private:
  Map flags_;
};

enum class DiagnosticCode : std::uint8_t {
  kBadFormatVersion,
  kDuplicateId,
  kEmptyId,
  kDanglingClassRef,
  kDanglingFunctionRef,
  kInheritanceCycle,
  kDuplicateBase,
  kVirtualClassMismatch,
  kPureNotVirtual,
  kVirtualWithoutClass,
  kVoidParameter,
  kBadEntry,
  kNonVirtualEntryTarget,
  kNondenseEntryIndex,
  kDuplicateTableOrder,
  kBadBasePath,
  kVtableOnNonvirtualClass,
  kMissingPrimaryVtable,
  kBadCallsiteCoordinates,
  kUnexpectedDispatchFields,
  kDanglingGadgetRef,
};

std::string_view to_string(DiagnosticCode code) noexcept;

struct Diagnostic {
  DiagnosticCode code;
  std::string id;
  std::string message;

  std::string str() const;
  friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

/// Checks every structural invariant of the model. Returns an empty list iff
/// the facts are well formed. Diagnostics are ordered by check, then by id.
std::vector<Diagnostic> validate_facts(const ProgramFacts& facts);

std::vector<Diagnostic> validate_gadgets(const ProgramFacts& facts,
                                         const GadgetAnnotations& gadgets);

}  // namespace cfisurface
