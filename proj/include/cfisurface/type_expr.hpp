#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace cfisurface {

enum class TypeLeaf : std::uint8_t {
  kVoid,
  kBool,
  kChar,
  kI8,
  kI16,
  kI32,
  kI64,
  kU8,
  kU16,
  kU32,
  kU64,
  kF32,
  kF64,
  kNamed,
};

/// A type of the facts grammar. Since `ptr` is the only type constructor,
/// every type is `ptr^depth(leaf)`; the flat form keeps comparison cheap.
class TypeExpr {
 public:
  TypeExpr() = default;
  static TypeExpr primitive(TypeLeaf leaf, std::uint32_t pointer_depth = 0);
  static TypeExpr named(std::string name, std::uint32_t pointer_depth = 0);
  static TypeExpr pointer_to(TypeExpr pointee);

  TypeLeaf leaf() const noexcept { return leaf_; }
  std::uint32_t pointer_depth() const noexcept { return depth_; }
  bool is_pointer() const noexcept { return depth_ > 0; }
  bool is_void() const noexcept { return depth_ == 0 && leaf_ == TypeLeaf::kVoid; }
  /// Empty unless leaf() == kNamed.
  const std::string& name() const noexcept { return name_; }

  std::string str() const;

  friend bool operator==(const TypeExpr&, const TypeExpr&) = default;
  friend std::strong_ordering operator<=>(const TypeExpr&, const TypeExpr&) = default;

 private:
  TypeLeaf leaf_ = TypeLeaf::kVoid;
  std::uint32_t depth_ = 0;
  std::string name_;
};

/// Parses the canonical spelling, e.g. `ptr(ptr(named(Foo)))`. No whitespace
/// is accepted. Throws TypeParseError carrying the byte offset of the fault.
TypeExpr parse_type(std::string_view text);

inline constexpr std::string_view kVariadicMarker = "...";

struct ParamList {
  std::vector<TypeExpr> params;
  bool is_variadic = false;
};

/// Parses a parameter list where `...` may appear only as the last element.
ParamList parse_param_list(const std::vector<std::string>& items);

bool is_identifier(std::string_view text) noexcept;

}  // namespace cfisurface
