#include "cfisurface/type_expr.hpp"

#include <array>
#include <utility>

#include "cfisurface/error.hpp"

namespace cfisurface {
namespace {

constexpr std::array<std::pair<std::string_view, TypeLeaf>, 13> kPrimitives{{
    {"void", TypeLeaf::kVoid},
    {"bool", TypeLeaf::kBool},
    {"char", TypeLeaf::kChar},
    {"i8", TypeLeaf::kI8},
    {"i16", TypeLeaf::kI16},
    {"i32", TypeLeaf::kI32},
    {"i64", TypeLeaf::kI64},
    {"u8", TypeLeaf::kU8},
    {"u16", TypeLeaf::kU16},
    {"u32", TypeLeaf::kU32},
    {"u64", TypeLeaf::kU64},
    {"f32", TypeLeaf::kF32},
    {"f64", TypeLeaf::kF64},
}};

std::string_view leaf_spelling(TypeLeaf leaf) {
  for (const auto& [spelling, value] : kPrimitives) {
    if (value == leaf) return spelling;
  }
  return "named";
}

bool is_identifier_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
         c == ':' || c == '.' || c == '$';
}

class TypeParser {
 public:
  explicit TypeParser(std::string_view text) : text_(text) {}

  TypeExpr parse() {
    TypeExpr t = parse_expr();
    if (pos_ != text_.size()) throw TypeParseError("unexpected trailing input", pos_);
    return t;
  }

 private:
  TypeExpr parse_expr() {
    const std::size_t start = pos_;
    std::size_t end = pos_;
    while (end < text_.size() && is_identifier_char(text_[end])) ++end;
    const std::string_view word = text_.substr(start, end - start);
    if (word.empty()) throw TypeParseError("expected type", start);
    pos_ = end;

    if (word == "ptr") {
      expect('(');
      TypeExpr inner = parse_expr();
      expect(')');
      return TypeExpr::pointer_to(std::move(inner));
    }
    if (word == "named") {
      expect('(');
      const std::size_t id_start = pos_;
      while (pos_ < text_.size() && is_identifier_char(text_[pos_])) ++pos_;
      if (pos_ == id_start) throw TypeParseError("expected identifier", id_start);
      std::string name(text_.substr(id_start, pos_ - id_start));
      expect(')');
      return TypeExpr::named(std::move(name));
    }
    for (const auto& [spelling, leaf] : kPrimitives) {
      if (word == spelling) return TypeExpr::primitive(leaf);
    }
    throw TypeParseError("unknown type '" + std::string(word) + "'", start);
  }

  void expect(char c) {
    if (pos_ >= text_.size() || text_[pos_] != c) {
      throw TypeParseError(std::string("expected '") + c + "'", pos_);
    }
    ++pos_;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

TypeExpr TypeExpr::primitive(TypeLeaf leaf, std::uint32_t pointer_depth) {
  TypeExpr t;
  t.leaf_ = leaf == TypeLeaf::kNamed ? TypeLeaf::kVoid : leaf;
  t.depth_ = pointer_depth;
  return t;
}

TypeExpr TypeExpr::named(std::string name, std::uint32_t pointer_depth) {
  TypeExpr t;
  t.leaf_ = TypeLeaf::kNamed;
  t.depth_ = pointer_depth;
  t.name_ = std::move(name);
  return t;
}

TypeExpr TypeExpr::pointer_to(TypeExpr pointee) {
  ++pointee.depth_;
  return pointee;
}

std::string TypeExpr::str() const {
  std::string out;
  out.reserve(depth_ * 5 + 16);
  for (std::uint32_t i = 0; i < depth_; ++i) out += "ptr(";
  if (leaf_ == TypeLeaf::kNamed) {
    out += "named(";
    out += name_;
    out += ')';
  } else {
    out += leaf_spelling(leaf_);
  }
  out.append(depth_, ')');
  return out;
}

TypeExpr parse_type(std::string_view text) { return TypeParser(text).parse(); }

ParamList parse_param_list(const std::vector<std::string>& items) {
  ParamList out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i] == kVariadicMarker) {
      if (i + 1 != items.size()) {
        throw TypeParseError("variadic marker must be the last parameter", 0);
      }
      out.is_variadic = true;
      break;
    }
    out.params.push_back(parse_type(items[i]));
  }
  return out;
}

bool is_identifier(std::string_view text) noexcept {
  if (text.empty()) return false;
  for (char c : text) {
    if (!is_identifier_char(c)) return false;
  }
  return true;
}

}  // namespace cfisurface
